"""Randomized property suites over (state, POVM) pairs at d in {2, 3, 4}."""

import math

import numpy as np
import pytest

from helpers import random_density, random_povm, random_pure, random_unitary
from oegap.classes import StochasticMap, cpp_apply, rank1_refine
from oegap.core import DensityMatrix, PartitionSpec, Povm
from oegap.entropy import (
    observational_entropy,
    recovery_bounds,
    von_neumann,
)
from oegap.optimize import OptConfig, minimize_lostar
from oegap.states import dephase_local

DIMS_POOL = [(2,), (3,), (4,), (2, 2)]


def _pairs(seed, count):
    rng = np.random.default_rng(seed)
    for i in range(count):
        dims = DIMS_POOL[i % len(DIMS_POOL)]
        d = int(np.prod(dims))
        rho = random_density(rng, dims, rank=int(rng.integers(1, d + 1)))
        povm = random_povm(rng, d, int(rng.integers(2, 7)))
        yield rho, povm


def test_bounds_and_state_floor_on_random_pairs():
    for rho, povm in _pairs(100, 400):
        s_m = observational_entropy(rho, povm)
        d = rho.d
        assert -1e-12 <= s_m <= math.log2(d) + 1e-9
        assert s_m >= von_neumann(rho) - 1e-9


def test_recovery_sandwich_on_random_pairs():
    for rho, povm in _pairs(200, 250):
        s_m = observational_entropy(rho, povm)
        sand = recovery_bounds(rho, povm)
        assert sand.lower <= s_m + 1e-8
        assert s_m <= sand.upper + 1e-8


def test_cpp_monotonicity_on_random_pairs():
    rng = np.random.default_rng(300)
    for rho, povm in _pairs(301, 200):
        k = povm.n_outcomes
        j = int(rng.integers(1, k + 1))
        lam = rng.dirichlet(np.ones(j), size=k).T
        coarser = cpp_apply(StochasticMap(lam), povm)
        assert observational_entropy(rho, coarser) >= observational_entropy(rho, povm) - 1e-9


def test_refinement_monotonicity_rank1():
    count = 0
    for rho, povm in _pairs(400, 500):
        refined = rank1_refine(povm)
        assert observational_entropy(rho, refined) <= observational_entropy(rho, povm) + 1e-9
        count += 1
    assert count == 500


def test_gap_convexity_fixed_measurement():
    rng = np.random.default_rng(500)
    for _ in range(150):
        dims = DIMS_POOL[int(rng.integers(0, len(DIMS_POOL)))]
        d = int(np.prod(dims))
        povm = random_povm(rng, d, 3)
        parts = [random_density(rng, dims) for _ in range(3)]
        weights = rng.dirichlet(np.ones(3))
        mixed = DensityMatrix(sum(w * r.mat for w, r in zip(weights, parts)), dims)
        lhs = observational_entropy(mixed, povm) - von_neumann(mixed)
        rhs = sum(
            w * (observational_entropy(r, povm) - von_neumann(r))
            for w, r in zip(weights, parts)
        )
        assert lhs <= rhs + 1e-9


def test_joint_unitary_invariance():
    rng = np.random.default_rng(600)
    for rho, povm in _pairs(601, 150):
        u = random_unitary(rng, rho.d)
        rho_u = DensityMatrix(u @ rho.mat @ u.conj().T, rho.dims)
        povm_u = Povm(np.einsum("ab,ibc,dc->iad", u, povm.effects, u.conj()))
        assert observational_entropy(rho_u, povm_u) == pytest.approx(
            observational_entropy(rho, povm), abs=1e-10
        )


def test_unital_mixed_unitary_channels_raise_entropy():
    rng = np.random.default_rng(700)
    for _ in range(150):
        dims = DIMS_POOL[int(rng.integers(0, len(DIMS_POOL)))]
        d = int(np.prod(dims))
        rho = random_density(rng, dims, rank=int(rng.integers(1, d + 1)))
        weights = rng.dirichlet(np.ones(3))
        out = sum(
            w * (u @ rho.mat @ u.conj().T)
            for w, u in zip(weights, [random_unitary(rng, d) for _ in range(3)])
        )
        assert von_neumann(DensityMatrix(out, dims)) >= von_neumann(rho) - 1e-10


def test_cpp_completeness_exact_on_random_maps():
    rng = np.random.default_rng(800)
    for _, povm in _pairs(801, 100):
        lam = rng.dirichlet(np.ones(3), size=povm.n_outcomes).T
        out = cpp_apply(StochasticMap(lam), povm)
        assert np.linalg.norm(sum(out.effects) - np.eye(povm.d), 2) < 1e-12


def test_dephased_cq_gap_below_pure_gap():
    # locally dephasing a bipartite pure state can only shrink the LO* gap
    rng = np.random.default_rng(900)
    cfg = OptConfig(seed=900, restarts=6, max_iters=600)
    full = PartitionSpec.full(2)
    for _ in range(3):
        psi = random_pure(rng, (2, 2))
        rho = dephase_local(psi, 0)
        gap_pure = minimize_lostar(psi, full, cfg).gap_bits
        gap_cq = minimize_lostar(rho, full, cfg).gap_bits
        assert gap_cq <= gap_pure + 1e-4
