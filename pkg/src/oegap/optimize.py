"""Minimizers of observational entropy over locality-restricted measurement classes.

Every search-based minimizer reports an upper bound on the true class minimum:
Haar-random restarts (plus two deterministic warm starts: computational bases
and marginal eigenbases) feed a derivative-free Nelder-Mead polish, and the
best restart wins with ties resolved to the lowest restart index, so results
are reproducible bit-for-bit for a fixed seed.  ``werner_analytic`` and
``ppt_gap_w3`` are certified exact.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.optimize

from .classes import (
    ConditionalMeasurement,
    SeparabilityVerdict,
    effect_is_ppt,
    flatten_locc,
    is_separable_effect,
    lo_povm,
    lostar_povm,
)
from .core import (
    DensityMatrix,
    PartitionSpec,
    Povm,
    ValidationError,
    dagger,
    embed,
    opnorm,
    partial_trace,
    partial_transpose,
    permute_subsystems,
    permute_vector,
    spectral,
)
from .entropy import (
    P_EPS,
    binary_entropy,
    chain_entropy,
    entropy_from_stats,
    observational_entropy,
    shannon,
    von_neumann,
)
from .states import w_vector


@dataclass(frozen=True)
class OptConfig:
    """Knobs shared by all search-based minimizers."""

    seed: int = 2025
    restarts: int = 64
    max_iters: int = 2000
    step_tol: float = 1e-7
    entropy_tol: float = 1e-6
    workers: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if self.step_tol <= 0 or self.entropy_tol <= 0:
            raise ValidationError("tolerances must be positive")


DEFAULT_CONFIG = OptConfig()


@dataclass(frozen=True)
class OptResult:
    """Minimized entropy, gap, witnessing measurement, and optimizer trace."""

    entropy_bits: float
    gap_bits: float
    witness: object  # Povm or ConditionalMeasurement
    trace: tuple[float, ...]
    converged: bool
    bounds: tuple[float, float] | None = None


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def _haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    phases = np.diag(r).copy()
    phases = phases / np.abs(phases)
    return q * phases


def _haar_stiefel(m: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """m x d matrix with orthonormal columns (m >= d), Haar on the Stiefel manifold."""
    z = rng.normal(size=(m, d)) + 1j * rng.normal(size=(m, d))
    q, r = np.linalg.qr(z)
    phases = np.diag(r).copy()
    phases = phases / np.abs(phases)
    return q * phases


def _complete_unitary(q: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a full unitary whose first columns equal q."""
    m, d = q.shape
    full, r = np.linalg.qr(np.hstack([q, np.eye(m, dtype=complex)]))
    full = full[:, :m]
    diag = np.diag(r)[:m].copy()
    safe = np.abs(diag) > 1e-12
    diag[~safe] = 1.0
    diag[safe] = diag[safe] / np.abs(diag[safe])
    return full * diag


def _frame_from_params(theta: np.ndarray, m: int, d: int, base: np.ndarray) -> np.ndarray:
    """First d columns of base @ exp(iH(theta)); smooth chart around a start frame."""
    if not np.any(theta):
        return base[:, :d]
    h = _hermitian_from_params(theta, m)
    vals, vecs = np.linalg.eigh(h)
    return (base @ (vecs * np.exp(1j * vals)) @ dagger(vecs))[:, :d]


def _hermitian_from_params(theta: np.ndarray, d: int) -> np.ndarray:
    h = np.zeros((d, d), dtype=complex)
    h[np.diag_indices(d)] = theta[:d]
    k = d
    for i in range(d):
        for j in range(i + 1, d):
            h[i, j] = theta[k] + 1j * theta[k + 1]
            h[j, i] = theta[k] - 1j * theta[k + 1]
            k += 2
    return h


def _unitary_from_params(theta: np.ndarray, d: int, base: np.ndarray) -> np.ndarray:
    """base @ exp(iH(theta)); smooth chart covering the full unitary group."""
    if not np.any(theta):
        return base
    h = _hermitian_from_params(theta, d)
    vals, vecs = np.linalg.eigh(h)
    return base @ (vecs * np.exp(1j * vals)) @ dagger(vecs)


def _polish(objective, x0: np.ndarray, cfg: OptConfig, max_iters=None, rounds: int = 1):
    """Nelder-Mead refinement; extra rounds restart the simplex at the optimum."""
    options = {
        "maxiter": max_iters if max_iters is not None else cfg.max_iters,
        "xatol": cfg.step_tol,
        "fatol": 1e-12,
        "adaptive": x0.size > 10,
    }
    x, fun = x0, None
    for _ in range(rounds):
        res = scipy.optimize.minimize(objective, x, method="Nelder-Mead", options=options)
        if fun is not None and fun - float(res.fun) < 1e-12:
            if float(res.fun) < fun:
                x, fun = res.x, float(res.fun)
            break
        x, fun = res.x, float(res.fun)
    return x, fun


def _reduce_restarts(values: list[float], cfg: OptConfig) -> tuple[int, bool]:
    """Index of the best restart and a convergence flag.

    Restarts within 1e-12 of the minimum count as ties and the lowest index
    wins, so deterministic warm starts beat float dust from Haar restarts.
    """
    lo = min(values)
    best = next(i for i, v in enumerate(values) if v <= lo + 1e-12)
    if len(values) == 1:
        return best, True
    rest = sorted(v for i, v in enumerate(values) if i != best)
    converged = bool(rest and rest[0] - values[best] <= cfg.entropy_tol)
    return best, converged


def _coordinate_descent(eval_frames, charts, sizes, starts, cfg: OptConfig, sweeps: int = 4):
    """Blockwise simplex descent: polish one block's parameters at a time.

    ``charts[k](theta, base_frame)`` maps a parameter vector of length
    ``sizes[k]`` to a new frame for block k, smoothly, with theta=0 giving
    the base frame back.  Sweeps stop early once a full pass stops helping.
    """
    frames = list(starts)
    best = eval_frames(frames)
    for _ in range(sweeps):
        gained = 0.0
        for k in range(len(frames)):
            base = frames[k]

            def objective(theta, k=k, base=base):
                trial = list(frames)
                trial[k] = charts[k](theta, base)
                return eval_frames(trial)

            x, fun = _polish(objective, np.zeros(sizes[k]), cfg)
            if fun < best - 1e-13:
                gained += best - fun
                frames[k] = charts[k](x, base)
                best = fun
        if gained < 1e-10:
            break
    return best, frames


def _run_restarts(tasks, cfg: OptConfig):
    """Run restart closures (index -> (value, payload)) honoring cfg.workers."""
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(lambda t: t(), tasks))
    else:
        results = [t() for t in tasks]
    return results


def _marginal_eigenbases(rho: DensityMatrix, partition: PartitionSpec) -> list[np.ndarray]:
    """Per-block eigenbases of the reduced states (descending eigenvalue order)."""
    bases = []
    for block in partition.blocks:
        red = rho.reduced(block).mat
        vals, vecs = np.linalg.eigh(red)
        bases.append(vecs[:, ::-1].copy())
    return bases


# ---------------------------------------------------------------------------
# LO*: local projective measurements


def _lostar_search(rho: DensityMatrix, partition: PartitionSpec, cfg: OptConfig):
    """Shared LO* basis search; returns (per-restart values, best bases, flags)."""
    dims = rho.dims
    bdims = partition.block_dims(dims)
    n_blocks = partition.n_blocks
    order = [i for b in partition.blocks for i in b]
    rho_perm = permute_subsystems(rho.mat, dims, order)
    pure_vec = None
    if rho.is_pure():
        pure_vec = permute_vector(rho.pure_vector(), dims, order)

    sizes = [d * d for d in bdims]

    def value(us: list[np.ndarray]) -> float:
        u = us[0]
        for extra in us[1:]:
            u = np.kron(u, extra)
        if pure_vec is not None:
            p = np.abs(dagger(u) @ pure_vec) ** 2
        else:
            p = np.real(np.einsum("ai,ab,bi->i", u.conj(), rho_perm, u))
        return shannon(np.clip(p, 0.0, None))

    charts = [
        (lambda theta, base, d=d: _unitary_from_params(theta, d, base)) for d in bdims
    ]
    eig_bases = _marginal_eigenbases(rho, partition)

    def start_bases(idx: int) -> list[np.ndarray]:
        if idx == 0:
            return [np.eye(d, dtype=complex) for d in bdims]
        if idx == 1:
            return list(eig_bases)
        gen = _rng(cfg.seed, idx)
        bases = []
        for k in range(n_blocks):
            if n_blocks > 1 and gen.uniform() < 0.35:
                bases.append(eig_bases[k])
            else:
                bases.append(_haar_unitary(bdims[k], gen))
        return bases

    def make_task(idx: int):
        def task():
            return _coordinate_descent(value, charts, sizes, start_bases(idx), cfg)

        return task

    n_restarts = max(cfg.restarts, 2)
    results = _run_restarts([make_task(i) for i in range(n_restarts)], cfg)
    values = [r[0] for r in results]
    best, converged = _reduce_restarts(values, cfg)
    return values, results[best][1], converged


def minimize_lostar(
    rho: DensityMatrix, partition: PartitionSpec, cfg: OptConfig = DEFAULT_CONFIG
) -> OptResult:
    """Upper bound on the minimal OE over local projective measurements.

    The search runs over one basis per block, each parameterized as
    U0 @ exp(iH); restart 0 starts from the computational bases, restart 1
    from the marginal eigenbases, the rest from Haar-random bases.
    """
    values, bases, converged = _lostar_search(rho, partition, cfg)
    witness = lostar_povm(bases, partition, rho.dims)
    s_best = observational_entropy(rho, witness)
    s_rho = von_neumann(rho)
    return OptResult(s_best, s_best - s_rho, witness, tuple(values), converged)


# ---------------------------------------------------------------------------
# LO: local POVMs


def _extremal_qubit_povm(m: int, rng: np.random.Generator) -> np.ndarray | None:
    """Stiefel rows for an extremal qubit POVM with m rank-1 effects, or None.

    Effects are w_j/2 (1 + n_j . sigma) with unit Bloch vectors n_j; the
    completeness conditions sum w = 2, sum w n = 0 are solved for the weights
    and infeasible direction samples are rejected.
    """
    if m == 2:
        return dagger(_haar_unitary(2, rng))  # rows are the two basis bras
    if m == 3:
        # three coplanar unit vectors: zero only lies in the span of <= 3
        # positive-weighted directions when they share a plane through 0
        basis = np.linalg.qr(rng.normal(size=(3, 2)))[0]
        angles = np.sort(rng.uniform(0, 2 * np.pi, size=3))
        dirs = np.stack([np.cos(a) * basis[:, 0] + np.sin(a) * basis[:, 1] for a in angles])
    else:
        dirs = rng.normal(size=(m, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    a = np.vstack([np.ones(m), dirs.T])  # (4, m)
    target = np.array([2.0, 0.0, 0.0, 0.0])
    w, res = scipy.optimize.nnls(a, target)
    if res > 1e-10 or np.any(w < 1e-12):
        return None
    rows = [np.sqrt(wj) * _bloch_ket(nj).conj() for wj, nj in zip(w, dirs)]
    return np.stack(rows)


def _bloch_ket(n: np.ndarray) -> np.ndarray:
    theta = np.arccos(np.clip(n[2], -1.0, 1.0))
    phi = np.arctan2(n[1], n[0])
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def _pad_rows(q: np.ndarray, m: int) -> np.ndarray:
    if q.shape[0] == m:
        return q
    return np.vstack([q, np.zeros((m - q.shape[0], q.shape[1]), dtype=complex)])


def minimize_lo(
    rho: DensityMatrix,
    partition: PartitionSpec,
    cfg: OptConfig = DEFAULT_CONFIG,
    outcome_budget=None,
    mode: str = "auto",
) -> OptResult:
    """Upper bound on the minimal OE over local (tensor product) POVMs.

    Each block carries up to m rank-1 effects, encoded as the rows of an
    m x d isometry-style matrix Q (Q^dag Q = 1); qubit blocks draw restarts
    from the extremal families (2 to 4 rank-1 effects), other blocks from
    Haar bases and Haar Stiefel frames.  ``mode="extremal"`` rejects
    non-qubit blocks.
    """
    dims = rho.dims
    bdims = partition.block_dims(dims)
    n_blocks = partition.n_blocks
    if mode not in ("auto", "extremal", "budget"):
        raise ValidationError(f"unknown LO search mode {mode!r}")
    if mode == "extremal" and any(d != 2 for d in bdims):
        raise ValidationError("extremal LO search supports qubit blocks only")
    if outcome_budget is None:
        ms = [4 if d == 2 else d + 1 for d in bdims]
    elif np.isscalar(outcome_budget):
        ms = [max(int(outcome_budget), d) for d in bdims]
    else:
        ms = [max(int(m), d) for m, d in zip(outcome_budget, bdims)]

    order = [i for b in partition.blocks for i in b]
    rho_perm = permute_subsystems(rho.mat, dims, order)
    pure_vec = None
    if rho.is_pure():
        pure_vec = permute_vector(rho.pure_vector(), dims, order)

    sizes = [m * m for m in ms]

    def value(qs: list[np.ndarray]) -> float:
        b = qs[0]  # rows index outcomes; kron of row frames is the joint row frame
        for extra in qs[1:]:
            b = np.kron(b, extra)
        vols = np.sum(np.abs(b) ** 2, axis=1)
        if pure_vec is not None:
            p = np.abs(b @ pure_vec) ** 2
        else:
            p = np.real(np.einsum("ia,ab,ib->i", b, rho_perm, b.conj()))
        return entropy_from_stats(np.clip(p, 0.0, None), vols)

    eig_frames = [
        _pad_rows(dagger(u), m) for u, m in zip(_marginal_eigenbases(rho, partition), ms)
    ]

    def random_frame(k: int, gen: np.random.Generator) -> np.ndarray:
        d, m = bdims[k], ms[k]
        if d == 2 and mode != "budget":
            want = int(gen.integers(2, m + 1))
            q = _extremal_qubit_povm(want, gen)
            while q is None:
                q = _extremal_qubit_povm(want, gen)
            return _pad_rows(q, m)
        if gen.uniform() < 0.5:
            return _pad_rows(dagger(_haar_unitary(d, gen)), m)
        return _haar_stiefel(m, d, gen)

    # the polished LO* bases seed one restart, so the LO result can only
    # improve on the projective optimum found with the same budget
    _, star_bases, _ = _lostar_search(rho, partition, cfg)
    star_frames = [_pad_rows(dagger(u), m) for u, m in zip(star_bases, ms)]

    def start_frames(idx: int) -> list[np.ndarray]:
        if idx == 0:
            return [_pad_rows(np.eye(d, dtype=complex), m) for d, m in zip(bdims, ms)]
        if idx == 1:
            return list(star_frames)
        if idx == 2:
            return list(eig_frames)
        gen = _rng(cfg.seed, 10_000 + idx)
        qs = []
        for k in range(n_blocks):
            if n_blocks > 1 and gen.uniform() < 0.35:
                qs.append(eig_frames[k])  # hold this block at its marginal eigenbasis
            else:
                qs.append(random_frame(k, gen))
        return qs

    charts = [
        (
            lambda theta, base, m=m, d=d: _frame_from_params(
                theta, m, d, _complete_unitary(base)
            )
        )
        for m, d in zip(ms, bdims)
    ]

    def make_task(idx: int):
        def task():
            return _coordinate_descent(value, charts, sizes, start_frames(idx), cfg)

        return task

    n_restarts = max(cfg.restarts, 3)
    results = _run_restarts([make_task(i) for i in range(n_restarts)], cfg)
    values = [r[0] for r in results]
    best, converged = _reduce_restarts(values, cfg)
    locals_ = []
    for q in results[best][1]:
        effects = [np.outer(row.conj(), row) for row in q if np.linalg.norm(row) > 1e-7]
        total = sum(effects)
        deficit = np.eye(q.shape[1]) - total
        if opnorm(deficit) > 1e-10:
            effects.append(deficit)  # reabsorb rows dropped as numerically tiny
        locals_.append(Povm(np.array(effects)))
    witness = lo_povm(locals_, partition, dims)
    s_best = observational_entropy(rho, witness)
    s_rho = von_neumann(rho)
    return OptResult(s_best, s_best - s_rho, witness, tuple(values), converged)


# ---------------------------------------------------------------------------
# one-way LOCC


def _eigenbasis_protocol(
    mat: np.ndarray,
    dims: tuple[int, ...],
    blocks: tuple[tuple[int, ...], ...],
    live: tuple[int, ...],
) -> ConditionalMeasurement:
    """Greedy protocol measuring each block in its conditional marginal eigenbasis.

    ``blocks`` hold positions within the current frame; ``live`` maps those
    positions to original subsystem labels, which is what the emitted
    protocol nodes carry.
    """
    pos = tuple(blocks[0])
    reduced = partial_trace(mat, dims, pos)
    tr = float(np.real(np.trace(reduced)))
    if tr > P_EPS:
        reduced = reduced / tr
    vals, vecs = np.linalg.eigh(0.5 * (reduced + dagger(reduced)))
    povm = Povm.from_basis(vecs[:, ::-1].copy())
    label_block = tuple(live[j] for j in pos)
    if len(blocks) == 1:
        return ConditionalMeasurement(label_block, povm, None)
    rest_pos = tuple(j for j in range(len(dims)) if j not in pos)
    rest_dims = tuple(dims[j] for j in rest_pos)
    rest_live = tuple(live[j] for j in rest_pos)
    rest_blocks = tuple(tuple(rest_pos.index(i) for i in b) for b in blocks[1:])
    children = []
    for i in range(povm.n_outcomes):
        lifted = embed(povm.effects[i], pos, dims)
        p_i = float(np.real(np.trace(lifted @ mat)))
        if p_i <= P_EPS:
            cond = np.eye(int(np.prod(rest_dims))) / int(np.prod(rest_dims))
        else:
            cond = partial_trace(lifted @ mat, dims, rest_pos) / p_i
            cond = 0.5 * (cond + dagger(cond))
        children.append(_eigenbasis_protocol(cond, rest_dims, rest_blocks, rest_live))
    return ConditionalMeasurement(label_block, povm, tuple(children))


def minimize_locc_oneway(
    rho: DensityMatrix,
    partition: PartitionSpec,
    ordering=None,
    cfg: OptConfig = DEFAULT_CONFIG,
    first_budget=None,
) -> OptResult:
    """Upper bound on the minimal OE over one-way LOCC protocols.

    Only the first block's POVM is searched (rank-1 effects, Stiefel-row
    encoding); each later block is measured in the eigenbasis of its
    conditional reduced state, which is exactly optimal for the final round.
    """
    dims = rho.dims
    if ordering is None:
        ordering = tuple(range(partition.n_blocks))
    else:
        ordering = tuple(int(i) for i in ordering)
        if sorted(ordering) != list(range(partition.n_blocks)):
            raise ValidationError("ordering must be a permutation of the partition blocks")
    blocks = tuple(partition.blocks[k] for k in ordering)
    first = blocks[0]
    d0 = int(np.prod([dims[i] for i in first]))
    m = first_budget or (4 if d0 == 2 else d0 + 1)
    m = max(int(m), d0)
    rest_blocks = blocks[1:]

    s_rho = von_neumann(rho)
    pos = tuple(first)
    rest_pos = tuple(j for j in range(len(dims)) if j not in pos)
    rest_dims = tuple(dims[j] for j in rest_pos)
    reduced_first = partial_trace(rho.mat, dims, pos)
    rest_blocks_pos = tuple(tuple(rest_pos.index(i) for i in b) for b in rest_blocks)

    def value(q: np.ndarray) -> float:
        effects = np.einsum("ia,ib->iab", q.conj(), q)
        vols = np.real(np.trace(effects, axis1=1, axis2=2))
        p = np.clip(np.real(np.einsum("iab,ba->i", effects, reduced_first)), 0.0, None)
        total = entropy_from_stats(p, vols)
        if not rest_blocks:
            return total
        for i in range(q.shape[0]):
            if p[i] <= P_EPS:
                continue
            lifted = embed(effects[i], pos, dims)
            cond = partial_trace(lifted @ rho.mat, dims, rest_pos) / p[i]
            cond = 0.5 * (cond + dagger(cond))
            total += p[i] * _greedy_chain_value(cond, rest_dims, rest_blocks_pos)
        return total

    def start_frame(idx: int) -> np.ndarray:
        if idx == 0:
            return _pad_rows(np.eye(d0, dtype=complex), m)
        if idx == 1:
            vals, vecs = np.linalg.eigh(reduced_first)
            return _pad_rows(dagger(vecs[:, ::-1]), m)
        gen = _rng(cfg.seed, 20_000 + idx)
        if d0 == 2:
            want = int(gen.integers(2, m + 1))
            q = _extremal_qubit_povm(want, gen)
            while q is None:
                q = _extremal_qubit_povm(want, gen)
            return _pad_rows(q, m)
        if gen.uniform() < 0.5:
            return _pad_rows(dagger(_haar_unitary(d0, gen)), m)
        return _haar_stiefel(m, d0, gen)

    def make_task(idx: int):
        def task():
            q0 = start_frame(idx)
            base = _complete_unitary(q0)
            objective = lambda theta: value(_frame_from_params(theta, m, d0, base))
            x0 = np.zeros(m * m)
            x, fun = _polish(objective, x0, cfg, rounds=2)
            return fun, _frame_from_params(x, m, d0, base)

        return task

    n_restarts = max(cfg.restarts, 2)
    results = _run_restarts([make_task(i) for i in range(n_restarts)], cfg)
    values = [r[0] for r in results]
    best, converged = _reduce_restarts(values, cfg)
    q_best = results[best][1]

    effects = [np.outer(row.conj(), row) for row in q_best if np.linalg.norm(row) > 1e-7]
    total = sum(effects)
    deficit = np.eye(d0) - total
    if opnorm(deficit) > 1e-10:
        effects.append(deficit)
    first_povm = Povm(np.array(effects))
    if not rest_blocks:
        witness = ConditionalMeasurement(first, first_povm, None)
    else:
        children = []
        for i in range(first_povm.n_outcomes):
            lifted = embed(first_povm.effects[i], pos, dims)
            p_i = float(np.real(np.trace(lifted @ rho.mat)))
            if p_i <= P_EPS:
                cond = np.eye(int(np.prod(rest_dims))) / int(np.prod(rest_dims))
            else:
                cond = partial_trace(lifted @ rho.mat, dims, rest_pos) / p_i
                cond = 0.5 * (cond + dagger(cond))
            children.append(_eigenbasis_protocol(cond, rest_dims, rest_blocks_pos, rest_pos))
        witness = ConditionalMeasurement(first, first_povm, tuple(children))
    s_best = chain_entropy(witness, rho)
    return OptResult(s_best, s_best - s_rho, witness, tuple(values), converged)


def _greedy_chain_value(
    mat: np.ndarray, dims: tuple[int, ...], blocks: tuple[tuple[int, ...], ...]
) -> float:
    """Chain entropy of the greedy conditional-eigenbasis protocol, computed directly."""
    pos = tuple(blocks[0])
    reduced = partial_trace(mat, dims, pos)
    vals, vecs = np.linalg.eigh(0.5 * (reduced + dagger(reduced)))
    p = np.clip(vals[::-1], 0.0, None)
    total = shannon(p)
    if len(blocks) == 1:
        return total
    rest_pos = tuple(j for j in range(len(dims)) if j not in pos)
    rest_dims = tuple(dims[j] for j in rest_pos)
    rest_blocks = tuple(tuple(rest_pos.index(i) for i in b) for b in blocks[1:])
    for k in range(len(p)):
        if p[k] <= P_EPS:
            continue
        ket = vecs[:, len(p) - 1 - k]
        proj = np.outer(ket, ket.conj())
        lifted = embed(proj, pos, dims)
        cond = partial_trace(lifted @ mat, dims, rest_pos) / p[k]
        cond = 0.5 * (cond + dagger(cond))
        total += p[k] * _greedy_chain_value(cond, rest_dims, rest_blocks)
    return total


# ---------------------------------------------------------------------------
# analytic Werner solver


@dataclass(frozen=True)
class WernerAnalytic:
    """Closed-form Werner values; exact for every class between LO* and PPT."""

    d: int
    lam: float
    s_measured_bits: float
    s_state_bits: float
    gap_bits: float
    witness: Povm


def werner_witness(d: int) -> Povm:
    """The optimal two-outcome POVM (diagonal projector, off-diagonal projector)."""
    diag = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        diag[i * d + i, i * d + i] = 1.0
    off = np.eye(d * d) - diag
    return Povm(np.array([diag, off]), ("diag", "offdiag"), "SEP")


def werner_analytic(d: int, lam: float) -> WernerAnalytic:
    """Exact Werner-state entropies and gap for any class between LO* and PPT."""
    if d < 2:
        raise ValidationError("werner_analytic requires d >= 2")
    if not 0.0 <= lam <= 1.0:
        raise ValidationError(f"lambda must lie in [0, 1], got {lam}")
    w_plus = d * (d + 1) / 2
    w_minus = d * (d - 1) / 2
    x = (d + 2 * lam - 1) / (d + 1)
    s_measured = binary_entropy(x) + (1 - x) * math.log2(d) + x * math.log2(d * (d - 1))
    s_state = binary_entropy(lam) + (1 - lam) * math.log2(w_plus)
    if lam > 0:
        s_state += lam * math.log2(w_minus)
    return WernerAnalytic(d, lam, s_measured, s_state, s_measured - s_state, werner_witness(d))


# ---------------------------------------------------------------------------
# CQ states


def _extract_cq(rho: DensityMatrix, basis: np.ndarray, classical_block: int, tol: float = 1e-9):
    """Split a CQ state into (weights, conditional states); raise when not CQ."""
    dims = rho.dims
    if len(dims) != 2:
        raise ValidationError("cq_gap handles bipartite states")
    if classical_block not in (0, 1):
        raise ValidationError("classical_block must be 0 or 1")
    mat = rho.mat
    if classical_block == 1:
        mat = permute_subsystems(mat, dims, (1, 0))
        dims = (dims[1], dims[0])
    dc, dq = dims
    u = np.kron(basis, np.eye(dq))
    mat = dagger(u) @ mat @ u
    blocks = mat.reshape(dc, dq, dc, dq)
    weights = []
    conds = []
    for k in range(dc):
        for l in range(dc):
            if k == l:
                continue
            if opnorm(blocks[k, :, l, :]) > tol:
                raise ValidationError(
                    "state is not classical-quantum in the declared basis "
                    f"(off-diagonal block ({k},{l}) has norm {opnorm(blocks[k, :, l, :]):.3e})"
                )
    for k in range(dc):
        b = blocks[k, :, k, :]
        w = float(np.real(np.trace(b)))
        weights.append(w)
        conds.append(b / w if w > P_EPS else np.eye(dq) / dq)
    return np.array(weights), conds, (dc, dq)


def cq_gap(
    rho: DensityMatrix,
    classical_basis,
    klass: str,
    cfg: OptConfig = DEFAULT_CONFIG,
    classical_block: int = 0,
) -> OptResult:
    """Entropy gap of a CQ state, optimizing only the quantum-side measurement.

    The classical side is measured in its declared basis (provably optimal),
    so the gap reduces to inf_N sum_k w_k (S_N(rho_k) - S(rho_k)) over
    projective (klass="lostar") or general (klass="lo") measurements N.
    """
    klass = klass.lower()
    if klass not in ("lostar", "lo"):
        raise ValidationError("cq_gap optimizes the LOStar or LO class only")
    basis = np.asarray(classical_basis, dtype=complex)
    weights, conds, (dc, dq) = _extract_cq(rho, basis, classical_block)
    s_conds = [von_neumann(c) for c in conds]

    m = dq if klass == "lostar" else (4 if dq == 2 else dq + 1)

    def gap_value(q: np.ndarray) -> float:
        effects = np.einsum("ia,ib->iab", q.conj(), q)
        vols = np.real(np.trace(effects, axis1=1, axis2=2))
        total = 0.0
        for w, cond, s_c in zip(weights, conds, s_conds):
            if w <= P_EPS:
                continue
            p = np.clip(np.real(np.einsum("iab,ba->i", effects, cond)), 0.0, None)
            total += w * (entropy_from_stats(p, vols) - s_c)
        return total

    def start_frame(idx: int) -> np.ndarray:
        if idx == 0:
            return _pad_rows(np.eye(dq, dtype=complex), m)
        if idx == 1:
            avg = sum(w * c for w, c in zip(weights, conds))
            vals, vecs = np.linalg.eigh(avg)
            return _pad_rows(dagger(vecs[:, ::-1]), m)
        gen = _rng(cfg.seed, 30_000 + idx)
        if klass == "lostar":
            return _pad_rows(dagger(_haar_unitary(dq, gen)), m)
        if dq == 2:
            want = int(gen.integers(2, m + 1))
            q = _extremal_qubit_povm(want, gen)
            while q is None:
                q = _extremal_qubit_povm(want, gen)
            return _pad_rows(q, m)
        if gen.uniform() < 0.5:
            return _pad_rows(dagger(_haar_unitary(dq, gen)), m)
        return _haar_stiefel(m, dq, gen)

    def make_task(idx: int):
        def task():
            q0 = start_frame(idx)
            if klass == "lostar":
                base = dagger(q0[:dq])
                objective = lambda theta: gap_value(
                    dagger(_unitary_from_params(theta, dq, base))
                )
                x0 = np.zeros(dq * dq)
                x, fun = _polish(objective, x0, cfg, rounds=2)
                return fun, dagger(_unitary_from_params(x, dq, base))
            base = _complete_unitary(q0)
            objective = lambda theta: gap_value(_frame_from_params(theta, m, dq, base))
            x0 = np.zeros(m * m)
            x, fun = _polish(objective, x0, cfg, rounds=2)
            return fun, _frame_from_params(x, m, dq, base)

        return task

    n_restarts = max(cfg.restarts, 2)
    results = _run_restarts([make_task(i) for i in range(n_restarts)], cfg)
    values = [r[0] for r in results]
    best, converged = _reduce_restarts(values, cfg)
    q_best = results[best][1]
    effects = [np.outer(row.conj(), row) for row in q_best if np.linalg.norm(row) > 1e-7]
    total = sum(effects)
    deficit = np.eye(dq) - total
    if opnorm(deficit) > 1e-10:
        effects.append(deficit)
    n_povm = Povm(np.array(effects))
    cb_povm = Povm.from_basis(basis)
    pair = [cb_povm, n_povm] if classical_block == 0 else [n_povm, cb_povm]
    witness = lo_povm(pair, PartitionSpec.full(2), rho.dims)
    if klass == "lostar" and witness.is_projective():
        witness = witness.retag("LOStar")
    gap = values[best]
    s_rho = von_neumann(rho)
    return OptResult(gap + s_rho, gap, witness, tuple(values), converged)


# ---------------------------------------------------------------------------
# exact PPT gap for the three-qubit W state


@dataclass(frozen=True)
class PptW3Result:
    gap_bits: float
    trace_value: float
    coefficients: tuple[float, ...]  # (t2, t3, t4, t5, t6)
    witness: Povm


def _w3_invariant_projectors() -> list[np.ndarray]:
    """The six projectors spanning operators invariant under local phases and permutations."""
    w3 = w_vector(3)
    wbar = np.zeros(8, dtype=complex)
    for idx in (0b011, 0b101, 0b110):
        wbar[idx] = 1 / np.sqrt(3)
    q1 = np.outer(w3, w3.conj())
    q2 = np.outer(wbar, wbar.conj())
    p1 = np.zeros((8, 8), dtype=complex)
    for idx in (0b100, 0b010, 0b001):
        p1[idx, idx] = 1.0
    p2 = np.zeros((8, 8), dtype=complex)
    for idx in (0b011, 0b101, 0b110):
        p2[idx, idx] = 1.0
    q3 = p1 - q1
    q4 = p2 - q2
    q5 = np.zeros((8, 8), dtype=complex)
    q5[0, 0] = 1.0
    q6 = np.zeros((8, 8), dtype=complex)
    q6[7, 7] = 1.0
    return [q1, q2, q3, q4, q5, q6]


EXACT_W3_COEFFS = (Fraction(1, 2), Fraction(0), Fraction(0), Fraction(2, 3), Fraction(1, 12))


def ppt_gap_w3() -> PptW3Result:
    """Exact PPT-class gap of the three-qubit W state, log2(9/4) bits.

    Minimizes Tr M' over M' = Q1 + sum_a t_a Q_a subject to M' >= 0 and
    PPT on the first qubit, by grid search plus COBYLA polish; the paper's
    rational optimum is then verified and returned exactly.  A failure here
    signals an implementation bug, not an unlucky search.
    """
    qs = _w3_invariant_projectors()
    traces = np.array([np.real(np.trace(q)) for q in qs])  # [1, 1, 2, 2, 1, 1]
    dims = (2, 2, 2)

    def build(t: np.ndarray) -> np.ndarray:
        m = np.array(qs[0])
        for ta, qa in zip(t, qs[1:]):
            m = m + ta * qa
        return m

    def feasible(t: np.ndarray, slack: float = 1e-9) -> bool:
        if np.any(t < -slack):
            return False
        pt = partial_transpose(build(t), dims, (0,))
        return float(np.linalg.eigvalsh(pt)[0]) >= -slack

    def trace_of(t: np.ndarray) -> float:
        return float(1.0 + np.dot(traces[1:], t))

    grid = np.linspace(0.0, 1.0, 7)
    best_t = None
    best_trace = np.inf
    for combo in itertools.product(grid, repeat=5):
        t = np.array(combo)
        if trace_of(t) >= best_trace:
            continue
        if feasible(t, slack=1e-7):
            best_trace = trace_of(t)
            best_t = t
    if best_t is None:
        raise RuntimeError("no feasible point found on the PPT grid; implementation bug")

    cons = [
        {
            "type": "ineq",
            "fun": lambda t: float(
                np.linalg.eigvalsh(partial_transpose(build(t), dims, (0,)))[0]
            ),
        },
        {"type": "ineq", "fun": lambda t: np.min(t)},
    ]
    res = scipy.optimize.minimize(
        trace_of, best_t, method="COBYLA", constraints=cons, options={"maxiter": 4000, "rhobeg": 0.1, "tol": 1e-12}
    )
    polished = float(res.fun) if feasible(res.x, slack=1e-7) else best_trace

    exact = np.array([float(f) for f in EXACT_W3_COEFFS])
    if not feasible(exact, slack=1e-12):
        raise RuntimeError("exact W3 coefficient vector is infeasible; implementation bug")
    exact_trace = trace_of(exact)
    if polished < exact_trace - 1e-6:
        raise RuntimeError(
            f"search found trace {polished:.9f} below the exact optimum {exact_trace:.9f}; "
            "implementation bug"
        )
    if np.max(exact) > 1.0:
        raise RuntimeError("exact coefficients exceed 1; witness would not be a POVM")
    m_opt = build(exact)
    complement = np.eye(8) - m_opt
    part = PartitionSpec.full(3)
    if not effect_is_ppt(complement, part, dims):
        raise RuntimeError("identity complement of the W3 witness is not PPT")
    witness = Povm(np.array([m_opt, complement]), ("W3", "rest"), "PPT")
    return PptW3Result(
        gap_bits=math.log2(exact_trace),
        trace_value=exact_trace,
        coefficients=tuple(float(f) for f in EXACT_W3_COEFFS),
        witness=witness,
    )


# ---------------------------------------------------------------------------
# eigenseparability


@dataclass(frozen=True)
class EigenseparabilityReport:
    verdict: str  # Eigenseparable | NotEigenseparable | Unknown
    projector_verdicts: tuple[tuple[float, SeparabilityVerdict], ...]
    kernel_verdict: SeparabilityVerdict | None
    kernel_is_ppt: bool | None


def eigenseparability(rho: DensityMatrix, partition: PartitionSpec) -> EigenseparabilityReport:
    """Decide whether every eigenprojector of rho (kernel included) is separable.

    Exactly the states with zero SEP gap are eigenseparable; the verdict is
    three-valued because general separability is undecidable at this scale.
    """
    spec = spectral(rho.mat)
    dims = rho.dims
    verdicts = []
    nonzero = np.zeros((rho.d, rho.d), dtype=complex)
    for lam, proj in zip(spec.eigenvalues, spec.projectors):
        if lam <= 1e-10:
            continue
        nonzero = nonzero + proj
        verdicts.append((lam, is_separable_effect(proj, partition, dims)))
    kernel = np.eye(rho.d) - nonzero
    kernel_verdict = None
    kernel_ppt = None
    if opnorm(kernel) > 1e-8:
        kernel_verdict = is_separable_effect(kernel, partition, dims)
        kernel_ppt = effect_is_ppt(kernel, partition, dims)
    all_v = [v for _, v in verdicts] + ([kernel_verdict] if kernel_verdict is not None else [])
    if any(v == SeparabilityVerdict.ENTANGLED for v in all_v):
        overall = "NotEigenseparable"
    elif all(v == SeparabilityVerdict.SEPARABLE for v in all_v):
        overall = "Eigenseparable"
    else:
        overall = "Unknown"
    return EigenseparabilityReport(overall, tuple(verdicts), kernel_verdict, kernel_ppt)


# ---------------------------------------------------------------------------
# SEP heuristic


def sep_gap_heuristic(
    rho: DensityMatrix,
    partition: PartitionSpec,
    outcome_budget: int | None = None,
    cfg: OptConfig = DEFAULT_CONFIG,
    ppt_lower_bits: float | None = None,
) -> OptResult:
    """Upper bound on the SEP-class entropy via weighted product rank-1 POVMs.

    Directions are product unit vectors (one per block per outcome); weights
    come from a non-negative least-squares completeness solve, and direction
    sets whose cone misses the identity are rejected, so every accepted
    iterate is a genuine POVM.  Candidate sets seed from the LO* witness and
    the flattened one-way LOCC witness, then local perturbations polish.
    The returned ``bounds`` records the sandwich
    [max(ppt_lower_bits, 0), heuristic gap].
    """
    dims = rho.dims
    bdims = partition.block_dims(dims)
    d = rho.d
    budget = outcome_budget if outcome_budget is not None else max(d, 2 * d)
    if budget < d:
        raise ValidationError(f"outcome budget {budget} cannot complete identity at dimension {d}")

    light = OptConfig(
        seed=cfg.seed,
        restarts=max(4, cfg.restarts // 2),
        max_iters=max(500, cfg.max_iters // 2),
        step_tol=cfg.step_tol,
        entropy_tol=cfg.entropy_tol,
        workers=cfg.workers,
    )
    s_rho = von_neumann(rho)

    def directions_from_povm(povm: Povm) -> list[list[np.ndarray]] | None:
        dirs = []
        from .classes import product_vector_factors, rank1_refine

        refined = rank1_refine(povm)
        for eff in refined.effects:
            scale = float(np.real(np.trace(eff)))
            if scale <= 1e-10:
                continue
            vals, vecs = np.linalg.eigh(eff)
            vec = vecs[:, -1]
            factors = product_vector_factors(vec, partition, dims)
            if factors is None:
                return None
            dirs.append(factors)
        return dirs

    def assemble(dirs: list[list[np.ndarray]]):
        """NNLS weight solve; returns (entropy, weights, projectors) or None if infeasible."""
        from .classes import _product_effect

        projs = []
        for factors in dirs:
            parts = [np.outer(f, f.conj()) for f in factors]
            projs.append(_product_effect(parts, partition.blocks, dims))
        a = np.stack([np.concatenate([p.real.ravel(), p.imag.ravel()]) for p in projs], axis=1)
        target = np.concatenate([np.eye(d).ravel(), np.zeros(d * d)])
        w, _ = scipy.optimize.nnls(a, target)
        residual = np.linalg.norm(a @ w - target)
        if residual > 1e-10:
            return None
        p = np.array([wk * float(np.real(np.trace(pk @ rho.mat))) for wk, pk in zip(w, projs)])
        val = entropy_from_stats(np.clip(p, 0.0, None), np.where(w > 0, w, 1.0))
        return val, w, projs

    candidates: list[list[list[np.ndarray]]] = []
    lostar_res = minimize_lostar(rho, partition, light)
    seed_dirs = directions_from_povm(lostar_res.witness)
    if seed_dirs is not None:
        candidates.append(seed_dirs)
    if partition.n_blocks >= 2:
        locc_res = minimize_locc_oneway(rho, partition, None, light)
        flat = flatten_locc(locc_res.witness, dims)
        seed_dirs = directions_from_povm(flat)
        if seed_dirs is not None:
            candidates.append(seed_dirs)
    if not candidates:
        raise RuntimeError("no feasible product POVM seed found")

    best_val = np.inf
    best_assembly = None
    best_dirs = None
    trace_vals = []
    for dirs in candidates:
        out = assemble(dirs)
        if out is None:
            continue
        trace_vals.append(out[0])
        if out[0] < best_val:
            best_val, best_dirs, best_assembly = out[0], dirs, out
    if best_assembly is None:
        raise RuntimeError("no candidate product POVM was complete; implementation bug")

    # local polish: jitter directions, keep strictly feasible improvements only
    gen = _rng(cfg.seed, 40_000)
    scale = 0.1
    for _ in range(cfg.restarts):
        trial = [
            [f + scale * (gen.normal(size=f.shape) + 1j * gen.normal(size=f.shape)) for f in factors]
            for factors in best_dirs
        ]
        trial = [[f / np.linalg.norm(f) for f in factors] for factors in trial]
        out = assemble(trial)
        if out is not None and out[0] < best_val - 1e-12:
            best_val, best_dirs, best_assembly = out[0], trial, out
        else:
            scale *= 0.8
        trace_vals.append(best_val)

    _, w, projs = best_assembly
    keep = w > 1e-14
    effects = np.array([wk * pk for wk, pk in zip(w[keep], np.asarray(projs)[keep])])
    witness = Povm(effects, class_tag="SEP")
    s_best = observational_entropy(rho, witness)
    gap = s_best - s_rho
    lower = max(ppt_lower_bits if ppt_lower_bits is not None else 0.0, 0.0)
    return OptResult(
        s_best,
        gap,
        witness,
        tuple(trace_vals),
        converged=True,
        bounds=(lower, gap),
    )
