"""Entropy functionals: observational entropy, coarse-graining, and certificates.

All values are in bits (base-2 logarithms); 0*log(0) is 0 and outcome
probabilities at or below ``P_EPS`` drop out of every sum.  Infinite relative
entropies are encoded as ``math.inf`` so optimizers can still rank candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classes import ConditionalMeasurement, lo_povm
from .core import (
    DensityMatrix,
    PartitionSpec,
    Povm,
    ValidationError,
    dagger,
    embed,
    opnorm,
    partial_trace,
    spectral,
)

P_EPS = 1e-14


def _as_mat(rho) -> np.ndarray:
    return rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def shannon(probs) -> float:
    """Shannon entropy of a probability vector, in bits."""
    p = np.asarray(probs, dtype=float)
    p = p[p > P_EPS]
    return max(0.0, float(-np.sum(p * np.log2(p))))


def binary_entropy(x: float) -> float:
    return shannon([x, 1.0 - x])


def relative_entropy(p, q) -> float:
    """Classical D(p||q) in bits; inf when p puts weight outside supp(q)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    total = 0.0
    for pi, qi in zip(p, q):
        if pi <= P_EPS:
            continue
        if qi <= P_EPS:
            return math.inf
        total += pi * math.log2(pi / qi)
    return total


def von_neumann(rho) -> float:
    """von Neumann entropy -Tr rho log2 rho in bits."""
    vals = np.linalg.eigvalsh(_as_mat(rho))
    return shannon(np.clip(vals, 0.0, None))


def quantum_relative_entropy(rho, sigma) -> float:
    """Umegaki relative entropy D(rho||sigma) in bits; inf on support violation."""
    r = _as_mat(rho)
    s = _as_mat(sigma)
    rvals, rvecs = np.linalg.eigh(r)
    svals, svecs = np.linalg.eigh(s)
    rvals = np.clip(rvals, 0.0, None)
    tr_rho_log_rho = float(np.sum(rvals[rvals > P_EPS] * np.log2(rvals[rvals > P_EPS])))
    # overlap of rho with the eigenvectors of sigma
    weights = np.real(np.einsum("ij,jk,ki->i", dagger(svecs), r, svecs))
    weights = np.clip(weights, 0.0, None)
    tr_rho_log_sigma = 0.0
    for w, sv in zip(weights, svals):
        if w <= 1e-12:
            continue
        if sv <= P_EPS:
            return math.inf
        tr_rho_log_sigma += w * math.log2(sv)
    return tr_rho_log_rho - tr_rho_log_sigma


@dataclass(frozen=True)
class OutcomeStats:
    """Outcome probabilities p_i and macrostate volumes V_i for one measurement."""

    probabilities: np.ndarray
    volumes: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        v = np.asarray(self.volumes, dtype=float)
        if np.any(p < -1e-12):
            raise ValidationError(f"negative outcome probability {p.min():.3e}")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValidationError(f"outcome probabilities sum to {p.sum():.12f}")
        if np.any((p > P_EPS) & (v <= 0)):
            raise ValidationError("outcome with positive probability has zero volume")
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "volumes", v)


def probabilities(rho, povm: Povm) -> np.ndarray:
    """Outcome probabilities Tr(M_i rho), clipped at zero."""
    r = _as_mat(rho)
    if r.shape[0] != povm.d:
        raise ValidationError(f"state dimension {r.shape[0]} does not match POVM dimension {povm.d}")
    p = np.real(np.einsum("iab,ba->i", povm.effects, r))
    return np.clip(p, 0.0, None)


def outcome_stats(rho, povm: Povm) -> OutcomeStats:
    volumes = povm.volumes()
    if abs(volumes.sum() - povm.d) > 1e-9 * max(1.0, povm.d):
        raise ValidationError(
            f"macrostate volumes sum to {volumes.sum():.12f}, expected {povm.d}"
        )
    return OutcomeStats(probabilities(rho, povm), volumes, povm.labels)


def observational_entropy(rho, povm: Povm) -> float:
    """Observational entropy S_M(rho) = -sum_i p_i log2(p_i / V_i) in bits."""
    stats = outcome_stats(rho, povm)
    return entropy_from_stats(stats.probabilities, stats.volumes)


def entropy_from_stats(p, v) -> float:
    # each term is nonnegative since p_i <= V_i for any state and effect
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    mask = p > P_EPS
    return max(0.0, float(-np.sum(p[mask] * np.log2(p[mask] / v[mask]))))


def measured_relative_entropy(rho, sigma, povm: Povm) -> float:
    """D_M(rho||sigma): classical relative entropy of the two outcome distributions."""
    return relative_entropy(probabilities(rho, povm), probabilities(sigma, povm))


def coarse_grain(rho, povm: Povm) -> DensityMatrix:
    """Bayesian-retrodiction state P_M(rho) = sum_i p_i M_i / V_i."""
    p = probabilities(rho, povm)
    v = povm.volumes()
    d = povm.d
    out = np.zeros((d, d), dtype=complex)
    for pi, vi, eff in zip(p, v, povm.effects):
        if pi <= P_EPS or vi <= P_EPS:
            continue
        out += (pi / vi) * eff
    out = 0.5 * (out + dagger(out))
    dims = rho.dims if isinstance(rho, DensityMatrix) else (d,)
    return DensityMatrix(out, dims)


@dataclass(frozen=True)
class RecoveryBounds:
    """Sandwich for S_M(rho): lower = D(rho||P_M(rho)) + S(rho), upper = S(P_M(rho))."""

    lower: float
    upper: float


def recovery_bounds(rho, povm: Povm) -> RecoveryBounds:
    cg = coarse_grain(rho, povm)
    upper = von_neumann(cg)
    lower = quantum_relative_entropy(rho, cg) + von_neumann(rho)
    return RecoveryBounds(lower=lower, upper=upper)


@dataclass(frozen=True)
class OptimalityCertificate:
    """Outcome of the optimal-measurement check for (rho, M)."""

    optimal: bool
    reason: str
    failing_outcome: int | None
    entropy_bits: float
    state_entropy_bits: float


def certify_optimal(
    rho, povm: Povm, op_tol: float = 1e-8, entropy_tol: float = 1e-7
) -> OptimalityCertificate:
    """Certify S_M(rho) = S(rho) via the eigenspace-support condition.

    A measurement is optimal iff each effect is completely supported on a
    single eigenspace of rho (M_i = P_k M_i P_k for exactly one cluster k).
    The operator condition is checked effect by effect, then cross-checked
    against the entropy equality.
    """
    r = _as_mat(rho)
    spec = spectral(r)
    s_m = observational_entropy(rho, povm)
    s_rho = von_neumann(rho)
    for idx in range(povm.n_outcomes):
        eff = povm.effects[idx]
        scale = opnorm(eff)
        if scale <= 1e-12:
            continue
        residuals = [opnorm(eff - proj @ eff @ proj) for proj in spec.projectors]
        best = int(np.argmin(residuals))
        if residuals[best] > op_tol * scale:
            return OptimalityCertificate(
                False,
                f"effect {idx} is not supported on a single eigenspace "
                f"(best residual {residuals[best]:.3e})",
                idx,
                s_m,
                s_rho,
            )
    if abs(s_m - s_rho) > entropy_tol:
        return OptimalityCertificate(
            False,
            f"support condition held but S_M - S = {s_m - s_rho:.3e}",
            None,
            s_m,
            s_rho,
        )
    return OptimalityCertificate(True, "optimal", None, s_m, s_rho)


@dataclass(frozen=True)
class TensorOeDecomposition:
    """OE of a tensor measurement split into marginal entropies minus mutual information."""

    marginal_bits: tuple[float, ...]
    mutual_information_bits: float
    total_bits: float


def tensor_oe_decompose(
    rho: DensityMatrix, povms, partition: PartitionSpec
) -> TensorOeDecomposition:
    """Decompose S_{M1 (x) ... (x) Mn}(rho) = sum_k S_{Mk}(rho_k) - I(joint)."""
    povms = list(povms)
    marginals = []
    for block, povm in zip(partition.blocks, povms):
        marginals.append(observational_entropy(rho.reduced(block), povm))
    joint_povm = lo_povm(povms, partition, rho.dims)
    p_joint = probabilities(rho, joint_povm)
    shape = tuple(m.n_outcomes for m in povms)
    pt = p_joint.reshape(shape)
    # product of the outcome-distribution marginals
    prod = np.ones_like(pt)
    for k in range(len(shape)):
        axes = tuple(i for i in range(len(shape)) if i != k)
        mk = pt.sum(axis=axes)
        view = [1] * len(shape)
        view[k] = shape[k]
        prod = prod * mk.reshape(view)
    mutual = relative_entropy(pt.ravel(), prod.ravel())
    total = float(sum(marginals) - mutual)
    return TensorOeDecomposition(tuple(marginals), mutual, total)


def chain_entropy(protocol: ConditionalMeasurement, rho: DensityMatrix) -> float:
    """Observational entropy of a one-way protocol via the chain formula.

    S = S_first(rho_block) + sum_i p_i S_followup(rho_i on the rest), which
    equals the observational entropy of the flattened product-effect POVM.
    Protocol blocks refer to the subsystem indices of ``rho``.
    """
    n = len(rho.dims)
    return _chain(protocol, rho.mat, rho.dims, tuple(range(n)))


def _chain(
    node: ConditionalMeasurement,
    mat: np.ndarray,
    dims: tuple[int, ...],
    live: tuple[int, ...],
) -> float:
    try:
        pos = tuple(live.index(b) for b in node.block)
    except ValueError:
        raise ValidationError(
            f"protocol block {node.block} measures an already-traced subsystem"
        ) from None
    reduced = partial_trace(mat, dims, pos)
    p_block = np.clip(np.real(np.einsum("iab,ba->i", node.povm.effects, reduced)), 0.0, None)
    total = entropy_from_stats(p_block, node.povm.volumes())
    if node.then is None:
        return total
    rest_pos = tuple(j for j in range(len(dims)) if j not in pos)
    rest_dims = tuple(dims[j] for j in rest_pos)
    rest_live = tuple(live[j] for j in rest_pos)
    for i, child in enumerate(node.then):
        lifted = embed(node.povm.effects[i], pos, dims)
        p_i = float(np.real(np.trace(lifted @ mat)))
        if p_i <= P_EPS:
            continue
        cond = partial_trace(lifted @ mat, dims, rest_pos) / p_i
        cond = 0.5 * (cond + dagger(cond))
        total += p_i * _chain(child, cond, rest_dims, rest_live)
    return total
