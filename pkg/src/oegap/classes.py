"""Constructors, membership validators, and postprocessing for measurement classes.

Covers local projective (LO*), local POVM (LO), one-way LOCC protocols
(LOCC1), separable (SEP), positive-partial-transpose (PPT) and
reduction-criterion (RCT) measurements, plus classical postprocessing.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    PartitionSpec,
    Povm,
    ValidationError,
    as_operator,
    dagger,
    embed,
    opnorm,
    min_eig,
    partial_trace,
    partial_transpose,
    permute_subsystems,
    tensor,
)


class SeparabilityVerdict(str, enum.Enum):
    SEPARABLE = "Separable"
    ENTANGLED = "Entangled"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class LocalBases:
    """One orthonormal basis (unitary matrix, columns are basis vectors) per block."""

    bases: tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = []
        for u in self.bases:
            u = as_operator(u)
            if opnorm(u @ dagger(u) - np.eye(u.shape[0])) > 1e-9:
                raise ValidationError("local basis matrix is not unitary")
            mats.append(u)
        object.__setattr__(self, "bases", tuple(mats))


@dataclass(frozen=True)
class StochasticMap:
    """Column-stochastic matrix Lambda[j, i] = P(new outcome j | old outcome i)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2:
            raise ValidationError("stochastic map must be a matrix")
        if np.any(m < -1e-12):
            raise ValidationError("stochastic map has negative entries")
        col = m.sum(axis=0)
        if np.max(np.abs(col - 1.0)) > 1e-12:
            raise ValidationError("stochastic map columns must sum to 1")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class ConditionalMeasurement:
    """One-way LOCC protocol node: measure ``block`` now, then branch on the outcome.

    ``block`` holds subsystem indices (into the global dims), ``povm`` acts on
    that block, and ``then`` holds one follow-up protocol per outcome for the
    remaining blocks (None once every block has been measured).
    """

    block: tuple[int, ...]
    povm: Povm
    then: tuple["ConditionalMeasurement", ...] | None = None

    def __post_init__(self):
        block = tuple(int(i) for i in self.block)
        if list(block) != sorted(set(block)):
            raise ValidationError("protocol block indices must be strictly ascending")
        object.__setattr__(self, "block", block)
        if self.then is not None:
            if len(self.then) != self.povm.n_outcomes:
                raise ValidationError(
                    f"protocol provides {len(self.then)} follow-ups for "
                    f"{self.povm.n_outcomes} outcomes"
                )
            for child in self.then:
                if set(child.block) & set(block):
                    raise ValidationError("follow-up measures an already-measured block")


def _product_effect(effects: Sequence[np.ndarray], blocks, dims) -> np.ndarray:
    """Tensor effects living on the given blocks into a full-space operator."""
    flat = [i for b in blocks for i in b]
    big = tensor(list(effects))
    order = [flat.index(i) for i in range(len(dims))]
    return permute_subsystems(big, [dims[i] for i in flat], order)


def lostar_povm(bases, partition: PartitionSpec, dims) -> Povm:
    """Rank-1 product projector POVM from one local basis per block."""
    if isinstance(bases, LocalBases):
        bases = bases.bases
    bases = LocalBases(tuple(bases)).bases
    dims = tuple(int(d) for d in dims)
    bdims = partition.block_dims(dims)
    if len(bases) != partition.n_blocks:
        raise ValidationError(f"{len(bases)} bases for {partition.n_blocks} blocks")
    for u, db in zip(bases, bdims):
        if u.shape[0] != db:
            raise ValidationError(f"basis dimension {u.shape[0]} does not match block dimension {db}")
    effects = []
    labels = []
    for combo in itertools.product(*[range(db) for db in bdims]):
        locals_ = [np.outer(u[:, i], u[:, i].conj()) for u, i in zip(bases, combo)]
        effects.append(_product_effect(locals_, partition.blocks, dims))
        labels.append(",".join(str(i) for i in combo))
    return Povm(np.array(effects), tuple(labels), "LOStar")


def lo_povm(povms: Sequence[Povm], partition: PartitionSpec, dims) -> Povm:
    """Tensor product of one local POVM per block."""
    dims = tuple(int(d) for d in dims)
    bdims = partition.block_dims(dims)
    if len(povms) != partition.n_blocks:
        raise ValidationError(f"{len(povms)} local POVMs for {partition.n_blocks} blocks")
    for m, db in zip(povms, bdims):
        if m.d != db:
            raise ValidationError(f"local POVM dimension {m.d} does not match block dimension {db}")
    effects = []
    labels = []
    for combo in itertools.product(*[range(m.n_outcomes) for m in povms]):
        locals_ = [m.effects[i] for m, i in zip(povms, combo)]
        effects.append(_product_effect(locals_, partition.blocks, dims))
        labels.append(",".join(m.labels[i] for m, i in zip(povms, combo)))
    return Povm(np.array(effects), tuple(labels), "LO")


def flatten_locc(protocol: ConditionalMeasurement, dims) -> Povm:
    """Global POVM with product effects A_i (x) B_j|i (x) ... from a one-way protocol."""
    dims = tuple(int(d) for d in dims)
    effects: list[np.ndarray] = []
    labels: list[str] = []

    def _walk(node: ConditionalMeasurement, prefix: np.ndarray | None, label: str):
        for i in range(node.povm.n_outcomes):
            here = embed(node.povm.effects[i], node.block, dims)
            acc = here if prefix is None else prefix @ here
            tag = node.povm.labels[i] if not label else f"{label};{node.povm.labels[i]}"
            if node.then is None:
                effects.append(acc)
                labels.append(tag)
            else:
                _walk(node.then[i], acc, tag)

    _walk(protocol, None, "")
    return Povm(np.array(effects), tuple(labels), "LOCC1")


def rank1_refine(povm: Povm, tol: float = 1e-12) -> Povm:
    """Split every effect into rank-1 pieces; the input is a rebinning of the output.

    The first nonzero amplitude of each piece is made real positive so
    outputs are reproducible.
    """
    effects = []
    labels = []
    for idx in range(povm.n_outcomes):
        eff = povm.effects[idx]
        vals, vecs = np.linalg.eigh(0.5 * (eff + dagger(eff)))
        pieces = 0
        for lam, v in zip(vals[::-1], vecs.T[::-1]):
            if lam <= tol:
                continue
            k = int(np.argmax(np.abs(v) > 1e-8))
            v = v * np.exp(-1j * np.angle(v[k]))
            effects.append(lam * np.outer(v, v.conj()))
            labels.append(f"{povm.labels[idx]}.{pieces}")
            pieces += 1
        if pieces == 0:
            # keep a zero-ish effect so rebinning reproduces the input exactly
            effects.append(np.array(eff))
            labels.append(f"{povm.labels[idx]}.0")
    return Povm(np.array(effects), tuple(labels), "Unverified")


def cpp_apply(stoch, povm: Povm) -> Povm:
    """Classical postprocessing: new effects N_j = sum_i Lambda[j, i] M_i."""
    if not isinstance(stoch, StochasticMap):
        stoch = StochasticMap(np.asarray(stoch, dtype=float))
    lam = stoch.matrix
    if lam.shape[1] != povm.n_outcomes:
        raise ValidationError(
            f"stochastic map expects {lam.shape[1]} outcomes, POVM has {povm.n_outcomes}"
        )
    effects = np.einsum("ji,iab->jab", lam, povm.effects)
    tag = povm.class_tag
    if tag in ("LOStar", "LO", "LOCC1"):
        tag = "SEP"  # positive sums of product effects stay separable, not product
    elif tag not in ("General", "SEP", "PPT", "RCT"):
        tag = "Unverified"
    return Povm(effects, class_tag=tag)


def _bipartition_subsets(n_blocks: int, include_complements: bool):
    """Nonempty proper subsets of block indices; complements dropped when redundant."""
    seen = set()
    for r in range(1, n_blocks):
        for subset in itertools.combinations(range(n_blocks), r):
            comp = tuple(i for i in range(n_blocks) if i not in subset)
            if not include_complements and comp in seen:
                continue
            seen.add(subset)
            yield subset


def effect_is_ppt(effect: np.ndarray, partition: PartitionSpec, dims, tol: float = 1e-9) -> bool:
    """True when every block-bipartition partial transpose of the effect is PSD."""
    a = as_operator(effect)
    dims = tuple(int(d) for d in dims)
    scale = max(1.0, opnorm(a))
    for subset in _bipartition_subsets(partition.n_blocks, include_complements=False):
        subs = [i for k in subset for i in partition.blocks[k]]
        if min_eig(partial_transpose(a, dims, subs)) < -tol * scale:
            return False
    return True


def is_ppt(povm: Povm, partition: PartitionSpec, dims, tol: float = 1e-9) -> list[bool]:
    """Per-effect PPT verdicts for a POVM."""
    return [effect_is_ppt(e, partition, dims, tol) for e in povm.effects]


def effect_is_rct(effect: np.ndarray, partition: PartitionSpec, dims, tol: float = 1e-9) -> bool:
    """Reduction criterion: (Tr_rest M) (x) 1 - M is PSD for every block bipartition."""
    a = as_operator(effect)
    dims = tuple(int(d) for d in dims)
    scale = max(1.0, opnorm(a))
    for subset in _bipartition_subsets(partition.n_blocks, include_complements=True):
        subs = sorted(i for k in subset for i in partition.blocks[k])
        marginal = partial_trace(a, dims, subs)
        lifted = embed(marginal, subs, dims)
        if min_eig(lifted - a) < -tol * scale:
            return False
    return True


def is_rct(povm: Povm, partition: PartitionSpec, dims, tol: float = 1e-9) -> list[bool]:
    """Per-effect reduction-criterion verdicts for a POVM."""
    return [effect_is_rct(e, partition, dims, tol) for e in povm.effects]


def product_vector_factors(vec, partition: PartitionSpec, dims, tol: float = 1e-8):
    """Factor a vector as a tensor product across blocks, or return None.

    A vector is a product across the partition iff each block marginal of its
    dyad is pure; the factors are the top eigenvectors.
    """
    v = np.asarray(vec, dtype=complex).ravel()
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        return None
    v = v / norm
    dims = tuple(int(d) for d in dims)
    dyad = np.outer(v, v.conj())
    factors = []
    for block in partition.blocks:
        red = partial_trace(dyad, dims, block)
        vals, vecs = np.linalg.eigh(red)
        if vals[-1] < 1.0 - tol:
            return None
        factors.append(vecs[:, -1])
    rebuilt = tensor(factors)
    flat = [i for b in partition.blocks for i in b]
    order = [flat.index(i) for i in range(len(dims))]
    rebuilt = rebuilt.reshape([dims[i] for i in flat]).transpose(order).ravel()
    k = int(np.argmax(np.abs(rebuilt)))
    phase = v[k] / rebuilt[k]
    if np.linalg.norm(v - phase * rebuilt) > 10 * tol:
        return None
    factors[0] = factors[0] * phase
    return factors


def _try_product_operator(effect: np.ndarray, partition: PartitionSpec, dims, tol: float = 1e-8):
    """Check whether the effect factorizes as a single tensor product of PSD blocks."""
    tr = float(np.real(np.trace(effect)))
    if tr <= tol:
        return None
    parts = []
    for block in partition.blocks:
        marg = partial_trace(effect, dims, block)
        parts.append(marg / tr)
    rebuilt = tr * _product_effect(parts, partition.blocks, dims)
    if opnorm(rebuilt - effect) <= tol * max(1.0, opnorm(effect)):
        return parts
    return None


def is_separable_effect(
    effect: np.ndarray, partition: PartitionSpec, dims, tol: float = 1e-8
) -> SeparabilityVerdict:
    """Three-valued separability test for a PSD effect.

    Separable when a product-sum decomposition is exhibited (a single product
    factorization, or every eigenvector with nonzero eigenvalue is a product
    vector); Entangled when some partial transpose fails; Unknown otherwise.
    Deciding separability in general is out of reach at this scale.
    """
    a = as_operator(effect)
    dims = tuple(int(d) for d in dims)
    if opnorm(a) <= 1e-12:
        return SeparabilityVerdict.SEPARABLE
    if not effect_is_ppt(a, partition, dims):
        return SeparabilityVerdict.ENTANGLED
    if partition.n_blocks < 2:
        return SeparabilityVerdict.SEPARABLE
    if _try_product_operator(a, partition, dims) is not None:
        return SeparabilityVerdict.SEPARABLE
    vals, vecs = np.linalg.eigh(0.5 * (a + dagger(a)))
    all_product = True
    for lam, v in zip(vals, vecs.T):
        if lam <= 1e-10:
            continue
        if product_vector_factors(v, partition, dims) is None:
            all_product = False
            break
    if all_product:
        return SeparabilityVerdict.SEPARABLE
    return SeparabilityVerdict.UNKNOWN
