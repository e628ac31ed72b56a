"""Validated quantum data types and dense complex linear algebra.

Operators are plain ``numpy.ndarray`` objects (complex128, row-major); the
dataclasses in this module attach subsystem dimensions and enforce the
physical invariants (Hermiticity, positivity, unit trace, completeness) at
construction time.  All entropies elsewhere in the package are in bits.
"""

from __future__ import annotations

import functools
import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_DIM = 256

TOL_HERM = 1e-9
TOL_PSD = 1e-9
TOL_COMPLETE = 1e-9
TOL_TRACE = 1e-10
CLUSTER_TOL = 1e-8

CLASS_TAGS = (
    "General",
    "LOStar",
    "LO",
    "LOCC1",
    "SEP",
    "PPT",
    "RCT",
    "Unverified",
)


class ValidationError(ValueError):
    """A state, POVM, or partition violates one of its invariants."""


def as_operator(mat) -> np.ndarray:
    """Coerce input to a square complex128 matrix with finite entries."""
    a = np.asarray(mat, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix contains NaN or Inf entries")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def opnorm(a: np.ndarray) -> float:
    """Spectral norm."""
    return float(np.linalg.norm(a, 2))


def tensor(ops: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product of a non-empty list of matrices."""
    if len(ops) == 0:
        raise ValidationError("tensor() requires at least one operator")
    return functools.reduce(np.kron, [np.asarray(op, dtype=complex) for op in ops])


def _check_dims(op: np.ndarray, dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValidationError(f"subsystem dimensions must be >= 1, got {dims}")
    total = int(np.prod(dims))
    if total != op.shape[0]:
        raise ValidationError(
            f"product of dims {dims} is {total}, operator dimension is {op.shape[0]}"
        )
    return dims


def _check_indices(indices: Iterable[int], n: int) -> tuple[int, ...]:
    idx = tuple(int(i) for i in indices)
    if len(set(idx)) != len(idx):
        raise ValidationError(f"subsystem indices {idx} contain duplicates")
    for i in idx:
        if not 0 <= i < n:
            raise ValidationError(f"subsystem index {i} out of range for {n} factors")
    return idx


def permute_subsystems(op: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of an operator; ``order[k]`` is the old index of new factor k."""
    a = as_operator(op)
    dims = _check_dims(a, dims)
    n = len(dims)
    order = _check_indices(order, n)
    if len(order) != n:
        raise ValidationError("order must list every subsystem exactly once")
    t = a.reshape(dims + dims)
    perm = list(order) + [n + i for i in order]
    d = a.shape[0]
    return np.ascontiguousarray(t.transpose(perm).reshape(d, d))


def permute_vector(vec: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).ravel()
    dims = tuple(int(d) for d in dims)
    t = v.reshape(dims)
    return np.ascontiguousarray(t.transpose(order).ravel())


def partial_trace(op: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out all factors not in ``keep``; kept factors stay in ascending index order."""
    a = as_operator(op)
    dims = _check_dims(a, dims)
    n = len(dims)
    keep = tuple(sorted(_check_indices(keep, n)))
    t = a.reshape(dims + dims)
    letters = string.ascii_letters
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(letters[n + i] for i in keep)
    sub = "".join(row) + "".join(col) + "->" + out
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return np.ascontiguousarray(np.einsum(sub, t).reshape(dk, dk))


def partial_transpose(op: np.ndarray, dims: Sequence[int], subsys: Iterable[int]) -> np.ndarray:
    """Transpose the chosen tensor factors, leaving the rest untouched."""
    a = as_operator(op)
    dims = _check_dims(a, dims)
    n = len(dims)
    subsys = _check_indices(subsys, n)
    t = a.reshape(dims + dims)
    axes = list(range(2 * n))
    for i in subsys:
        axes[i], axes[n + i] = axes[n + i], axes[i]
    d = a.shape[0]
    return np.ascontiguousarray(t.transpose(axes).reshape(d, d))


def embed(op: np.ndarray, subsys: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Operator acting as ``op`` on ``subsys`` (in the given order) and as identity elsewhere."""
    a = as_operator(op)
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    subsys = _check_indices(subsys, n)
    d_sub = int(np.prod([dims[i] for i in subsys]))
    if a.shape[0] != d_sub:
        raise ValidationError(
            f"operator dimension {a.shape[0]} does not match subsystems {subsys} of dims {dims}"
        )
    rest = [i for i in range(n) if i not in subsys]
    d_rest = int(np.prod([dims[i] for i in rest])) if rest else 1
    big = np.kron(a, np.eye(d_rest))
    # big lives on (subsys..., rest...); permute back to natural order
    current = list(subsys) + rest
    order = [current.index(i) for i in range(n)]
    return permute_subsystems(big, [dims[i] for i in current], order)


def is_hermitian(a: np.ndarray, tol: float = TOL_HERM) -> bool:
    scale = max(1.0, opnorm(a))
    return opnorm(a - dagger(a)) <= tol * scale


def min_eig(a: np.ndarray) -> float:
    h = 0.5 * (a + dagger(a))
    return float(np.linalg.eigvalsh(h)[0])


def is_psd(a: np.ndarray, tol: float = TOL_PSD) -> bool:
    scale = max(1.0, opnorm(a))
    return is_hermitian(a, tol) and min_eig(a) >= -tol * scale


# ---------------------------------------------------------------------------
# validation reports


def validate_state(mat, dims=None) -> list[str]:
    """List every violated state invariant with its magnitude; empty means valid."""
    problems: list[str] = []
    try:
        a = as_operator(mat)
    except ValidationError as err:
        return [str(err)]
    d = a.shape[0]
    if d > MAX_DIM:
        problems.append(f"dimension {d} exceeds the supported cap of {MAX_DIM}")
        return problems
    if dims is not None:
        try:
            _check_dims(a, dims)
        except ValidationError as err:
            problems.append(str(err))
            return problems
    scale = max(1.0, opnorm(a))
    herm = opnorm(a - dagger(a)) / scale
    if herm > TOL_HERM:
        problems.append(f"not Hermitian: relative asymmetry {herm:.3e}")
    lo = min_eig(a)
    if lo < -TOL_PSD * scale:
        problems.append(f"not positive semidefinite: min eigenvalue {lo:.3e}")
    tr = abs(np.trace(a) - 1.0)
    if tr > TOL_TRACE:
        problems.append(f"trace differs from 1 by {tr:.3e}")
    return problems


def validate_povm(effects) -> list[str]:
    """List every violated POVM invariant with its magnitude; empty means valid."""
    problems: list[str] = []
    try:
        mats = [as_operator(e) for e in effects]
    except ValidationError as err:
        return [str(err)]
    if not mats:
        return ["POVM has no effects"]
    d = mats[0].shape[0]
    if d > MAX_DIM:
        return [f"dimension {d} exceeds the supported cap of {MAX_DIM}"]
    for i, e in enumerate(mats):
        if e.shape[0] != d:
            problems.append(f"effect {i} has dimension {e.shape[0]}, expected {d}")
            return problems
        scale = max(1.0, opnorm(e))
        herm = opnorm(e - dagger(e)) / scale
        if herm > TOL_HERM:
            problems.append(f"effect {i} not Hermitian: relative asymmetry {herm:.3e}")
        lo = min_eig(e)
        if lo < -TOL_PSD * scale:
            problems.append(f"effect {i} not PSD: min eigenvalue {lo:.3e}")
    gap = opnorm(sum(mats) - np.eye(d))
    if gap > TOL_COMPLETE:
        problems.append(f"completeness violation of norm {gap:.3e}")
    return problems


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian PSD unit-trace operator with a subsystem-dimension vector."""

    mat: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        a = as_operator(self.mat)
        dims = _check_dims(a, self.dims)
        problems = validate_state(a)
        if problems:
            raise ValidationError("invalid state: " + "; ".join(problems))
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "mat", a)
        object.__setattr__(self, "dims", dims)

    @property
    def d(self) -> int:
        return self.mat.shape[0]

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def reduced(self, keep: Iterable[int]) -> "DensityMatrix":
        keep = tuple(sorted(_check_indices(keep, len(self.dims))))
        sub = partial_trace(self.mat, self.dims, keep)
        return DensityMatrix(sub, tuple(self.dims[i] for i in keep))

    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))

    def is_pure(self, tol: float = 1e-9) -> bool:
        return self.purity() >= 1.0 - tol

    def pure_vector(self, tol: float = 1e-8) -> np.ndarray:
        """State vector of a pure state (global phase fixed); raises if mixed."""
        if not self.is_pure(tol):
            raise ValidationError("state is not pure")
        vals, vecs = np.linalg.eigh(self.mat)
        v = vecs[:, -1]
        k = int(np.argmax(np.abs(v)))
        return v * np.exp(-1j * np.angle(v[k]))


def _default_labels(n: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(n))


@dataclass(frozen=True)
class Povm:
    """Finite list of PSD effects summing to identity, with class tag and labels.

    ``effects`` is stored as a (k, d, d) array; the class tag records which
    measurement class the POVM is claimed to belong to (``Unverified`` when
    nothing is claimed).
    """

    effects: np.ndarray
    labels: tuple[str, ...] = ()
    class_tag: str = "Unverified"

    def __post_init__(self):
        eff = np.asarray(self.effects, dtype=complex)
        if eff.ndim == 2:
            eff = eff[None, :, :]
        if eff.ndim != 3 or eff.shape[1] != eff.shape[2]:
            raise ValidationError(f"effects must be a list of square matrices, got shape {eff.shape}")
        problems = validate_povm(list(eff))
        if problems:
            raise ValidationError("invalid POVM: " + "; ".join(problems))
        labels = tuple(str(x) for x in self.labels) or _default_labels(eff.shape[0])
        if len(labels) != eff.shape[0]:
            raise ValidationError(
                f"{len(labels)} labels for {eff.shape[0]} effects"
            )
        if self.class_tag not in CLASS_TAGS:
            raise ValidationError(f"unknown class tag {self.class_tag!r}")
        eff = eff.copy()
        eff.flags.writeable = False
        object.__setattr__(self, "effects", eff)
        object.__setattr__(self, "labels", labels)

    @property
    def d(self) -> int:
        return self.effects.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.effects.shape[0]

    def volumes(self) -> np.ndarray:
        """Macrostate volumes V_i = Tr M_i."""
        return np.real(np.trace(self.effects, axis1=1, axis2=2))

    def is_projective(self, tol: float = 1e-8) -> bool:
        for i in range(self.n_outcomes):
            for j in range(self.n_outcomes):
                prod = self.effects[i] @ self.effects[j]
                ref = self.effects[i] if i == j else 0.0
                if opnorm(prod - ref) > tol:
                    return False
        return True

    def retag(self, class_tag: str) -> "Povm":
        return Povm(np.array(self.effects), self.labels, class_tag)

    @staticmethod
    def trivial(d: int) -> "Povm":
        return Povm(np.eye(d)[None, :, :], ("all",), "General")

    @staticmethod
    def from_basis(basis: np.ndarray, class_tag: str = "General") -> "Povm":
        """Rank-1 projective POVM from the columns of a unitary."""
        u = as_operator(basis)
        if opnorm(u @ dagger(u) - np.eye(u.shape[0])) > 1e-9:
            raise ValidationError("basis matrix is not unitary")
        eff = np.einsum("ai,bi->iab", u, u.conj())
        return Povm(eff, class_tag=class_tag)


@dataclass(frozen=True)
class PartitionSpec:
    """Grouping of subsystem indices into disjoint, exhaustive blocks."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(i) for i in b)) for b in self.blocks)
        blocks = tuple(sorted(blocks, key=lambda b: b[0] if b else -1))
        if any(len(b) == 0 for b in blocks):
            raise ValidationError("partition contains an empty block")
        flat = [i for b in blocks for i in b]
        if len(set(flat)) != len(flat):
            raise ValidationError("partition blocks are not disjoint")
        if sorted(flat) != list(range(len(flat))):
            raise ValidationError(
                f"partition must cover indices 0..{len(flat) - 1} exactly, got {sorted(flat)}"
            )
        object.__setattr__(self, "blocks", blocks)

    @property
    def n_subsystems(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def block_dims(self, dims: Sequence[int]) -> tuple[int, ...]:
        dims = tuple(dims)
        if len(dims) != self.n_subsystems:
            raise ValidationError(
                f"partition covers {self.n_subsystems} subsystems, state has {len(dims)}"
            )
        return tuple(int(np.prod([dims[i] for i in b])) for b in self.blocks)

    def refines(self, other: "PartitionSpec") -> bool:
        """True when every block of self lies inside a block of other."""
        if self.n_subsystems != other.n_subsystems:
            return False
        where = {}
        for k, blk in enumerate(other.blocks):
            for i in blk:
                where[i] = k
        return all(len({where[i] for i in b}) == 1 for b in self.blocks)

    def shape_string(self) -> str:
        return "+".join(str(s) for s in sorted(len(b) for b in self.blocks))

    @staticmethod
    def full(n: int) -> "PartitionSpec":
        return PartitionSpec(tuple((i,) for i in range(n)))

    @staticmethod
    def single(n: int) -> "PartitionSpec":
        return PartitionSpec((tuple(range(n)),))

    @staticmethod
    def from_string(text: str, n: int) -> "PartitionSpec":
        """Parse partition notation like ``"AB|CD"`` (letters A..Z are subsystems)."""
        text = text.strip().upper()
        if not text:
            return PartitionSpec.full(n)
        blocks = []
        for part in text.split("|"):
            block = []
            for ch in part.strip():
                idx = ord(ch) - ord("A")
                if not 0 <= idx < n:
                    raise ValidationError(f"subsystem letter {ch!r} out of range for {n} parties")
                block.append(idx)
            blocks.append(tuple(block))
        spec = PartitionSpec(tuple(blocks))
        if spec.n_subsystems != n:
            raise ValidationError(f"partition {text!r} does not cover all {n} subsystems")
        return spec

    def __str__(self) -> str:
        return "|".join("".join(chr(ord("A") + i) for i in b) for b in self.blocks)


@dataclass(frozen=True)
class Spectrum:
    """Clustered spectral decomposition: distinct eigenvalues with eigenprojectors."""

    eigenvalues: tuple[float, ...]
    projectors: tuple[np.ndarray, ...]
    multiplicities: tuple[int, ...]

    def reconstruct(self) -> np.ndarray:
        d = self.projectors[0].shape[0]
        out = np.zeros((d, d), dtype=complex)
        for lam, proj in zip(self.eigenvalues, self.projectors):
            out += lam * proj
        return out


def spectral(op: np.ndarray, cluster_tol: float = CLUSTER_TOL) -> Spectrum:
    """Spectral decomposition with eigenvalues clustered into distinct groups.

    Eigenvalues closer than ``cluster_tol`` are merged greedily in sorted
    order; each cluster's projector is the sum of its eigenvector dyads and
    its reported eigenvalue is the multiplicity-weighted mean.
    """
    a = as_operator(op)
    if not is_hermitian(a):
        raise ValidationError("spectral() requires a Hermitian matrix")
    vals, vecs = np.linalg.eigh(0.5 * (a + dagger(a)))
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    groups: list[list[int]] = [[0]]
    for i in range(1, len(vals)):
        if vals[groups[-1][-1]] - vals[i] <= cluster_tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    eigenvalues = []
    projectors = []
    multiplicities = []
    for g in groups:
        eigenvalues.append(float(np.mean(vals[g])))
        v = vecs[:, g]
        projectors.append(v @ dagger(v))
        multiplicities.append(len(g))
    return Spectrum(tuple(eigenvalues), tuple(projectors), tuple(multiplicities))


def schmidt(
    vec, dims: Sequence[int], left: Iterable[int]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Schmidt decomposition of a vector across the bipartition (left, rest).

    Returns descending non-negative coefficients plus orthonormal vectors on
    each side (as matrix columns), so that
    ``vec = sum_k c[k] * kron(lvecs[:, k], rvecs[:, k])`` after permuting the
    left factors to the front.
    """
    v = np.asarray(vec, dtype=complex).ravel()
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        raise ValidationError("cannot Schmidt-decompose the zero vector")
    v = v / norm
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != v.size:
        raise ValidationError(f"product of dims {dims} does not match vector length {v.size}")
    n = len(dims)
    left = tuple(sorted(_check_indices(left, n)))
    right = tuple(i for i in range(n) if i not in left)
    if not left or not right:
        raise ValidationError("split must leave factors on both sides")
    t = v.reshape(dims).transpose(left + right)
    dl = int(np.prod([dims[i] for i in left]))
    dr = int(np.prod([dims[i] for i in right]))
    u, s, vh = np.linalg.svd(t.reshape(dl, dr), full_matrices=False)
    keep = s > 1e-12
    if not np.any(keep):
        keep = s >= s[0]
    return s[keep], u[:, keep], vh[keep, :].T
