"""Shared generators and small oracles for the test suite."""

import numpy as np

from oegap.core import DensityMatrix, Povm


def random_density(rng, dims, rank=None) -> DensityMatrix:
    d = int(np.prod(dims))
    r = rank or d
    g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    mat = g @ g.conj().T
    return DensityMatrix(mat / np.trace(mat), dims)


def random_pure(rng, dims) -> DensityMatrix:
    d = int(np.prod(dims))
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v /= np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()), dims)


def random_povm(rng, d, k) -> Povm:
    mats = []
    for _ in range(k):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        mats.append(g @ g.conj().T)
    total = sum(mats)
    vals, vecs = np.linalg.eigh(total)
    inv_sqrt = vecs @ np.diag(1 / np.sqrt(vals)) @ vecs.conj().T
    effects = np.array([inv_sqrt @ m @ inv_sqrt for m in mats])
    effects = 0.5 * (effects + np.conj(np.transpose(effects, (0, 2, 1))))
    return Povm(effects)


def random_unitary(rng, d) -> np.ndarray:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def haar_basis_povm(rng, d) -> Povm:
    return Povm.from_basis(random_unitary(rng, d))


def pt_oracle(mat, da, db, on_second=True):
    """Partial transpose by explicit index loops, independent of the library path."""
    out = np.zeros((da * db, da * db), dtype=complex)
    for a in range(da):
        for b in range(db):
            for c in range(da):
                for e in range(db):
                    if on_second:
                        out[a * db + b, c * db + e] = mat[a * db + e, c * db + b]
                    else:
                        out[a * db + b, c * db + e] = mat[c * db + b, a * db + e]
    return out


def shannon_oracle(p):
    p = np.asarray(p, dtype=float)
    p = p[p > 1e-14]
    return float(-(p * np.log2(p)).sum())
