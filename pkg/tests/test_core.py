"""Core types and linear algebra, checked against independent oracles."""

import numpy as np
import pytest

from helpers import pt_oracle, random_density, random_pure
from oegap.core import (
    DensityMatrix,
    PartitionSpec,
    Povm,
    ValidationError,
    partial_trace,
    partial_transpose,
    permute_subsystems,
    schmidt,
    spectral,
    tensor,
    validate_povm,
    validate_state,
)
from oegap.states import symmetric_projectors, w_vector

SX = np.array([[0, 1], [1, 0]], dtype=complex)


def test_tensor_identity():
    assert np.allclose(tensor([np.eye(2), np.eye(2)]), np.eye(4))


def test_tensor_basis_projector():
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    expected = np.zeros((4, 4))
    expected[1, 1] = 1.0  # |01><01|
    assert np.allclose(tensor([p0, p1]), expected)


def test_tensor_flip_to_11():
    # oracle: direct 4x4 multiplication of the explicit matrix against |00>
    direct = np.zeros((4, 4), dtype=complex)
    for a in range(2):
        for b in range(2):
            direct[(1 - a) * 2 + (1 - b), a * 2 + b] = 1.0
    v00 = np.array([1, 0, 0, 0], dtype=complex)
    assert np.allclose(direct @ v00, [0, 0, 0, 1])
    assert np.allclose(tensor([SX, SX]) @ v00, direct @ v00)


def test_tensor_empty_rejected():
    with pytest.raises(ValidationError):
        tensor([])


def test_tensor_associativity():
    rng = np.random.default_rng(3)
    a, b, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))
    assert np.allclose(tensor([tensor([a, b]), c]), tensor([a, b, c]), atol=1e-12)


def test_partial_trace_bell():
    phi = np.zeros(4, dtype=complex)
    phi[0] = phi[3] = 1 / np.sqrt(2)
    rho = np.outer(phi, phi.conj())
    assert np.allclose(partial_trace(rho, (2, 2), [0]), np.eye(2) / 2)


def test_partial_trace_product():
    rng = np.random.default_rng(5)
    ra = random_density(rng, (2,)).mat
    rb = random_density(rng, (3,)).mat
    assert np.allclose(partial_trace(np.kron(ra, rb), (2, 3), [0]), ra)
    assert np.allclose(partial_trace(np.kron(ra, rb), (2, 3), [1]), rb)


def test_partial_trace_w3_marginal():
    # oracle: expand W3 amplitudes and sum |c|^2 by first-qubit value
    v = w_vector(3)
    diag0 = sum(abs(v[i]) ** 2 for i in range(8) if not i & 0b100)
    diag1 = sum(abs(v[i]) ** 2 for i in range(8) if i & 0b100)
    assert diag0 == pytest.approx(2 / 3)
    rho = np.outer(v, v.conj())
    red = partial_trace(rho, (2, 2, 2), [0])
    assert np.allclose(red, np.diag([diag0, diag1]))
    assert np.allclose(red, np.diag([2 / 3, 1 / 3]))


def test_partial_trace_of_tensor_scales_by_partner_traces():
    rng = np.random.default_rng(17)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert np.allclose(partial_trace(np.kron(a, b), (2, 3), [0]), a * np.trace(b))
    assert np.allclose(partial_trace(np.kron(a, b), (2, 3), [1]), b * np.trace(a))


def test_partial_trace_preserves_trace():
    rng = np.random.default_rng(6)
    rho = random_density(rng, (2, 3, 2)).mat
    for keep in ([0], [1], [2], [0, 2]):
        assert np.trace(partial_trace(rho, (2, 3, 2), keep)) == pytest.approx(1.0)


def test_partial_trace_index_errors():
    with pytest.raises(ValidationError):
        partial_trace(np.eye(4), (2, 2), [2])
    with pytest.raises(ValidationError):
        partial_trace(np.eye(4), (2, 3), [0])


def test_partial_transpose_product_rule():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert np.allclose(partial_transpose(np.kron(a, b), (2, 3), [1]), np.kron(a, b.T))


def test_partial_transpose_bell_negative():
    phi = np.zeros(4, dtype=complex)
    phi[0] = phi[3] = 1 / np.sqrt(2)
    rho = np.outer(phi, phi.conj())
    # oracle: explicit index-swapped matrix, then eigensolve
    oracle = pt_oracle(rho, 2, 2, on_second=True)
    assert np.linalg.eigvalsh(oracle)[0] == pytest.approx(-0.5)
    assert np.allclose(partial_transpose(rho, (2, 2), [1]), oracle)


def test_partial_transpose_symmetric_projector_psd():
    plus, _ = symmetric_projectors(2)
    oracle = pt_oracle(plus, 2, 2)
    assert np.linalg.eigvalsh(oracle)[0] >= -1e-12
    pt = partial_transpose(plus, (2, 2), [1])
    assert np.linalg.eigvalsh(pt)[0] >= -1e-12


def test_partial_transpose_involutive_trace_preserving():
    rng = np.random.default_rng(8)
    rho = random_density(rng, (2, 2)).mat
    pt = partial_transpose(rho, (2, 2), [0])
    assert np.trace(pt) == pytest.approx(np.trace(rho))
    assert np.allclose(partial_transpose(pt, (2, 2), [0]), rho)


def test_permute_subsystems_roundtrip():
    rng = np.random.default_rng(9)
    rho = random_density(rng, (2, 3, 2)).mat
    perm = permute_subsystems(rho, (2, 3, 2), (2, 0, 1))
    back = permute_subsystems(perm, (2, 2, 3), (1, 2, 0))
    assert np.allclose(back, rho)


def test_spectral_scalar_matrix():
    spec = spectral(np.eye(4) / 4)
    assert spec.eigenvalues == (pytest.approx(0.25),)
    assert np.allclose(spec.projectors[0], np.eye(4))


def test_spectral_werner_projectors():
    # oracle: build the flip operator explicitly and form projectors from it
    d = 2
    f = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            f[i * 2 + j, j * 2 + i] = 1
    plus, minus = 0.5 * (np.eye(4) + f), 0.5 * (np.eye(4) - f)
    lam = 0.9
    rho = 0.1 * plus / 3 + 0.9 * minus / 1
    spec = spectral(rho)
    assert np.allclose(spec.eigenvalues, [0.9, 0.1 / 3])
    assert np.allclose(spec.projectors[0], minus, atol=1e-9)
    assert np.allclose(spec.projectors[1], plus, atol=1e-9)


def test_spectral_rank_two_plus_kernel():
    v1 = np.array([1, 0, 0, 0], dtype=complex)
    v2 = np.array([0, 0, 1, 1], dtype=complex) / np.sqrt(2)
    rho = 0.5 * np.outer(v1, v1.conj()) + 0.5 * np.outer(v2, v2.conj())
    spec = spectral(rho)
    nonzero = [lam for lam in spec.eigenvalues if lam > 1e-12]
    assert len(nonzero) == 1 and spec.multiplicities[0] == 2  # both eigenvalues are 1/2
    assert sum(nonzero[0] * m for m in [spec.multiplicities[0]]) == pytest.approx(1.0)


def test_spectral_reconstruction_and_orthogonality():
    rng = np.random.default_rng(11)
    rho = random_density(rng, (2, 2)).mat
    spec = spectral(rho)
    assert np.linalg.norm(spec.reconstruct() - rho, 2) < 1e-9
    for i, pi in enumerate(spec.projectors):
        for j, pj in enumerate(spec.projectors):
            ref = pi if i == j else np.zeros_like(pi)
            assert np.linalg.norm(pi @ pj - ref, 2) < 1e-9


def test_spectral_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        spectral(np.array([[0, 1], [0, 0]], dtype=complex))


def test_schmidt_product_vector():
    v = np.zeros(4, dtype=complex)
    v[0] = 1.0
    coeffs, _, _ = schmidt(v, (2, 2), [0])
    assert np.allclose(coeffs, [1.0])


def test_schmidt_bell():
    phi = np.zeros(4, dtype=complex)
    phi[0] = phi[3] = 1 / np.sqrt(2)
    coeffs, left, right = schmidt(phi, (2, 2), [0])
    assert np.allclose(coeffs, [1 / np.sqrt(2)] * 2)
    rebuilt = sum(c * np.kron(left[:, k], right[:, k]) for k, c in enumerate(coeffs))
    assert np.allclose(np.abs(rebuilt @ phi.conj()), 1.0)


def test_schmidt_w3_split():
    # oracle: singular values of the explicit 2x4 amplitude matrix
    v = w_vector(3)
    svals = np.linalg.svd(v.reshape(2, 4), compute_uv=False)
    assert np.allclose(np.sort(svals**2)[::-1], [2 / 3, 1 / 3])
    coeffs, _, _ = schmidt(v, (2, 2, 2), [0])
    assert np.allclose(coeffs**2, [2 / 3, 1 / 3])


def test_schmidt_matches_reduced_eigenvalues():
    rng = np.random.default_rng(12)
    psi = random_pure(rng, (2, 3))
    coeffs, _, _ = schmidt(psi.pure_vector(), (2, 3), [0])
    eigs = np.sort(np.linalg.eigvalsh(psi.reduced([0]).mat))[::-1]
    assert np.allclose(coeffs**2, eigs[: len(coeffs)], atol=1e-10)


def test_schmidt_reconstructs_complex_state():
    rng = np.random.default_rng(13)
    psi = random_pure(rng, (3, 2)).pure_vector()
    coeffs, left, right = schmidt(psi, (3, 2), [0])
    rebuilt = sum(c * np.kron(left[:, k], right[:, k]) for k, c in enumerate(coeffs))
    assert np.allclose(rebuilt, psi, atol=1e-10)
    for side in (left, right):
        gram = side.conj().T @ side
        assert np.allclose(gram, np.eye(side.shape[1]), atol=1e-10)


def test_schmidt_zero_vector_rejected():
    with pytest.raises(ValidationError):
        schmidt(np.zeros(4), (2, 2), [0])


def test_validate_state_reports():
    assert validate_state(np.eye(2) / 2) == []
    report = validate_state(np.eye(2))
    assert any("trace" in r for r in report)
    report = validate_state(np.array([[0.9, 0.3], [0.1, 0.1]]))
    assert any("Hermitian" in r for r in report)


def test_validate_povm_reports():
    assert validate_povm([np.eye(2)]) == []  # the trivial measurement is valid
    report = validate_povm([np.eye(2), np.eye(2)])
    assert any("completeness violation of norm 1" in r for r in report)


def test_density_matrix_invariants_enforced():
    with pytest.raises(ValidationError):
        DensityMatrix(np.eye(4), (2, 2))
    with pytest.raises(ValidationError):
        DensityMatrix(np.eye(4) / 4, (2, 3))
    rho = DensityMatrix(np.eye(4) / 4, (2, 2))
    with pytest.raises(ValueError):
        rho.mat[0, 0] = 5.0  # stored matrix is read-only


def test_povm_projective_flag():
    basis = Povm.from_basis(np.eye(2, dtype=complex))
    assert basis.is_projective()
    rng = np.random.default_rng(13)
    from helpers import random_povm

    assert not random_povm(rng, 2, 3).is_projective()


def test_povm_unknown_tag_rejected():
    with pytest.raises(ValidationError):
        Povm(np.eye(2)[None, :, :], ("a",), "NotAClass")


def test_partition_spec_validation():
    with pytest.raises(ValidationError):
        PartitionSpec(((0, 1), (1, 2)))
    with pytest.raises(ValidationError):
        PartitionSpec(((0,), (2,)))
    part = PartitionSpec.from_string("AC|BD", 4)
    assert part.blocks == ((0, 2), (1, 3))
    assert str(part) == "AC|BD"
    assert part.shape_string() == "2+2"
    assert PartitionSpec.from_string("", 3).n_blocks == 3


def test_partition_refines():
    fine = PartitionSpec.full(4)
    coarse = PartitionSpec.from_string("AB|CD", 4)
    assert fine.refines(coarse)
    assert not coarse.refines(fine)
    assert coarse.refines(PartitionSpec.single(4))


def test_dimension_cap():
    report = validate_state(np.eye(512) / 512)
    assert any("cap" in r for r in report)
