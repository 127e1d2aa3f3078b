import numpy as np
import pytest

from classim import linalg
from classim.errors import ValidationError

from conftest import rand_hermitian, rand_psd


def test_eig_diagonal():
    w, v = linalg.eig_hermitian(np.diag([1.0, 2.0]))
    assert np.allclose(w, [1.0, 2.0])
    assert np.allclose(np.abs(v), np.eye(2))


def test_eig_pauli_x():
    w, _ = linalg.eig_hermitian(np.array([[0, 1], [1, 0]], dtype=complex))
    assert np.allclose(w, [-1.0, 1.0])


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        linalg.eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_eig_reconstruction_random(d):
    rng = np.random.default_rng(100 + d)
    for _ in range(100):
        h = rand_hermitian(d, rng)
        w, v = linalg.eig_hermitian(h)
        assert linalg.max_abs(h @ v - v @ np.diag(w)) <= 1e-9
        assert linalg.max_abs(v.conj().T @ v - np.eye(d)) <= 1e-10
        assert np.all(np.diff(w) >= 0)


def test_sqrt_identity_and_diagonal():
    assert np.allclose(linalg.sqrt_psd(np.eye(3)), np.eye(3))
    assert np.allclose(linalg.sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_sqrt_rank_one(rng):
    psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    psi /= np.linalg.norm(psi)
    proj = np.outer(psi, psi.conj())
    root = linalg.sqrt_psd(0.5 * proj)
    # sqrt(eps)-sized dust from the clipped null space limits the root itself
    assert linalg.max_abs(root - proj / np.sqrt(2.0)) <= 1e-7
    assert linalg.max_abs(root @ root - 0.5 * proj) <= 1e-12


def test_sqrt_random_psd():
    rng = np.random.default_rng(7)
    for _ in range(100):
        h = rand_psd(4, rng)
        r = linalg.sqrt_psd(h)
        assert linalg.max_abs(r @ r - h) <= 1e-8
        assert np.linalg.eigvalsh(r)[0] >= -1e-10


def test_sqrt_rejects_negative():
    with pytest.raises(ValidationError):
        linalg.sqrt_psd(np.diag([1.0, -1e-6]))


def test_haar_unitary_d1(rng):
    u = linalg.haar_unitary(1, rng)
    assert abs(abs(u[0, 0]) - 1.0) <= 1e-12


def test_haar_unitary_reproducible():
    u1 = linalg.haar_unitary(3, np.random.default_rng(42))
    u2 = linalg.haar_unitary(3, np.random.default_rng(42))
    assert np.array_equal(u1, u2)
    assert linalg.max_abs(u1.conj().T @ u1 - np.eye(3)) <= 1e-10


def test_haar_first_entry_moment():
    # E|U_11|^2 = 1/d for Haar; 1e5 samples at d=4
    rng = np.random.default_rng(3)
    n = 100_000
    vals = np.empty(n)
    for i in range(n):
        z = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        q, r = np.linalg.qr(z)
        vals[i] = abs(q[0, 0] * r[0, 0] / abs(r[0, 0])) ** 2
    se = vals.std(ddof=1) / np.sqrt(n)
    assert abs(vals.mean() - 0.25) <= 3 * se


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_max_component_statistic(d):
    rng = np.random.default_rng(1000 + d)
    mean, se = linalg.max_component_statistic(d, 100_000, rng)
    expected = sum(1.0 / k for k in range(1, d + 1)) / d
    assert abs(mean - expected) <= 3 * se


def test_max_component_statistic_d1(rng):
    mean, se = linalg.max_component_statistic(1, 10, rng)
    assert mean == 1.0 and se == 0.0


@pytest.mark.parametrize("d", [2, 3, 5])
def test_hermitian_basis_roundtrip(d):
    rng = np.random.default_rng(50 + d)
    basis = linalg.HermitianBasis(d)
    gram = np.array(
        [[np.trace(a @ b).real for b in basis.elements] for a in basis.elements]
    )
    assert linalg.max_abs(gram - np.eye(d * d)) <= 1e-10
    for _ in range(100):
        h = rand_hermitian(d, rng)
        c = basis.coefficients(h)
        assert linalg.max_abs(basis.reconstruct(c) - h) <= 1e-10


def test_hermitian_basis_batch(rng):
    basis = linalg.HermitianBasis(3)
    hs = np.array([rand_hermitian(3, rng) for _ in range(5)])
    batch = basis.coefficients_many(hs)
    for i in range(5):
        assert np.allclose(batch[i], basis.coefficients(hs[i]))
