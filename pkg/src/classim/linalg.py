"""Dense complex linear algebra for small Hilbert spaces (d <= ~16).

Operators are plain complex ndarrays; the assert_* helpers enforce the
structural invariants (Hermiticity, unitarity, positivity) at the tolerances
used throughout the package.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

HERMITIAN_ATOL = 1e-12
UNITARY_ATOL = 1e-10
PSD_CLAMP = 1e-10


def max_abs(a) -> float:
    """Entrywise max norm (0.0 for empty input)."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(a.T)


def as_square_matrix(m, what: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{what}: expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValidationError(f"{what}: non-finite entries")
    return m


def assert_hermitian(h, atol: float = HERMITIAN_ATOL, what: str = "operator") -> np.ndarray:
    h = as_square_matrix(h, what)
    dev = max_abs(h - dagger(h))
    if dev > atol:
        raise ValidationError(
            f"{what}: not Hermitian (max |H - H^dag| = {dev:.3e} > {atol:.1e})"
        )
    return h


def assert_unitary(u, atol: float = UNITARY_ATOL, what: str = "matrix") -> np.ndarray:
    u = as_square_matrix(u, what)
    dev = max_abs(dagger(u) @ u - np.eye(u.shape[0]))
    if dev > atol:
        raise ValidationError(
            f"{what}: not unitary (max |U^dag U - I| = {dev:.3e} > {atol:.1e})"
        )
    return u


def eig_hermitian(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, unitary whose columns are the
    eigenvectors). Non-Hermitian input raises ValidationError.
    """
    h = assert_hermitian(h)
    return np.linalg.eigh(h)


def sqrt_psd(h) -> np.ndarray:
    """Positive-semidefinite square root of a PSD Hermitian matrix.

    Eigenvalues in [-1e-10, 0) are treated as rounding noise and clamped to
    zero; anything more negative raises ValidationError.
    """
    h = assert_hermitian(h)
    w, v = np.linalg.eigh(h)
    if w[0] < -PSD_CLAMP:
        raise ValidationError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ dagger(v)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed random unitary via complex Ginibre + QR.

    The R-diagonal phase correction is essential: plain QR of a Gaussian
    matrix is *not* Haar distributed.
    """
    if d < 1:
        raise ValidationError(f"dimension must be >= 1, got {d}")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def max_component_statistic(
    d: int, samples: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Mean and standard error of max_a |u_a|^2 over Haar-random unit vectors.

    For a Haar-random unit vector in C^d the exact mean is H_d / d with
    H_d the d-th harmonic number.
    """
    if d < 1:
        raise ValidationError(f"dimension must be >= 1, got {d}")
    if samples < 1:
        raise ValidationError(f"need at least one sample, got {samples}")
    if d == 1:
        return 1.0, 0.0
    maxima = np.empty(samples)
    batch = 1 << 16
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        z = rng.standard_normal((m, d)) + 1j * rng.standard_normal((m, d))
        p = np.abs(z) ** 2
        maxima[done : done + m] = p.max(axis=1) / p.sum(axis=1)
        done += m
    mean = float(maxima.mean())
    stderr = float(maxima.std(ddof=1) / np.sqrt(samples))
    return mean, stderr


class HermitianBasis:
    """Orthonormal real basis of the Hermitian d x d matrices.

    Elements are E_ii, (E_ij + E_ji)/sqrt(2) and i(E_ij - E_ji)/sqrt(2),
    orthonormal under <A, B> = Tr(A B). Expanding both sides of a matrix
    equality in this basis turns it into d^2 real equations, which is how
    the classical-model LP rows are generated.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValidationError(f"dimension must be >= 1, got {dim}")
        self.dim = dim
        elements = []
        for i in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, i] = 1.0
            elements.append(e)
        for i in range(dim):
            for j in range(i + 1, dim):
                e = np.zeros((dim, dim), dtype=complex)
                e[i, j] = e[j, i] = 1.0 / np.sqrt(2.0)
                elements.append(e)
                e = np.zeros((dim, dim), dtype=complex)
                e[i, j] = -1j / np.sqrt(2.0)
                e[j, i] = 1j / np.sqrt(2.0)
                elements.append(e)
        self.elements = elements
        self._stack = np.array(elements)

    def __len__(self) -> int:
        return self.dim * self.dim

    def coefficients(self, h) -> np.ndarray:
        """Real coefficient vector of a Hermitian matrix, c_i = Tr(B_i H)."""
        h = np.asarray(h, dtype=complex)
        return np.real(np.einsum("kij,ji->k", self._stack, h))

    def coefficients_many(self, hs) -> np.ndarray:
        """coefficients() over a stacked array of matrices (..., d, d)."""
        hs = np.asarray(hs, dtype=complex)
        lead = hs.shape[:-2]
        flat = hs.reshape((-1,) + hs.shape[-2:])
        out = np.real(np.einsum("kij,nji->nk", self._stack, flat))
        return out.reshape(lead + (len(self),))

    def reconstruct(self, coeffs) -> np.ndarray:
        """Hermitian matrix with the given coefficient vector."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (len(self),):
            raise ValidationError(
                f"expected {len(self)} coefficients, got shape {coeffs.shape}"
            )
        return np.einsum("k,kij->ij", coeffs, self._stack)
