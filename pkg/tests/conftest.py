import numpy as np
import pytest


def rand_hermitian(d, rng):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (z + z.conj().T) / 2.0


def rand_psd(d, rng):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return z @ z.conj().T / d


def rand_povm(d, n_out, rng):
    """Random POVM via symmetric normalization of random PSD pieces."""
    pieces = [rand_psd(d, rng) + 1e-3 * np.eye(d) for _ in range(n_out)]
    total = sum(pieces)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    return [inv_sqrt @ p @ inv_sqrt for p in pieces]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
