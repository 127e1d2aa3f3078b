"""POVMs, measurement sets, noise channels, and the concrete families under study.

The JSON measurement-set format consumed by the CLI is::

    {"dim": d, "settings": [{"outcomes": [[[re, im], ...  d entries] ... d rows], ...]}, ...]}

i.e. one matrix per outcome, each entry a two-element [re, im] list.
"""

from __future__ import annotations

import json

import numpy as np

from . import linalg
from .errors import ValidationError

PSD_ATOL = 1e-10
COMPLETENESS_ATOL = 1e-9

_PHI = (1.0 + np.sqrt(5.0)) / 2.0

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class Povm:
    """A POVM on a d-dimensional space: PSD elements summing to the identity."""

    def __init__(self, outcomes, what: str = "POVM"):
        mats = [
            linalg.assert_hermitian(m, what=f"{what}, outcome {a}")
            for a, m in enumerate(outcomes)
        ]
        if not mats:
            raise ValidationError(f"{what}: needs at least one outcome")
        dim = mats[0].shape[0]
        for a, m in enumerate(mats):
            if m.shape[0] != dim:
                raise ValidationError(
                    f"{what}, outcome {a}: dimension {m.shape[0]} != {dim}"
                )
            wmin = float(np.linalg.eigvalsh(m)[0])
            if wmin < -PSD_ATOL:
                raise ValidationError(
                    f"{what}, outcome {a}: negative eigenvalue {wmin:.3e}"
                )
        dev = linalg.max_abs(sum(mats) - np.eye(dim))
        if dev > COMPLETENESS_ATOL:
            raise ValidationError(
                f"{what}: outcomes sum to the identity only within {dev:.3e}"
            )
        self.dim = dim
        self.outcomes = mats

    def __len__(self) -> int:
        return len(self.outcomes)

    def __iter__(self):
        return iter(self.outcomes)


class MeasurementSet:
    """An indexed family of POVMs {M[x][a]} on one Hilbert space.

    Settings with fewer outcomes than the widest one are padded with zero
    operators, so ``table`` is a rectangular (settings, outcomes, d, d) array.
    """

    def __init__(self, settings):
        settings = list(settings)
        if not settings:
            raise ValidationError("measurement set: needs at least one setting")
        povms = [Povm(s, what=f"setting {x}") for x, s in enumerate(settings)]
        dim = povms[0].dim
        for x, p in enumerate(povms):
            if p.dim != dim:
                raise ValidationError(f"setting {x}: dimension {p.dim} != {dim}")
        n_outcomes = max(len(p) for p in povms)
        table = np.zeros((len(povms), n_outcomes, dim, dim), dtype=complex)
        for x, p in enumerate(povms):
            for a, m in enumerate(p.outcomes):
                table[x, a] = m
        self.dim = dim
        self.n_settings = len(povms)
        self.n_outcomes = n_outcomes
        self.table = table

    def setting(self, x: int) -> Povm:
        return Povm(list(self.table[x]), what=f"setting {x}")

    def element(self, x: int, a: int) -> np.ndarray:
        return self.table[x, a]


class StateEnsemble:
    """A finite family of density matrices on one Hilbert space."""

    def __init__(self, states):
        mats = [
            linalg.assert_hermitian(s, what=f"state {z}") for z, s in enumerate(states)
        ]
        if not mats:
            raise ValidationError("state ensemble: needs at least one state")
        dim = mats[0].shape[0]
        for z, s in enumerate(mats):
            if s.shape[0] != dim:
                raise ValidationError(f"state {z}: dimension {s.shape[0]} != {dim}")
            wmin = float(np.linalg.eigvalsh(s)[0])
            if wmin < -PSD_ATOL:
                raise ValidationError(f"state {z}: negative eigenvalue {wmin:.3e}")
            tr = complex(np.trace(s))
            if abs(tr - 1.0) > 1e-10:
                raise ValidationError(f"state {z}: trace {tr:.12g} != 1")
        self.dim = dim
        self.states = mats

    def __len__(self) -> int:
        return len(self.states)


# ---------------------------------------------------------------------------
# channels


def depolarize(mset: MeasurementSet, v: float) -> MeasurementSet:
    """Apply X -> v X + (1 - v) Tr(X) I/d to every element of the set."""
    if not 0.0 <= v <= 1.0:
        raise ValidationError(f"visibility must be in [0, 1], got {v}")
    d = mset.dim
    traces = np.real(np.einsum("xakk->xa", mset.table))
    noise = traces[:, :, None, None] * (np.eye(d) / d)
    return MeasurementSet(list(v * mset.table + (1.0 - v) * noise))


def apply_loss(mset: MeasurementSet, eta: float) -> MeasurementSet:
    """Scale every element by eta and append a flag outcome (1 - eta) I per setting."""
    if not 0.0 <= eta <= 1.0:
        raise ValidationError(f"efficiency must be in [0, 1], got {eta}")
    d = mset.dim
    settings = []
    for x in range(mset.n_settings):
        outcomes = [eta * m for m in mset.table[x]]
        outcomes.append((1.0 - eta) * np.eye(d, dtype=complex))
        settings.append(outcomes)
    return MeasurementSet(settings)


# ---------------------------------------------------------------------------
# families


def basis_projectors(u: np.ndarray) -> list[np.ndarray]:
    """Rank-1 projectors onto the columns of a unitary."""
    u = linalg.assert_unitary(u)
    return [np.outer(u[:, k], u[:, k].conj()) for k in range(u.shape[0])]


def basis_measurement_set(unitaries) -> MeasurementSet:
    """Measurement set whose x-th setting measures in the basis of the x-th unitary."""
    return MeasurementSet([basis_projectors(u) for u in unitaries])


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % k for k in range(2, int(n**0.5) + 1))


def mub_unitaries(d: int, count: int) -> list[np.ndarray]:
    """Unitaries whose columns are `count` mutually unbiased bases in prime dimension d.

    d = 2 uses the three Pauli eigenbases. Odd prime d uses the computational
    basis plus quadratically twisted Fourier bases with phases
    omega^(a k + x k^2 (d+1)/2); the Gauss-sum structure makes any two of
    them unbiased.
    """
    if not _is_prime(d):
        raise ValidationError(f"MUB construction requires prime dimension, got {d}")
    if d > 16:
        raise ValidationError(f"dimension {d} above the supported range")
    if not 2 <= count <= d + 1:
        raise ValidationError(f"count must be in [2, {d + 1}] for d = {d}, got {count}")
    if d == 2:
        z = np.eye(2, dtype=complex)
        x = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
        y = np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2.0)
        return [z, x, y][:count]
    omega = np.exp(2j * np.pi / d)
    inv2 = (d + 1) // 2
    ks = np.arange(d)
    out = [np.eye(d, dtype=complex)]
    for x in range(1, count):
        u = np.empty((d, d), dtype=complex)
        for a in range(d):
            exps = (a * ks + x * ks * ks * inv2) % d
            u[:, a] = omega**exps / np.sqrt(d)
        out.append(u)
    return out


def mub_set(d: int, count: int) -> MeasurementSet:
    """Rank-1 projective measurements onto `count` mutually unbiased bases."""
    return basis_measurement_set(mub_unitaries(d, count))


def _dodecahedron_vertices() -> np.ndarray:
    """The 20 dodecahedron vertices, normalized to unit length."""
    verts = []
    for sx in (1, -1):
        for sy in (1, -1):
            for sz in (1, -1):
                verts.append((sx, sy, sz))
    for s1 in (1, -1):
        for s2 in (1, -1):
            verts.append((0.0, s1 / _PHI, s2 * _PHI))
            verts.append((s1 / _PHI, s2 * _PHI, 0.0))
            verts.append((s1 * _PHI, 0.0, s2 / _PHI))
    v = np.array(verts, dtype=float)
    return v / np.linalg.norm(v, axis=1, keepdims=True)

# Partition of the 20 vertices into 5 regular tetrahedra, found once by brute
# force (groups with pairwise dot product -1/3) and fixed here; only two such
# partitions exist (a chiral pair) and they produce the same measurement
# statistics.
_TETRAHEDRA = (
    (0, 3, 5, 6),
    (1, 8, 12, 19),
    (2, 9, 16, 17),
    (4, 10, 11, 18),
    (7, 13, 14, 15),
)


def bloch_operator(n, scale: float = 0.5) -> np.ndarray:
    """scale * (I + n . sigma) for a real 3-vector n."""
    n = np.asarray(n, dtype=float)
    return scale * (np.eye(2, dtype=complex) + sum(n[i] * _PAULI[i] for i in range(3)))


def sic_vectors() -> np.ndarray:
    """Bloch vectors of the five-tetrahedra SIC compound, shape (5, 4, 3)."""
    verts = _dodecahedron_vertices()
    out = np.empty((5, 4, 3))
    for x, tet in enumerate(_TETRAHEDRA):
        for a, i in enumerate(tet):
            out[x, a] = verts[i]
        dots = out[x] @ out[x].T
        offdiag = dots[~np.eye(4, dtype=bool)]
        if linalg.max_abs(offdiag + 1.0 / 3.0) > 1e-9:
            raise AssertionError("tetrahedra table corrupted: dot products != -1/3")
    return out


def sic_five_tetrahedra() -> MeasurementSet:
    """Five qubit SIC-POVMs whose Bloch vectors form the compound of five tetrahedra."""
    vecs = sic_vectors()
    settings = [
        [bloch_operator(vecs[x, a], 0.25) for a in range(4)] for x in range(5)
    ]
    return MeasurementSet(settings)


def qubit_sic() -> MeasurementSet:
    """A single qubit SIC-POVM (the first tetrahedron of the compound)."""
    vecs = sic_vectors()
    return MeasurementSet([[bloch_operator(vecs[0, a], 0.25) for a in range(4)]])


def trine() -> Povm:
    """The extremal three-outcome qubit trine, (2/3)|psi_a><psi_a| at 120 degrees."""
    outcomes = []
    for a in (1, 2, 3):
        psi = np.array([np.cos(a * np.pi / 3), np.sin(a * np.pi / 3)], dtype=complex)
        outcomes.append((2.0 / 3.0) * np.outer(psi, psi.conj()))
    return Povm(outcomes, what="trine")


def extend_direct_sum(povm: Povm) -> Povm:
    """Block-diagonal extension M_a = |a><a| (+) M_a on dimension o + d.

    The first block is the computational flag of the outcome; the second is
    the original element.
    """
    o, d = len(povm), povm.dim
    outcomes = []
    for a, m in enumerate(povm.outcomes):
        big = np.zeros((o + d, o + d), dtype=complex)
        big[a, a] = 1.0
        big[o:, o:] = m
        outcomes.append(big)
    return Povm(outcomes, what="extended POVM")


def discrimination_ensemble(mset: MeasurementSet) -> StateEnsemble:
    """Probe states for the state-discrimination witness.

    Every nonzero element must be proportional to a rank-1 projector; its
    normalization is the probe state at index z = x * o + a. Zero padding
    elements get a maximally mixed placeholder (their witness coefficient
    multiplies a zero operator anyway).
    """
    d = mset.dim
    states = []
    for x in range(mset.n_settings):
        for a in range(mset.n_outcomes):
            m = mset.table[x, a]
            tr = float(np.real(np.trace(m)))
            if tr < 1e-12:
                states.append(np.eye(d, dtype=complex) / d)
                continue
            rho = m / tr
            if linalg.max_abs(rho @ rho - rho) > 1e-8:
                raise ValidationError(
                    f"element ({a}, {x}) is not proportional to a rank-1 projector"
                )
            states.append(rho)
    return StateEnsemble(states)


# ---------------------------------------------------------------------------
# JSON format


def matrix_to_json(m: np.ndarray) -> list:
    return [[[float(e.real), float(e.imag)] for e in row] for row in np.asarray(m, dtype=complex)]


def matrix_from_json(rows, where: str = "matrix") -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: malformed matrix entries ({exc})") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(
            f"{where}: expected d x d x [re, im] nesting, got shape {arr.shape}"
        )
    return arr[:, :, 0] + 1j * arr[:, :, 1]


def measurement_set_to_json(mset: MeasurementSet) -> dict:
    return {
        "dim": mset.dim,
        "settings": [
            {"outcomes": [matrix_to_json(m) for m in mset.table[x]]}
            for x in range(mset.n_settings)
        ],
    }


def measurement_set_from_json(obj) -> MeasurementSet:
    if not isinstance(obj, dict) or "dim" not in obj or "settings" not in obj:
        raise ValidationError('measurement set JSON needs "dim" and "settings" keys')
    dim = obj["dim"]
    if not isinstance(dim, int) or not isinstance(obj["settings"], list):
        raise ValidationError('"dim" must be an integer and "settings" a list')
    settings = []
    for x, entry in enumerate(obj["settings"]):
        if not isinstance(entry, dict) or "outcomes" not in entry:
            raise ValidationError(f'setting {x}: missing "outcomes"')
        if not isinstance(entry["outcomes"], list):
            raise ValidationError(f'setting {x}: "outcomes" must be a list')
        outcomes = []
        for a, rows in enumerate(entry["outcomes"]):
            m = matrix_from_json(rows, where=f"setting {x}, outcome {a}")
            if m.shape[0] != dim:
                raise ValidationError(
                    f"setting {x}, outcome {a}: dimension {m.shape[0]} != {dim}"
                )
            outcomes.append(m)
        settings.append(outcomes)
    return MeasurementSet(settings)


def load_measurement_set(path) -> MeasurementSet:
    with open(path, "r", encoding="utf-8") as fh:
        return measurement_set_from_json(json.load(fh))


def save_measurement_set(mset: MeasurementSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(measurement_set_to_json(mset), fh)
        fh.write("\n")
