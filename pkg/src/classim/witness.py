"""Prepare-and-measure witnesses that falsify classical measurement models.

A witness is W(M) = sum_{a,z,x} c[a,z,x] Tr(rho_z M[x][a]) <= beta, where the
classical bound beta is a maximum over deterministic outcome strategies of a
single-device score. For qubits the per-strategy maximum has a closed form in
the trace and determinant of the strategy's score combination; in higher
dimension each strategy is bounded by a small SDP relaxation over unit-trace
blocks.

Witness spec JSON: {"coefficients": [{"a": .., "z": .., "x": .., "value": ..}],
"states": [matrix, ...]} with the same [re, im] matrix nesting as measurement
sets, or the shorthand {"type": "state-discrimination"} which builds both the
coefficients and the probe states from the measurement set under test.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import linalg, measurements, solvers
from .errors import StrategyOverflowError, ValidationError

QUBIT_ENUM_CAP = 100_000_000
SDP_ENUM_CAP = 1_000_000
_CHUNK = 1 << 19


@dataclass
class WitnessSpec:
    """Coefficient tensor c[a, z, x] plus the probe-state ensemble."""

    coefficients: np.ndarray
    ensemble: measurements.StateEnsemble

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.ndim != 3:
            raise ValidationError("coefficients must have shape (outcomes, states, settings)")
        if not np.all(np.isfinite(self.coefficients)):
            raise ValidationError("non-finite witness coefficient")
        if self.coefficients.shape[1] != len(self.ensemble):
            raise ValidationError(
                f"coefficient z-axis {self.coefficients.shape[1]} != "
                f"{len(self.ensemble)} states"
            )


def state_discrimination_spec(mset: measurements.MeasurementSet) -> WitnessSpec:
    """The witness sum_{a,x} Tr(rho_{a|x} M[x][a]) with rho the normalized elements."""
    ensemble = measurements.discrimination_ensemble(mset)
    o, n = mset.n_outcomes, mset.n_settings
    c = np.zeros((o, n * o, n))
    for x in range(n):
        for a in range(o):
            c[a, x * o + a, x] = 1.0
    return WitnessSpec(coefficients=c, ensemble=ensemble)


def witness_value(spec: WitnessSpec, mset: measurements.MeasurementSet) -> float:
    o, m, n = spec.coefficients.shape
    if (n, o) != (mset.n_settings, mset.n_outcomes):
        raise ValidationError(
            f"coefficient shape {(o, m, n)} does not match the set "
            f"({mset.n_outcomes} outcomes, {mset.n_settings} settings)"
        )
    if spec.ensemble.dim != mset.dim:
        raise ValidationError("probe-state dimension mismatch")
    states = np.asarray(spec.ensemble.states)
    values = np.einsum("zij,xaji->azx", states, mset.table)
    total = np.einsum("azx,azx->", spec.coefficients, values)
    if abs(total.imag) > 1e-10:
        raise ValidationError(f"witness value has imaginary residue {total.imag:.3e}")
    return float(total.real)


def score_operators(spec: WitnessSpec) -> np.ndarray:
    """(outcomes, settings, d, d) array O[a, x] = sum_z c[a,z,x] rho_z."""
    states = np.asarray(spec.ensemble.states)
    return np.einsum("azx,zij->axij", spec.coefficients, states)


def strategy_count(o: int, n: int, d: int) -> int:
    """Number of deterministic strategies (x, k) -> a."""
    return o ** (n * d)


def strategy_from_index(index: int, o: int, n: int, d: int) -> np.ndarray:
    """Decode a mixed-radix strategy index into a table gamma[x, k] = a."""
    gamma = np.empty((n, d), dtype=np.int64)
    for x in range(n):
        for k in range(d):
            gamma[x, k] = index % o
            index //= o
    return gamma


def _bloch_parts(scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    tr = np.real(np.einsum("axii->ax", scores))
    w = np.empty(scores.shape[:2] + (3,))
    w[..., 0] = np.real(scores[..., 1, 0])
    w[..., 1] = np.imag(scores[..., 1, 0])
    w[..., 2] = np.real(scores[..., 0, 0] - scores[..., 1, 1]) / 2.0
    return tr, w


def qubit_classical_bound(scores: np.ndarray) -> tuple[float, np.ndarray]:
    """Exact classical bound for qubit score operators, with its argmax strategy.

    Enumerates every strategy (x, k) -> a for the two device outcomes. Per
    strategy the bound is Tr(O+) + (lmax - lmin)(O-) where O+- combine the
    selected scores; for 2 x 2 Hermitian matrices the eigenvalue gap is twice
    the Bloch-vector norm, which lets the whole enumeration run as chunked
    vector arithmetic.
    """
    scores = np.asarray(scores, dtype=complex)
    o, n = scores.shape[:2]
    if scores.shape[2:] != (2, 2):
        raise ValidationError("qubit bound requires 2 x 2 score operators")
    total = strategy_count(o, n, 2)
    if total > QUBIT_ENUM_CAP:
        raise StrategyOverflowError(
            f"{total} strategies exceed the qubit enumeration cap {QUBIT_ENUM_CAP}"
        )
    tr, w = _bloch_parts(scores)
    o2 = o * o
    # per-setting tables over ordered outcome pairs p = a_k1 + o * a_k2
    a1 = np.arange(o2) % o
    a2 = np.arange(o2) // o
    tpair = (tr[a1, :] + tr[a2, :]).T / 2.0  # (n, o2)
    wpair = (w[a1, :, :] - w[a2, :, :]).transpose(1, 0, 2) / 2.0  # (n, o2, 3)

    best = -np.inf
    best_index = 0
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        acc_t = np.zeros(len(idx))
        acc_w = np.zeros((len(idx), 3))
        tmp = idx.copy()
        for x in range(n):
            digit = tmp % o2
            tmp //= o2
            acc_t += tpair[x, digit]
            acc_w += wpair[x, digit]
        score = acc_t + 2.0 * np.linalg.norm(acc_w, axis=1)
        j = int(np.argmax(score))
        if score[j] > best:
            best = float(score[j])
            best_index = int(idx[j])
    return best, strategy_from_index(best_index, o, n, 2)


def strategy_sdp_bound(scores: np.ndarray, gamma: np.ndarray, tol: float = 1e-6) -> float:
    """SDP relaxation of the per-strategy score over unit-trace blocks.

    max sum_k Tr(C_k N_k) with N_k PSD, Tr N_k = 1 and sum_k N_k = I, where
    C_k collects the scores the strategy routes to device outcome k. The
    relaxation drops the rank-1 constraint, so it upper bounds the exact
    per-strategy value.
    """
    scores = np.asarray(scores, dtype=complex)
    d = scores.shape[2]
    gamma = np.asarray(gamma, dtype=np.int64)
    if gamma.shape != (scores.shape[1], d):
        raise ValidationError(f"strategy table must have shape (settings, {d})")
    cs = [scores[gamma[:, k], np.arange(scores.shape[1])].sum(axis=0) for k in range(d)]
    return _objective_sdp_value(cs, d, tol)


def _objective_sdp_value(cs, d: int, tol: float = 1e-6) -> float:
    program = solvers.HermitianProgram([d] * d)
    basis = linalg.HermitianBasis(d)
    for k in range(d):
        program.set_objective(k, (cs[k] + linalg.dagger(cs[k])) / 2.0)
        program.add_constraint({k: np.eye(d, dtype=complex)}, 1.0)
    program.add_matrix_equality(
        {k: 1.0 for k in range(d)}, np.eye(d, dtype=complex), basis
    )
    sol = program.solve(tol=tol)
    return sol.value


def _sdp_worker(args):
    cs, d, tol = args
    return _objective_sdp_value(list(cs), d, tol)


def classical_bound(
    scores: np.ndarray, threads: int | None = None, tol: float = 1e-6
) -> tuple[float, np.ndarray | None]:
    """Classical bound beta over all deterministic strategies.

    d = 2 delegates to the exact qubit formula. Higher dimensions take the
    maximum of the per-strategy SDP relaxation; strategies with the same
    multiset of objective blocks are deduplicated (the SDP value is invariant
    under permuting device outcomes), which collapses the count dramatically
    for symmetric witnesses. The SDP path refuses above 10^6 strategies.
    """
    scores = np.asarray(scores, dtype=complex)
    o, n, d = scores.shape[0], scores.shape[1], scores.shape[2]
    if d == 2:
        return qubit_classical_bound(scores)
    total = strategy_count(o, n, d)
    if total > SDP_ENUM_CAP:
        raise StrategyOverflowError(
            f"{total} strategies exceed the SDP enumeration cap {SDP_ENUM_CAP}"
        )
    if threads is None:
        threads = int(os.environ.get("CLASSICALITY_THREADS", "1"))

    index_of: dict[bytes, int] = {}
    owners: list[list[int]] = []
    jobs = []
    for index in range(total):
        gamma = strategy_from_index(index, o, n, d)
        cs = [
            scores[gamma[:, k], np.arange(n)].sum(axis=0) for k in range(d)
        ]
        key = b"".join(sorted(np.round(c, 12).tobytes() for c in cs))
        if key in index_of:
            owners[index_of[key]].append(index)
        else:
            index_of[key] = len(jobs)
            owners.append([index])
            jobs.append((tuple(cs), d, tol))

    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(_sdp_worker, jobs, chunksize=8))
    else:
        values = [_sdp_worker(job) for job in jobs]

    best_job = int(np.argmax(values))
    best_index = owners[best_job][0]
    return float(values[best_job]), strategy_from_index(best_index, o, n, d)


def critical_visibility(
    spec: WitnessSpec, mset: measurements.MeasurementSet, beta: float
) -> tuple[float, bool]:
    """Visibility where the depolarized set stops violating the witness.

    W is affine in the depolarization visibility, so the crossing solves
    v W(M) + (1 - v) W_noise = beta where W_noise is the witness value of the
    fully depolarized set. Returns (v_crit, violated); a set that does not
    violate at v = 1 reports (1.0, False).
    """
    w_full = witness_value(spec, mset)
    traces = np.real(np.einsum("xakk->xa", mset.table)) / mset.dim
    state_traces = np.array([np.real(np.trace(s)) for s in spec.ensemble.states])
    w_noise = float(
        np.einsum("azx,z,xa->", spec.coefficients, state_traces, traces)
    )
    if w_full <= beta + 1e-12:
        return 1.0, False
    if abs(w_full - w_noise) < 1e-12:
        raise ValidationError("degenerate witness: no dependence on visibility")
    v = (beta - w_noise) / (w_full - w_noise)
    return float(v), True


# ---------------------------------------------------------------------------
# JSON


def witness_spec_from_json(obj, mset: measurements.MeasurementSet) -> WitnessSpec:
    if not isinstance(obj, dict):
        raise ValidationError("witness spec JSON must be an object")
    if obj.get("type") == "state-discrimination":
        return state_discrimination_spec(mset)
    if "coefficients" not in obj or "states" not in obj:
        raise ValidationError(
            'witness spec needs "coefficients" and "states" (or a "type" shorthand)'
        )
    states = [
        measurements.matrix_from_json(rows, where=f"witness state {z}")
        for z, rows in enumerate(obj["states"])
    ]
    ensemble = measurements.StateEnsemble(states)
    c = np.zeros((mset.n_outcomes, len(states), mset.n_settings))
    for i, entry in enumerate(obj["coefficients"]):
        try:
            a, z, x = int(entry["a"]), int(entry["z"]), int(entry["x"])
            c[a, z, x] = float(entry["value"])
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ValidationError(f"coefficient entry {i} malformed ({exc})") from exc
    return WitnessSpec(coefficients=c, ensemble=ensemble)
