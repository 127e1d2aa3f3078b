"""Classical measurement models and the LP search over a device ensemble.

A classical model reproduces a depolarized measurement set from stochastically
selected fixed-basis devices plus outcome post-processing:

    v M[x][a] + (1 - v) Tr(M[x][a]) I/d  =  sum_{l,k} qtilde[l,x,k,a] E[l][k]

with E[l][k] the rank-1 projectors of device l's basis, qtilde >= 0,
sum_a qtilde[l,x,k,a] = q[l] and sum_l q[l] = 1. For a fixed device ensemble
the best visibility v is a linear program; matrix equalities are flattened
into d^2 real rows each through a HermitianBasis.

Model JSON format::

    {"v": ..., "devices": [{"weight": ..., "unitary": [[[re, im], ...], ...],
                            "response": {"a,x,k": value, ...}}, ...]}

where response values are the absolute qtilde entries (already multiplied by
the device weight) and indices are 0-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import linalg, measurements, solvers
from .errors import SolverFailure, ValidationError

WEIGHT_PRUNE = 1e-12
_MAX_TABLEAU_NONZEROS = 50_000_000


@dataclass
class ClassicalModel:
    """A classical-device decomposition certificate.

    response[l, x, k, a] stores qtilde = q(l) * p(a | x, k, l); summing it
    over a recovers the device weight for every (l, x, k).
    """

    dim: int
    unitaries: list
    weights: np.ndarray
    response: np.ndarray
    visibility: float

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.response = np.asarray(self.response, dtype=float)
        n_dev = len(self.unitaries)
        for u in self.unitaries:
            linalg.assert_unitary(u, what="device basis")
        if self.weights.shape != (n_dev,):
            raise ValidationError("one weight per device required")
        if self.response.ndim != 4 or self.response.shape[0] != n_dev:
            raise ValidationError("response must have shape (devices, x, k, a)")
        if self.response.shape[2] != self.dim:
            raise ValidationError("response k-axis must match the dimension")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValidationError(f"visibility {self.visibility} outside [0, 1]")
        if self.response.min() < -1e-10:
            raise ValidationError("negative response entry")
        if abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValidationError(f"weights sum to {self.weights.sum():.12f}, not 1")
        dev = linalg.max_abs(self.response.sum(axis=3) - self.weights[:, None, None])
        if dev > 1e-8:
            raise ValidationError(
                f"response does not normalize to the device weights (max dev {dev:.3e})"
            )

    @property
    def n_settings(self) -> int:
        return self.response.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.response.shape[3]

    def device_projectors(self, l: int) -> np.ndarray:
        """(d, d, d) array of rank-1 projectors onto device l's basis columns."""
        u = self.unitaries[l]
        return np.einsum("ak,bk->kab", u, u.conj())

    def reconstructed(self) -> np.ndarray:
        """(settings, outcomes, d, d) table of sum_{l,k} qtilde E."""
        out = np.zeros(
            (self.n_settings, self.n_outcomes, self.dim, self.dim), dtype=complex
        )
        for l in range(len(self.unitaries)):
            proj = self.device_projectors(l)
            out += np.einsum("xka,kij->xaij", self.response[l], proj)
        return out


def reconstruction_residual(model: ClassicalModel, mset: measurements.MeasurementSet) -> float:
    """max over (a, x) of || Phi_v(M[x][a]) - model reconstruction ||_max."""
    if mset.dim != model.dim:
        raise ValidationError(
            f"dimension mismatch: set {mset.dim} vs model {model.dim}"
        )
    if (mset.n_settings, mset.n_outcomes) != (model.n_settings, model.n_outcomes):
        raise ValidationError("setting/outcome shape mismatch between set and model")
    target = measurements.depolarize(mset, model.visibility).table
    return linalg.max_abs(target - model.reconstructed())


def default_ensemble(
    mset: measurements.MeasurementSet, n_random: int, rng
) -> list[np.ndarray]:
    """Eigenbases of every rank-1 element, then n_random Haar unitaries."""
    out = []
    for x in range(mset.n_settings):
        for a in range(mset.n_outcomes):
            m = mset.table[x, a]
            tr = float(np.real(np.trace(m)))
            if tr < 1e-12:
                continue
            if linalg.max_abs(m @ m / tr - m) > 1e-8:  # rank > 1
                continue
            _, vecs = np.linalg.eigh(m)
            out.append(vecs)
    out.extend(linalg.haar_unitary(mset.dim, rng) for _ in range(n_random))
    return out


def search_classical_model(
    mset: measurements.MeasurementSet,
    unitaries,
    tol: float = 1e-9,
    max_nonzeros: int = _MAX_TABLEAU_NONZEROS,
) -> tuple[float, ClassicalModel]:
    """Best classical model of the depolarized set over a fixed device ensemble.

    Returns (v*, model). v* is optimal for the given ensemble (duality gap
    certified by the LP layer) and is a lower bound on the true classicality
    visibility; enlarging the ensemble can only increase it.

    Runtime is dominated by HiGHS; the two-qubit-MUB problem with 2000
    devices (~18k variables, ~8k rows) solves in a few seconds on a laptop.
    """
    unitaries = [linalg.assert_unitary(u, what="ensemble unitary") for u in unitaries]
    if not unitaries:
        raise ValidationError("device ensemble must not be empty")
    d, n, o = mset.dim, mset.n_settings, mset.n_outcomes
    for u in unitaries:
        if u.shape[0] != d:
            raise ValidationError("ensemble unitary dimension mismatch")
    n_dev = len(unitaries)
    basis = linalg.HermitianBasis(d)
    d2 = d * d

    # coefficient tables in the Hermitian basis
    proj = np.empty((n_dev, d, d, d), dtype=complex)
    for l, u in enumerate(unitaries):
        proj[l] = np.einsum("ak,bk->kab", u, u.conj())
    e_coef = basis.coefficients_many(proj)  # (n_dev, d, d2)
    m_coef = basis.coefficients_many(mset.table)  # (n, o, d2)
    traces = np.real(np.einsum("xakk->xa", mset.table))
    id_coef = basis.coefficients(np.eye(d) / d)

    # variables: v | q(l) | qtilde[l, x, k, a] | slack for v <= 1
    def qt(l, x, k, a):
        return 1 + n_dev + ((l * n + x) * d + k) * o + a

    num_vars = 1 + n_dev + n_dev * n * d * o + 1
    nnz_estimate = n * o * d2 * (n_dev * d + 1) + n_dev * n * d * (o + 1) + n_dev + 2
    if nnz_estimate > max_nonzeros:
        raise ValidationError(
            f"LP too large: ~{nnz_estimate} nonzeros (cap {max_nonzeros}); "
            "reduce the ensemble or raise max_nonzeros"
        )
    program = solvers.LinearProgram(num_vars)
    program.set_objective(0, 1.0)

    # matrix equality rows: v (m_i - tr * id_i) - sum_{l,k} qtilde e_i = -tr * id_i
    for x in range(n):
        for a in range(o):
            cols_qt = np.array(
                [qt(l, x, k, a) for l in range(n_dev) for k in range(d)], dtype=np.int64
            )
            for i in range(d2):
                vals = np.concatenate(
                    ([m_coef[x, a, i] - traces[x, a] * id_coef[i]], -e_coef[:, :, i].reshape(-1))
                )
                cols = np.concatenate(([0], cols_qt))
                program.add_row(cols, vals, -traces[x, a] * id_coef[i])

    # response normalization: sum_a qtilde[l,x,k,a] = q(l)
    for l in range(n_dev):
        for x in range(n):
            for k in range(d):
                cols = [qt(l, x, k, a) for a in range(o)] + [1 + l]
                program.add_row(cols, [1.0] * o + [-1.0], 0.0)

    # total weight and visibility cap
    program.add_row(list(range(1, 1 + n_dev)), [1.0] * n_dev, 1.0)
    program.add_row([0, num_vars - 1], [1.0, 1.0], 1.0)

    sol = solvers.solve_lp(program, tol=tol)
    if sol.status != "optimal":
        # v = 0 with uniform response is always feasible, so this is a solver defect
        raise SolverFailure(f"classical-model LP did not solve: status {sol.status}")

    v_star = float(sol.primal[0])
    weights = np.asarray(sol.primal[1 : 1 + n_dev])
    response = np.asarray(
        sol.primal[1 + n_dev : 1 + n_dev + n_dev * n * d * o]
    ).reshape(n_dev, n, d, o)

    keep = np.nonzero(weights > WEIGHT_PRUNE)[0]
    weights = weights[keep]
    response = np.clip(response[keep], 0.0, None)
    mass = weights.sum()
    weights /= mass
    response /= mass
    # repair solver dust so the response sums match the weights exactly
    norm = response.sum(axis=3)
    scale = np.where(norm > 0, weights[:, None, None] / np.where(norm > 0, norm, 1.0), 0.0)
    response *= scale[:, :, :, None]
    uniform = weights[:, None, None, None] / o
    response = np.where(norm[:, :, :, None] > 0, response, uniform)

    model = ClassicalModel(
        dim=d,
        unitaries=[unitaries[i] for i in keep],
        weights=weights,
        response=response,
        visibility=min(max(v_star, 0.0), 1.0),
    )
    residual = reconstruction_residual(model, mset)
    if residual > 1e-7:
        raise SolverFailure(
            f"LP model reconstruction residual {residual:.3e} exceeds 1e-7"
        )
    return v_star, model


def pair_target_set(u_first: np.ndarray, u_second: np.ndarray) -> measurements.MeasurementSet:
    """The two basis measurements of a pair of unitaries, as a measurement set."""
    return measurements.basis_measurement_set([u_first, u_second])


def pair_half_noise_model(u_first, u_second) -> ClassicalModel:
    """The explicit two-device model at visibility 1/2 for a pair of bases.

    Each device measures in one of the two bases, chosen with probability
    1/2; the output copies the device outcome when the requested setting
    matches the device and is uniform otherwise. This reconstructs the pair
    at v = 1/2 in any dimension.
    """
    u_first = linalg.assert_unitary(u_first, what="first basis")
    u_second = linalg.assert_unitary(u_second, what="second basis")
    d = u_first.shape[0]
    if u_second.shape[0] != d:
        raise ValidationError("basis dimension mismatch")
    response = np.empty((2, 2, d, d))
    for l in range(2):
        for x in range(2):
            if x == l:
                response[l, x] = 0.5 * np.eye(d)
            else:
                response[l, x] = 0.5 * np.full((d, d), 1.0 / d)
    return ClassicalModel(
        dim=d,
        unitaries=[u_first, u_second],
        weights=np.array([0.5, 0.5]),
        response=response,
        visibility=0.5,
    )


def decompose_stochastic(p, atol: float = 1e-10) -> list[tuple[float, np.ndarray]]:
    """Greedy convex decomposition of a column-stochastic matrix.

    Returns [(weight, column map)] where each map sends column z to the row
    it selects. Repeatedly takes the per-column argmax (ties broken toward
    the lowest row index) and subtracts the smallest selected entry, which
    zeroes at least one entry per step, so at most rows * columns terms come
    out. Weights are renormalized to sum to exactly 1 at the end.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 2:
        raise ValidationError(f"expected a matrix, got shape {p.shape}")
    if p.min() < -atol:
        raise ValidationError(f"negative entry {p.min():.3e}")
    sums = p.sum(axis=0)
    if linalg.max_abs(sums - 1.0) > atol:
        raise ValidationError("columns do not sum to 1")
    rest = np.clip(p, 0.0, None).copy()
    terms = []
    for _ in range(p.shape[0] * p.shape[1]):
        if rest.sum(axis=0).max() < 1e-13:
            break
        choice = rest.argmax(axis=0)  # ties -> lowest row index
        w = float(rest[choice, np.arange(p.shape[1])].min())
        if w <= 1e-15:
            break
        terms.append((w, choice.copy()))
        rest[choice, np.arange(p.shape[1])] -= w
        rest = np.clip(rest, 0.0, None)
    total = sum(w for w, _ in terms)
    return [(w / total, c) for w, c in terms]


@dataclass
class ProjectiveCommutingModel:
    """Post-processing-free model: weighted commuting projective measurements.

    projectors[t, x, a] is the (possibly higher-rank) projector of term t,
    setting x, outcome a; per term all projectors commute and each setting's
    family is orthogonal and complete.
    """

    dim: int
    weights: np.ndarray
    projectors: np.ndarray  # (terms, settings, outcomes, d, d)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.projectors = np.asarray(self.projectors, dtype=complex)
        if self.projectors.ndim != 5:
            raise ValidationError("projectors must have shape (terms, x, a, d, d)")
        if abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValidationError("weights must sum to 1")
        t, n, o = self.projectors.shape[:3]
        f = self.projectors
        for ti in range(t):
            for x in range(n):
                fam = f[ti, x]
                dev = linalg.max_abs(fam.sum(axis=0) - np.eye(self.dim))
                if dev > 1e-9:
                    raise ValidationError(
                        f"term {ti}, setting {x}: projectors incomplete ({dev:.3e})"
                    )
                for a in range(o):
                    for b in range(o):
                        prod = fam[a] @ fam[b]
                        ref = fam[a] if a == b else 0.0
                        if linalg.max_abs(prod - ref) > 1e-8:
                            raise ValidationError(
                                f"term {ti}, setting {x}: outcomes {a},{b} not orthogonal projectors"
                            )
            flat = f[ti].reshape(-1, self.dim, self.dim)
            for i in range(len(flat)):
                for j in range(i + 1, len(flat)):
                    if linalg.max_abs(flat[i] @ flat[j] - flat[j] @ flat[i]) > 1e-8:
                        raise ValidationError(f"term {ti}: projectors do not commute")

    @property
    def n_settings(self) -> int:
        return self.projectors.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.projectors.shape[2]

    def reconstructed(self) -> np.ndarray:
        return np.einsum("t,txaij->xaij", self.weights, self.projectors)


def eliminate_postprocessing(model: ClassicalModel) -> ProjectiveCommutingModel:
    """Absorb the post-processing into higher-rank commuting projectors.

    Per device, the conditional response p(a | x, k) is decomposed into
    deterministic strategies; each (device, strategy) pair becomes one term
    whose projectors are sums of that device's basis projectors. The
    reconstruction is unchanged.
    """
    d, n, o = model.dim, model.n_settings, model.n_outcomes
    weights = []
    projs = []
    for l in range(len(model.unitaries)):
        ql = model.weights[l]
        if ql <= 0.0:
            continue
        cond = model.response[l] / ql  # (x, k, a)
        columns = cond.reshape(n * d, o).T  # p[a, z] with z = x*d + k
        proj = model.device_projectors(l)
        for w, choice in decompose_stochastic(columns):
            f = np.zeros((n, o, d, d), dtype=complex)
            for x in range(n):
                for k in range(d):
                    f[x, choice[x * d + k]] += proj[k]
            weights.append(ql * w)
            projs.append(f)
    weights = np.asarray(weights)
    return ProjectiveCommutingModel(
        dim=d, weights=weights / weights.sum(), projectors=np.asarray(projs)
    )


def project_extended_model(
    pmodel: ProjectiveCommutingModel, n_flags: int, dim_rest: int
) -> ProjectiveCommutingModel:
    """Restrict a model of a block-extended POVM to the original subspace.

    The input must live on dimension n_flags + dim_rest and reconstruct
    block-diagonal operators; each projector is compressed to its lower-right
    block. Weights are untouched.
    """
    if pmodel.dim != n_flags + dim_rest:
        raise ValidationError(
            f"model dimension {pmodel.dim} != {n_flags} + {dim_rest}"
        )
    recon = pmodel.reconstructed()
    off = linalg.max_abs(recon[:, :, :n_flags, n_flags:])
    if off > 1e-6:
        raise ValidationError(
            f"reconstructed operators are not block compatible (off-diagonal {off:.3e})"
        )
    return ProjectiveCommutingModel(
        dim=dim_rest,
        weights=pmodel.weights.copy(),
        projectors=pmodel.projectors[:, :, :, n_flags:, n_flags:],
    )


# ---------------------------------------------------------------------------
# JSON round trip


def model_to_json(model: ClassicalModel) -> dict:
    devices = []
    for l, u in enumerate(model.unitaries):
        resp = {}
        n, d, o = model.n_settings, model.dim, model.n_outcomes
        for x in range(n):
            for k in range(d):
                for a in range(o):
                    value = model.response[l, x, k, a]
                    if value != 0.0:
                        resp[f"{a},{x},{k}"] = float(value)
        devices.append(
            {
                "weight": float(model.weights[l]),
                "unitary": measurements.matrix_to_json(u),
                "response": resp,
            }
        )
    return {"v": float(model.visibility), "dim": model.dim,
            "settings": model.n_settings, "outcomes": model.n_outcomes,
            "devices": devices}


def model_from_json(obj) -> ClassicalModel:
    try:
        d = int(obj["dim"])
        n = int(obj["settings"])
        o = int(obj["outcomes"])
        v = float(obj["v"])
        entries = obj["devices"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed model JSON ({exc})") from exc
    unitaries = []
    weights = []
    response = np.zeros((len(entries), n, d, o))
    for l, entry in enumerate(entries):
        try:
            unitaries.append(
                measurements.matrix_from_json(entry["unitary"], where=f"device {l}")
            )
            weights.append(float(entry["weight"]))
            for key, value in entry["response"].items():
                a, x, k = (int(p) for p in key.split(","))
                response[l, x, k, a] = float(value)
        except (KeyError, TypeError, ValueError, IndexError, AttributeError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"device {l}: malformed model entry ({exc})") from exc
    return ClassicalModel(
        dim=d,
        unitaries=unitaries,
        weights=np.asarray(weights),
        response=response,
        visibility=v,
    )


def save_model(model: ClassicalModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model), fh)
        fh.write("\n")


def load_model(path) -> ClassicalModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json(json.load(fh))
