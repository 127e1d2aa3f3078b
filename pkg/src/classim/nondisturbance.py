"""Sequential-measurement consequences of classical models.

A classical model for a pair of measurements yields per-device POVM pairs
whose Lüders instruments implement the first measurement without disturbing
the second, and a joint-measurability parent POVM whose post-processings
reproduce the modelled set. This module verifies both numerically, evaluates
the exactly non-disturbing instrument of block-extended POVMs, and computes
the joint-measurability visibility of dichotomic projector sets by SDP.

A caveat on wording: a residual above threshold certifies that the *Lüders*
instrument disturbs; whether some other instrument is non-disturbing is an
existential this module does not decide, so reports say "Lüders-disturbing".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg, measurements, solvers
from .errors import ValidationError
from .models import ClassicalModel

LUDERS_DISTURBANCE_THRESHOLD = 1e-5


@dataclass
class SequentialScenario:
    """Shared-randomness implementation plan for two sequential measurements.

    Per value of the shared variable, the devices run the POVMs
    first_devices[l] and second_devices[l]; averaged over the weights these
    must reproduce the targets.
    """

    weights: np.ndarray
    first_devices: list
    second_devices: list
    target_first: list
    target_second: list

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1 or len(self.first_devices) != len(self.weights):
            raise ValidationError("one device pair per weight required")
        if len(self.second_devices) != len(self.weights):
            raise ValidationError("one device pair per weight required")
        if self.weights.min() < -1e-12 or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValidationError("weights must be a probability distribution")
        for l in range(len(self.weights)):
            measurements.Povm(self.first_devices[l], what=f"first device {l}")
            measurements.Povm(self.second_devices[l], what=f"second device {l}")
        for name, devices, target in (
            ("first", self.first_devices, self.target_first),
            ("second", self.second_devices, self.target_second),
        ):
            avg = sum(w * np.asarray(dev) for w, dev in zip(self.weights, devices))
            residual = linalg.max_abs(avg - np.asarray(target))
            if residual > 1e-8:
                raise ValidationError(
                    f"{name} devices average to the target only within {residual:.3e}"
                )


def scenario_from_model(
    model: ClassicalModel, x_first: int, x_second: int
) -> SequentialScenario:
    """Per-device POVMs for two settings of a modelled measurement set.

    The settings may coincide, which describes measuring the same modelled
    POVM twice in sequence.
    """
    n = model.n_settings
    if not (0 <= x_first < n and 0 <= x_second < n):
        raise ValidationError(
            f"need settings in [0, {n}), got {x_first}, {x_second}"
        )
    if model.weights.sum() < 1.0 - 1e-9:
        raise ValidationError("model weight mass below 1")
    keep = [l for l in range(len(model.unitaries)) if model.weights[l] > 0.0]
    first, second = [], []
    for l in keep:
        proj = model.device_projectors(l)
        cond = model.response[l] / model.weights[l]  # (x, k, a)
        first.append(list(np.einsum("ka,kij->aij", cond[x_first], proj)))
        second.append(list(np.einsum("ka,kij->aij", cond[x_second], proj)))
    recon = model.reconstructed()
    return SequentialScenario(
        weights=model.weights[keep].copy(),
        first_devices=first,
        second_devices=second,
        target_first=list(recon[x_first]),
        target_second=list(recon[x_second]),
    )


def luders_residual(scenario: SequentialScenario) -> float:
    """max_b || sum_{a,l} w_l sqrt(A_al) B_bl sqrt(A_al) - B_b ||_max.

    Zero (up to numerics) certifies that the Lüders instruments of the
    first-device POVMs leave the second measurement's statistics unchanged.
    """
    n_second = len(scenario.target_second)
    accum = [np.zeros_like(np.asarray(scenario.target_second[0])) for _ in range(n_second)]
    for l, w in enumerate(scenario.weights):
        roots = [linalg.sqrt_psd(a) for a in scenario.first_devices[l]]
        for b in range(n_second):
            bl = scenario.second_devices[l][b]
            accum[b] = accum[b] + w * sum(r @ bl @ r for r in roots)
    return max(
        linalg.max_abs(accum[b] - scenario.target_second[b]) for b in range(n_second)
    )


@dataclass
class ParentPovm:
    """Joint-measurability parent with composite (device, device-outcome) labels."""

    labels: list
    elements: list
    post_processing: np.ndarray  # p[mu, x, a]

    def __post_init__(self):
        measurements.Povm(self.elements, what="parent POVM")
        p = np.asarray(self.post_processing, dtype=float)
        if p.ndim != 3 or p.shape[0] != len(self.elements):
            raise ValidationError("post-processing must have shape (labels, x, a)")
        if p.min() < -1e-12 or linalg.max_abs(p.sum(axis=2) - 1.0) > 1e-8:
            raise ValidationError("post-processing rows must be distributions")
        self.post_processing = p

    def marginals(self) -> np.ndarray:
        """(settings, outcomes, d, d) table sum_mu p[mu, x, a] G_mu."""
        g = np.asarray(self.elements)
        return np.einsum("mxa,mij->xaij", self.post_processing, g)


def jm_parent(
    model: ClassicalModel, mset: measurements.MeasurementSet | None = None
) -> tuple[ParentPovm, np.ndarray]:
    """Parent POVM G_(l,k) = q(l) E_(k|l) with its per-setting marginal residuals.

    Residuals compare the parent's post-processed marginals against the
    depolarized target set when given, else against the model's own
    reconstruction.
    """
    labels = []
    elements = []
    post = []
    for l in range(len(model.unitaries)):
        if model.weights[l] <= 0.0:
            continue
        proj = model.device_projectors(l)
        cond = model.response[l] / model.weights[l]  # (x, k, a)
        for k in range(model.dim):
            labels.append((l, k))
            elements.append(model.weights[l] * proj[k])
            post.append(cond[:, k, :])
    parent = ParentPovm(
        labels=labels, elements=elements, post_processing=np.asarray(post)
    )
    reference = (
        measurements.depolarize(mset, model.visibility).table
        if mset is not None
        else model.reconstructed()
    )
    marg = parent.marginals()
    residuals = np.array(
        [linalg.max_abs(marg[x] - reference[x]) for x in range(marg.shape[0])]
    )
    return parent, residuals


def extended_instrument_residual(povm: measurements.Povm) -> float:
    """Non-disturbance defect of the flag-block instrument for an extended POVM.

    Extends the POVM to M_a = |a><a| (+) M_a and applies the instrument whose
    dual is X -> Tr(X (|a><a| (+) 0)) M_a; the flag block makes the selection
    exact, so the residual is zero to machine precision.
    """
    extended = measurements.extend_direct_sum(povm)
    o = len(povm)
    out = 0.0
    for b, mb in enumerate(extended.outcomes):
        total = sum(
            float(np.real(mb[a, a])) * np.asarray(extended.outcomes[a])
            for a in range(o)
        )
        out = max(out, linalg.max_abs(total - mb))
    return out


def jm_visibility(projectors, tol: float = 1e-6) -> float:
    """Joint-measurability visibility of dichotomic projector measurements.

    Maximizes v such that a parent POVM over outcome strings reproduces every
    marginal v P_x + (1 - v) Tr(P_x) I/d. The parent has 2^m outcomes for m
    settings; m is capped at 6.
    """
    projs = [linalg.assert_hermitian(p, what=f"projector {x}") for x, p in enumerate(projectors)]
    if not projs:
        raise ValidationError("need at least one projector")
    d = projs[0].shape[0]
    m = len(projs)
    if any(p.shape[0] != d for p in projs):
        raise ValidationError("projector dimension mismatch")
    if 2**m > 64:
        raise ValidationError(f"{m} settings exceed the 64-outcome parent cap")
    for x, p in enumerate(projs):
        if linalg.max_abs(p @ p - p) > 1e-9:
            raise ValidationError(f"projector {x} is not idempotent")

    n_par = 2**m
    # blocks: parent outcomes, then 1x1 visibility and slack (v + s = 1)
    program = solvers.HermitianProgram(
        [d] * n_par + [1, 1], real_blocks=(n_par, n_par + 1)
    )
    basis = linalg.HermitianBasis(d)
    program.set_objective(n_par, np.array([[1.0]]))
    program.add_constraint({n_par: np.array([[1.0]]), n_par + 1: np.array([[1.0]])}, 1.0)
    # completeness: sum_s G_s = I
    program.add_matrix_equality(
        {s: 1.0 for s in range(n_par)}, np.eye(d, dtype=complex), basis
    )
    # marginals: sum_{s: s_x = 0} G_s - v (P_x - Tr(P_x) I/d) = Tr(P_x) I/d
    for x, p in enumerate(projs):
        tr = float(np.real(np.trace(p)))
        coeffs: dict = {s: 1.0 for s in range(n_par) if not (s >> x) & 1}
        coeffs[n_par] = -(p - tr * np.eye(d) / d)
        program.add_matrix_equality(coeffs, tr * np.eye(d, dtype=complex) / d, basis)
    sol = program.solve(tol=tol)
    return float(sol.value)
