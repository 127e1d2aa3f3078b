"""Closed-form classicality limits for all projective measurements.

The no-loss threshold is (H_d - 1)/(d - 1) with H_d the harmonic number.
With losses, the boundary of the classically simulable region is a parametric
curve (v(t), eta(t)) driven by the alternating binomial sums S_0 and S_1 of
the threshold parameter t.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .errors import ValidationError


class LossNoisePoint(NamedTuple):
    t: float
    visibility: float
    efficiency: float


def harmonic_number(n: int) -> float:
    """H_n = 1 + 1/2 + ... + 1/n, accumulated smallest term first."""
    if n < 1:
        raise ValidationError(f"harmonic number needs n >= 1, got {n}")
    return math.fsum(1.0 / k for k in range(n, 0, -1))


def classicality_threshold(d: int) -> float:
    """Exact visibility below which all d-dimensional bases admit a classical model."""
    if d < 2:
        raise ValidationError(f"threshold needs dimension >= 2, got {d}")
    return (harmonic_number(d) - 1.0) / (d - 1.0)


def alternating_binomial_sum(t: float, d: int, order: int) -> float:
    """sum_{m=order}^{min(floor(1/t), d)} (-1)^m / m^order C(d, m) (1 - t m)^(d-1).

    The m = 0 term (order 0 only) equals +1. Binomials are exact integers and
    the alternating terms are combined with compensated summation, so the
    cancellation for t <= 1/d (where the order-0 sum vanishes identically) is
    controlled. floor(1/t) is computed with a 1e-12 nudge so t = 1/m lands in
    the lower branch consistently.
    """
    if t <= 0.0:
        raise ValidationError(f"threshold parameter must be positive, got {t}")
    if order not in (0, 1):
        raise ValidationError(f"order must be 0 or 1, got {order}")
    top = min(int(math.floor(1.0 / t + 1e-12)), d)
    terms = []
    for m in range(order, top + 1):
        base = math.comb(d, m) * (1.0 - t * m) ** (d - 1)
        if m == 0:
            terms.append(base)
        else:
            terms.append(((-1) ** m) * base / m**order)
    return math.fsum(terms)


def loss_noise_curve(d: int, t_grid) -> list[LossNoisePoint]:
    """The parametric (visibility, efficiency) boundary for parameter values t.

    For t <= 1/d the curve sits at (classicality_threshold(d), 1); for
    t > 1/2 it simplifies to (t, d (1 - t)^(d-1)).
    """
    if d < 2:
        raise ValidationError(f"curve needs dimension >= 2, got {d}")
    points = []
    for t in t_grid:
        t = float(t)
        if not 0.0 < t <= 1.0:
            raise ValidationError(f"grid values must lie in (0, 1], got {t}")
        s0 = alternating_binomial_sum(t, d, 0)
        s1 = alternating_binomial_sum(t, d, 1)
        eff = 1.0 - s0
        if eff < 1e-12:
            raise ValidationError(f"singular point: efficiency vanishes at t = {t}")
        v = t - (s1 / eff + 1.0) / (d - 1.0)
        points.append(LossNoisePoint(t, v, eff))
    return points


def critical_efficiency(d: int, v: float) -> float:
    """d (1 - v)^(d-1), the loss threshold on the v > 1/2 branch of the curve."""
    if d < 2:
        raise ValidationError(f"needs dimension >= 2, got {d}")
    if not 0.0 <= v <= 1.0:
        raise ValidationError(f"visibility must be in [0, 1], got {v}")
    return d * (1.0 - v) ** (d - 1)
