import numpy as np
import pytest

from classim import linalg, thresholds as th
from classim.errors import ValidationError


def test_harmonic_small():
    assert th.harmonic_number(1) == 1.0
    assert th.harmonic_number(2) == 1.5
    assert abs(th.harmonic_number(7) - 363.0 / 140.0) <= 1e-15
    with pytest.raises(ValidationError):
        th.harmonic_number(0)


def test_threshold_values():
    assert th.classicality_threshold(2) == 0.5
    assert abs(th.classicality_threshold(7) - 0.2655) <= 5e-5
    with pytest.raises(ValidationError):
        th.classicality_threshold(1)


def test_threshold_asymptote():
    # gamma - 1 + log d over d, within 2 percent at d = 100
    gamma = 0.5772156649015329
    exact = th.classicality_threshold(100)
    asym = (gamma - 1.0 + np.log(100)) / 100.0
    assert abs(exact / asym - 1.0) <= 0.02


def test_sum_vanishes_without_loss():
    for d in (2, 3, 5, 7):
        for t in (0.01, 1.0 / d / 2, 1.0 / d):
            assert abs(th.alternating_binomial_sum(t, d, 0)) <= 1e-12


def test_sum_order_one_closed_form():
    for d in (2, 3, 5, 7):
        for t in (0.02, 1.0 / d):
            s1 = th.alternating_binomial_sum(t, d, 1)
            expect = (d - 1) * t - th.harmonic_number(d)
            assert abs(s1 - expect) <= 1e-12


def test_sum_direct_two_term():
    assert abs(th.alternating_binomial_sum(0.75, 2, 0) - 0.5) <= 1e-15
    assert abs(th.alternating_binomial_sum(0.75, 2, 1) + 0.5) <= 1e-15


def test_curve_endpoints():
    (p,) = th.loss_noise_curve(2, [0.75])
    assert abs(p.visibility - 0.75) <= 1e-12 and abs(p.efficiency - 0.5) <= 1e-12
    (q,) = th.loss_noise_curve(3, [1.0 / 3.0])
    assert abs(q.visibility - 5.0 / 12.0) <= 1e-12 and abs(q.efficiency - 1.0) <= 1e-12


def test_critical_efficiency():
    assert abs(th.critical_efficiency(4, 0.8) - 4 * 0.2**3) <= 1e-15


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_curve_high_t_branch(d):
    for t in (0.55, 0.75, 0.9):
        (p,) = th.loss_noise_curve(d, [t])
        assert abs(p.visibility - t) <= 1e-10
        assert abs(p.efficiency - d * (1 - t) ** (d - 1)) <= 1e-10


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_curve_low_t_branch(d):
    for t in (0.3 / d, 1.0 / d):
        (p,) = th.loss_noise_curve(d, [t])
        assert abs(p.visibility - th.classicality_threshold(d)) <= 1e-10
        assert abs(p.efficiency - 1.0) <= 1e-10


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_curve_monotone_and_continuous(d):
    # upper end 0.99: beyond that the d = 7 efficiency underflows the
    # singular-point guard (eta = 7 (1-t)^6 < 1e-12)
    grid = np.linspace(1.0 / d + 1e-6, 0.99, 1000)
    pts = th.loss_noise_curve(d, grid)
    v = np.array([p.visibility for p in pts])
    eta = np.array([p.efficiency for p in pts])
    assert np.all(np.diff(eta) <= 1e-12)
    assert np.all(np.diff(v) >= -1e-12)
    fine = np.arange(0.2, 0.99, 1e-4)
    fpts = th.loss_noise_curve(d, fine)
    fv = np.array([p.visibility for p in fpts])
    fe = np.array([p.efficiency for p in fpts])
    assert np.max(np.abs(np.diff(fv))) < 1e-2
    assert np.max(np.abs(np.diff(fe))) < 1e-2


def test_curve_rejects_singular_point():
    with pytest.raises(ValidationError, match="singular"):
        th.loss_noise_curve(3, [1.0])


def test_threshold_consistent_with_monte_carlo():
    for d in (2, 3, 5):
        rng = np.random.default_rng(9000 + d)
        mean, se = linalg.max_component_statistic(d, 100_000, rng)
        implied = (d * mean - 1.0) / (d - 1.0)
        spread = 3 * se * d / (d - 1.0)
        assert abs(implied - th.classicality_threshold(d)) <= spread
