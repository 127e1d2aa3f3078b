import numpy as np
import pytest

from classim import linalg, measurements as ms, models, nondisturbance as nd
from classim.errors import ValidationError
from classim.rng import substream

from conftest import rand_povm


def pair_model():
    z, x = ms.mub_unitaries(2, 2)
    return models.pair_half_noise_model(z, x)


def trine_scenario():
    tr = ms.trine()
    return nd.SequentialScenario(
        weights=np.array([1.0]),
        first_devices=[tr.outcomes],
        second_devices=[tr.outcomes],
        target_first=tr.outcomes,
        target_second=tr.outcomes,
    )


def test_scenario_from_pair_model():
    model = pair_model()
    scenario = nd.scenario_from_model(model, 0, 1)
    assert len(scenario.weights) == 2
    target = ms.depolarize(models.pair_target_set(*ms.mub_unitaries(2, 2)), 0.5)
    assert linalg.max_abs(np.asarray(scenario.target_first) - target.table[0]) <= 1e-12
    assert linalg.max_abs(np.asarray(scenario.target_second) - target.table[1]) <= 1e-12


def test_scenario_validates_averaging():
    tr = ms.trine()
    other = rand_povm(2, 3, np.random.default_rng(5))
    with pytest.raises(ValidationError, match="average"):
        nd.SequentialScenario(
            weights=np.array([1.0]),
            first_devices=[tr.outcomes],
            second_devices=[tr.outcomes],
            target_first=other,
            target_second=tr.outcomes,
        )


def test_luders_pair_model_nondisturbing():
    scenario = nd.scenario_from_model(pair_model(), 0, 1)
    assert nd.luders_residual(scenario) <= 1e-7


def test_luders_commuting_projective_zero():
    basis = [np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)]
    scenario = nd.SequentialScenario(
        weights=np.array([1.0]),
        first_devices=[basis],
        second_devices=[basis],
        target_first=basis,
        target_second=basis,
    )
    assert nd.luders_residual(scenario) <= 1e-12


def test_luders_trine_self_disturbance():
    assert nd.luders_residual(trine_scenario()) > 0.05


def test_luders_symmetric_under_relabeling():
    model = pair_model()
    scenario = nd.scenario_from_model(model, 0, 1)
    flipped = nd.SequentialScenario(
        weights=scenario.weights[::-1].copy(),
        first_devices=scenario.first_devices[::-1],
        second_devices=scenario.second_devices[::-1],
        target_first=scenario.target_first,
        target_second=scenario.target_second,
    )
    assert abs(nd.luders_residual(scenario) - nd.luders_residual(flipped)) <= 1e-12


def test_jm_parent_pair_model():
    model = pair_model()
    parent, residuals = nd.jm_parent(model)
    assert len(parent.elements) == 4  # 2 devices x 2 outcomes
    assert linalg.max_abs(sum(parent.elements) - np.eye(2)) <= 1e-12
    assert residuals.max() <= 1e-12


def test_jm_parent_single_device():
    u = np.eye(2, dtype=complex)
    response = np.zeros((1, 1, 2, 2))
    response[0, 0, 0, 0] = 1.0
    response[0, 0, 1, 1] = 1.0
    model = models.ClassicalModel(
        dim=2, unitaries=[u], weights=np.array([1.0]), response=response, visibility=1.0
    )
    parent, residuals = nd.jm_parent(model)
    assert linalg.max_abs(np.asarray(parent.elements) - np.array([np.diag([1.0, 0]), np.diag([0, 1.0])])) <= 1e-12
    assert residuals.max() <= 1e-12


def test_jm_parent_lp_model_against_target():
    mset = ms.mub_set(2, 3)
    rng = substream(77, "ensemble")
    ens = ms.mub_unitaries(2, 3) + [linalg.haar_unitary(2, rng) for _ in range(60)]
    v, model = models.search_classical_model(mset, ens)
    parent, residuals = nd.jm_parent(model, mset)
    assert residuals.max() <= 1e-7


def test_classical_model_implies_luders_nondisturbance():
    # hierarchy on an LP output rather than the hand-built pair model
    mset = ms.mub_set(2, 2)
    rng = substream(78, "ensemble")
    ens = ms.mub_unitaries(2, 2) + [linalg.haar_unitary(2, rng) for _ in range(40)]
    _, model = models.search_classical_model(mset, ens)
    scenario = nd.scenario_from_model(model, 0, 1)
    assert nd.luders_residual(scenario) <= 1e-7


def test_extended_instrument_trine():
    assert nd.extended_instrument_residual(ms.trine()) <= 1e-12


def test_extended_instrument_basis():
    basis = ms.MeasurementSet([[np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]])
    assert nd.extended_instrument_residual(basis.setting(0)) <= 1e-14


def test_extended_instrument_qubit_sic():
    povm = ms.qubit_sic().setting(0)
    assert nd.extended_instrument_residual(povm) <= 1e-12


def test_extended_instrument_random_povms():
    rng = np.random.default_rng(17)
    for _ in range(20):
        povm = ms.Povm(rand_povm(2, int(rng.integers(2, 5)), rng))
        assert nd.extended_instrument_residual(povm) <= 1e-12


def test_jm_visibility_single_setting():
    proj = np.diag([1.0, 0.0]).astype(complex)
    assert abs(nd.jm_visibility([proj]) - 1.0) <= 1e-6


def test_jm_visibility_commuting():
    p1 = np.diag([1.0, 0.0, 0.0]).astype(complex)
    p2 = np.diag([1.0, 1.0, 0.0]).astype(complex)
    assert abs(nd.jm_visibility([p1, p2]) - 1.0) <= 1e-6


def test_jm_visibility_two_mubs():
    projs = [np.outer(u[:, 0], u[:, 0].conj()) for u in ms.mub_unitaries(2, 2)]
    assert abs(nd.jm_visibility(projs) - 1 / np.sqrt(2)) <= 1e-4


def test_jm_visibility_rejects_non_projector():
    with pytest.raises(ValidationError, match="idempotent"):
        nd.jm_visibility([0.5 * np.eye(2)])


def test_jm_visibility_setting_cap():
    proj = np.diag([1.0, 0.0]).astype(complex)
    with pytest.raises(ValidationError, match="64"):
        nd.jm_visibility([proj] * 7)
