import numpy as np
import pytest

from conftest import SMALL_DQD, dqd_config
from qdot_ci.analysis import (
    HBAR_EV_FS,
    anticrossing_gap,
    charge_stability,
    coherent_oscillation,
    detuned_wells,
    detuning_sweep,
    distance_sweep,
    fit_anticrossing,
    ground_electron_number,
    run_point,
    separated_wells,
    spin_purity_violations,
)
from qdot_ci.config import parse_config
from qdot_ci.errors import PipelineError, ValidationError


def small_cfg(**overrides):
    params = dict(SMALL_DQD)
    params.update(overrides)
    return parse_config(dqd_config(**params))


# --------------------------------------------------------------------------
# coherent oscillation
# --------------------------------------------------------------------------


def test_resonant_oscillation_full_amplitude():
    delta = 0.01
    period = 2 * np.pi * HBAR_EV_FS / delta
    trace = coherent_oscillation(delta, 0.0, [0.0, period / 2, period])
    np.testing.assert_allclose(trace.p_right, [0.0, 1.0, 0.0], atol=1e-12)


def test_zero_coupling_never_tunnels():
    trace = coherent_oscillation(0.0, 0.02, np.linspace(0, 500, 51))
    assert np.all(trace.p_right == 0.0)


def test_detuned_amplitude_is_half_when_eps_equals_delta():
    delta = 0.004
    omega = np.sqrt(2) * delta
    t = np.pi * HBAR_EV_FS / omega  # first maximum
    assert coherent_oscillation(delta, delta, [t]).p_right[0] == pytest.approx(0.5, abs=1e-12)


def test_fully_degenerate_oscillation_is_zero():
    trace = coherent_oscillation(0.0, 0.0, [0.0, 1.0, 2.0])
    np.testing.assert_array_equal(trace.p_right, 0.0)


def test_negative_times_rejected():
    with pytest.raises(ValidationError):
        coherent_oscillation(0.01, 0.0, [-1.0, 0.0])


def test_oscillation_bounded():
    trace = coherent_oscillation(0.003, -0.007, np.linspace(0, 3000, 1001))
    amp = 0.003**2 / (0.003**2 + 0.007**2)
    assert trace.p_right.min() >= 0.0
    assert trace.p_right.max() <= amp + 1e-15


# --------------------------------------------------------------------------
# anticrossing fit
# --------------------------------------------------------------------------


def test_fit_recovers_exact_parameters():
    x = np.linspace(-0.1, 0.1, 21)
    fit = fit_anticrossing(x, anticrossing_gap(x, 0.012, 0.8))
    assert fit.tunnel_coupling_eV == pytest.approx(0.012, abs=1e-10)
    assert fit.lever_arm == pytest.approx(0.8, abs=1e-10)
    assert fit.center_eV == pytest.approx(0.0, abs=1e-10)
    assert fit.rms_residual_eV < 1e-12


def test_fit_recovers_offset_center():
    x = np.linspace(-0.1, 0.1, 31)
    fit = fit_anticrossing(x, anticrossing_gap(x, 0.005, 0.6, center=0.013))
    assert fit.center_eV == pytest.approx(0.013, abs=1e-10)
    assert fit.tunnel_coupling_eV == pytest.approx(0.005, abs=1e-10)


def test_fit_with_noise_within_five_percent():
    rng = np.random.default_rng(12345)
    x = np.linspace(-0.1, 0.1, 41)
    y = anticrossing_gap(x, 0.012, 0.8) * (1 + 0.01 * rng.standard_normal(x.size))
    fit = fit_anticrossing(x, y)
    assert fit.tunnel_coupling_eV == pytest.approx(0.012, rel=0.05)
    assert fit.lever_arm == pytest.approx(0.8, rel=0.05)


def test_fit_of_constant_gap():
    x = np.linspace(-0.1, 0.1, 11)
    fit = fit_anticrossing(x, np.full(11, 0.02))
    assert fit.tunnel_coupling_eV == pytest.approx(0.02, abs=1e-12)
    assert fit.lever_arm == pytest.approx(0.0, abs=1e-8)


def test_fit_input_validation():
    x = np.linspace(-0.1, 0.1, 4)
    with pytest.raises(ValidationError, match="at least 5"):
        fit_anticrossing(x, anticrossing_gap(x, 0.01, 1.0))
    x = np.linspace(0.01, 0.1, 9)
    with pytest.raises(ValidationError, match="sign change"):
        fit_anticrossing(x, anticrossing_gap(x, 0.01, 1.0))
    with pytest.raises(ValidationError):
        fit_anticrossing(np.linspace(-1, 1, 6), np.ones(5))


def test_fit_round_trip_through_asymmetry():
    x = np.linspace(-0.05, 0.05, 21)
    fit = fit_anticrossing(x, anticrossing_gap(x, 0.003, 1.2, 0.004))
    eps = fit.asymmetry(x)
    np.testing.assert_allclose(np.sqrt(fit.tunnel_coupling_eV**2 + eps**2), anticrossing_gap(x, 0.003, 1.2, 0.004), atol=1e-12)


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------


def test_detuned_wells_keep_mean_depth():
    cfg = small_cfg()
    w = detuned_wells(cfg.wells, 0.1)
    assert w.depth_a_eV == pytest.approx(0.35) and w.depth_b_eV == pytest.approx(0.25)
    assert w.detuning_eV == pytest.approx(0.1)
    with pytest.raises(ValidationError):
        detuned_wells(cfg.wells, 0.7)


def test_detuning_sweep_mirror_symmetry_and_localization():
    cfg = small_cfg()
    deltas = np.linspace(-0.2, 0.2, 11)
    sweep = detuning_sweep(cfg, deltas, 4, keep_points=True)
    assert len(sweep) == 11
    np.testing.assert_allclose(sweep.energies, sweep.energies[::-1], atol=1e-9)
    assert np.all(sweep.spin_squared[:, 0] < 1e-6)
    assert spin_purity_violations(sweep.spin_squared).size == 0
    # large detuning pulls both electrons into the deeper well
    na, nb = sweep.points[-1].half_space_occupation()
    assert na >= 1.5
    na, nb = sweep.points[0].half_space_occupation()
    assert nb >= 1.5
    # the smallest gap sits at zero detuning
    assert np.argmin(sweep.gaps) == 5


def test_distance_sweep_exchange_and_localization():
    cfg = small_cfg(curvature=0.08, depth=0.5)
    sweep = distance_sweep(cfg, [4.0, 6.0, 8.0, 10.0], 4, keep_points=True)
    J = sweep.exchange
    assert np.all(J > 0)
    assert np.all(np.diff(J) < 0)
    assert J[-1] <= 0.01 * J[0]
    same = [p.same_side_probability() for p in sweep.points]
    assert np.all(np.diff(same) < 0)


def test_distance_sweep_margin_enforced():
    cfg = small_cfg()
    lat = cfg.build_lattice()
    with pytest.raises(ValidationError, match="edge"):
        separated_wells(cfg.wells, lat, 17.0)
    with pytest.raises(ValidationError):
        distance_sweep(cfg, [4.0, 17.0], 2)


def test_sweeps_are_deterministic_and_consistent():
    cfg = small_cfg()
    a = detuning_sweep(cfg, [0.0], 4)
    b = distance_sweep(cfg, [6.0], 4)  # same geometry as the base config
    assert np.array_equal(a.energies, b.energies)
    c = detuning_sweep(cfg, [0.0, -0.05, 0.05], 4, threads=3)
    np.testing.assert_array_equal(c.values, [-0.05, 0.0, 0.05])
    assert np.array_equal(c.energies[1], a.energies[0])


def test_run_point_ground_state_singlet():
    r = run_point(small_cfg())
    assert r.spectrum.spin_squared[0] == pytest.approx(0.0, abs=1e-6)
    assert r.exchange_splitting > 0
    assert set(r.timings) == {"assemble", "eigensolve", "integrals", "ci"}


def test_sweep_levels_validated():
    with pytest.raises(ValidationError):
        detuning_sweep(small_cfg(), [0.0], 0)


def test_pipeline_error_names_the_failing_point():
    bad = parse_config(dqd_config(**SMALL_DQD, solver={"max_iterations": 1, "tol": 1e-15}))
    with pytest.raises(PipelineError) as info:
        detuning_sweep(bad, [0.0, 0.1], 2)
    assert "delta_eV=" in str(info.value)


# --------------------------------------------------------------------------
# charge stability
# --------------------------------------------------------------------------


@pytest.mark.parametrize(
    "e1, e2, mu, n",
    [(0.1, 0.3, 0.0, 0), (-0.1, 0.3, 0.0, 1), (-0.1, -0.5, 0.0, 2), (0.0, 0.5, 0.0, 0), (0.1, 0.3, 0.2, 2)],
)
def test_ground_electron_number(e1, e2, mu, n):
    assert ground_electron_number(e1, e2, mu) == n


def test_charge_stability_map():
    cfg = parse_config(dqd_config(**SMALL_DQD, coulomb={"onsite_U_eV": 0.1}))
    grid = np.linspace(0.0, 0.5, 6)
    stab = charge_stability(cfg, grid, grid, threads=2)
    n = stab.n_ground
    assert n[0, 0] == 0
    assert n[-1, -1] == 2
    assert np.all(np.diff(n, axis=0) >= 0)
    assert np.all(np.diff(n, axis=1) >= 0)
    assert np.array_equal(n, n.T)
    assert set(np.unique(n)) == {0, 1, 2}


def test_charge_stability_rejects_negative_depths():
    with pytest.raises(ValidationError):
        charge_stability(small_cfg(), [-0.1, 0.0], [0.0])
