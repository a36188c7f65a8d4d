import math

import numpy as np
import pytest
from scipy import integrate

from mirrornoise.kernels import NoiseModel, thermal_factor
from mirrornoise.params import HBAR, KB
from mirrornoise.simulate import (
    SimConfig,
    SimulationError,
    Trajectory,
    coefficients,
    estimate_psd,
    integrate as run_trajectory,
    read_trajectory,
    simulate_spectrum,
    simulated_model_spectrum,
    synthesize_noise,
    write_trajectory,
)
from mirrornoise.steady_state import SteadyState

SMALL = SimConfig(n_steps=40_000, n_traj=8, welch_segment=4_000, burn_in=0.05)


def series(x, dt):
    x = np.asarray(x, dtype=float)
    z = np.zeros_like(x)
    return Trajectory(t=dt * np.arange(1, x.size + 1), q=z, p=z, X=z, Y=z, Y_out=x)


def undriven(p):
    return SteadyState(B_st=0.0, q_st=0.0, Delta=0.0, stability="stable", omega_0=p.omega_c)


# ----------------------------------------------------------- noise synthesis


def test_synthesized_white_variance():
    n, dt, S0 = 1024, 0.01, 3.0
    var = np.array([np.var(synthesize_noise(lambda w: S0 + 0 * w, n, dt, s)) for s in range(100)])
    target = S0 / dt
    assert abs(var.mean() - target) < 3 * var.std(ddof=1) / 10


def test_synthesized_zero_target():
    np.testing.assert_array_equal(synthesize_noise(lambda w: 0 * w, 64, 0.1, 0), 0.0)


@pytest.mark.parametrize("target", [lambda w: -1 + 0 * w, lambda w: np.exp(w), lambda w: np.nan + 0 * w])
def test_synthesize_rejects_bad_targets(target):
    with pytest.raises(ValueError):
        synthesize_noise(target, 64, 0.1, 0)


def test_synthesize_is_seeded():
    f = lambda w: 1 / (1 + w**2)
    a = synthesize_noise(f, 256, 0.1, 5)
    np.testing.assert_array_equal(a, synthesize_noise(f, 256, 0.1, 5))
    assert not np.array_equal(a, synthesize_noise(f, 256, 0.1, 6))


def test_synthesized_thermal_target_reproduced(sim_params):
    # colored zero-point-dominated density, rescaled to frequencies of order 1
    model = NoiseModel.exact(4.2)
    wS = 1e12
    target = lambda w: thermal_factor(wS * w, model) / (HBAR * wS)
    n, dt, seg = 8192, 0.05, 512
    trajs = [series(synthesize_noise(target, n, dt, s), dt) for s in range(200)]
    est = estimate_psd(trajs, SimConfig(n_steps=n, welch_segment=seg, burn_in=0.0))
    band = (est.omega_grid > 0.2) & (est.omega_grid < 0.8 * math.pi / dt)
    ratio = est.S_hat[band] / target(est.omega_grid[band])
    assert math.sqrt(np.mean((ratio - 1) ** 2)) < 0.05


# ----------------------------------------------------------- estimator


def test_welch_unit_white_reads_one():
    dt, n = 0.01, 200_000
    x = np.random.default_rng(1).standard_normal(n) / math.sqrt(dt)
    est = estimate_psd([series(x, dt)], SimConfig(n_steps=n, welch_segment=1000, burn_in=0.0))
    inner = est.S_hat[1:-1]
    assert abs(inner.mean() - 1) < 3 * inner.std() / math.sqrt(inner.size)
    assert est.n_traj == 1 and est.n_segments == 399
    assert np.all(est.stderr[1:-1] > 0)


def test_welch_parseval_sinusoid():
    dt, n, A = 0.01, 100_000, 2.0
    t = dt * np.arange(n)
    x = A * np.sin(2 * math.pi * 7.3 * t)
    est = estimate_psd([series(x, dt)], SimConfig(n_steps=n, welch_segment=5000, burn_in=0.0))
    dw = est.omega_grid[1] - est.omega_grid[0]
    total = (2 * est.S_hat.sum() - est.S_hat[0]) * dw / (2 * math.pi)
    assert total == pytest.approx(A**2 / 2, rel=0.02)


def test_segment_longer_than_series():
    with pytest.raises(ValueError):
        estimate_psd([series(np.zeros(100), 0.1)], SimConfig(n_steps=1000, welch_segment=200, burn_in=0.0))


# ----------------------------------------------------------- configuration


@pytest.mark.parametrize(
    "changes",
    [dict(dt=0.0), dict(n_steps=1), dict(n_traj=0), dict(seed=-1), dict(seed=2**64),
     dict(burn_in=1.0), dict(welch_segment=1), dict(welch_segment=10**6),
     dict(noise_scale=-1.0), dict(workers=0)],
)
def test_sim_config_validation(changes):
    with pytest.raises(ValueError):
        SMALL.replace(**changes)


def test_step_guard_and_detuning(sim_params, sim_op):
    from dataclasses import replace

    model = NoiseModel.exact(sim_params.T)
    with pytest.raises(ValueError, match="too coarse"):
        run_trajectory(sim_params, sim_op, model, SMALL.replace(dt=0.05))
    with pytest.raises(ValueError, match="zero-detuning"):
        run_trajectory(sim_params, replace(sim_op, Delta=1e3), model, SMALL)


def test_non_finite_state_rejected(sim_params, sim_op, monkeypatch):
    import mirrornoise.simulate as sim

    def poisoned(target, n, dt, seed):
        u = np.zeros(n)
        u[n // 2] = np.nan
        return u

    monkeypatch.setattr(sim, "synthesize_noise", poisoned)
    with pytest.raises(SimulationError, match="non-finite"):
        run_trajectory(sim_params, sim_op, NoiseModel.exact(sim_params.T), SMALL)


# ----------------------------------------------------------- dynamics


def test_shot_only_is_flat(sim_params):
    est = simulate_spectrum(sim_params, undriven(sim_params), NoiseModel.exact(sim_params.T), SMALL)
    inner = est.S_hat[1:-1]
    assert abs(inner.mean() - 1) < 3 * inner.std() / math.sqrt(inner.size)
    assert np.mean(np.abs(inner - 1) > 3 * est.stderr[1:-1]) < 0.03


def test_thermal_position_variance(sim_params, sim_op):
    # classical white force alone: equipartition kT / (m wS^2)
    cfg = SimConfig(n_steps=400_000, n_traj=20, welch_segment=2, burn_in=0.05, vacuum=False)
    model = NoiseModel.classical(sim_params.T)
    var = [np.var(run_trajectory(sim_params, undriven(sim_params), model, cfg, i).q) for i in range(cfg.n_traj)]
    expected = KB * sim_params.T / (sim_params.m * sim_params.omega_S**2)
    assert np.mean(var) == pytest.approx(expected, rel=0.05)


def test_thermal_variance_linear_in_temperature(sim_params):
    cfg = SimConfig(n_steps=20_000, n_traj=1, welch_segment=2, vacuum=False)
    op = undriven(sim_params)
    q1 = run_trajectory(sim_params, op, NoiseModel.classical(1e-6), cfg).q
    q2 = run_trajectory(sim_params, op, NoiseModel.classical(2e-6), cfg).q
    assert np.var(q2) / np.var(q1) == pytest.approx(2.0, rel=1e-12)


def test_deterministic_across_workers(sim_params, sim_op):
    model = NoiseModel.exact(sim_params.T)
    a = simulate_spectrum(sim_params, sim_op, model, SMALL)
    b = simulate_spectrum(sim_params, sim_op, model, SMALL.replace(workers=2))
    np.testing.assert_array_equal(a.S_hat, b.S_hat)
    np.testing.assert_array_equal(a.stderr, b.stderr)
    c = simulate_spectrum(sim_params, sim_op, model, SMALL.replace(seed=1))
    assert not np.array_equal(a.S_hat, c.S_hat)


def test_linear_in_noise_amplitude(sim_params, sim_op):
    model = NoiseModel.exact(sim_params.T)
    a = run_trajectory(sim_params, sim_op, model, SMALL)
    b = run_trajectory(sim_params, sim_op, model, SMALL.replace(noise_scale=2.0))
    np.testing.assert_allclose(b.Y_out, 2 * a.Y_out, rtol=1e-9, atol=1e-12 * np.abs(a.Y_out).max())
    np.testing.assert_allclose(b.q, 2 * a.q, rtol=1e-9, atol=1e-12 * np.abs(a.q).max())


def test_stationary_halves(sim_params, sim_op):
    model = NoiseModel.exact(sim_params.T)
    cfg = SMALL.replace(n_traj=1, n_steps=400_000)
    tr = run_trajectory(sim_params, sim_op, model, cfg)
    half = tr.q.size // 2
    v1, v2 = np.var(tr.q[:half]), np.var(tr.q[half:])
    assert v1 == pytest.approx(v2, rel=0.15)


@pytest.mark.parametrize("adiabatic", [False, True])
def test_ensemble_matches_model_spectrum(sim_params, sim_op, adiabatic):
    model = NoiseModel.exact(sim_params.T)
    cfg = SimConfig(n_steps=200_000, n_traj=24, welch_segment=20_000, adiabatic=adiabatic)
    est = simulate_spectrum(sim_params, sim_op, model, cfg)
    band = est.band(0.5 * sim_params.omega_S, 1.5 * sim_params.omega_S)
    ref = simulated_model_spectrum(est.omega_grid[band], sim_params, sim_op, model, cfg)
    z = (est.S_hat[band] - ref) / est.stderr[band]
    assert np.mean(np.abs(z) > 3) < 0.05
    assert math.sqrt(np.mean(((est.S_hat[band] - ref) / ref) ** 2)) < 0.05


def test_full_model_matches_closed_form(sim_params, sim_op):
    from mirrornoise.spectrum import spectrum_at

    model = NoiseModel.exact(sim_params.T)
    w = np.linspace(0.01, 5, 300) * sim_params.omega_S
    np.testing.assert_allclose(simulated_model_spectrum(w, sim_params, sim_op, model),
                               spectrum_at(w, sim_params, sim_op, model).total, rtol=1e-10)


def test_adiabatic_model_converges_for_fast_cavity(sim_params):
    from mirrornoise.steady_state import solve_resonant

    w = np.linspace(0.5, 1.5, 101) * sim_params.omega_S
    errs = []
    for factor in (10, 100, 1000):
        p = sim_params.replace(gamma_c=factor * sim_params.omega_S, P=sim_params.P * factor)
        op = solve_resonant(p)
        model = NoiseModel.exact(p.T)
        full = simulated_model_spectrum(w, p, op, model)
        adi = simulated_model_spectrum(w, p, op, model, SimConfig(n_steps=2, welch_segment=2, burn_in=0.0,
                                                                 adiabatic=True))
        errs.append(np.max(np.abs(adi / full - 1)))
    assert errs[2] < 1e-4
    assert errs[0] > errs[1] > errs[2]


def test_coefficients_are_nondimensional(sim_params, sim_op):
    c = coefficients(sim_params, sim_op, NoiseModel.exact(sim_params.T))
    assert c.Gamma == pytest.approx(0.2)
    assert c.kappa == pytest.approx(4.7e5 / 1.3e5)
    assert 0.1 < c.a_x < 10 and 0.1 < c.g_y < 10


def test_trajectory_dump_round_trip(tmp_path, sim_params, sim_op):
    tr = run_trajectory(sim_params, sim_op, NoiseModel.exact(sim_params.T), SMALL.replace(n_steps=1000, welch_segment=10))
    path = tmp_path / "traj.bin"
    write_trajectory(path, tr)
    assert path.stat().st_size == 6 * 8 * tr.t.size
    back = read_trajectory(path)
    for name in ("t", "q", "p", "X", "Y", "Y_out"):
        np.testing.assert_array_equal(getattr(back, name), getattr(tr, name))
    raw = np.fromfile(path, dtype="<f8")
    np.testing.assert_array_equal(raw[: tr.t.size], tr.t)


def test_trajectory_units(sim_params, sim_op):
    tr = run_trajectory(sim_params, sim_op, NoiseModel.exact(sim_params.T), SMALL.replace(n_steps=1000, welch_segment=10))
    assert tr.dt == pytest.approx(SMALL.dt / sim_params.omega_S)
    assert tr.t.size == 1000 - SMALL.replace(n_steps=1000, welch_segment=10).burn_steps
