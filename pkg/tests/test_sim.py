import math

import numpy as np
import pytest

from ampsde.burgers import BurgersParams, build_burgers_model
from ampsde.derive import AmplitudeSDE, derive_case1, derive_case2_1d
from ampsde.errors import ConfigError, GridAlignmentError
from ampsde.noise import NoiseSource
from ampsde.sim import (
    SimConfig,
    build_case2_approximation,
    fast_grid,
    ou_exact_step,
    run_case1_ensemble,
    run_case2_ensemble,
    simulate_amplitude,
    simulate_spde,
)
from ampsde.spectral import ModelSpec, SparseBilinear, kernel_embed


def linear_model(n_modes=8, nu=0.0):
    """Diagonal model with the quadratic interaction switched off."""
    k = np.arange(1, n_modes + 1)
    return ModelSpec(n=1, lambdas=(k * k - 1).astype(float),
                     L=nu * np.eye(n_modes),
                     B=SparseBilinear.from_entries(n_modes, []),
                     alphas=np.zeros(n_modes),
                     gprime=np.zeros((n_modes, 3, n_modes)), alpha_exp=0.25)


def test_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(epsilon=0.0)
    with pytest.raises(ConfigError):
        SimConfig(epsilon=0.7)
    with pytest.raises(ConfigError):
        SimConfig(epsilon=0.1, dt_fast_factor=3.0)
    with pytest.raises(ConfigError):
        SimConfig(epsilon=0.1, kappa=0.2)


def test_fast_grid_alignment():
    model = linear_model()
    cfg = SimConfig(epsilon=0.1, t0=1.0, dt_slow=0.01)
    delta_t, m_per, n_slow = fast_grid(model, cfg)
    assert n_slow == 100
    assert m_per * delta_t * cfg.epsilon ** 2 == pytest.approx(cfg.dt_slow,
                                                               rel=1e-12)
    assert delta_t * model.lambdas[-1] <= cfg.dt_fast_factor + 1e-12
    with pytest.raises(GridAlignmentError):
        fast_grid(model, SimConfig(epsilon=0.1, t0=1.0, dt_slow=0.3))


def test_zero_fixed_point():
    model = linear_model()
    cfg = SimConfig(epsilon=0.1, t0=0.2, dt_slow=0.02, n_paths=1)
    traj = simulate_spde(model, cfg, np.zeros(8))
    np.testing.assert_array_equal(traj.states, np.zeros_like(traj.states))


def test_linear_mode_decay_is_exact():
    # with B = 0 and no noise the scheme is the exact diagonal flow
    model = linear_model()
    delta = 1e-3
    u0 = np.zeros(8)
    u0[1] = delta
    cfg = SimConfig(epsilon=0.1, t0=0.5, dt_slow=0.05, n_paths=1, kappa=0.1)
    traj = simulate_spde(model, cfg, u0)
    exact = delta * np.exp(-3.0 * traj.times / cfg.epsilon ** 2)
    np.testing.assert_allclose(traj.states[:, 1], exact, rtol=1e-12,
                               atol=1e-300)


def test_determinism_bit_identical():
    model = build_burgers_model(BurgersParams(nu=0.2, alphas=(0.1, 0.0, 0.1),
                                              n_modes=8))
    sde = derive_case1(model)
    cfg = SimConfig(epsilon=0.1, t0=0.1, dt_slow=0.01, n_paths=2, seed=5)
    u0 = 0.1 * kernel_embed(model, [0.3])
    a = run_case1_ensemble(model, sde, cfg, u0, [0.3])
    b = run_case1_ensemble(model, sde, cfg, u0, [0.3])
    np.testing.assert_array_equal(a.u, b.u)
    np.testing.assert_array_equal(a.x, b.x)


def test_guard_fires_and_freezes():
    # huge drift pushes the kernel mode over eps^-kappa quickly
    model = build_burgers_model(BurgersParams(nu=40.0, alphas=(0.0, 0.0, 0.0),
                                              n_modes=8))
    sde = derive_case1(model)
    cfg = SimConfig(epsilon=0.1, t0=1.0, dt_slow=0.05, n_paths=1, seed=1)
    u0 = 0.1 * kernel_embed(model, [0.5])
    ens = run_case1_ensemble(model, sde, cfg, u0, [0.5])
    assert not math.isnan(ens.stopped_at[0])
    stop_idx = int(round(ens.stopped_at[0] / cfg.dt_slow))
    # frozen after the stop: identical recorded states
    np.testing.assert_array_equal(ens.u[0, stop_idx], ens.u[0, -1])
    traj = simulate_spde(model, cfg, u0)
    assert traj.stopped_at == ens.stopped_at[0]


def test_ou_exact_step_statistics(rng):
    lam, alpha, eps = 8.0, 1.0, 0.1
    z = np.zeros(100000)
    for _ in range(20):
        z = ou_exact_step(z, lam, alpha, eps, 0.5, rng.standard_normal(z.size))
    target = alpha ** 2 / (2 * lam)
    assert z.var() == pytest.approx(target, rel=0.02)
    assert abs(z.mean()) < 4 * math.sqrt(target / z.size)
    # pure decay without noise
    out = ou_exact_step(np.array([2.0]), lam, 0.0, eps, 0.01, np.array([3.0]))
    assert out[0] == pytest.approx(2.0 * math.exp(-lam * 0.01 / eps ** 2))
    with pytest.raises(ValueError):
        ou_exact_step(0.0, -1.0, 1.0, 0.1, 0.1, 0.0)


def test_ou_exact_step_matches_long_run_distribution(rng):
    # iterated kernel against the analytic Gaussian law, 3 sigma bands
    lam, alpha, eps, dT = 3.0, 0.7, 0.2, 0.25
    n = 100000
    z = np.full(n, 0.3)
    for _ in range(25):
        z = ou_exact_step(z, lam, alpha, eps, dT, rng.standard_normal(n))
    var_t = alpha ** 2 / (2 * lam)
    se_var = var_t * math.sqrt(2.0 / (n - 1))
    assert abs(z.var(ddof=1) - var_t) < 3 * se_var
    se_mean = math.sqrt(var_t / n)
    assert abs(z.mean()) < 3 * se_mean


def test_amplitude_logistic_fixed_point():
    sde = AmplitudeSDE(dim=1, drift_lin=[[1.0]],
                       drift_cubic=np.full((1, 1, 1, 1), -1.0),
                       diff_add=[[0.0]], diff_mult=[[[0.0]]])
    cfg = SimConfig(epsilon=0.1, t0=8.0, dt_slow=0.002, n_paths=1, kappa=0.1)
    _, states, _ = simulate_amplitude(sde, cfg, [0.5], guard=False)
    assert states[0, -1, 0] == pytest.approx(1.0, abs=1e-3)


def test_amplitude_brownian_variance():
    sde = AmplitudeSDE(dim=1, drift_lin=[[0.0]],
                       drift_cubic=np.zeros((1, 1, 1, 1)),
                       diff_add=[[0.7]], diff_mult=[[[0.0]]])
    cfg = SimConfig(epsilon=0.1, t0=1.0, dt_slow=0.01, n_paths=4000, seed=2,
                    kappa=0.1)
    _, states, _ = simulate_amplitude(sde, cfg, [0.0], guard=False)
    end = states[:, -1, 0]
    target = 0.7 ** 2
    assert end.var() == pytest.approx(target, rel=0.1)


def test_amplitude_em_strong_self_convergence():
    """Halving the step roughly halves the strong error of the
    multiplicative-noise Euler-Maruyama step (order ~1/2 against a much
    finer reference, so error ratio ~2 between dt and dt/4)."""
    sde = AmplitudeSDE(dim=1, drift_lin=[[0.5]],
                       drift_cubic=np.zeros((1, 1, 1, 1)),
                       diff_add=[[0.0]], diff_mult=[[[0.8]]])
    seed, P, t0 = 11, 400, 1.0
    fine = 0.00025
    gens = [NoiseSource(seed).generator(p) for p in range(P)]
    n_fine = int(t0 / fine)
    dW = np.stack([g.standard_normal((n_fine, 1)) for g in gens]) * math.sqrt(fine)

    def em(dt):
        step = int(round(dt / fine))
        inc = dW.reshape(P, n_fine // step, step, 1).sum(axis=2)
        cfg = SimConfig(epsilon=0.1, t0=t0, dt_slow=dt, n_paths=P, kappa=0.1)
        _, states, _ = simulate_amplitude(sde, cfg, [1.0], increments=inc,
                                          guard=False)
        return states[:, -1, 0]

    ref = em(fine)
    errs = [np.mean(np.abs(em(dt) - ref)) for dt in (0.04, 0.01)]
    ratio = errs[0] / errs[1]
    assert 1.4 < ratio < 3.0


def test_case2_approximation_assembly():
    model = build_burgers_model(BurgersParams(nu=0.3, alphas=(0.0, 0.0, 0.5),
                                              n_modes=8, noise_scaling="eps"))
    eps = 0.1
    times = np.linspace(0.0, 1.0, 11)
    y = np.linspace(0.5, 0.7, 11)
    z = np.zeros((11, 3))
    psi0 = np.zeros(8)
    psi0[2] = 0.4
    fields = build_case2_approximation(model, times, y, psi0, z, eps)
    # t = 0: the split of the initial condition is reproduced exactly
    np.testing.assert_allclose(fields[0, 0], eps * 0.5, rtol=1e-14)
    np.testing.assert_allclose(fields[0, 2], eps * 0.4, rtol=1e-14)
    # the initial stable part decays at the mode rate (lam_3 = 8)
    decay = fields[:, 2] / (eps * 0.4)
    np.testing.assert_allclose(decay, np.exp(-8.0 * times / eps ** 2),
                               rtol=1e-12, atol=1e-300)
    # pure kernel path when psi0 = 0 and z = 0
    bare = build_case2_approximation(model, times, y, np.zeros(8), z, eps)
    np.testing.assert_allclose(bare[:, 0], eps * y, rtol=1e-14)
    assert np.all(bare[:, 1:] == 0.0)
    with pytest.raises(GridAlignmentError):
        build_case2_approximation(model, times, y[:-1], psi0, z, eps)


def test_case2_driver_initial_condition_and_shapes():
    model = build_burgers_model(BurgersParams(nu=0.3, alphas=(0.0, 0.0, 0.5),
                                              n_modes=8, noise_scaling="eps"))
    c2 = derive_case2_1d(model)
    cfg = SimConfig(epsilon=0.1, t0=0.1, dt_slow=0.01, n_paths=3, seed=4)
    psi0 = np.zeros(8)
    psi0[2] = 0.4
    ens = run_case2_ensemble(model, c2, cfg, [0.5], psi0)
    assert ens.u.shape == (3, 11, 8)
    np.testing.assert_allclose(ens.u[:, 0, 0], 0.1 * 0.5)
    np.testing.assert_allclose(ens.u[:, 0, 2], 0.1 * 0.4)
    np.testing.assert_allclose(ens.y[:, 0], 0.5)


def test_stopping_rare_at_default_parameters():
    model = build_burgers_model(BurgersParams(nu=0.2, alphas=(0.1, 0.0, 0.1),
                                              n_modes=16))
    sde = derive_case1(model)
    cfg = SimConfig(epsilon=0.1, t0=1.0, dt_slow=0.02, n_paths=100, seed=31)
    u0 = 0.1 * kernel_embed(model, [0.3])
    ens = run_case1_ensemble(model, sde, cfg, u0, [0.3])
    assert np.isnan(ens.stopped_at).mean() > 0.99
