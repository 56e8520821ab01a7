"""End-to-end validation of the averaged drift on an exactly solvable model.

Two modes: the kernel amplitude is driven only through the quadratic
coupling B(e1, e2) = b e1 with an Ornstein-Uhlenbeck stable mode, so

    phi(T) = phi(0) * exp(2 b eps^{-1} int_0^T Z ds),

a lognormal with E[phi(T)] = phi(0) exp(s1 T), s1 = 2 b^2 a^2 / lam^2,
and E[log phi(T)] = log phi(0).  Simulating the *full* system therefore
pins down both the magnitude and the sign of the averaged linear drift
and, through the martingale property s1 = s3/2, the diffusion form.
"""

import math

import numpy as np
import pytest

from ampsde.derive import derive_case2_1d
from ampsde.sim import SimConfig, run_case2_ensemble

from _oracles import toy_two_mode_model


@pytest.mark.slow
def test_full_system_confirms_averaged_drift_sign():
    b, alpha, lam = 0.7, 0.5, 2.0
    model = toy_two_mode_model(b, alpha, lam)
    c2 = derive_case2_1d(model)
    s1 = c2.constants["linear_drift"]
    assert s1 == pytest.approx(2 * b * b * alpha * alpha / lam ** 2)

    cfg = SimConfig(epsilon=0.05, t0=1.0, dt_slow=0.01, dt_fast_factor=0.02,
                    seed=414, kappa=0.1, n_paths=2000)
    ens = run_case2_ensemble(model, c2, cfg, [0.3], np.zeros(2))
    ok = np.isnan(ens.stopped_at)
    assert ok.mean() > 0.97
    phi = ens.u[ok, -1, 0] / cfg.epsilon

    growth = phi.mean() / 0.3
    se = phi.std(ddof=1) / 0.3 / math.sqrt(ok.sum())
    predicted = math.exp(s1 * cfg.t0)
    wrong_sign = math.exp((2 * 0.3 - s1) * cfg.t0)  # bare drift minus corr.
    assert abs(growth - predicted) < max(4 * se, 0.05 * predicted)
    assert abs(growth - math.exp(-s1 * cfg.t0)) > 10 * se

    logs = np.log(np.abs(phi) / 0.3)
    se_log = logs.std(ddof=1) / math.sqrt(ok.sum())
    assert abs(logs.mean()) < max(4 * se_log, 0.02)
    del wrong_sign


@pytest.mark.slow
def test_coupled_reduced_path_tracks_kernel_mode():
    """The coupled scalar reduction follows the full system's kernel
    amplitude pathwise, and tighter as eps decreases."""
    model = toy_two_mode_model(0.7, 0.5, 2.0)
    c2 = derive_case2_1d(model)
    sup_err = {}
    for eps in (0.1, 0.05):
        cfg = SimConfig(epsilon=eps, t0=1.0, dt_slow=0.01, dt_fast_factor=0.02,
                        seed=515, kappa=0.1, n_paths=200)
        ens = run_case2_ensemble(model, c2, cfg, [0.3], np.zeros(2))
        ok = np.isnan(ens.stopped_at)
        diff = np.abs(ens.u[ok, :, 0] / eps - ens.y[ok])
        sup_err[eps] = diff.max(axis=1).mean()
    assert sup_err[0.05] < 0.8 * sup_err[0.1]
