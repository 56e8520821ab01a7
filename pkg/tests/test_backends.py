import numpy as np
import pytest

from ampsde import backends
from ampsde.burgers import BurgersParams, build_burgers_model
from ampsde.derive import derive_case1, derive_case2_1d
from ampsde.sim import SimConfig, run_case1_ensemble, run_case2_ensemble
from ampsde.spectral import kernel_embed

needs_compiled = pytest.mark.skipif(not backends.have_compiled(),
                                    reason="compiled kernels not built")


@needs_compiled
def test_case1_backends_agree():
    model = build_burgers_model(BurgersParams(nu=0.3, alphas=(0.2, 0.0, 0.4),
                                              n_modes=12))
    sde = derive_case1(model)
    cfg = SimConfig(epsilon=0.1, t0=0.2, dt_slow=0.01, n_paths=4, seed=17)
    u0 = 0.1 * kernel_embed(model, [0.4])
    ref = run_case1_ensemble(model, sde, cfg, u0, [0.4], backend="reference")
    com = run_case1_ensemble(model, sde, cfg, u0, [0.4], backend="compiled")
    np.testing.assert_allclose(com.u, ref.u, rtol=1e-10, atol=1e-13)
    np.testing.assert_allclose(com.x, ref.x, rtol=1e-10, atol=1e-13)
    np.testing.assert_array_equal(com.stopped_at, ref.stopped_at)


@needs_compiled
def test_case1_backends_agree_dense_drift():
    # off-diagonal L exercises the dense-matvec branch of the kernels
    from _oracles import random_multikernel_model
    model = random_multikernel_model(seed=5)
    sde = derive_case1(model)
    cfg = SimConfig(epsilon=0.1, t0=0.1, dt_slow=0.01, n_paths=3, seed=23,
                    kappa=0.1)
    u0 = 0.1 * kernel_embed(model, [0.2, -0.1])
    ref = run_case1_ensemble(model, sde, cfg, u0, [0.2, -0.1],
                             backend="reference")
    com = run_case1_ensemble(model, sde, cfg, u0, [0.2, -0.1],
                             backend="compiled")
    np.testing.assert_allclose(com.u, ref.u, rtol=1e-10, atol=1e-13)
    np.testing.assert_allclose(com.x, ref.x, rtol=1e-10, atol=1e-13)


@needs_compiled
def test_case2_backends_agree():
    model = build_burgers_model(BurgersParams(nu=0.3, alphas=(0.0, 0.0, 0.5),
                                              n_modes=12, noise_scaling="eps"))
    c2 = derive_case2_1d(model)
    cfg = SimConfig(epsilon=0.1, t0=0.2, dt_slow=0.01, n_paths=4, seed=29)
    psi0 = np.zeros(12)
    psi0[2] = 0.3
    ref = run_case2_ensemble(model, c2, cfg, [0.5], psi0, backend="reference")
    com = run_case2_ensemble(model, c2, cfg, [0.5], psi0, backend="compiled")
    np.testing.assert_allclose(com.u, ref.u, rtol=1e-10, atol=1e-13)
    np.testing.assert_allclose(com.y, ref.y, rtol=1e-10, atol=1e-13)
    np.testing.assert_allclose(com.z, ref.z, rtol=1e-10, atol=1e-13)


def test_backend_selection(monkeypatch):
    assert backends.active_backend("reference") == "reference"
    monkeypatch.setenv("AMPSDE_BACKEND", "reference")
    assert backends.active_backend() == "reference"
    monkeypatch.delenv("AMPSDE_BACKEND")
    with pytest.raises(ValueError):
        backends.active_backend("gpu")
