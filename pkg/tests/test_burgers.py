import math

import numpy as np
import pytest

from ampsde.burgers import (
    BurgersParams,
    build_burgers_model,
    burgers_b_coeff,
    triple_sine_integral,
)
from ampsde.errors import ConfigError
from ampsde.spectral import eval_F

from _oracles import b_coeff_quadrature, triple_sine_quadrature

SQ2PI = math.sqrt(2.0 * math.pi)


def test_b_coeff_closed_values():
    assert burgers_b_coeff(1, 1, 2) == pytest.approx(1.0 / SQ2PI, abs=1e-15)
    assert burgers_b_coeff(1, 2, 1) == pytest.approx(-0.5 / SQ2PI, abs=1e-15)
    assert burgers_b_coeff(1, 2, 3) == pytest.approx(1.5 / SQ2PI, abs=1e-15)
    assert burgers_b_coeff(1, 1, 1) == 0.0
    assert burgers_b_coeff(4, 4, 1) == 0.0


def test_b_coeff_against_quadrature():
    for i in range(1, 17):
        for j in range(i, 17):
            for k in (i + j, abs(i - j), j, max(1, j - 2)):
                if not (1 <= k <= 32):
                    continue
                assert burgers_b_coeff(i, j, k) == pytest.approx(
                    b_coeff_quadrature(i, j, k), abs=1e-10)


def test_triple_sine_closed_values():
    assert triple_sine_integral(1, 1, 1) == pytest.approx(4.0 / 3.0, abs=1e-15)
    assert triple_sine_integral(1, 1, 2) == 0.0
    assert triple_sine_integral(1, 2, 3) == 0.0
    assert triple_sine_integral(1, 3, 1) == pytest.approx(-4.0 / 15.0, abs=1e-15)
    assert triple_sine_integral(3, 3, 1) == pytest.approx(36.0 / 35.0, abs=1e-15)


def test_triple_sine_parity_zero():
    for a in range(1, 21):
        for b in range(1, 21):
            for c in range(1, 21):
                if (a + b + c) % 2 == 0:
                    assert triple_sine_integral(a, b, c) == 0.0


def test_triple_sine_against_quadrature(rng):
    for _ in range(200):
        a, b, c = rng.integers(1, 21, 3)
        assert triple_sine_integral(int(a), int(b), int(c)) == pytest.approx(
            triple_sine_quadrature(int(a), int(b), int(c)), abs=1e-10)


def test_model_spectrum_and_drift(burgers16):
    np.testing.assert_array_equal(burgers16.lambdas[:4], [0.0, 3.0, 8.0, 15.0])
    assert burgers16.n == 1 and burgers16.rho == 3.0
    assert burgers16.L[0, 0] == 0.5
    np.testing.assert_array_equal(burgers16.L, 0.5 * np.eye(16))


def test_model_g_tensor(burgers16):
    # <G'(0)(e_1) f_1, e_1> = alpha_1 (2/pi)^(3/2) * (4/3)
    target = (2.0 / math.pi) ** 1.5 * (4.0 / 3.0)
    assert burgers16.gprime[0, 0, 0] == pytest.approx(target, abs=1e-14)
    # silent channel (alpha_2 = 0) couples to nothing
    assert np.all(burgers16.gprime[:, 1, :] == 0.0)


def test_stable_self_interactions_skip_kernel(burgers16):
    burgers16.check_degenerate_quadratic()
    for k in range(2, 17):
        assert burgers_b_coeff(k, k, 1) == 0.0


def test_f_chain_value(burgers16, burgers16_quadrature):
    for model in (burgers16, burgers16_quadrature):
        val = eval_F(model, [1.0], [1.0], [1.0])[0]
        assert val == pytest.approx(-1.0 / (12.0 * math.pi), abs=1e-10)


def test_params_validation():
    with pytest.raises(ConfigError):
        BurgersParams(nu=0.1, alphas=(1.0, 0.0, 0.0), n_modes=3)
    with pytest.raises(ConfigError):
        BurgersParams(nu=0.1, alphas=(1.0, 0.0), n_modes=8)
    with pytest.raises(ConfigError):
        BurgersParams(nu=0.1, alphas=(1.0, 0.0, 0.0), noise_scaling="eps3")
    assert BurgersParams(nu=0.1, alphas=(0,) * 3).sigma_power == 2
    assert BurgersParams(nu=0.1, alphas=(0,) * 3,
                         noise_scaling="eps").sigma_power == 1


def test_model_matches_quadrature_model(burgers16, burgers16_quadrature):
    dense_c = burgers16.B.to_dense()
    dense_q = burgers16_quadrature.B.to_dense()
    assert np.abs(dense_c - dense_q).max() < 1e-10
    assert np.abs(burgers16.gprime - burgers16_quadrature.gprime).max() < 1e-10
