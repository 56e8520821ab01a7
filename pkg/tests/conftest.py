import numpy as np
import pytest

from ampsde.burgers import BurgersParams, build_burgers_model

from _oracles import build_burgers_model_quadrature, random_multikernel_model


@pytest.fixture(scope="session")
def burgers16():
    return build_burgers_model(BurgersParams(nu=0.5, alphas=(1.0, 0.0, 1.0),
                                             n_modes=16))


@pytest.fixture(scope="session")
def burgers16_case2():
    return build_burgers_model(BurgersParams(nu=0.5, alphas=(0.0, 0.0, 1.0),
                                             n_modes=16, noise_scaling="eps"))


@pytest.fixture(scope="session")
def burgers16_quadrature():
    return build_burgers_model_quadrature(nu=0.5, alphas=(1.0, 0.0, 1.0),
                                          n_modes=16)


@pytest.fixture(scope="session")
def multikernel():
    return random_multikernel_model(seed=3)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
