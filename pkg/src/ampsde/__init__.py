"""Spectral Galerkin simulation and amplitude-equation reduction for
SPDEs with quadratic nonlinearities and small additive/multiplicative
noise."""

from .burgers import BurgersParams, build_burgers_model
from .derive import AmplitudeSDE, Case2Spec, derive_case1, derive_case2_1d
from .noise import NoiseSource
from .sim import SimConfig, Trajectory
from .spectral import ModelSpec, SparseBilinear

__version__ = "0.1.0"

__all__ = [
    "BurgersParams",
    "build_burgers_model",
    "AmplitudeSDE",
    "Case2Spec",
    "derive_case1",
    "derive_case2_1d",
    "NoiseSource",
    "SimConfig",
    "Trajectory",
    "ModelSpec",
    "SparseBilinear",
    "__version__",
]
