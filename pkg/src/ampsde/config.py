"""Run configuration: one TOML file with [model], [sim], [experiment],
[output] tables.

Unknown keys are rejected so a typo cannot silently fall back to a
default.  The exact grammar is documented in the README; every value is
validated against the model/simulation invariants at load time.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - version dependent
    import tomli as tomllib

from .burgers import BurgersParams, build_burgers_model
from .errors import ConfigError
from .sim import SimConfig
from .spectral import ModelSpec, SparseBilinear

__all__ = ["RunConfig", "load_config", "load_spectral_model"]

_MODEL_KEYS = {"kind", "nu", "alphas", "n_modes", "case", "file"}
_SIM_KEYS = {"epsilon", "t0", "dt_slow", "dt_fast_factor", "seed", "kappa",
             "n_paths"}
_EXPERIMENT_KEYS = {"kind", "eps_grid", "nu_grid", "x0", "psi0_mode3",
                    "n_reference_paths", "reference_dt", "horizon",
                    "lyapunov_dt", "n_samples", "backend"}
_OUTPUT_KEYS = {"directory"}
_TOP_KEYS = {"schema_version", "model", "sim", "experiment", "output"}
_EXPERIMENT_KINDS = {"error_scaling", "stability", "ou_variance",
                     "case2_compare", "trajectory"}


@dataclass(frozen=True)
class RunConfig:
    """Validated run description."""

    model: ModelSpec
    case: str                       # "I" (eps^2 additive) or "II" (eps)
    sim: SimConfig
    experiment: dict
    output_dir: Path
    model_section: dict = field(default_factory=dict)

    @property
    def sigma_power(self) -> int:
        return 2 if self.case == "I" else 1


def _check_keys(table: dict, allowed: set, where: str):
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{where}]: {sorted(unknown)}")


def load_spectral_model(path: Path) -> ModelSpec:
    """Load a generic spectral model from a JSON tensor file.

    Expected keys: ``n``, ``lambdas``, ``L`` (dense), ``B`` (list of
    1-based ``[i, j, k, value]`` entries), ``alphas``, ``gprime`` (list
    of 1-based ``[i, j, k, value]`` entries, ``j`` the channel),
    ``n_noise``, ``alpha_exp``.
    """
    import json
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from exc
    try:
        lambdas = np.asarray(doc["lambdas"], float)
        N = lambdas.size
        n_noise = int(doc["n_noise"])
        g = np.zeros((N, n_noise, N))
        for i, j, k, v in doc.get("gprime", []):
            g[i - 1, j - 1, k - 1] = v
        B = SparseBilinear.from_entries(
            N, [(i - 1, j - 1, k - 1, v) for i, j, k, v in doc["B"]])
        return ModelSpec(n=int(doc["n"]), lambdas=lambdas,
                         L=np.asarray(doc["L"], float), B=B,
                         alphas=np.asarray(doc["alphas"], float),
                         gprime=g, alpha_exp=float(doc["alpha_exp"]),
                         name=str(doc.get("name", "spectral")))
    except KeyError as exc:
        raise ConfigError(f"model file {path} is missing key {exc}") from exc


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc

    _check_keys(doc, _TOP_KEYS, "top level")
    if doc.get("schema_version", 1) != 1:
        raise ConfigError("unsupported schema_version")
    for section in ("model", "sim", "output"):
        if section not in doc:
            raise ConfigError(f"missing [{section}] section")
    model_tab = doc["model"]
    sim_tab = doc["sim"]
    exp_tab = doc.get("experiment", {})
    out_tab = doc["output"]
    _check_keys(model_tab, _MODEL_KEYS, "model")
    _check_keys(sim_tab, _SIM_KEYS, "sim")
    _check_keys(exp_tab, _EXPERIMENT_KEYS, "experiment")
    _check_keys(out_tab, _OUTPUT_KEYS, "output")

    case = str(model_tab.get("case", "I"))
    if case not in ("I", "II"):
        raise ConfigError(f"model.case must be 'I' or 'II', got {case!r}")

    kind = model_tab.get("kind", "burgers")
    if kind == "burgers":
        try:
            params = BurgersParams(
                nu=float(model_tab["nu"]),
                alphas=tuple(float(a) for a in model_tab["alphas"]),
                n_modes=int(model_tab.get("n_modes", 32)),
                noise_scaling="eps2" if case == "I" else "eps",
            )
        except KeyError as exc:
            raise ConfigError(f"[model] missing key {exc}") from exc
        model = build_burgers_model(params)
    elif kind == "spectral":
        if "file" not in model_tab:
            raise ConfigError("[model] kind='spectral' needs file=...")
        model = load_spectral_model(path.parent / model_tab["file"])
    else:
        raise ConfigError(f"unknown model kind {kind!r}")

    try:
        sim = SimConfig(
            epsilon=float(sim_tab["epsilon"]),
            t0=float(sim_tab.get("t0", 1.0)),
            dt_slow=float(sim_tab.get("dt_slow", 0.01)),
            dt_fast_factor=float(sim_tab.get("dt_fast_factor", 1.0)),
            seed=int(sim_tab.get("seed", 2024)),
            kappa=float(sim_tab.get("kappa", 0.01)),
            n_paths=int(sim_tab.get("n_paths", 200)),
        )
    except KeyError as exc:
        raise ConfigError(f"[sim] missing key {exc}") from exc

    experiment = dict(exp_tab)
    if experiment:
        ek = experiment.get("kind")
        if ek not in _EXPERIMENT_KINDS:
            raise ConfigError(
                f"experiment.kind must be one of {sorted(_EXPERIMENT_KINDS)}, "
                f"got {ek!r}")
        if "eps_grid" in experiment:
            grid = [float(e) for e in experiment["eps_grid"]]
            if any(b >= a for a, b in zip(grid, grid[1:])):
                raise ConfigError("experiment.eps_grid must be strictly decreasing")
            experiment["eps_grid"] = grid

    if "directory" not in out_tab:
        raise ConfigError("[output] needs directory=...")
    out_dir = Path(out_tab["directory"])
    if not out_dir.is_absolute():
        out_dir = path.parent / out_dir

    return RunConfig(model=model, case=case, sim=sim, experiment=experiment,
                     output_dir=out_dir, model_section=dict(model_tab))
