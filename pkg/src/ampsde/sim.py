"""Time integration drivers.

The full system runs in original (fast) time with an exponential Euler
step whose linear flow is exact; reduced equations run in slow time
``T = eps^2 t``.  Coupled drivers advance both on the shared fast grid
so the reduced path consumes exactly the ``eps``-scaled increments of
the same Brownian channels (the pathwise contract of the fast-scaling
regime).  States are recorded every ``dt_slow`` slow-time units; the
internal fast step is chosen so that one recording interval is an
integer number of fast steps.

Blow-up guards mirror the stopping-time convention of the theory: at
every recording point the rescaled kernel/stable parts are compared
against ``eps**-kappa``-style thresholds and a crossing freezes the
path, recording ``stopped_at`` (data, not an exception).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backends
from ._reference import SimTensors, amplitude_chunk, build_sim_tensors
from .errors import ConfigError, GridAlignmentError, IntegrationError
from .noise import NoiseSource, iter_chunks
from .spectral import ModelSpec, kernel_embed, project, semigroup_step

__all__ = [
    "SimConfig",
    "Trajectory",
    "Case1Ensemble",
    "Case2Ensemble",
    "fast_grid",
    "run_case1_ensemble",
    "run_case2_ensemble",
    "simulate_spde",
    "simulate_amplitude",
    "ou_exact_step",
    "build_case2_approximation",
]

SUB_CHUNK = 4096  # fast steps per backend call; bounds the normals buffer


@dataclass(frozen=True)
class SimConfig:
    """Shared numerical parameters of a simulation campaign."""

    epsilon: float
    t0: float = 1.0
    dt_slow: float = 0.01
    dt_fast_factor: float = 1.0
    seed: int = 2024
    kappa: float = 0.01
    n_paths: int = 200

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 0.5):
            raise ConfigError(f"epsilon must be in (0, 0.5], got {self.epsilon}")
        if self.t0 <= 0 or self.dt_slow <= 0:
            raise ConfigError("t0 and dt_slow must be positive")
        if not (0.0 < self.dt_fast_factor <= 2.0):
            raise ConfigError("dt_fast_factor must be in (0, 2] "
                              "(explicit nonlinear step limit)")
        if not (0.0 < self.kappa < 2.0 / 19.0):
            raise ConfigError(f"kappa must be in (0, 2/19), got {self.kappa}")
        if self.n_paths < 1:
            raise ConfigError("n_paths must be >= 1")


@dataclass
class Trajectory:
    """Sampled path: slow times, states, and an optional stopping time."""

    times: np.ndarray
    states: np.ndarray
    stopped_at: float | None = None
    kind: str = "field"

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise GridAlignmentError("sample times must be strictly increasing")
        if self.stopped_at is not None and self.stopped_at > self.times[-1] + 1e-12:
            raise GridAlignmentError("stopped_at exceeds the horizon")


@dataclass
class Case1Ensemble:
    times: np.ndarray
    u: np.ndarray            # (P, R, N) full fields
    x: np.ndarray            # (P, R, n) coupled reduced paths
    stopped_at: np.ndarray   # (P,) NaN where the guard never fired
    slow_increments: np.ndarray | None = None   # (P, R-1, J) if collected
    backend: str = "reference"


@dataclass
class Case2Ensemble:
    times: np.ndarray
    u: np.ndarray            # (P, R, N)
    y: np.ndarray            # (P, R) coupled scalar reduced paths
    z: np.ndarray            # (P, R, J) per-channel stochastic convolutions
    stopped_at: np.ndarray
    backend: str = "reference"


def fast_grid(model: ModelSpec, config: SimConfig) -> tuple[float, int, int]:
    """Fast step, steps per recording interval, and recording count.

    The target fast step is ``dt_fast_factor / lam_max``; it is rounded
    down so that ``dt_slow`` is an exact multiple of ``eps^2 * delta_t``.
    """
    n_slow = int(round(config.t0 / config.dt_slow))
    if abs(n_slow * config.dt_slow - config.t0) > 1e-9 * config.t0:
        raise GridAlignmentError("t0 must be an integer multiple of dt_slow")
    lam_max = float(model.lambdas[-1])
    target = config.dt_fast_factor / lam_max
    m_per = max(1, math.ceil(config.dt_slow / (config.epsilon ** 2 * target)))
    delta_t = config.dt_slow / (config.epsilon ** 2 * m_per)
    return delta_t, m_per, n_slow


def _draw_chunk(gens, m: int, n_channels: int) -> np.ndarray:
    """Stack per-path draws; every stream advances even for frozen paths."""
    return np.stack([g.standard_normal((m, n_channels)) for g in gens])


def _guard_norms(model, u, eps, case: int):
    w = model.norm_weights
    n = model.n
    kb = np.sqrt((u[:, :n] ** 2 * w[:n]).sum(axis=1))
    sb = np.sqrt((u[:, n:] ** 2 * w[n:]).sum(axis=1))
    if case == 1:
        return kb / eps, sb / eps ** 2
    return kb / eps, sb / eps


def _guard_thresholds(eps, kappa, case: int):
    if case == 1:
        return eps ** (-kappa), eps ** (-3.0 * kappa)
    return eps ** (-kappa), eps ** (-kappa)


def run_case1_ensemble(model: ModelSpec, sde, config: SimConfig,
                       u0: np.ndarray, x0: np.ndarray,
                       noise: NoiseSource | None = None,
                       path_indices=None,
                       sigma_power: int = 2,
                       collect_slow_increments: bool = False,
                       backend: str | None = None) -> Case1Ensemble:
    """Pathwise-coupled ensemble: full system + reduced system, same noise.

    ``u0`` is one full field shared by all paths (shape ``(N,)``) or a
    per-path array ``(P, N)``; likewise ``x0`` for the reduced state.
    Passing ``sde=None`` integrates the full system alone.
    """
    if sde is None:
        st_sde = None
        n_red = model.n
    else:
        st_sde = sde
        n_red = sde.dim
    bk = backends.active_backend(backend)
    eps = config.epsilon
    delta_t, m_per, n_slow = fast_grid(model, config)
    st = build_sim_tensors(model, eps, delta_t, sigma_power, sde=st_sde)
    P = config.n_paths
    paths = list(range(P)) if path_indices is None else list(path_indices)
    noise = noise if noise is not None else NoiseSource(config.seed)
    gens = [noise.generator(p) for p in paths]

    u = np.broadcast_to(np.asarray(u0, float), (P, model.n_modes)).copy()
    x = np.broadcast_to(np.asarray(x0, float), (P, n_red)).copy()
    R = n_slow + 1
    rec_u = np.empty((P, R, model.n_modes))
    rec_x = np.empty((P, R, n_red))
    rec_u[:, 0] = u
    rec_x[:, 0] = x
    stopped_at = np.full(P, np.nan)
    active = np.ones(P, dtype=bool)
    slow_inc = (np.zeros((P, n_slow, st.n_channels))
                if collect_slow_increments else None)
    th_k, th_s = _guard_thresholds(eps, config.kappa, case=1)
    scale = eps * math.sqrt(delta_t)

    for r in range(1, R):
        for lo, hi in iter_chunks(m_per, SUB_CHUNK):
            normals = _draw_chunk(gens, hi - lo, st.n_channels)
            if slow_inc is not None:
                for p in range(P):
                    slow_inc[p, r - 1] += scale * normals[p].sum(axis=0)
            if active.all():
                backends.case1_chunk(st, u, x, normals, bk)
            elif active.any():
                idx = np.flatnonzero(active)
                ua, xa = u[idx].copy(), x[idx].copy()
                backends.case1_chunk(st, ua, xa, normals[idx], bk)
                u[idx], x[idx] = ua, xa
        rec_u[:, r] = u
        rec_x[:, r] = x
        if active.any():
            idx = np.flatnonzero(active)
            if not np.all(np.isfinite(u[idx])):
                raise IntegrationError("non-finite state outside the guard")
            kn, sn = _guard_norms(model, u[idx], eps, case=1)
            fired = (kn > th_k) | (sn > th_s)
            for p in idx[fired]:
                stopped_at[p] = r * config.dt_slow
                active[p] = False
    times = np.linspace(0.0, config.t0, R)
    return Case1Ensemble(times, rec_u, rec_x, stopped_at, slow_inc, bk)


def run_case2_ensemble(model: ModelSpec, case2, config: SimConfig,
                       phi0: np.ndarray, psi0: np.ndarray,
                       noise: NoiseSource | None = None,
                       path_indices=None,
                       backend: str | None = None) -> Case2Ensemble:
    """Slow-scaling coupled ensemble (one-dimensional kernel).

    Advances the full system (``sigma_eps = eps``), the per-channel
    stochastic convolutions ``z`` on the scheme's own grid, and the
    scalar reduced path driven by the pre-averaging diffusion
    ``gamma_j = v_j y + sum_i zhat_i w_ij`` with the same increments.
    Each path's stream starts with one stationary draw for the
    transient initial response, then the step noise.
    """
    if model.n != 1:
        raise ConfigError("the coupled slow-scaling driver needs a 1-D kernel")
    bk = backends.active_backend(backend)
    eps = config.epsilon
    delta_t, m_per, n_slow = fast_grid(model, config)
    st = build_sim_tensors(model, eps, delta_t, sigma_power=1, case2=case2)
    P = config.n_paths
    paths = list(range(P)) if path_indices is None else list(path_indices)
    noise = noise if noise is not None else NoiseSource(config.seed)
    gens = [noise.generator(p) for p in paths]

    psi0 = project(model, np.asarray(psi0, float), "stable")
    u = np.tile(eps * (kernel_embed(model, phi0) + psi0), (P, 1))
    y = np.full(P, float(np.asarray(phi0, float)[0]))
    z = np.zeros((P, st.n_channels))
    stat_std = np.sqrt(case2.sigma_form.w_weights[: st.n_channels])
    trans = np.stack([g.standard_normal(st.n_channels) for g in gens]) * stat_std

    R = n_slow + 1
    rec_u = np.empty((P, R, model.n_modes))
    rec_y = np.empty((P, R))
    rec_z = np.empty((P, R, st.n_channels))
    rec_u[:, 0] = u
    rec_y[:, 0] = y
    rec_z[:, 0] = z
    stopped_at = np.full(P, np.nan)
    active = np.ones(P, dtype=bool)
    th_k, th_s = _guard_thresholds(eps, config.kappa, case=2)

    for r in range(1, R):
        for lo, hi in iter_chunks(m_per, SUB_CHUNK):
            normals = _draw_chunk(gens, hi - lo, st.n_channels)
            if active.all():
                backends.case2_chunk(st, u, y, z, trans, normals, bk)
            elif active.any():
                idx = np.flatnonzero(active)
                ua, ya = u[idx].copy(), y[idx].copy()
                za, ta = z[idx].copy(), trans[idx].copy()
                backends.case2_chunk(st, ua, ya, za, ta, normals[idx], bk)
                u[idx], y[idx], z[idx], trans[idx] = ua, ya, za, ta
        rec_u[:, r] = u
        rec_y[:, r] = y
        rec_z[:, r] = z
        if active.any():
            idx = np.flatnonzero(active)
            if not np.all(np.isfinite(u[idx])):
                raise IntegrationError("non-finite state outside the guard")
            kn, sn = _guard_norms(model, u[idx], eps, case=2)
            fired = (kn > th_k) | (sn > th_s) | (np.abs(y[idx]) > th_k)
            for p in idx[fired]:
                stopped_at[p] = r * config.dt_slow
                active[p] = False
    times = np.linspace(0.0, config.t0, R)
    return Case2Ensemble(times, rec_u, rec_y, rec_z, stopped_at, bk)


def simulate_spde(model: ModelSpec, config: SimConfig, u0: np.ndarray,
                  path_index: int = 0, sigma_power: int = 2,
                  noise: NoiseSource | None = None,
                  backend: str | None = None) -> Trajectory:
    """Single path of the full system; guard per the selected scaling."""
    cfg1 = SimConfig(epsilon=config.epsilon, t0=config.t0,
                     dt_slow=config.dt_slow,
                     dt_fast_factor=config.dt_fast_factor, seed=config.seed,
                     kappa=config.kappa, n_paths=1)
    ens = run_case1_ensemble(model, None, cfg1, u0,
                             np.zeros(model.n), noise=noise,
                             path_indices=[path_index],
                             sigma_power=sigma_power, backend=backend)
    stopped = None if np.isnan(ens.stopped_at[0]) else float(ens.stopped_at[0])
    return Trajectory(ens.times, ens.u[0], stopped, kind="field")


def simulate_amplitude(sde, config: SimConfig, x0,
                       increments: np.ndarray | None = None,
                       n_paths: int | None = None,
                       noise: NoiseSource | None = None,
                       guard: bool = True) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Euler-Maruyama for a reduced SDE on the slow recording grid.

    With ``increments`` (shape ``(P, n_slow, channels)``, already
    Brownian increments over ``dt_slow``) the integration is driven
    pathwise by the given noise; otherwise fresh streams are drawn.
    Returns ``(times, states (P, R, n), stopped_at (P,))``.
    """
    n_slow = int(round(config.t0 / config.dt_slow))
    if abs(n_slow * config.dt_slow - config.t0) > 1e-9 * config.t0:
        raise GridAlignmentError("t0 must be an integer multiple of dt_slow")
    J = sde.n_channels
    if increments is not None:
        increments = np.asarray(increments, float)
        if increments.shape[1] != n_slow or increments.shape[2] != J:
            raise GridAlignmentError(
                f"increments must be (P, {n_slow}, {J}), got {increments.shape}")
        P = increments.shape[0]
    else:
        P = n_paths if n_paths is not None else config.n_paths
        noise = noise if noise is not None else NoiseSource(config.seed)
        increments = np.stack([
            noise.generator(p).standard_normal((n_slow, J)) for p in range(P)
        ]) * math.sqrt(config.dt_slow)

    x = np.broadcast_to(np.asarray(x0, float), (P, sde.dim)).copy()
    R = n_slow + 1
    rec = np.empty((P, R, sde.dim))
    rec[:, 0] = x
    stopped_at = np.full(P, np.nan)
    active = np.ones(P, dtype=bool)
    thresh = config.epsilon ** (-config.kappa)
    for r in range(1, R):
        if active.all():
            amplitude_chunk(sde, x, increments[:, r - 1: r, :], config.dt_slow)
        elif active.any():
            idx = np.flatnonzero(active)
            xa = x[idx].copy()
            amplitude_chunk(sde, xa, increments[idx, r - 1: r, :], config.dt_slow)
            x[idx] = xa
        rec[:, r] = x
        if guard and active.any():
            idx = np.flatnonzero(active)
            if not np.all(np.isfinite(x[idx])):
                raise IntegrationError("non-finite reduced state")
            fired = np.sqrt((x[idx] ** 2).sum(axis=1)) > thresh
            for p in idx[fired]:
                stopped_at[p] = r * config.dt_slow
                active[p] = False
    times = np.linspace(0.0, config.t0, R)
    return times, rec, stopped_at


def ou_exact_step(z, lam: float, alpha: float, eps: float, dT: float, xi):
    """Exact transition of the rescaled Ornstein-Uhlenbeck response.

    ``z' = exp(-lam dT / eps^2) z
          + alpha sqrt((1 - exp(-2 lam dT / eps^2)) / (2 lam)) xi``

    so the stationary law has variance ``alpha^2 / (2 lam)``.
    """
    if lam <= 0:
        raise ValueError(f"relaxation rate must be positive, got {lam}")
    rate = lam * dT / (eps * eps)
    decay = math.exp(-rate)
    std = alpha * math.sqrt(-math.expm1(-2.0 * rate) / (2.0 * lam))
    return decay * np.asarray(z, float) + std * np.asarray(xi, float)


def build_case2_approximation(model: ModelSpec, times: np.ndarray,
                              y: np.ndarray, psi0: np.ndarray,
                              z: np.ndarray, eps: float) -> np.ndarray:
    """Assemble the slow-scaling approximation as full fields.

        approx(T) = eps * [ y(T) e_1 + Q(T) + Z(T) ]

    with ``Q(T)`` the freely decaying initial stable part and ``Z`` the
    per-channel stochastic convolutions (both on the same grid as
    ``y``).  Shapes: ``y (R,)``, ``z (R, J)``; returns ``(R, N)``.
    """
    times = np.asarray(times, float)
    y = np.asarray(y, float)
    z = np.asarray(z, float)
    if y.shape[0] != times.size or z.shape[0] != times.size:
        raise GridAlignmentError("reduced and response paths must share the grid")
    if model.n != 1:
        raise GridAlignmentError("the assembled approximation needs a 1-D kernel")
    psi0 = project(model, np.asarray(psi0, float), "stable")
    out = np.zeros((times.size, model.n_modes))
    for r, T in enumerate(times):
        field = semigroup_step(model, psi0, T / eps ** 2)
        field[0] += y[r]
        field[: z.shape[1]] += z[r]
        out[r] = eps * field
    return out
