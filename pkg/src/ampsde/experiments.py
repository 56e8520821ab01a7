"""Monte Carlo campaigns: error-scaling slopes, stability thresholds,
stationary statistics, and distributional comparisons.

Campaigns are deterministic given (seed, config, model): every path is
keyed by ``(seed, stream, path)`` where ``stream`` enumerates the
epsilon grid, so ensembles are reproducible independently of execution
order.  Proportions are reported with Wilson-score intervals and slope
fits with a per-path bootstrap standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .derive import AmplitudeSDE, derive_case1, derive_case2_1d
from .errors import ConfigError, InvalidModelError
from .noise import NoiseSource
from .sim import (
    SimConfig,
    build_case2_approximation,
    ou_exact_step,
    run_case1_ensemble,
    run_case2_ensemble,
    simulate_amplitude,
)
from .spectral import ModelSpec, kernel_embed, semigroup_step

__all__ = [
    "ErrorReport",
    "StabilityReport",
    "run_error_scaling",
    "estimate_lyapunov",
    "stability_scan",
    "ou_variance_test",
    "moment_compare_case2",
    "fit_loglog_slope",
    "bootstrap_slope",
    "wilson_interval",
    "ks_2sample",
]


# ---------------------------------------------------------------------------
# statistics helpers

def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def fit_loglog_slope(eps: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and intercept of log(values) against log(eps)."""
    x = np.log(np.asarray(eps, float))
    y = np.log(np.asarray(values, float))
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def bootstrap_slope(eps: np.ndarray, errors_by_eps: list[np.ndarray],
                    n_boot: int = 400, seed: int = 0) -> tuple[float, float]:
    """Slope of log(mean error) vs log(eps) with a per-path bootstrap SE.

    Paths are resampled with replacement independently within each
    epsilon; the returned standard error is the standard deviation of
    the resampled slopes.
    """
    means = np.array([np.mean(e) for e in errors_by_eps])
    slope, _ = fit_loglog_slope(eps, means)
    rng = np.random.default_rng(seed)
    slopes = np.empty(n_boot)
    for b in range(n_boot):
        bm = np.array([
            np.mean(e[rng.integers(0, e.size, e.size)]) for e in errors_by_eps
        ])
        slopes[b] = fit_loglog_slope(eps, bm)[0]
    return slope, float(slopes.std(ddof=1))


def ks_2sample(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic (sup CDF distance)."""
    a = np.sort(np.asarray(a, float))
    b = np.sort(np.asarray(b, float))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


# ---------------------------------------------------------------------------
# report containers

@dataclass
class ErrorReport:
    """Approximation-error scaling over an epsilon grid."""

    case: str
    eps_grid: list[float]
    per_eps: list[dict]
    fitted_slope: float
    slope_se: float
    n_paths: int
    ks_stats: list[float] = field(default_factory=list)
    unusable_eps: list[float] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "report": "error_scaling",
            "case": self.case,
            "eps_grid": self.eps_grid,
            "per_eps": self.per_eps,
            "fitted_slope": self.fitted_slope,
            "slope_se": self.slope_se,
            "n_paths": self.n_paths,
            "ks_stats": self.ks_stats,
            "unusable_eps": self.unusable_eps,
            "notes": self.notes,
        }


@dataclass
class StabilityReport:
    """Top Lyapunov exponent of the linearized reduced SDE across nu."""

    nu_grid: list[float]
    exponents: list[float]
    standard_errors: list[float]
    closed_form: list[float]
    threshold_estimate: float
    threshold_closed_form: float
    n_paths: int
    horizon: float

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "report": "stability",
            "nu_grid": self.nu_grid,
            "exponents": self.exponents,
            "standard_errors": self.standard_errors,
            "closed_form": self.closed_form,
            "threshold_estimate": self.threshold_estimate,
            "threshold_closed_form": self.threshold_closed_form,
            "n_paths": self.n_paths,
            "horizon": self.horizon,
        }


def _eps_stats(eps: float, errors: np.ndarray, n_stopped: int, n_total: int) -> dict:
    lo, hi = wilson_interval(n_stopped, n_total)
    stats = {
        "epsilon": eps,
        "n_paths": n_total,
        "n_stopped": n_stopped,
        "stopped_fraction": n_stopped / n_total,
        "stopped_fraction_ci": [lo, hi],
    }
    if errors.size:
        q10, q50, q90 = np.quantile(errors, [0.1, 0.5, 0.9])
        stats.update(mean_error=float(errors.mean()),
                     median_error=float(q50),
                     q10_error=float(q10), q90_error=float(q90))
    return stats


def _sup_alpha_norm(model: ModelSpec, diff: np.ndarray) -> np.ndarray:
    """Sup over records of the graded norm; diff has shape (P, R, N)."""
    w = model.norm_weights
    norms = np.sqrt(np.einsum("prk,k->pr", diff * diff, w))
    return norms.max(axis=1)


# ---------------------------------------------------------------------------
# campaigns

def run_error_scaling(model: ModelSpec, case: str, config: SimConfig,
                      eps_grid, x0: float = 0.3, psi0_mode3: float = 0.0,
                      n_reference_paths: int = 20000,
                      reference_dt: float = 2e-3) -> ErrorReport:
    """Measure how the reduced-equation approximation error scales in eps.

    Fast scaling (case "I"): the full system and the reduced SDE are
    driven by the same Brownian channels and the statistic per path is
    ``sup_T || u(T/eps^2) - eps x(T) ||_alpha``; the headline number is
    the log-log slope of the mean over the epsilon grid.

    Slow scaling (case "II"): the per-path statistic is the sup-norm of
    the assembled approximation residual ``u - eps(y e_1 + Q + Z)``
    with the reduced path driven by the pre-averaging diffusion and the
    same noise; alongside, the kernel-mode law at the horizon is
    compared against the averaged scalar diffusion (independent
    Brownian motion) through a Kolmogorov-Smirnov statistic per eps.
    """
    eps_grid = [float(e) for e in eps_grid]
    if sorted(eps_grid, reverse=True) != eps_grid:
        raise ConfigError("eps_grid must be strictly decreasing")
    if case not in ("I", "II"):
        raise ConfigError(f"case must be 'I' or 'II', got {case!r}")

    per_eps: list[dict] = []
    errors_by_eps: list[np.ndarray] = []
    usable_eps: list[float] = []
    unusable: list[float] = []
    ks_stats: list[float] = []
    notes: list[str] = []

    if case == "I":
        sde = derive_case1(model)
    else:
        c2 = derive_case2_1d(model)
        ref_cfg = SimConfig(epsilon=min(eps_grid), t0=config.t0,
                            dt_slow=reference_dt, seed=config.seed + 1,
                            kappa=config.kappa, n_paths=n_reference_paths)

    for i, eps in enumerate(eps_grid):
        cfg = replace(config, epsilon=eps)
        noise = NoiseSource(config.seed, stream=i)
        if case == "I":
            u0 = eps * kernel_embed(model, [x0] * model.n)
            ens = run_case1_ensemble(model, sde, cfg, u0, [x0] * model.n,
                                     noise=noise)
            x_full = np.zeros_like(ens.u)
            x_full[:, :, : model.n] = ens.x
            sup = _sup_alpha_norm(model, ens.u - eps * x_full)
            stopped = ~np.isnan(ens.stopped_at)
        else:
            psi0 = np.zeros(model.n_modes)
            if model.n_modes >= 3:
                psi0[2] = psi0_mode3
            ens = run_case2_ensemble(model, c2, cfg, [x0], psi0, noise=noise)
            stopped = ~np.isnan(ens.stopped_at)
            # assembled approximation, vectorized over paths
            q_path = np.stack([semigroup_step(model, psi0, T / eps ** 2)
                               for T in ens.times])
            approx = np.repeat(q_path[None, :, :], cfg.n_paths, axis=0).copy()
            approx[:, :, 0] += ens.y
            approx[:, :, : ens.z.shape[2]] += ens.z
            sup = _sup_alpha_norm(model, ens.u - eps * approx)
            # distributional comparison at the horizon
            phi_end = ens.u[~stopped, -1, 0] / eps
            _, ref, _ = simulate_amplitude(c2.sde, ref_cfg, [x0], guard=False)
            ks_stats.append(ks_2sample(phi_end, ref[:, -1, 0]))
        errs = sup[~stopped]
        per_eps.append(_eps_stats(eps, errs, int(stopped.sum()), cfg.n_paths))
        if errs.size >= 2:
            usable_eps.append(eps)
            errors_by_eps.append(errs)
        else:
            unusable.append(eps)
            notes.append(f"eps={eps}: all paths stopped; excluded from the fit")

    if len(usable_eps) >= 2:
        slope, se = bootstrap_slope(np.array(usable_eps), errors_by_eps,
                                    seed=config.seed)
    else:
        slope, se = float("nan"), float("nan")
        notes.append("fewer than two usable epsilon values; no slope fit")
    return ErrorReport(case=case, eps_grid=eps_grid, per_eps=per_eps,
                       fitted_slope=slope, slope_se=se, n_paths=config.n_paths,
                       ks_stats=ks_stats, unusable_eps=unusable, notes=notes)


def estimate_lyapunov(sde: AmplitudeSDE, config: SimConfig,
                      horizon: float = 100.0, dt: float = 1e-3,
                      v0: float = 1.0, stream: int = 0) -> dict:
    """Top Lyapunov exponent of the linearization at the origin.

    Simulates ``dv = s1 v dT + sum_j c_j v dbeta_j`` by Euler-Maruyama
    and returns the Monte Carlo mean of ``log|v(T)/v(0)| / T`` with its
    standard error; the analytic value for a scalar linear Ito SDE,
    ``s1 - sum_j c_j^2 / 2``, is reported alongside.  Additive noise is
    a precondition violation (the linearization would not be linear).
    """
    if sde.dim != 1:
        raise ConfigError("Lyapunov estimation applies to scalar reductions")
    if np.any(sde.diff_add != 0.0):
        raise InvalidModelError("additive noise present; the origin is not "
                                "a fixed point")
    s1 = float(sde.drift_lin[0, 0])
    cs = sde.diff_mult[:, 0, 0]
    closed = s1 - 0.5 * float(np.sum(cs ** 2))

    n_steps = int(round(horizon / dt))
    P = config.n_paths
    gen = NoiseSource(config.seed, stream=stream).generator(0)
    v = np.full(P, float(v0))
    sqdt = math.sqrt(dt)
    active = [j for j in range(cs.size) if cs[j] != 0.0]
    for _ in range(n_steps):
        xi = gen.standard_normal((P, len(active))) if active else None
        fac = 1.0 + s1 * dt
        if active:
            fac = fac + (xi * (cs[active] * sqdt)).sum(axis=1)
        v = v * fac
    lam = np.log(np.abs(v) / abs(v0)) / horizon
    return {
        "exponent": float(lam.mean()),
        "standard_error": float(lam.std(ddof=1) / math.sqrt(P)),
        "closed_form": closed,
        "n_paths": P,
        "horizon": horizon,
        "dt": dt,
    }


def stability_scan(make_model, nu_grid, config: SimConfig,
                   horizon: float = 100.0, dt: float = 1e-3) -> StabilityReport:
    """Scan the linear perturbation strength for the stability crossover.

    ``make_model(nu)`` must return a model whose reduced equation has no
    additive kernel noise (multiplicative channels only).  The zero
    crossing of the exponent is estimated from a least-squares line in
    nu (the dependence is exactly linear).
    """
    nu_grid = [float(v) for v in nu_grid]
    exps, ses, closed = [], [], []
    for i, nu in enumerate(nu_grid):
        sde = derive_case1(make_model(nu))
        res = estimate_lyapunov(sde, config, horizon=horizon, dt=dt, stream=i)
        exps.append(res["exponent"])
        ses.append(res["standard_error"])
        closed.append(res["closed_form"])
    a, b = np.polyfit(nu_grid, exps, 1)
    threshold = float(-b / a)
    a2, b2 = np.polyfit(nu_grid, closed, 1)
    return StabilityReport(nu_grid=nu_grid, exponents=exps,
                           standard_errors=ses, closed_form=closed,
                           threshold_estimate=threshold,
                           threshold_closed_form=float(-b2 / a2),
                           n_paths=config.n_paths, horizon=horizon)


def ou_variance_test(model: ModelSpec, config: SimConfig,
                     n_samples: int = 100000, spacing: float = 1.0,
                     eps_pair: tuple[float, float] | None = None) -> dict:
    """Stationary variance of the rescaled stable-mode responses.

    Iterates the exact transition with slow-time spacing large enough to
    decorrelate consecutive samples, so the sample variance has the iid
    chi-square error bar.  With ``eps_pair`` the estimate is repeated at
    two scale parameters; the transition law of the rescaled response is
    scale-free, so both runs must agree within the joint interval.
    """
    modes = [k for k in range(model.n, model.n_noise)
             if model.alphas[k] != 0.0]
    out: dict = {"schema_version": 1, "report": "ou_variance", "modes": []}
    eps_list = list(eps_pair) if eps_pair else [config.epsilon]
    for k in modes:
        lam = float(model.lambdas[k])
        alpha = float(model.alphas[k])
        target = alpha ** 2 / (2.0 * lam)
        entry = {"mode": k + 1, "target_variance": target, "estimates": []}
        for idx, eps in enumerate(eps_list):
            gen = NoiseSource(config.seed, stream=100 + 10 * k + idx).generator(0)
            z = np.zeros(n_samples)
            # spacing >> eps^2/lam decorrelates; a few warm-up sweeps
            for _ in range(3):
                z = ou_exact_step(z, lam, alpha, eps, spacing,
                                  gen.standard_normal(n_samples))
            var = float(z.var(ddof=1))
            se = target * math.sqrt(2.0 / (n_samples - 1))
            entry["estimates"].append({
                "epsilon": eps, "variance": var, "standard_error": se,
                "z_score": (var - target) / se,
            })
        out["modes"].append(entry)
    return out


def moment_compare_case2(model: ModelSpec, config: SimConfig, eps_grid,
                         x0: float = 0.5, psi0_mode3: float = 0.0,
                         n_reference_paths: int = 20000,
                         reference_dt: float = 2e-3) -> dict:
    """Distributional comparison of the kernel mode against the scalar
    averaged diffusion at the horizon, per epsilon.

    Reports mean, variance, and the Kolmogorov-Smirnov statistic, plus
    the trend of the statistic as eps decreases (weak convergence: the
    trend should be downward; no rate is claimed).
    """
    eps_grid = [float(e) for e in eps_grid]
    c2 = derive_case2_1d(model)
    ref_cfg = SimConfig(epsilon=min(eps_grid), t0=config.t0,
                        dt_slow=reference_dt, seed=config.seed + 1,
                        kappa=config.kappa, n_paths=n_reference_paths)
    _, ref, _ = simulate_amplitude(c2.sde, ref_cfg, [x0], guard=False)
    ref_end = ref[:, -1, 0]
    rows = []
    for i, eps in enumerate(eps_grid):
        cfg = replace(config, epsilon=eps)
        noise = NoiseSource(config.seed, stream=200 + i)
        psi0 = np.zeros(model.n_modes)
        if model.n_modes >= 3:
            psi0[2] = psi0_mode3
        ens = run_case2_ensemble(model, c2, cfg, [x0], psi0, noise=noise)
        ok = np.isnan(ens.stopped_at)
        phi_end = ens.u[ok, -1, 0] / eps
        if phi_end.size < 2:
            rows.append({"epsilon": eps, "flagged": "insufficient unstopped paths"})
            continue
        rows.append({
            "epsilon": eps,
            "n_used": int(phi_end.size),
            "mean": float(phi_end.mean()),
            "variance": float(phi_end.var(ddof=1)),
            "reference_mean": float(ref_end.mean()),
            "reference_variance": float(ref_end.var(ddof=1)),
            "ks_statistic": ks_2sample(phi_end, ref_end),
        })
    ks = [r["ks_statistic"] for r in rows if "ks_statistic" in r]
    return {
        "schema_version": 1,
        "report": "case2_moments",
        "eps_grid": eps_grid,
        "rows": rows,
        "ks_decreasing": bool(all(b < a for a, b in zip(ks, ks[1:]))),
    }
