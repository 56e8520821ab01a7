"""Pure-numpy time-stepping kernels (fallback backend).

Batched over paths; the compiled extension in ``_kernels.pyx`` exposes
the same three chunk functions with identical semantics, operating on
the same pre-scaled tensor bundle.  Every function advances the state
arrays in place over one sub-chunk of fast steps.

Scheme for the full system (exponential Euler, original time, step h):

    u_{m+1} = E * [ u_m + h (eps^2 L u_m + B(u_m, u_m))
                    + sigma_eps G dW_m + eps G'(0)(u_m) dW_m ],
    E_k = exp(-lam_k h),

with the reduced equations advanced by Euler-Maruyama on the same
grid (slow step eps^2 h, slow increments eps dW).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = ["SimTensors", "case1_chunk", "case2_chunk", "amplitude_chunk"]


@dataclass
class SimTensors:
    """Pre-scaled tensors shared by both backends for one (model, config).

    ``scatter`` maps per-triple products to output modes with the
    symmetry factor folded in; ``g_active`` lists the multiplicative
    channels that are not identically zero.
    """

    n: int                    # kernel dimension
    n_modes: int
    n_channels: int
    E: np.ndarray             # (N,) exp(-lam h)
    L_dt: np.ndarray          # (N, N) eps^2 h L
    b_ii: np.ndarray
    b_jj: np.ndarray
    b_kk: np.ndarray
    b_vv2: np.ndarray         # symmetry-weighted values, times h
    scatter: sp.csr_matrix    # (N, nnz) output-mode scatter of b_vv2
    g: np.ndarray             # (N, J, N) multiplicative coupling
    g_active: np.ndarray      # indices of channels with nonzero coupling
    add_scale: np.ndarray     # (J,) sigma_eps alpha_j sqrt(h)
    mult_scale: float         # eps sqrt(h)
    # reduced-system coefficients (kernel dimension n)
    x_lin_dt: np.ndarray      # (n, n) eps^2 h drift_lin
    x_cubic_dt: np.ndarray    # (n, n, n, n) eps^2 h drift_cubic
    x_add: np.ndarray         # (J, n) additive diffusion vectors
    x_mult: np.ndarray        # (J, n, n)
    eps_sqrt_dt: float        # eps sqrt(h): slow Brownian increment scale
    # slow-scaling extras (unused by case 1)
    E_chan: np.ndarray        # (J,) exp(-lam_j h) per channel
    z_add: np.ndarray         # (J,) alpha_j sqrt(h)
    y_lin_dt: float = 0.0     # eps^2 h s1
    y_cubic_dt: float = 0.0   # eps^2 h s2
    y_v: np.ndarray | None = None    # (J,) state coefficient per channel
    y_w: np.ndarray | None = None    # (J, J) [stable mode, channel]


def build_sim_tensors(model, eps: float, delta_t: float, sigma_power: int,
                      sde=None, case2=None) -> SimTensors:
    """Assemble the pre-scaled bundle from a model and reduced system."""
    N, J, n = model.n_modes, model.n_noise, model.n
    h = delta_t
    vv2 = model.B.vals * np.where(model.B.ii == model.B.jj, 1.0, 2.0) * h
    nnz = vv2.size
    scatter = sp.csr_matrix(
        (vv2, (model.B.kk, np.arange(nnz))), shape=(N, nnz))
    g = np.ascontiguousarray(model.gprime)
    g_active = np.flatnonzero(np.abs(g).sum(axis=(0, 2)) > 0.0)
    sigma_eps = eps ** sigma_power
    add_scale = sigma_eps * model.alphas[:J] * np.sqrt(h)

    if sde is not None:
        x_lin = sde.drift_lin
        x_cubic = sde.drift_cubic
        x_add = sde.diff_add
        x_mult = sde.diff_mult
        if x_add.shape[0] != J:
            raise ValueError("reduced system must have one row per channel")
    else:
        x_lin = np.zeros((n, n))
        x_cubic = np.zeros((n, n, n, n))
        x_add = np.zeros((J, n))
        x_mult = np.zeros((J, n, n))

    lam_chan = model.lambdas[:J]
    st = SimTensors(
        n=n, n_modes=N, n_channels=J,
        E=np.exp(-model.lambdas * h),
        L_dt=(eps * eps * h) * model.L,
        b_ii=model.B.ii, b_jj=model.B.jj, b_kk=model.B.kk, b_vv2=vv2,
        scatter=scatter, g=g, g_active=g_active,
        add_scale=add_scale, mult_scale=eps * np.sqrt(h),
        x_lin_dt=(eps * eps * h) * np.asarray(x_lin, float),
        x_cubic_dt=(eps * eps * h) * np.asarray(x_cubic, float),
        x_add=np.asarray(x_add, float), x_mult=np.asarray(x_mult, float),
        eps_sqrt_dt=eps * np.sqrt(h),
        E_chan=np.exp(-lam_chan * h),
        z_add=model.alphas[:J] * np.sqrt(h),
    )
    if case2 is not None:
        c = case2.constants
        st.y_lin_dt = (eps * eps * h) * c["linear_drift"]
        st.y_cubic_dt = (eps * eps * h) * c["cubic_drift"]
        st.y_v = case2.sigma_form.v_maps[:, 0, 0].copy()
        st.y_w = np.zeros((J, J))
        st.y_w[: case2.sigma_form.w_vecs.shape[0], :] = case2.sigma_form.w_vecs[:, :, 0]
    return st


def _b_quadratic(st: SimTensors, u: np.ndarray) -> np.ndarray:
    """h * B(u, u) batched over paths, shape (P, N)."""
    prod = u[:, st.b_ii] * u[:, st.b_jj]
    return (st.scatter @ prod.T).T


def case1_chunk(st: SimTensors, u: np.ndarray, x: np.ndarray,
                normals: np.ndarray) -> None:
    """Advance coupled (full field, reduced state) over one sub-chunk.

    ``u``: (P, N) in place; ``x``: (P, n) in place;
    ``normals``: (P, m, J) standard normals.
    """
    m = normals.shape[1]
    for step in range(m):
        xi = normals[:, step, :]                       # (P, J)
        incr = u + _b_quadratic(st, u) + u @ st.L_dt.T
        incr[:, : st.n_channels] += xi * st.add_scale
        if st.g_active.size:
            mult = np.einsum("pi,ijk->pjk", u, st.g[:, st.g_active, :])
            incr += st.mult_scale * np.einsum("pjk,pj->pk", mult,
                                              xi[:, st.g_active])
        np.multiply(incr, st.E, out=u)

        cubic = np.einsum("abcd,pb,pc,pd->pa", st.x_cubic_dt, x, x, x)
        dx = x @ st.x_lin_dt.T + cubic
        diff = st.x_add[None, :, :] + np.einsum("jab,pb->pja", st.x_mult, x)
        dx += st.eps_sqrt_dt * np.einsum("pja,pj->pa", diff, xi)
        x += dx


def case2_chunk(st: SimTensors, u: np.ndarray, y: np.ndarray, z: np.ndarray,
                trans: np.ndarray, normals: np.ndarray) -> None:
    """Advance (full field, scalar reduced state, OU responses).

    ``y``: (P,) coupled reduced path driven by the pre-averaging
    diffusion; ``z``: (P, J) per-channel stochastic convolutions
    integrated with the scheme's own noise quadrature; ``trans``:
    (P, J) decaying stationary-start transients (their sum with ``z``
    is the stationarized response entering the diffusion).
    """
    m = normals.shape[1]
    for step in range(m):
        xi = normals[:, step, :]
        incr = u + _b_quadratic(st, u) + u @ st.L_dt.T
        incr[:, : st.n_channels] += xi * st.add_scale
        if st.g_active.size:
            mult = np.einsum("pi,ijk->pjk", u, st.g[:, st.g_active, :])
            incr += st.mult_scale * np.einsum("pjk,pj->pk", mult,
                                              xi[:, st.g_active])
        np.multiply(incr, st.E, out=u)

        zhat = z + trans
        gamma = y[:, None] * st.y_v + zhat @ st.y_w     # (P, J)
        y += st.y_lin_dt * y + st.y_cubic_dt * y ** 3
        y += st.eps_sqrt_dt * np.einsum("pj,pj->p", gamma, xi)

        z += xi * st.z_add
        z *= st.E_chan
        trans *= st.E_chan


def amplitude_chunk(sde, x: np.ndarray, increments: np.ndarray,
                    dt: float) -> None:
    """Euler-Maruyama for a reduced SDE on its own grid, in place.

    ``x``: (P, n); ``increments``: (P, m, J) Brownian increments (already
    scaled to the integration step).
    """
    m = increments.shape[1]
    for step in range(m):
        db = increments[:, step, :]
        dx = dt * sde.drift(x)
        diff = sde.diffusion(x)                         # (P, J, n)
        dx += np.einsum("pja,pj->pa", diff, db)
        x += dx
