"""Reduction of a spectral model to low-dimensional amplitude SDEs.

Two noise scalings are supported.

* Fast scaling (``sigma_eps = eps^2``): the kernel modes keep their own
  additive forcing and the reduced system is

      dx = [L_c x + 2 F(x)] dT + sum_j [a_j e_j + M_j x] dbeta_j,

  assembled directly from the model tensors (:func:`derive_case1`).

* Slow scaling (``sigma_eps = eps``) with degenerate additive noise
  (no kernel channels): the stable modes respond as fast
  Ornstein-Uhlenbeck processes whose stationary statistics average
  into the kernel drift and diffusion.  :func:`derive_lbar` builds the
  averaged linear drift, :func:`derive_sigma_form` the averaged
  diffusion quadratic form

      Sigma(phi) = sum_j v_j(phi) v_j(phi)^T
                 + sum_{i,j} (alpha_i^2 / 2 lam_i) w_ij w_ij^T,

  a sum of squares by construction, and :func:`derive_case2_1d`
  specializes everything to a one-dimensional kernel:

      dy = (s1 y + s2 y^3) dT + sqrt(s3 y^2 + s4) dB.

All stochastic differentials are in the Ito convention.  The
symmetric-pair inverse used in the averaged terms acts on a symmetric
product of eigenmodes ``e_i (x)s e_k`` by division by
``-(lam_i + lam_k)/2``; this is the rule under which the derived
constants reproduce the tabulated values for the Burgers example.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidModelError,
    NotPositiveSemidefiniteError,
)
from .spectral import (
    ModelSpec,
    apply_stable_inverse,
    eval_B,
    eval_F,
    kernel_embed,
    project,
)

__all__ = [
    "AmplitudeSDE",
    "SigmaForm",
    "Case2Spec",
    "derive_case1",
    "derive_lbar",
    "derive_sigma_form",
    "derive_case2_1d",
    "spd_sqrt",
]


@dataclass(frozen=True)
class AmplitudeSDE:
    """Finite-dimensional Ito SDE with linear+cubic drift.

        dx = [drift_lin x + cubic(x,x,x)] dT
             + sum_j [diff_add[j] + diff_mult[j] x] dbeta_j

    ``drift_cubic`` has shape ``(dim,)*4`` and is symmetric in its last
    three slots; ``diff_add``/``diff_mult`` are indexed by driving
    Brownian channel.
    """

    dim: int
    drift_lin: np.ndarray
    drift_cubic: np.ndarray
    diff_add: np.ndarray
    diff_mult: np.ndarray
    convention: str = "ito"

    def __post_init__(self):
        object.__setattr__(self, "drift_lin", np.asarray(self.drift_lin, float))
        object.__setattr__(self, "drift_cubic", np.asarray(self.drift_cubic, float))
        object.__setattr__(self, "diff_add", np.asarray(self.diff_add, float))
        object.__setattr__(self, "diff_mult", np.asarray(self.diff_mult, float))
        n = self.dim
        if self.drift_lin.shape != (n, n):
            raise DimensionMismatchError("drift_lin must be (dim, dim)")
        if self.drift_cubic.shape != (n, n, n, n):
            raise DimensionMismatchError("drift_cubic must be (dim,)*4")
        if self.diff_add.ndim != 2 or self.diff_add.shape[1] != n:
            raise DimensionMismatchError("diff_add must be (channels, dim)")
        if self.diff_mult.shape != (self.diff_add.shape[0], n, n):
            raise DimensionMismatchError("diff_mult must be (channels, dim, dim)")
        for arr in (self.drift_lin, self.drift_cubic, self.diff_add, self.diff_mult):
            if not np.all(np.isfinite(arr)):
                raise InvalidModelError("amplitude SDE coefficients must be finite")

    @property
    def n_channels(self) -> int:
        return int(self.diff_add.shape[0])

    def drift(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        cubic = np.einsum("abcd,...b,...c,...d->...a", self.drift_cubic, x, x, x)
        return x @ self.drift_lin.T + cubic

    def diffusion(self, x: np.ndarray) -> np.ndarray:
        """Per-channel diffusion vectors, shape ``(..., channels, dim)``."""
        x = np.asarray(x, float)
        mult = np.einsum("jab,...b->...ja", self.diff_mult, x)
        return self.diff_add + mult

    def cubic_pairing(self, x: np.ndarray) -> float:
        """``<cubic(x), x>``; nonpositivity is the one-sided bound."""
        x = np.asarray(x, float)
        return float(np.einsum("abcd,a,b,c,d->", self.drift_cubic, x, x, x, x))


def _f_tensor(model: ModelSpec) -> np.ndarray:
    n = model.n
    eye = np.eye(n)
    F = np.zeros((n, n, n, n))
    for b, c, d in itertools.combinations_with_replacement(range(n), 3):
        val = eval_F(model, eye[b], eye[c], eye[d])
        for perm in set(itertools.permutations((b, c, d))):
            F[(slice(None),) + perm] = val
    return F


def derive_case1(model: ModelSpec) -> AmplitudeSDE:
    """Reduced SDE for the fast additive-noise scaling (sigma_eps = eps^2)."""
    model._check_kernel_annihilation()
    n, J = model.n, model.n_noise
    drift_lin = model.L[:n, :n].copy()
    drift_cubic = 2.0 * _f_tensor(model)
    diff_add = np.zeros((J, n))
    for j in range(min(J, n)):
        diff_add[j, j] = model.alphas[j]
    # channel j acts on the kernel through <G'(0)(e_b) f_j, e_a>
    diff_mult = np.transpose(model.gprime[:n, :, :n], (1, 2, 0)).copy()
    return AmplitudeSDE(dim=n, drift_lin=drift_lin, drift_cubic=drift_cubic,
                        diff_add=diff_add, diff_mult=diff_mult)


def _require_degenerate(model: ModelSpec):
    if np.any(model.alphas[: model.n] != 0.0):
        raise InvalidModelError(
            "slow-noise-scaling reduction requires degenerate additive noise "
            "(no kernel channels)")
    model.check_degenerate_quadratic()


def _stable_noise_modes(model: ModelSpec) -> list[int]:
    return [i for i in range(model.n, model.n_noise) if model.alphas[i] != 0.0]


def _gprime_field(model: ModelSpec, state: np.ndarray, j: int) -> np.ndarray:
    """Full field ``G'(0)(state) f_j`` for a full-field ``state``."""
    return state @ model.gprime[:, j, :]


def _bc_pair_inverse(model: ModelSpec, i: int, w: np.ndarray) -> np.ndarray:
    """Kernel part of ``B`` applied to ``(I (x)s A_s)^{-1} (e_i (x)s w)``.

    ``i`` is a stable mode index (0-based), ``w`` a full field.  The
    pair ``e_i (x)s e_k`` is an eigenvector of the symmetrized operator
    with eigenvalue ``-(lam_i + lam_k)/2``; inverting and contracting
    with the bilinear form gives ``sum_k w_k * (-2/(lam_i + lam_k)) *
    P_c B(e_i, e_k)``, evaluated below as one bilinear application.
    """
    lam = model.lambdas
    scaled = np.asarray(w, float) * (-2.0 / (lam[i] + lam))
    e_i = np.zeros(model.n_modes)
    e_i[i] = 1.0
    return eval_B(model, e_i, scaled)[: model.n]


def derive_lbar(model: ModelSpec) -> np.ndarray:
    """Averaged linear drift of the kernel modes (slow noise scaling).

    Six contributions: the bare perturbation plus five corrections in
    which the stationary second moment ``alpha_i^2 / (2 lam_i)`` of each
    fast Ornstein-Uhlenbeck mode replaces its quadratic fluctuations.
    Every correction is quadratic in the pair (additive amplitudes,
    multiplicative coupling).
    """
    _require_degenerate(model)
    n = model.n
    lam = model.lambdas
    noise_modes = _stable_noise_modes(model)
    lbar = model.L[:n, :n].copy()
    eye_n = np.eye(n)

    for b in range(n):
        phi = kernel_embed(model, eye_n[b])
        col = np.zeros(n)
        for i in noise_modes:
            a2 = model.alphas[i] ** 2
            e_i = np.zeros(model.n_modes)
            e_i[i] = 1.0
            # feedback of the OU fluctuation through the kernel drift
            bc_phi_ei = kernel_embed(model, eval_B(model, phi, e_i)[:n])
            col += 2.0 * (a2 / lam[i] ** 2) * eval_B(model, bc_phi_ei, e_i)[:n]
            # mean stable response to B(Z, Z)
            inner = apply_stable_inverse(
                model, project(model, eval_B(model, e_i, e_i), "stable"))
            col -= (a2 / lam[i]) * eval_B(model, phi, inner)[:n]
            # symmetric-pair response to B(phi, Z) fluctuations
            w = project(model, eval_B(model, phi, e_i), "stable")
            col -= (a2 / lam[i]) * _bc_pair_inverse(model, i, w)
        for j in range(model.n_noise):
            aj = model.alphas[j]
            if aj == 0.0:
                continue
            # cross-variation of the kernel multiplicative noise with the
            # stable additive response (channel j forces mode j)
            g_phi = _gprime_field(model, phi, j)
            g_phi_c = kernel_embed(model, g_phi[:n])
            e_j = np.zeros(model.n_modes)
            e_j[j] = 0.0 if j < n else -aj / lam[j]   # A_s^{-1} G f_j
            col -= 2.0 * eval_B(model, g_phi_c, e_j)[:n]
            if j >= n:
                # symmetric-pair response to the multiplicative stable noise
                g_phi_s = project(model, g_phi, "stable")
                col -= aj * _bc_pair_inverse(model, j, g_phi_s)
        lbar[:, b] += col
    return lbar


@dataclass(frozen=True)
class SigmaForm:
    """Averaged diffusion form ``Sigma(phi)`` as explicit square families.

    ``v_maps[j]`` is the matrix of the phi-linear kernel vector of
    channel ``j``; ``w_vecs[i, j]`` the constant kernel vector of the
    (stable mode ``i``, channel ``j``) pair, weighted by the stationary
    variance ``w_weights[i] = alpha_i^2 / (2 lam_i)``.
    """

    dim: int
    v_maps: np.ndarray      # (channels, n, n): v_j(phi) = v_maps[j] @ phi
    w_vecs: np.ndarray      # (n_noise, channels, n)
    w_weights: np.ndarray   # (n_noise,) zero on kernel modes

    def sigma(self, phi: np.ndarray) -> np.ndarray:
        """Evaluate ``Sigma(phi)`` as an (n, n) PSD matrix."""
        phi = np.asarray(phi, float)
        vs = np.einsum("jab,b->ja", self.v_maps, phi)
        out = np.einsum("ja,jb->ab", vs, vs)
        out += np.einsum("i,ija,ijb->ab", self.w_weights, self.w_vecs, self.w_vecs)
        return out

    def quadratic_constants(self) -> tuple[float, float]:
        """Scalar specialization ``(s3, s4)`` for a 1-D kernel."""
        if self.dim != 1:
            raise DimensionMismatchError("scalar constants need dim == 1")
        s3 = float(np.sum(self.v_maps[:, 0, 0] ** 2))
        s4 = float(np.einsum("i,ij->", self.w_weights, self.w_vecs[:, :, 0] ** 2))
        return s3, s4


def derive_sigma_form(model: ModelSpec) -> SigmaForm:
    """Averaged diffusion of the kernel modes (slow noise scaling)."""
    _require_degenerate(model)
    n, J, N = model.n, model.n_noise, model.n_modes
    lam = model.lambdas
    eye_n = np.eye(n)

    v_maps = np.zeros((J, n, n))
    for j in range(J):
        aj = model.alphas[j]
        for b in range(n):
            phi = kernel_embed(model, eye_n[b])
            vec = _gprime_field(model, phi, j)[:n].copy()
            if aj != 0.0 and j >= n:
                g_fj = np.zeros(N)
                g_fj[j] = -aj / lam[j]   # A_s^{-1} G f_j
                vec -= 2.0 * eval_B(model, phi, g_fj)[:n]
            v_maps[j, :, b] = vec

    w_vecs = np.zeros((model.n_noise, J, n))
    w_weights = np.zeros(model.n_noise)
    for i in _stable_noise_modes(model):
        w_weights[i] = model.alphas[i] ** 2 / (2.0 * lam[i])
        e_i = np.zeros(N)
        e_i[i] = 1.0
        for j in range(J):
            aj = model.alphas[j]
            vec = _gprime_field(model, e_i, j)[:n].copy()
            if aj != 0.0:
                g_fj = np.zeros(N)
                g_fj[j] = aj
                vec -= _bc_pair_inverse(model, i, g_fj)
            w_vecs[i, j] = vec
    return SigmaForm(dim=n, v_maps=v_maps, w_vecs=w_vecs, w_weights=w_weights)


@dataclass(frozen=True)
class Case2Spec:
    """Slow-noise-scaling reduction bundle.

    ``constants`` holds the scalar coefficients when the kernel is
    one-dimensional: ``linear_drift`` (s1), ``cubic_drift`` (s2),
    ``noise_quadratic`` (s3), ``noise_constant`` (s4), all in
    orthonormal-mode units.
    """

    lbar: np.ndarray
    sigma_form: SigmaForm
    constants: dict = field(default_factory=dict)
    sde: AmplitudeSDE | None = None


def derive_case2_1d(model: ModelSpec) -> Case2Spec:
    """Scalar amplitude SDE for a one-dimensional kernel.

        dy = (s1 y + s2 y^3) dT + sqrt(s3 y^2 + s4) dB

    The returned :class:`AmplitudeSDE` realizes the same law with two
    independent channels (additive ``sqrt(s4)`` and linear
    multiplicative ``sqrt(s3)``), which is what the Euler-Maruyama
    driver consumes.
    """
    if model.n != 1:
        raise DimensionMismatchError(
            f"scalar reduction needs a 1-D kernel, model has n={model.n}")
    lbar = derive_lbar(model)
    form = derive_sigma_form(model)
    s1 = float(lbar[0, 0])
    s2 = float(2.0 * eval_F(model, [1.0], [1.0], [1.0])[0])
    s3, s4 = form.quadratic_constants()
    sde = AmplitudeSDE(
        dim=1,
        drift_lin=[[s1]],
        drift_cubic=np.full((1, 1, 1, 1), s2),
        diff_add=[[math.sqrt(s4)], [0.0]],
        diff_mult=[[[0.0]], [[math.sqrt(s3)]]],
    )
    constants = {"linear_drift": s1, "cubic_drift": s2,
                 "noise_quadratic": s3, "noise_constant": s4}
    return Case2Spec(lbar=lbar, sigma_form=form, constants=constants, sde=sde)


def spd_sqrt(S: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Symmetric PSD square root via the eigendecomposition.

    Eigenvalues in ``[-tol, 0)`` are clamped to zero; anything more
    negative raises ``NotPositiveSemidefiniteError``.
    """
    S = np.asarray(S, float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatchError("spd_sqrt expects a square matrix")
    if np.max(np.abs(S - S.T)) > tol * max(1.0, float(np.max(np.abs(S)))):
        raise NotPositiveSemidefiniteError("matrix is not symmetric")
    evals, evecs = np.linalg.eigh(0.5 * (S + S.T))
    if evals.min() < -tol:
        raise NotPositiveSemidefiniteError(
            f"matrix has eigenvalue {evals.min():.3e} below -{tol}")
    evals = np.clip(evals, 0.0, None)
    return (evecs * np.sqrt(evals)) @ evecs.T
