"""Truncated eigenbasis representation of the abstract model.

The state space is spanned by eigenfunctions ``e_1 .. e_N`` of a
non-positive self-adjoint operator ``A`` with ``A e_k = -lam_k e_k``,
``lam_1 = .. = lam_n = 0`` (the kernel, or dominant, modes) and
``lam_k > 0`` for ``k > n`` (the stable modes).  A field is a plain
1-D float array of its ``N`` basis coefficients; a kernel vector is a
1-D array of the first ``n`` coefficients.  All operators used by the
reduction and the simulators are small tensors stored on the model:

* ``L``      -- dense matrix of the order-``eps^2`` linear perturbation,
* ``B``      -- sparse symmetric bilinear tensor ``B_ijk = <B(e_i,e_j), e_k>``,
* ``alphas`` -- additive noise channel amplitudes (``G f_k = alphas_k e_k``),
* ``gprime`` -- multiplicative coupling ``g[i,j,k] = <G'(0)(e_i) f_j, e_k>``.

Everything here is pure and side-effect free; a built ``ModelSpec`` is
immutable and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BlowUpError,
    DimensionMismatchError,
    InvalidModelError,
    SingularOperatorError,
)

__all__ = [
    "SparseBilinear",
    "ModelSpec",
    "project",
    "h_alpha_norm",
    "eval_B",
    "eval_F",
    "apply_stable_inverse",
    "semigroup_step",
    "kernel_embed",
]


@dataclass(frozen=True)
class SparseBilinear:
    """Coordinate-sparse symmetric bilinear tensor.

    Entries are stored once per unordered index pair with ``i <= j``
    (0-based).  ``vals[m]`` is the tensor entry ``B_{i,j,k}``; symmetry in
    ``(i, j)`` is implied, so ``apply`` adds the transposed contribution
    for off-diagonal pairs.
    """

    n_modes: int
    ii: np.ndarray
    jj: np.ndarray
    kk: np.ndarray
    vals: np.ndarray

    @classmethod
    def from_entries(cls, n_modes: int, entries) -> "SparseBilinear":
        """Build from an iterable of ``(i, j, k, value)`` 0-based entries.

        Duplicate unordered pairs must agree (a mismatch means the input
        tensor was not symmetric), and exact zeros are dropped.
        """
        seen: dict[tuple[int, int, int], float] = {}
        for i, j, k, v in entries:
            if not (0 <= i < n_modes and 0 <= j < n_modes and 0 <= k < n_modes):
                raise DimensionMismatchError(
                    f"tensor index ({i},{j},{k}) outside 0..{n_modes - 1}")
            key = (min(i, j), max(i, j), k)
            if key in seen:
                if abs(seen[key] - v) > 1e-12 * max(1.0, abs(v)):
                    raise InvalidModelError(
                        f"asymmetric bilinear entries at {key}: "
                        f"{seen[key]} vs {v}")
            else:
                seen[key] = float(v)
        keys = sorted(k for k, v in seen.items() if v != 0.0)
        ii = np.array([k[0] for k in keys], dtype=np.int64)
        jj = np.array([k[1] for k in keys], dtype=np.int64)
        kk = np.array([k[2] for k in keys], dtype=np.int64)
        vals = np.array([seen[k] for k in keys], dtype=np.float64)
        return cls(n_modes, ii, jj, kk, vals)

    @property
    def nnz(self) -> int:
        return self.vals.size

    def apply(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Evaluate ``B(u, v)`` for batched or single fields.

        ``u`` and ``v`` have shape ``(..., n_modes)``; the result matches.
        """
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        out = np.zeros(np.broadcast_shapes(u.shape, v.shape), dtype=np.float64)
        ui, uj = u[..., self.ii], u[..., self.jj]
        vi, vj = v[..., self.ii], v[..., self.jj]
        # off-diagonal pairs carry both (i,j) and (j,i); the 0.5 on the
        # diagonal cancels the double count built into `both`
        both = ui * vj + uj * vi
        both[..., self.ii == self.jj] *= 0.5
        contrib = self.vals * both
        if out.ndim == 1:
            np.add.at(out, self.kk, contrib)
        else:
            flat = out.reshape(-1, self.n_modes)
            cflat = contrib.reshape(-1, self.vals.size)
            for k in range(self.vals.size):  # nnz is small; loop is fine
                flat[:, self.kk[k]] += cflat[:, k]
        return out

    def to_dense(self) -> np.ndarray:
        """Full ``(N, N, N)`` tensor; intended for small-N cross checks."""
        dense = np.zeros((self.n_modes,) * 3)
        for i, j, k, v in zip(self.ii, self.jj, self.kk, self.vals):
            dense[i, j, k] = v
            dense[j, i, k] = v
        return dense


def _as_field(model: "ModelSpec", coeffs) -> np.ndarray:
    arr = np.asarray(coeffs, dtype=np.float64)
    if arr.shape[-1] != model.n_modes:
        raise DimensionMismatchError(
            f"field has {arr.shape[-1]} coefficients, model has {model.n_modes}")
    return arr


def _as_kernel(model: "ModelSpec", coeffs) -> np.ndarray:
    arr = np.asarray(coeffs, dtype=np.float64)
    if arr.shape[-1] != model.n:
        raise DimensionMismatchError(
            f"kernel vector has {arr.shape[-1]} coefficients, expected {model.n}")
    return arr


@dataclass(frozen=True)
class ModelSpec:
    """Immutable spectral model: spectrum, drift, bilinearity, noise.

    Parameters
    ----------
    n : int
        Kernel dimension (count of zero eigenvalues).
    lambdas : array, shape (N,)
        Eigenvalues of ``-A``; exactly the first ``n`` vanish, the rest
        are positive and nondecreasing.
    L : array, shape (N, N)
        Linear drift of the slow perturbation (enters as ``eps^2 L u``).
    B : SparseBilinear
        Symmetric quadratic interaction tensor.
    alphas : array, shape (N,)
        Additive noise amplitudes per channel; zero beyond ``n_noise``.
    gprime : array, shape (N, n_noise, N)
        Multiplicative coupling ``<G'(0)(e_i) f_j, e_k>``.
    alpha_exp : float
        Index of the graded norm used for error metrics and guards.
    """

    n: int
    lambdas: np.ndarray
    L: np.ndarray
    B: SparseBilinear
    alphas: np.ndarray
    gprime: np.ndarray
    alpha_exp: float
    name: str = "spectral"
    _skip_checks: bool = field(default=False, repr=False)

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=np.float64)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "L", np.asarray(self.L, dtype=np.float64))
        object.__setattr__(self, "alphas", np.asarray(self.alphas, dtype=np.float64))
        object.__setattr__(self, "gprime", np.asarray(self.gprime, dtype=np.float64))
        if self._skip_checks:
            return
        N = lam.size
        if not (1 <= self.n < N):
            raise InvalidModelError(f"kernel dimension {self.n} not in 1..{N - 1}")
        if np.any(lam[: self.n] != 0.0):
            raise InvalidModelError("kernel eigenvalues must vanish exactly")
        if np.any(lam[self.n:] <= 0.0):
            raise InvalidModelError("stable eigenvalues must be positive")
        if np.any(np.diff(lam) < 0.0):
            raise InvalidModelError("eigenvalues must be nondecreasing")
        if self.L.shape != (N, N):
            raise InvalidModelError(f"L must be ({N},{N}), got {self.L.shape}")
        if self.alphas.shape != (N,):
            raise InvalidModelError("alphas must have one entry per mode")
        if self.gprime.ndim != 3 or self.gprime.shape[0] != N or self.gprime.shape[2] != N:
            raise InvalidModelError("gprime must have shape (N, n_noise, N)")
        if np.any(self.alphas[self.n_noise:] != 0.0):
            raise InvalidModelError("additive amplitudes beyond n_noise must vanish")
        if not (np.all(np.isfinite(self.L)) and np.all(np.isfinite(self.gprime))):
            raise InvalidModelError("model tensors must be finite")
        self._check_kernel_annihilation()

    def _check_kernel_annihilation(self, tol: float = 1e-12):
        # quadratic interactions of kernel modes must not feed the kernel
        rng = np.random.default_rng(0)
        probes = rng.standard_normal((8, self.n))
        for a in probes:
            fld = kernel_embed(self, a)
            res = self.B.apply(fld, fld)[: self.n]
            if np.max(np.abs(res)) > tol * max(1.0, float(a @ a)):
                raise InvalidModelError(
                    "kernel self-interaction does not vanish: "
                    f"|P_c B(a,a)| = {np.max(np.abs(res)):.3e}")

    @property
    def n_modes(self) -> int:
        return int(self.lambdas.size)

    @property
    def n_noise(self) -> int:
        return int(self.gprime.shape[1])

    @property
    def rho(self) -> float:
        """Spectral gap: smallest stable eigenvalue."""
        return float(self.lambdas[self.n])

    @property
    def norm_weights(self) -> np.ndarray:
        """Per-mode weights ``(lam_k + 1)^alpha`` of the graded norm."""
        return (self.lambdas + 1.0) ** self.alpha_exp

    def check_degenerate_quadratic(self, tol: float = 1e-12) -> None:
        """Require ``P_c B(e_k, e_k) = 0`` for every stable mode ``k``.

        The slow-noise-scaling reduction needs this; concrete models
        either satisfy it structurally or cannot use that pipeline.
        """
        mask = (self.B.ii == self.B.jj) & (self.B.ii >= self.n) & (self.B.kk < self.n)
        if np.any(np.abs(self.B.vals[mask]) > tol):
            raise InvalidModelError(
                "stable-mode self-interactions feed the kernel; "
                "the slow-noise-scaling reduction does not apply")


def project(model: ModelSpec, coeffs, part: str) -> np.ndarray:
    """Orthogonal projection onto the kernel or stable subspace.

    ``part`` is ``"kernel"`` or ``"stable"``; the two parts sum back to
    the input exactly.
    """
    arr = _as_field(model, coeffs)
    out = arr.copy()
    if part == "kernel":
        out[..., model.n:] = 0.0
    elif part == "stable":
        out[..., : model.n] = 0.0
    else:
        raise ValueError(f"part must be 'kernel' or 'stable', got {part!r}")
    return out


def h_alpha_norm(model: ModelSpec, coeffs, alpha: float | None = None) -> float:
    """Graded norm ``(sum c_k^2 (lam_k + 1)^alpha)^(1/2)``.

    Defaults to the model's stored index; ``alpha = 0`` gives the
    Euclidean norm.  Non-finite coefficients raise ``BlowUpError``.
    """
    arr = _as_field(model, coeffs)
    if not np.all(np.isfinite(arr)):
        raise BlowUpError("field contains NaN/Inf")
    a = model.alpha_exp if alpha is None else alpha
    w = (model.lambdas + 1.0) ** a
    return np.sqrt(np.sum(arr * arr * w, axis=-1))


def eval_B(model: ModelSpec, u, v) -> np.ndarray:
    """Symmetric bilinear interaction ``B(u, v)`` as a full field."""
    return model.B.apply(_as_field(model, u), _as_field(model, v))


def apply_stable_inverse(model: ModelSpec, coeffs) -> np.ndarray:
    """Apply ``A_s^{-1}``: zero on the kernel, ``-1/lam_k`` on stable modes.

    The sign follows ``A e_k = -lam_k e_k``; every derived coefficient in
    the reduction inherits it from here.
    """
    arr = _as_field(model, coeffs)
    lam_s = model.lambdas[model.n:]
    if np.any(lam_s == 0.0):
        raise SingularOperatorError("zero stable eigenvalue")
    out = np.zeros_like(arr)
    out[..., model.n:] = -arr[..., model.n:] / lam_s
    return out


def _f_single(model: ModelSpec, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Unsymmetrized ``-P_c B(a, A_s^{-1} B_s(b, c))`` for kernel args."""
    bs = project(model, eval_B(model, kernel_embed(model, b), kernel_embed(model, c)),
                 "stable")
    inner = apply_stable_inverse(model, bs)
    return -eval_B(model, kernel_embed(model, a), inner)[: model.n]


def eval_F(model: ModelSpec, u, v, w) -> np.ndarray:
    """Cubic interaction of kernel modes through the slaved stable modes.

    Returns the symmetrization over argument orderings of
    ``-P_c B(u, A_s^{-1} B_s(v, w))`` as a kernel vector.  The base
    expression is already symmetric in its last two arguments, so three
    rotations suffice for the full six-permutation symmetrization.
    """
    a = _as_kernel(model, u)
    b = _as_kernel(model, v)
    c = _as_kernel(model, w)
    total = _f_single(model, a, b, c) + _f_single(model, b, a, c) + _f_single(model, c, a, b)
    return total / 3.0


def semigroup_step(model: ModelSpec, coeffs, t: float) -> np.ndarray:
    """Exact linear flow: multiply mode ``k`` by ``exp(-lam_k t)``.

    Kernel coefficients are unchanged.  ``t < 0`` is a domain error.
    """
    if t < 0:
        raise ValueError(f"semigroup time must be nonnegative, got {t}")
    arr = _as_field(model, coeffs)
    return arr * np.exp(-model.lambdas * t)


def kernel_embed(model: ModelSpec, kernel_coeffs) -> np.ndarray:
    """Embed a kernel vector as a full field with zero stable part."""
    kv = _as_kernel(model, kernel_coeffs)
    out = np.zeros(kv.shape[:-1] + (model.n_modes,), dtype=np.float64)
    out[..., : model.n] = kv
    return out
