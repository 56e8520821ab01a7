"""Independent oracles for the test suite.

Everything here recomputes model tensors and averaged operators through
a *different* route than the production code: Gauss-Legendre quadrature
instead of closed-form integrals, and dense Sylvester solves instead of
index formulas for the symmetric-pair inverse.  Nothing in the package
imports this module.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from ampsde.spectral import ModelSpec, SparseBilinear

_PI = math.pi


def gauss_nodes(n_nodes: int = 256):
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    return 0.5 * _PI * (x + 1.0), 0.5 * _PI * w


def triple_sine_quadrature(a: int, b: int, c: int, n_nodes: int = 256) -> float:
    x, w = gauss_nodes(n_nodes)
    return float(np.sum(w * np.sin(a * x) * np.sin(b * x) * np.sin(c * x)))


def b_coeff_quadrature(i: int, j: int, k: int, n_nodes: int = 256) -> float:
    """<B(e_i, e_j), e_k> for B(u,v) = (u v' + v u')/2 by quadrature."""
    x, w = gauss_nodes(n_nodes)
    s = math.sqrt(2.0 / _PI)
    ei, ej, ek = s * np.sin(i * x), s * np.sin(j * x), s * np.sin(k * x)
    dei, dej = s * i * np.cos(i * x), s * j * np.cos(j * x)
    return float(np.sum(w * 0.5 * (ei * dej + ej * dei) * ek))


def g_coeff_quadrature(i: int, j: int, k: int, alpha_j: float,
                       n_nodes: int = 256) -> float:
    """<G'(0)(e_i) f_j, e_k> = alpha_j <e_i e_j, e_k> by quadrature."""
    x, w = gauss_nodes(n_nodes)
    s = math.sqrt(2.0 / _PI)
    return alpha_j * float(np.sum(
        w * (s * np.sin(i * x)) * (s * np.sin(j * x)) * (s * np.sin(k * x))))


def build_burgers_model_quadrature(nu: float, alphas, n_modes: int = 16,
                                   n_nodes: int = 256) -> ModelSpec:
    """Burgers model with every tensor entry computed by quadrature."""
    N = n_modes
    k = np.arange(1, N + 1)
    lambdas = (k * k - 1).astype(float)
    entries = []
    for i in range(1, N + 1):
        for j in range(i, N + 1):
            for out in {i + j, abs(i - j)}:
                if 1 <= out <= N:
                    v = b_coeff_quadrature(i, j, out, n_nodes)
                    if abs(v) > 1e-13:
                        entries.append((i - 1, j - 1, out - 1, v))
    B = SparseBilinear.from_entries(N, entries)
    al = np.zeros(N)
    al[:3] = alphas
    g = np.zeros((N, 3, N))
    for j in range(3):
        if al[j] == 0.0:
            continue
        for i in range(N):
            for kk in range(N):
                if (i + j + kk + 3) % 2 == 1:
                    g[i, j, kk] = g_coeff_quadrature(i + 1, j + 1, kk + 1,
                                                     al[j], n_nodes)
    return ModelSpec(n=1, lambdas=lambdas, L=nu * np.eye(N), B=B, alphas=al,
                     gprime=g, alpha_exp=0.25, name="burgers-quadrature")


# ---------------------------------------------------------------------------
# dense averaged-operator oracle

def _sym_pair_inverse_dense(lambdas: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Solve (I (x)s A) Y = X on symmetric matrices via Sylvester.

    With A = diag(-lambdas) the operator is Y -> (A Y + Y A)/2, so the
    equation is a (diagonal) Sylvester system solved by scipy.
    """
    A = np.diag(-lambdas)
    return scipy.linalg.solve_sylvester(0.5 * A, 0.5 * A, X)


def _bc_dense(Bd: np.ndarray, X: np.ndarray, n: int) -> np.ndarray:
    """Kernel part of the bilinear form applied to a symmetric 2-tensor."""
    return np.einsum("ik,ikm->m", X, Bd[:, :, :n])


def lbar_dense_oracle(model: ModelSpec) -> np.ndarray:
    """Averaged linear drift recomputed with dense tensors.

    Same six-term formula as the production code but every operator is
    materialized: the bilinear tensor densely, the symmetric-pair
    inverse through a Sylvester solve.
    """
    n, N = model.n, model.n_modes
    lam = model.lambdas
    Bd = model.B.to_dense()
    lbar = model.L[:n, :n].copy()
    for b in range(n):
        phi = np.zeros(N)
        phi[b] = 1.0
        col = np.zeros(n)
        for i in range(n, model.n_noise):
            a2 = model.alphas[i] ** 2
            if a2 == 0.0:
                continue
            e_i = np.zeros(N)
            e_i[i] = 1.0
            b_phi_ei = np.einsum("ijk,i,j->k", Bd, phi, e_i)
            col += 2.0 * (a2 / lam[i] ** 2) * np.einsum(
                "ijk,i,j->k", Bd, np.r_[b_phi_ei[:n], np.zeros(N - n)], e_i)[:n]
            b_ei_ei = np.einsum("ijk,i,j->k", Bd, e_i, e_i)
            b_ei_ei[:n] = 0.0
            inv = np.zeros(N)
            inv[n:] = -b_ei_ei[n:] / lam[n:]
            col -= (a2 / lam[i]) * np.einsum("ijk,i,j->k", Bd, phi, inv)[:n]
            w = np.einsum("ijk,i,j->k", Bd, phi, e_i)
            w[:n] = 0.0
            X = 0.5 * (np.outer(e_i, w) + np.outer(w, e_i))
            col -= (a2 / lam[i]) * _bc_dense(Bd, _sym_pair_inverse_dense(lam, X), n)
        for j in range(model.n_noise):
            aj = model.alphas[j]
            if aj == 0.0 or j < n:
                continue
            g_phi = phi @ model.gprime[:, j, :]
            g_phi_c = np.r_[g_phi[:n], np.zeros(N - n)]
            asg = np.zeros(N)
            asg[j] = -aj / lam[j]
            col -= 2.0 * np.einsum("ijk,i,j->k", Bd, g_phi_c, asg)[:n]
            g_phi_s = g_phi.copy()
            g_phi_s[:n] = 0.0
            e_j = np.zeros(N)
            e_j[j] = 1.0
            X = 0.5 * (np.outer(e_j, g_phi_s) + np.outer(g_phi_s, e_j))
            col -= aj * _bc_dense(Bd, _sym_pair_inverse_dense(lam, X), n)
        lbar[:, b] += col
    return lbar


def sigma_constants_dense_oracle(model: ModelSpec) -> tuple[float, float]:
    """(s3, s4) for a 1-D kernel recomputed with dense tensors."""
    n, N = model.n, model.n_modes
    assert n == 1
    lam = model.lambdas
    Bd = model.B.to_dense()
    phi = np.zeros(N)
    phi[0] = 1.0
    s3 = 0.0
    for j in range(model.n_noise):
        vec = (phi @ model.gprime[:, j, :])[0]
        aj = model.alphas[j]
        if aj != 0.0 and j >= n:
            asg = np.zeros(N)
            asg[j] = -aj / lam[j]
            vec -= 2.0 * np.einsum("ijk,i,j->k", Bd, phi, asg)[0]
        s3 += vec ** 2
    s4 = 0.0
    for i in range(n, model.n_noise):
        if model.alphas[i] == 0.0:
            continue
        weight = model.alphas[i] ** 2 / (2.0 * lam[i])
        e_i = np.zeros(N)
        e_i[i] = 1.0
        for j in range(model.n_noise):
            vec = (e_i @ model.gprime[:, j, :])[0]
            aj = model.alphas[j]
            if aj != 0.0:
                g_fj = np.zeros(N)
                g_fj[j] = aj
                X = 0.5 * (np.outer(e_i, g_fj) + np.outer(g_fj, e_i))
                vec -= _bc_dense(Bd, _sym_pair_inverse_dense(lam, X), n)[0]
            s4 += weight * vec ** 2
    return float(s3), float(s4)


# ---------------------------------------------------------------------------
# synthetic models

def toy_two_mode_model(b: float = 0.5, alpha: float = 0.5,
                       lam2: float = 1.0) -> ModelSpec:
    """Minimal kernel+stable pair: B(e1,e2) = b e1, additive noise on e2.

    Exactly solvable: the kernel mode obeys d(phi) =
    2 b eps^{-1} Z phi dT with Z the rescaled stable response, so
    E[phi(T)] = phi(0) exp(2 b^2 alpha^2 T / lam2^2) and
    E[log phi(T)] = log phi(0).
    """
    B = SparseBilinear.from_entries(2, [(0, 1, 0, b)])
    return ModelSpec(n=1, lambdas=np.array([0.0, lam2]), L=np.zeros((2, 2)),
                     B=B, alphas=np.array([0.0, alpha]),
                     gprime=np.zeros((2, 2, 2)), alpha_exp=0.25, name="toy")


def random_multikernel_model(seed: int = 0, n: int = 2, n_modes: int = 6,
                             n_noise: int = 4) -> ModelSpec:
    """Random sparse model with a 2-D kernel for symmetry/PSD property tests.

    Respects kernel annihilation (no B_{ijm} with i, j, m all in the
    kernel) and the degenerate-quadratic condition (no B_{kkm} with k
    stable, m in the kernel); additive noise only on stable channels.
    """
    rng = np.random.default_rng(seed)
    entries = []
    for i in range(n_modes):
        for j in range(i, n_modes):
            for m in range(n_modes):
                if i < n and j < n and m < n:
                    continue
                if i == j and i >= n and m < n:
                    continue
                if rng.random() < 0.35:
                    entries.append((i, j, m, float(rng.standard_normal())))
    lambdas = np.concatenate([np.zeros(n),
                              np.sort(rng.uniform(1.0, 6.0, n_modes - n))])
    alphas = np.zeros(n_modes)
    alphas[n:n_noise] = rng.uniform(0.3, 1.0, n_noise - n)
    g = 0.5 * rng.standard_normal((n_modes, n_noise, n_modes))
    L = 0.3 * rng.standard_normal((n, n))
    Lfull = np.zeros((n_modes, n_modes))
    Lfull[:n, :n] = L
    Lfull[n:, n:] = -np.eye(n_modes - n)
    return ModelSpec(n=n, lambdas=lambdas, L=Lfull,
                     B=SparseBilinear.from_entries(n_modes, entries),
                     alphas=alphas, gprime=g, alpha_exp=0.25, name="random")
