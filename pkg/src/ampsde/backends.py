"""Backend selection: compiled Cython kernels with a numpy fallback.

The compiled module is optional; if it failed to build (or the
environment variable ``AMPSDE_BACKEND=reference`` forces it off) the
pure-numpy implementation in ``_reference`` is used.  Both backends
consume identical pre-scaled tensors and identical normal draws, so
they agree to floating-point reduction order.
"""

from __future__ import annotations

import os

import numpy as np

from . import _reference

try:  # pragma: no cover - exercised only where the extension built
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover
    _compiled = None

__all__ = ["have_compiled", "active_backend", "case1_chunk", "case2_chunk"]


def have_compiled() -> bool:
    return _compiled is not None


def active_backend(override: str | None = None) -> str:
    """Resolve the backend name: 'compiled' or 'reference'."""
    choice = override or os.environ.get("AMPSDE_BACKEND", "auto")
    if choice == "reference":
        return "reference"
    if choice == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled backend requested but not built")
        return "compiled"
    if choice == "auto":
        return "compiled" if _compiled is not None else "reference"
    raise ValueError(f"unknown backend {choice!r}")


def _l_diag(st) -> tuple[bool, np.ndarray]:
    diag = np.ascontiguousarray(np.diag(st.L_dt))
    off = st.L_dt - np.diag(diag)
    return bool(np.count_nonzero(off) == 0), diag


def case1_chunk(st, u, x, normals, backend: str) -> None:
    if backend == "reference":
        _reference.case1_chunk(st, u, x, normals)
        return
    l_is_diag, l_diag = _l_diag(st)
    _compiled.case1_chunk(
        u, x, normals, st.E, st.L_dt, l_is_diag, l_diag,
        st.b_ii, st.b_jj, st.b_kk, st.b_vv2,
        st.g, st.g_active.astype(np.int64), st.add_scale, st.mult_scale,
        st.x_lin_dt, st.x_cubic_dt, st.x_add, st.x_mult, st.eps_sqrt_dt)


def case2_chunk(st, u, y, z, trans, normals, backend: str) -> None:
    if backend == "reference":
        _reference.case2_chunk(st, u, y, z, trans, normals)
        return
    l_is_diag, l_diag = _l_diag(st)
    _compiled.case2_chunk(
        u, y, z, trans, normals, st.E, st.L_dt, l_is_diag, l_diag,
        st.b_ii, st.b_jj, st.b_kk, st.b_vv2,
        st.g, st.g_active.astype(np.int64), st.add_scale, st.mult_scale,
        st.E_chan, st.z_add,
        st.y_lin_dt, st.y_cubic_dt, st.y_v, st.y_w, st.eps_sqrt_dt)
