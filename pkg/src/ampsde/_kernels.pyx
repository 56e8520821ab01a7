# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled time-stepping kernels.

Same chunk semantics as ``_reference``: exponential Euler for the full
field, Euler-Maruyama for the reduced state, one fast step at a time,
state arrays updated in place.  Tensors arrive pre-scaled (see
``_reference.build_sim_tensors``); normal draws are generated by the
caller so both backends consume identical streams.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef cnp.float64_t f64
ctypedef cnp.int64_t i64


cdef inline void _field_step(double* u, double* incr, double* bwork,
                             const double* E, const double* L_dt,
                             bint l_diag, const double* L_dt_diag,
                             const i64* b_ii, const i64* b_jj,
                             const i64* b_kk, const double* b_vv2,
                             Py_ssize_t nnz,
                             const double* g, const i64* g_active,
                             Py_ssize_t n_active,
                             const double* add_scale, double mult_scale,
                             const double* xi,
                             Py_ssize_t N, Py_ssize_t J) nogil:
    cdef Py_ssize_t k, l, t, ja, j, i
    cdef double s, c, ui
    for k in range(N):
        bwork[k] = 0.0
    for t in range(nnz):
        bwork[b_kk[t]] += b_vv2[t] * u[b_ii[t]] * u[b_jj[t]]
    if l_diag:
        for k in range(N):
            incr[k] = u[k] + bwork[k] + L_dt_diag[k] * u[k]
    else:
        for k in range(N):
            s = 0.0
            for l in range(N):
                s += L_dt[k * N + l] * u[l]
            incr[k] = u[k] + bwork[k] + s
    for j in range(J):
        incr[j] += add_scale[j] * xi[j]
    for ja in range(n_active):
        j = g_active[ja]
        c = mult_scale * xi[j]
        if c != 0.0:
            for i in range(N):
                ui = c * u[i]
                if ui != 0.0:
                    for k in range(N):
                        incr[k] += ui * g[(i * J + j) * N + k]
    for k in range(N):
        u[k] = E[k] * incr[k]


def case1_chunk(double[:, ::1] u, double[:, ::1] x,
                double[:, :, ::1] normals,
                double[::1] E, double[:, ::1] L_dt,
                bint l_diag, double[::1] L_dt_diag,
                i64[::1] b_ii, i64[::1] b_jj, i64[::1] b_kk, double[::1] b_vv2,
                double[:, :, ::1] g, i64[::1] g_active,
                double[::1] add_scale, double mult_scale,
                double[:, ::1] x_lin_dt, double[:, :, :, ::1] x_cubic_dt,
                double[:, ::1] x_add, double[:, :, ::1] x_mult,
                double eps_sqrt_dt):
    cdef Py_ssize_t P = u.shape[0]
    cdef Py_ssize_t N = u.shape[1]
    cdef Py_ssize_t n = x.shape[1]
    cdef Py_ssize_t J = normals.shape[2]
    cdef Py_ssize_t M = normals.shape[1]
    cdef Py_ssize_t nnz = b_vv2.shape[0]
    cdef Py_ssize_t n_active = g_active.shape[0]
    cdef cnp.ndarray[f64, ndim=1] work = np.empty(2 * N + 2 * n, dtype=np.float64)
    cdef double* bwork = <double*> cnp.PyArray_DATA(work)
    cdef double* incr = bwork + N
    cdef double* xd = bwork + 2 * N
    cdef double* xold = bwork + 2 * N + n
    cdef Py_ssize_t p, m, a, b, c_, d, j
    cdef double s, db
    with nogil:
        for p in range(P):
            for m in range(M):
                _field_step(&u[p, 0], incr, bwork, &E[0],
                            &L_dt[0, 0], l_diag, &L_dt_diag[0],
                            &b_ii[0], &b_jj[0], &b_kk[0], &b_vv2[0], nnz,
                            &g[0, 0, 0], &g_active[0] if n_active else NULL,
                            n_active, &add_scale[0], mult_scale,
                            &normals[p, m, 0], N, J)
                for a in range(n):
                    xold[a] = x[p, a]
                for a in range(n):
                    s = 0.0
                    for b in range(n):
                        s += x_lin_dt[a, b] * xold[b]
                    for b in range(n):
                        for c_ in range(n):
                            for d in range(n):
                                s += (x_cubic_dt[a, b, c_, d]
                                      * xold[b] * xold[c_] * xold[d])
                    xd[a] = s
                for j in range(J):
                    db = eps_sqrt_dt * normals[p, m, j]
                    if db != 0.0:
                        for a in range(n):
                            s = x_add[j, a]
                            for b in range(n):
                                s += x_mult[j, a, b] * xold[b]
                            xd[a] += s * db
                for a in range(n):
                    x[p, a] += xd[a]


def case2_chunk(double[:, ::1] u, double[::1] y, double[:, ::1] z,
                double[:, ::1] trans, double[:, :, ::1] normals,
                double[::1] E, double[:, ::1] L_dt,
                bint l_diag, double[::1] L_dt_diag,
                i64[::1] b_ii, i64[::1] b_jj, i64[::1] b_kk, double[::1] b_vv2,
                double[:, :, ::1] g, i64[::1] g_active,
                double[::1] add_scale, double mult_scale,
                double[::1] E_chan, double[::1] z_add,
                double y_lin_dt, double y_cubic_dt,
                double[::1] y_v, double[:, ::1] y_w,
                double eps_sqrt_dt):
    cdef Py_ssize_t P = u.shape[0]
    cdef Py_ssize_t N = u.shape[1]
    cdef Py_ssize_t J = normals.shape[2]
    cdef Py_ssize_t M = normals.shape[1]
    cdef Py_ssize_t nnz = b_vv2.shape[0]
    cdef Py_ssize_t n_active = g_active.shape[0]
    cdef cnp.ndarray[f64, ndim=1] work = np.empty(2 * N, dtype=np.float64)
    cdef double* bwork = <double*> cnp.PyArray_DATA(work)
    cdef double* incr = bwork + N
    cdef Py_ssize_t p, m, j, i
    cdef double yp, gam, noise, zh
    with nogil:
        for p in range(P):
            for m in range(M):
                _field_step(&u[p, 0], incr, bwork, &E[0],
                            &L_dt[0, 0], l_diag, &L_dt_diag[0],
                            &b_ii[0], &b_jj[0], &b_kk[0], &b_vv2[0], nnz,
                            &g[0, 0, 0], &g_active[0] if n_active else NULL,
                            n_active, &add_scale[0], mult_scale,
                            &normals[p, m, 0], N, J)
                yp = y[p]
                noise = 0.0
                for j in range(J):
                    gam = yp * y_v[j]
                    for i in range(J):
                        zh = z[p, i] + trans[p, i]
                        gam += zh * y_w[i, j]
                    noise += gam * normals[p, m, j]
                y[p] = (yp + y_lin_dt * yp + y_cubic_dt * yp * yp * yp
                        + eps_sqrt_dt * noise)
                for j in range(J):
                    z[p, j] = E_chan[j] * (z[p, j] + z_add[j] * normals[p, m, j])
                    trans[p, j] = E_chan[j] * trans[p, j]
