# Fused tridiagonal stepping kernel: rhs = B w, then Thomas solve A w = rhs.
# The A factorization is hoisted out of the step loop; no pivoting is needed
# because the theta-scheme matrices are strictly diagonally dominant M-matrices.

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite


def tridiag_matvec(const double[::1] dl, const double[::1] d, const double[::1] du, const double[::1] x):
    cdef Py_ssize_t n = d.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    out[0] = d[0] * x[0] + du[0] * x[1]
    for i in range(1, n - 1):
        out[i] = dl[i] * x[i - 1] + d[i] * x[i] + du[i] * x[i + 1]
    out[n - 1] = dl[n - 1] * x[n - 2] + d[n - 1] * x[n - 1]
    return out_arr


def tridiag_solve(const double[::1] dl, const double[::1] d, const double[::1] du, const double[::1] b):
    cdef Py_ssize_t n = d.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x_arr = np.empty(n)
    cdef double[::1] x = x_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cp_arr = np.empty(n)
    cdef double[::1] cp = cp_arr
    cdef Py_ssize_t i
    cdef double denom
    cp[0] = du[0] / d[0]
    x[0] = b[0] / d[0]
    for i in range(1, n):
        denom = d[i] - dl[i] * cp[i - 1]
        cp[i] = du[i] / denom
        x[i] = (b[i] - dl[i] * x[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        x[i] = x[i] - cp[i] * x[i + 1]
    return x_arr


def run_theta_steps(const double[::1] a_dl, const double[::1] a_d, const double[::1] a_du,
                    const double[::1] b_dl, const double[::1] b_d, const double[::1] b_du,
                    const double[::1] w0, Py_ssize_t nsteps):
    cdef Py_ssize_t n = a_d.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_arr = np.array(w0, dtype=np.float64, copy=True)
    cdef double[::1] w = w_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rhs_arr = np.empty(n)
    cdef double[::1] rhs = rhs_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cp_arr = np.empty(n)
    cdef double[::1] cp = cp_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] inv_arr = np.empty(n)
    cdef double[::1] inv_denom = inv_arr
    cdef Py_ssize_t step, i
    cdef double denom

    # Thomas prefactorization of A (reused every step)
    inv_denom[0] = 1.0 / a_d[0]
    cp[0] = a_du[0] * inv_denom[0]
    for i in range(1, n):
        denom = a_d[i] - a_dl[i] * cp[i - 1]
        inv_denom[i] = 1.0 / denom
        cp[i] = a_du[i] * inv_denom[i]

    for step in range(nsteps):
        rhs[0] = b_d[0] * w[0] + b_du[0] * w[1]
        for i in range(1, n - 1):
            rhs[i] = b_dl[i] * w[i - 1] + b_d[i] * w[i] + b_du[i] * w[i + 1]
        rhs[n - 1] = b_dl[n - 1] * w[n - 2] + b_d[n - 1] * w[n - 1]

        w[0] = rhs[0] * inv_denom[0]
        for i in range(1, n):
            w[i] = (rhs[i] - a_dl[i] * w[i - 1]) * inv_denom[i]
        for i in range(n - 2, -1, -1):
            w[i] = w[i] - cp[i] * w[i + 1]

        for i in range(n):
            if not isfinite(w[i]):
                return w_arr, step, i
    return w_arr, -1, -1
