"""Pure-NumPy kernel backend (LAPACK-banded solves via SciPy)."""

import numpy as np
from scipy.linalg import solve_banded


def tridiag_matvec(dl, d, du, x):
    out = d * x
    out[1:] += dl[1:] * x[:-1]
    out[:-1] += du[:-1] * x[1:]
    return out


def _as_banded(dl, d, du):
    n = d.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = du[:-1]
    ab[1] = d
    ab[2, :-1] = dl[1:]
    return ab


def tridiag_solve(dl, d, du, b):
    return solve_banded((1, 1), _as_banded(dl, d, du), b, check_finite=False)


def run_theta_steps(a_dl, a_d, a_du, b_dl, b_d, b_du, w, nsteps):
    ab = _as_banded(a_dl, a_d, a_du)
    w = np.array(w, dtype=float, copy=True)
    for step in range(int(nsteps)):
        rhs = tridiag_matvec(b_dl, b_d, b_du, w)
        w = solve_banded((1, 1), ab, rhs, check_finite=False)
        if not np.isfinite(w).all():
            bad = int(np.flatnonzero(~np.isfinite(w))[0])
            return w, step, bad
    return w, -1, -1
