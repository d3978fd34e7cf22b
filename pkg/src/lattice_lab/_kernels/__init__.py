"""Hot stepping kernels with a compiled core and a pure-NumPy fallback.

The time-stepping loop of the solver dominates runtime, so it is implemented
twice: a Cython extension (`_native`) with a fused matvec + Thomas solve, and
a NumPy/LAPACK fallback (`_python`).  The backend is selected once at import:
the compiled core when available, otherwise the fallback.  Set the environment
variable LATTICE_LAB_KERNELS to "python" or "native" to force a choice
(forcing "native" raises if the extension is missing).

Both backends expose:
    tridiag_matvec(dl, d, du, x)           -> ndarray
    tridiag_solve(dl, d, du, b)            -> ndarray
    run_theta_steps(a_dl, a_d, a_du,
                    b_dl, b_d, b_du, w, n) -> (ndarray, bad_step, bad_cell)

Band convention: dl[i] multiplies x[i-1] (dl[0] unused), du[i] multiplies
x[i+1] (du[-1] unused).  run_theta_steps repeatedly solves
A w_next = B w with A/B given by their bands; it returns bad_step = -1 on
success, or the first step and cell index at which a non-finite value showed up.
"""

import os

from . import _python

_requested = os.environ.get("LATTICE_LAB_KERNELS", "auto").lower()

if _requested == "python":
    _impl = _python
    BACKEND = "python"
else:
    try:
        from . import _native as _impl

        BACKEND = "native"
    except ImportError:
        if _requested == "native":
            raise
        _impl = _python
        BACKEND = "python"

tridiag_matvec = _impl.tridiag_matvec
tridiag_solve = _impl.tridiag_solve
run_theta_steps = _impl.run_theta_steps

__all__ = ["BACKEND", "tridiag_matvec", "tridiag_solve", "run_theta_steps"]
