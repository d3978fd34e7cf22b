"""Conservative finite-difference evolution of the momentum distribution.

The equation w_t = -d/dp[ h w - g w_p ] is discretized on a symmetric
cell-centered grid in flux form: w_i' = -(J_{i+1/2} - J_{i-1/2})/dp with the
boundary fluxes forced to zero, so total mass telescopes exactly.  Interior
fluxes use exponentially fitted (Chang-Cooper style) weights

    J_{i+1/2} = (g_f/dp) * [ B(-x) w_i - B(x) w_{i+1} ],   B(x) = x/(e^x - 1),

where x is the exact increment of the stationary log-potential (the
antiderivative of h/g) across the face.  With this choice the sampled
stationary density is a machine-precision fixed point of the discrete flux,
and the weights guarantee positivity for the implicit update.  A plain
central-difference flux is kept alongside for convergence-order checks.

Time integration is a theta scheme (theta = 1/2 Crank-Nicolson by default)
with a direct tridiagonal solve; the hot loop lives in lattice_lab._kernels.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels
from .errors import (
    BudgetError,
    IntegrationError,
    ParameterError,
    ProfileError,
    StabilityError,
)
from .model import (
    DerivedParams,
    LatticeParams,
    classify_regime,
    derive_params,
    eval_coefficients,
    log_stationary_potential,
    tsallis_density,
)

__all__ = [
    "Grid",
    "Field",
    "Scheme",
    "SchemeConfig",
    "EvolveResult",
    "DivergenceWarning",
    "gaussian_profile",
    "tsallis_profile",
    "init_state",
    "build_operator",
    "step",
    "evolve",
    "stationarity_residual",
    "moments",
    "l1_distance",
]


class DivergenceWarning(UserWarning):
    """A grid moment looks divergent: its outer shell sums are not decaying."""


@dataclass(frozen=True)
class Grid:
    """Symmetric uniform grid on [-p_max, p_max] with n cells (n even).

    Cell centers sit at -p_max + (i + 1/2) dp, so p = 0 is a face and the
    centers come in +/- pairs.
    """

    p_max: float
    n: int
    centers: np.ndarray = field(init=False, repr=False, compare=False)
    faces: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.p_max <= 0:
            raise ParameterError(f"p_max must be > 0, got {self.p_max}")
        if self.n < 4 or self.n % 2:
            raise ParameterError(f"n must be even and >= 4, got {self.n}")
        dp = self.dp
        centers = -self.p_max + (np.arange(self.n) + 0.5) * dp
        faces = -self.p_max + np.arange(self.n + 1) * dp
        centers.setflags(write=False)
        faces.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "faces", faces)

    @property
    def dp(self) -> float:
        return 2.0 * self.p_max / self.n


@dataclass(frozen=True)
class Field:
    """Density snapshot on a grid at time t (units of probability/momentum)."""

    grid: Grid
    t: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ParameterError(
                f"values shape {values.shape} does not match grid size {self.grid.n}"
            )
        if not np.isfinite(values).all():
            raise ParameterError("field values must be finite")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.grid.dp)

    def with_values(self, values, t=None) -> "Field":
        return Field(self.grid, self.t if t is None else t, values)


class Scheme(Enum):
    CHANG_COOPER = "chang-cooper"
    CENTRAL_CRANK_NICOLSON = "central-crank-nicolson"


@dataclass(frozen=True)
class SchemeConfig:
    """Time-stepping configuration.

    theta is the implicitness weight in [0, 1] (1/2 = Crank-Nicolson).  The
    only supported boundary is "no-flux": the flux h w - g w_p is forced to
    zero at +/- p_max, which keeps the truncated problem mass-conserving and
    mimics the asymptotic-decay function space of the continuum equation.
    """

    method: Scheme = Scheme.CHANG_COOPER
    dt: float = 0.01
    theta: float = 0.5
    boundary: str = "no-flux"

    def __post_init__(self):
        if isinstance(self.method, str):
            object.__setattr__(self, "method", Scheme(self.method))
        if self.dt <= 0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")
        if not 0.0 <= self.theta <= 1.0:
            raise ParameterError(f"theta must lie in [0, 1], got {self.theta}")
        if self.boundary != "no-flux":
            raise ParameterError(f"unsupported boundary {self.boundary!r}")


def gaussian_profile(width: float):
    """Normalized Gaussian initial profile of the given standard deviation."""
    if width <= 0:
        raise ParameterError(f"width must be > 0, got {width}")

    def profile(p):
        return np.exp(-p * p / (2.0 * width * width)) / (width * math.sqrt(2.0 * math.pi))

    return profile


def tsallis_profile(d: DerivedParams):
    """Stationary power-law profile for the given derived constants."""

    def profile(p):
        return tsallis_density(p, d)

    return profile


def init_state(grid: Grid, profile, t: float = 0.0) -> Field:
    """Sample a profile on the grid and renormalize to unit discrete mass.

    `profile` is either a callable p -> density or an explicit value array
    (one entry per cell).  Profiles that are negative anywhere are rejected.
    """
    if callable(profile):
        values = np.asarray(profile(grid.centers), dtype=float)
    else:
        values = np.asarray(profile, dtype=float)
    if values.shape != (grid.n,):
        raise ProfileError(f"profile produced shape {values.shape}, expected ({grid.n},)")
    if not np.isfinite(values).all():
        raise ProfileError("profile contains non-finite values")
    if (values < 0).any():
        bad = int(np.argmin(values))
        raise ProfileError(f"profile is negative at p = {grid.centers[bad]:g}")
    mass = values.sum() * grid.dp
    if mass <= 0:
        raise ProfileError("profile has zero mass on the grid")
    return Field(grid, t, values / mass)


def _bernoulli(x):
    # B(x) = x / (e^x - 1), series near 0 to avoid 0/0
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-5
    xs = x[small]
    out[small] = 1.0 - xs / 2.0 + xs * xs / 12.0
    xl = x[~small]
    out[~small] = xl / np.expm1(xl)
    return out


@dataclass(frozen=True)
class TridiagOperator:
    """Bands of the discrete spatial operator L with w' = L w."""

    dl: np.ndarray
    d: np.ndarray
    du: np.ndarray

    def apply(self, w):
        return _kernels.tridiag_matvec(self.dl, self.d, self.du, np.asarray(w, dtype=float))


def build_operator(grid: Grid, params: LatticeParams, cfg: SchemeConfig) -> TridiagOperator:
    """Assemble the conservative flux-difference operator for the chosen scheme."""
    n, dp = grid.n, grid.dp
    faces_in = grid.faces[1:-1]
    _, g_f, _ = eval_coefficients(faces_in, params)
    if cfg.method is Scheme.CHANG_COOPER:
        x = log_stationary_potential(grid.centers[1:], params) - log_stationary_potential(
            grid.centers[:-1], params
        )
        a_f = g_f / dp * _bernoulli(-x)
        b_f = -g_f / dp * _bernoulli(x)
    else:
        h_f, _, _ = eval_coefficients(faces_in, params)
        a_f = 0.5 * h_f + g_f / dp
        b_f = 0.5 * h_f - g_f / dp
    # flux at interior face j (between cells j-1 and j): a_f[j-1] w_{j-1} + b_f[j-1] w_j;
    # boundary faces carry zero flux
    a = np.zeros(n + 1)
    b = np.zeros(n + 1)
    a[1:n] = a_f
    b[1:n] = b_f
    dl = np.zeros(n)
    du = np.zeros(n)
    d = np.zeros(n)
    dl[1:] = a[1:n] / dp
    du[:-1] = -b[1:n] / dp
    d[:] = (b[:n] - a[1:]) / dp
    return TridiagOperator(dl, d, du)


def _theta_bands(op: TridiagOperator, dt: float, theta: float):
    a = (-theta * dt * op.dl, 1.0 - theta * dt * op.d, -theta * dt * op.du)
    c = 1.0 - theta
    b = (c * dt * op.dl, 1.0 + c * dt * op.d, c * dt * op.du)
    return a, b


def _check_stability(grid: Grid, params: LatticeParams, cfg: SchemeConfig):
    if cfg.theta >= 0.5:
        return
    _, g, _ = eval_coefficients(grid.centers, params)
    dt_max = grid.dp**2 / (2.0 * float(np.max(g)))
    if cfg.dt > dt_max:
        raise StabilityError(
            f"dt = {cfg.dt:g} exceeds the explicit stability bound "
            f"dp^2/(2 max g) = {dt_max:g} for theta = {cfg.theta:g} < 1/2"
        )


def step(state: Field, params: LatticeParams, cfg: SchemeConfig) -> Field:
    """Advance one time step; mass is conserved to rounding by construction."""
    _check_stability(state.grid, params, cfg)
    op = build_operator(state.grid, params, cfg)
    (a_dl, a_d, a_du), (b_dl, b_d, b_du) = _theta_bands(op, cfg.dt, cfg.theta)
    w, bad_step, bad_cell = _kernels.run_theta_steps(
        a_dl, a_d, a_du, b_dl, b_d, b_du, state.values, 1
    )
    if bad_step >= 0:
        raise IntegrationError(
            f"non-finite value in cell {bad_cell} (p = {state.grid.centers[bad_cell]:g})",
            step=bad_step,
            cell=bad_cell,
        )
    return state.with_values(w, t=state.t + cfg.dt)


@dataclass
class EvolveResult:
    final: Field
    records: list
    n_steps: int
    runtime_s: float
    caveats: dict


_OBSERVERS = ("mass", "m2", "l1_to_w0", "stat_residual")


def evolve(
    state: Field,
    params: LatticeParams,
    cfg: SchemeConfig,
    t_end: float,
    observers=_OBSERVERS,
    sample_every: float | None = None,
    max_steps: int = 5_000_000,
    max_seconds: float | None = None,
) -> EvolveResult:
    """Advance to t_end, sampling the requested observers on a schedule.

    t_end is rounded to a whole number of dt steps.  Observers: mass, second
    moment, L1 distance to the stationary density, and the stationarity
    residual.  Step-count and optional wall-clock budgets abort the run.
    """
    if t_end <= state.t:
        raise ParameterError(f"t_end = {t_end:g} must exceed the state time {state.t:g}")
    _check_stability(state.grid, params, cfg)
    unknown = set(observers) - set(_OBSERVERS)
    if unknown:
        raise ParameterError(f"unknown observer(s): {', '.join(sorted(unknown))}")

    n_steps = max(1, int(round((t_end - state.t) / cfg.dt)))
    if n_steps > max_steps:
        raise BudgetError(f"run needs {n_steps} steps, exceeding the budget of {max_steps}")
    if sample_every is None:
        sample_every = (t_end - state.t) / 100.0
    chunk = max(1, int(round(sample_every / cfg.dt)))

    op = build_operator(state.grid, params, cfg)
    (a_dl, a_d, a_du), (b_dl, b_d, b_du) = _theta_bands(op, cfg.dt, cfg.theta)

    w0_ref = None
    if "l1_to_w0" in observers:
        w0_ref = tsallis_density(state.grid.centers, derive_params(params))

    records = []
    grid = state.grid
    dp = grid.dp

    def record(t, w):
        row = {"t": t}
        if "mass" in observers:
            row["mass"] = float(w.sum() * dp)
        if "m2" in observers:
            row["m2"] = float((w * grid.centers**2).sum() * dp)
        if "l1_to_w0" in observers:
            row["l1_to_w0"] = float(np.abs(w - w0_ref).sum() * dp)
        if "stat_residual" in observers:
            row["stat_residual"] = stationarity_residual(Field(grid, t, w), params)
        records.append(row)

    t_start = time.perf_counter()
    w = np.asarray(state.values, dtype=float)
    record(state.t, w)
    done = 0
    while done < n_steps:
        todo = min(chunk, n_steps - done)
        w, bad_step, bad_cell = _kernels.run_theta_steps(
            a_dl, a_d, a_du, b_dl, b_d, b_du, w, todo
        )
        if bad_step >= 0:
            raise IntegrationError(
                f"non-finite value at step {done + bad_step} in cell {bad_cell} "
                f"(p = {grid.centers[bad_cell]:g})",
                step=done + bad_step,
                cell=bad_cell,
            )
        done += todo
        record(state.t + done * cfg.dt, w)
        if max_seconds is not None and time.perf_counter() - t_start > max_seconds:
            raise BudgetError(f"wall-clock budget of {max_seconds:g} s exceeded")

    runtime = time.perf_counter() - t_start
    final = Field(grid, state.t + n_steps * cfg.dt, w)
    return EvolveResult(
        final=final,
        records=records,
        n_steps=n_steps,
        runtime_s=runtime,
        caveats=_truncation_caveats(final, params),
    )


def _truncation_caveats(state: Field, params: LatticeParams) -> dict:
    """Domain-truncation report; essential for anomalous-regime moment growth,
    where the no-flux box eventually saturates the second moment."""
    d = derive_params(params)
    regime = classify_regime(d.q)
    edge = max(1, state.grid.n // 20)
    boundary_mass = float(
        (state.values[:edge].sum() + state.values[-edge:].sum()) * state.grid.dp
    )
    caveats = {
        "regime": regime.label,
        "p_max": state.grid.p_max,
        "boundary_band_mass": boundary_mass,
    }
    if regime.regime is not None and regime.label == "AnomalousDiffusion":
        caveats["note"] = (
            "second moment growth is physical only while the boundary band stays "
            "empty; growth saturates once the spreading tail reaches p_max"
        )
    return caveats


def stationarity_residual(state: Field, params: LatticeParams) -> float:
    """Max-norm of the discrete flux divergence d/dp (h w - g w_p), centered."""
    p = state.grid.centers
    w = state.values
    dp = state.grid.dp
    h, g, _ = eval_coefficients(p, params)
    w_p = np.zeros_like(w)
    w_p[1:-1] = (w[2:] - w[:-2]) / (2.0 * dp)
    flux = h * w - g * w_p
    # keep only cells whose stencil uses centered w_p values
    div = (flux[3:-1] - flux[1:-3]) / (2.0 * dp)
    if div.size == 0:
        return 0.0
    return float(np.abs(div).max())


def moments(state: Field, orders) -> list:
    """Trapezoidal moments integral(p^n w dp) over the grid.

    Emits a DivergenceWarning for any order whose integrand has outer-shell
    partial sums that fail to decay toward the boundary, which is the grid
    signature of a divergent moment.
    """
    p = state.grid.centers
    w = state.values
    out = []
    for order in orders:
        integrand = p**order * w
        out.append(float(np.trapezoid(integrand, p)))
        if _shells_growing(np.abs(p), np.abs(integrand), state.grid.dp):
            warnings.warn(
                f"moment of order {order} looks divergent: outer-shell sums are "
                "still growing at the domain boundary",
                DivergenceWarning,
                stacklevel=2,
            )
    return out


def _shells_growing(p_abs, f_abs, dp, n_shells: int = 4) -> bool:
    # geometric shells [p_max/2^{j+1}, p_max/2^j]; growing sums toward the
    # boundary mean the improper integral fails its Cauchy criterion
    p_max = p_abs.max()
    sums = []
    for j in range(n_shells, 0, -1):
        lo, hi = p_max / 2.0**j, p_max / 2.0 ** (j - 1)
        mask = (p_abs > lo) & (p_abs <= hi)
        if mask.sum() < 4:
            return False
        sums.append(f_abs[mask].sum() * dp)
    if sums[-1] <= 0:
        return False
    return bool(np.all(np.diff(sums) >= -1e-15 * sums[0]))


def l1_distance(state: Field, reference) -> float:
    """L1 distance between a field and reference values (or another field)."""
    ref = reference.values if isinstance(reference, Field) else np.asarray(reference)
    return float(np.abs(state.values - ref).sum() * state.grid.dp)
