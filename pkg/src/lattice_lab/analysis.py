"""Normalization-variation functionals, tail-exponent estimation, and sweeps.

The first-order change of the normalization I[w] under the canonical
generator splits into three integrals,

    I[dw] = nu I[p^2 w^q] + I[p w_p] + 2 t I[d/dp (h w - g w_p)],

whose joint finiteness is the "normalizable variation" condition.  On a grid
the last integral reduces to a boundary flux term (vanishing for decaying
fields), the middle one integrates by parts to -I[w], and the first is finite
for tails w ~ p^(-2k) precisely when k q > 3/2 - a condition strictly stronger
than plain normalizability (k > 1/2) throughout the physical range q < 3, yet
satisfied by every state near the stationary density, whose k = 1/delta gives
k q = (1 + delta)/delta > 3/2.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ParameterError, ProfileError
from .fpe_solver import Field, Grid, SchemeConfig, evolve, gaussian_profile, init_state, tsallis_profile
from .model import (
    DerivedParams,
    LatticeParams,
    classify_regime,
    derive_params,
    derived_to_dict,
    eval_coefficients,
    params_from_dict,
)
from .symmetry import GeneratorSpec, asymptotic_scan, stationary_profile

__all__ = [
    "TailClass",
    "TailFit",
    "VariationReport",
    "NormalizableVariation",
    "SweepConfig",
    "SweepReport",
    "tail_exponent",
    "variation_integrals",
    "normalizable_variation",
    "sweep",
]

#: Floor under which tail samples are discarded (denormal safety margin).
TAIL_FLOOR = 1e-280


class TailClass(Enum):
    POWER_LAW = "PowerLaw"
    SUPER_POLYNOMIAL = "SuperPolynomial"
    NON_DECAYING = "NonDecaying"


@dataclass(frozen=True)
class TailFit:
    """Least-squares fit of log w against log p over the outer tail window."""

    k_hat: float
    fit_window: tuple
    r2: float
    tail_class: TailClass


def _fit(x, y):
    coef = np.polyfit(x, y, 1)
    resid = y - np.polyval(coef, x)
    var = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / var if var > 0 else 0.0
    return float(coef[0]), float(r2)


def tail_exponent(state: Field) -> TailFit:
    """Estimate the tail exponent k of w ~ p^(-2k) from the outermost decade.

    The fit window is the outermost decade of the positive-p samples that stay
    above the floor; the Lorentzian crossover near p_c is thereby avoided on
    any reasonably wide grid.  Classification: non-decaying if the slope is
    >= 0, super-polynomial if the local slope steepens markedly across the
    window (e.g. Gaussian tails), power law otherwise (requires r2 > 0.999
    over at least one decade).
    """
    p = state.grid.centers
    w = state.values
    mask = (p > 0) & (w > TAIL_FLOOR)
    if mask.sum() < 8:
        raise ProfileError("too few positive tail samples for a fit")
    p, w = p[mask], w[mask]
    p_hi = p[-1]
    if p[0] <= 0 or p_hi / p[0] < 10.0:
        raise ProfileError("tail samples must span at least one decade")
    window = p >= p_hi / 10.0
    p, w = p[window], w[window]
    x, y = np.log(p), np.log(w)
    slope, r2 = _fit(x, y)
    if slope >= 0:
        cls = TailClass.NON_DECAYING
    else:
        mid = 0.5 * (x[0] + x[-1])
        lo = x <= mid
        slope_lo, _ = _fit(x[lo], y[lo])
        slope_hi, _ = _fit(x[~lo], y[~lo])
        if slope_lo < 0 and abs(slope_hi) > 1.2 * abs(slope_lo) + 0.1:
            cls = TailClass.SUPER_POLYNOMIAL
        elif r2 > 0.999:
            cls = TailClass.POWER_LAW
        else:
            cls = TailClass.SUPER_POLYNOMIAL
    return TailFit(k_hat=-slope / 2.0, fit_window=(float(p[0]), float(p_hi)), r2=r2, tail_class=cls)


@dataclass(frozen=True)
class NormalizableVariation:
    """The two tail conditions: plain normalization and normalizable variation."""

    normalization_ok: bool  # k > 1/2
    variation_ok: bool  # k q > 3/2 (strictly more restrictive for q < 3)


def normalizable_variation(k: float, q: float) -> NormalizableVariation:
    if k <= 0:
        raise ParameterError(f"tail exponent k must be > 0, got {k}")
    if not 1.0 < q < 3.0:
        raise ParameterError(f"q must lie in (1, 3), got {q}")
    return NormalizableVariation(normalization_ok=k > 0.5, variation_ok=k * q > 1.5)


@dataclass(frozen=True)
class VariationReport:
    """Components of the normalization variation of a grid field.

    total = i_phi + i_scale + 2 t i_flux whenever every term is finite.  On
    the stationary density the triple is (1, -1, 0).  variation_normalizable
    is False when the fitted tail gives k q <= 3/2 (divergent i_phi for the
    continuum problem); per-term finite flags report the on-grid Cauchy check.
    """

    i_phi: float
    i_scale: float
    i_flux: float
    total: float
    t: float
    finite: dict = field(repr=False)
    variation_normalizable: bool = True
    tail: TailFit | None = None


def _shell_sums_growing(p, f, n_shells: int = 4) -> bool:
    p_abs = np.abs(p)
    p_max = p_abs.max()
    sums = []
    for j in range(n_shells, 0, -1):
        lo, hi = p_max / 2.0**j, p_max / 2.0 ** (j - 1)
        m = (p_abs > lo) & (p_abs <= hi)
        if m.sum() < 4:
            return False
        sums.append(np.abs(f[m]).sum())
    if sums[-1] <= 0:
        return False
    return bool(np.all(np.diff(sums) >= -1e-15 * max(sums)))


def variation_integrals(state: Field, params: LatticeParams, d: DerivedParams) -> VariationReport:
    """Trapezoidal evaluation of the three variation integrals on a grid field.

    The flux integral is reduced by one integration by parts to the boundary
    flux values, so it vanishes for decaying fields up to the discretization
    of w_p at the outermost faces.
    """
    if abs(state.mass - 1.0) > 1e-3:
        raise ParameterError(f"state must be normalized, got mass {state.mass:g}")
    p = state.grid.centers
    w = state.values
    dp = state.grid.dp

    integrand_phi = d.nu * p * p * np.where(w > 0, w, 0.0) ** d.q
    i_phi = float(np.trapezoid(integrand_phi, p))

    w_p = (w[2:] - w[:-2]) / (2.0 * dp)
    integrand_scale = p[1:-1] * w_p
    i_scale = float(np.trapezoid(integrand_scale, p[1:-1]))

    # boundary flux after one integration by parts
    def face_flux(side):
        if side == "right":
            pf = state.grid.faces[-2]
            wa, wb = w[-2], w[-1]
        else:
            pf = state.grid.faces[1]
            wa, wb = w[0], w[1]
        h, g, _ = eval_coefficients(pf, params)
        return h * 0.5 * (wa + wb) - g * (wb - wa) / dp

    i_flux = float(face_flux("right") - face_flux("left"))

    finite = {
        "i_phi": not _shell_sums_growing(p, integrand_phi),
        "i_scale": not _shell_sums_growing(p[1:-1], integrand_scale),
        "i_flux": True,
    }

    tail = None
    variation_ok = True
    try:
        tail = tail_exponent(state)
        if tail.tail_class is TailClass.POWER_LAW:
            variation_ok = normalizable_variation(max(tail.k_hat, 1e-12), d.q).variation_ok
        elif tail.tail_class is TailClass.NON_DECAYING:
            variation_ok = False
    except ProfileError:
        pass
    if not finite["i_phi"]:
        variation_ok = False

    total = i_phi + i_scale + 2.0 * state.t * i_flux
    return VariationReport(
        i_phi=i_phi,
        i_scale=i_scale,
        i_flux=i_flux,
        total=total,
        t=state.t,
        finite=finite,
        variation_normalizable=variation_ok,
        tail=tail,
    )


@dataclass(frozen=True)
class SweepConfig:
    """Parameter/weight sweep: derived constants and decay scans per point,
    with an optional evolution stage when a grid block is provided."""

    params_grid: tuple
    sigmas: tuple = (-2.0,)
    grid: dict | None = None
    evolve: dict | None = None
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        if not isinstance(data, dict):
            raise ParameterError("sweep config must be an object")
        allowed = {"params_grid", "sigmas", "grid", "evolve", "seed"}
        unknown = data.keys() - allowed
        if unknown:
            raise ParameterError(f"unknown sweep key(s): {', '.join(sorted(unknown))}")
        if "params_grid" not in data:
            raise ParameterError("sweep config requires params_grid")
        return cls(
            params_grid=tuple(dict(p) for p in data["params_grid"]),
            sigmas=tuple(data.get("sigmas", (-2.0,))),
            grid=data.get("grid"),
            evolve=data.get("evolve"),
            seed=int(data.get("seed", 0)),
        )


@dataclass
class SweepReport:
    points: list
    n_failed: int

    def to_dict(self) -> dict:
        return {"points": self.points, "n_failed": self.n_failed}


#: |a2| plateau below this level counts as a vanishing plateau in sweeps.
PLATEAU_VANISHING_TOL = 1e-6


def _sweep_point(index: int, params_dict: dict, config: SweepConfig) -> dict:
    point = {"index": index, "params": dict(params_dict)}
    try:
        params = params_from_dict(params_dict)
        d = derive_params(params)
        point["derived"] = derived_to_dict(d)
        point["regime"] = classify_regime(d.q).label
        scans = []
        for sigma in config.sigmas:
            gen = GeneratorSpec.canonical(d, sigma=sigma)
            report = asymptotic_scan(params, gen, stationary_profile(d))
            scans.append(
                {
                    "sigma": sigma,
                    "slopes": report.slopes,
                    "plateau_a2": report.plateau_a2,
                    "plateau_a2_theory": report.plateau_a2_theory,
                    "plateau_vanishing": report.plateau_a2 < PLATEAU_VANISHING_TOL,
                    "_report": report,
                }
            )
        point["scans"] = scans
        if config.grid is not None:
            grid = Grid(p_max=float(config.grid["p_max"]), n=int(config.grid["n"]))
            ev = dict(config.evolve or {})
            cfg = SchemeConfig(
                method=ev.get("method", "chang-cooper"),
                dt=float(ev.get("dt", 0.01)),
                theta=float(ev.get("theta", 0.5)),
            )
            initial = ev.get("initial", {"type": "gaussian", "width": 1.0})
            if initial["type"] == "gaussian":
                profile = gaussian_profile(float(initial.get("width", 1.0)))
            elif initial["type"] == "tsallis":
                profile = tsallis_profile(d)
            else:
                raise ParameterError(f"unknown initial profile type {initial['type']!r}")
            state = init_state(grid, profile)
            result = evolve(state, params, cfg, t_end=float(ev.get("t_end", 10.0)))
            last = result.records[-1]
            point["evolve"] = {
                "t_end": last["t"],
                "mass": last.get("mass"),
                "m2": last.get("m2"),
                "l1_to_w0": last.get("l1_to_w0"),
                "n_steps": result.n_steps,
                "caveats": result.caveats,
            }
        point["ok"] = True
    except Exception as exc:  # per-point isolation: record, do not abort the sweep
        point["ok"] = False
        point["error"] = f"{type(exc).__name__}: {exc}"
    return point


def sweep(config: SweepConfig, threads: int = 1) -> SweepReport:
    """Run the sweep; per-point failures are recorded, never fatal, and the
    output order is the configuration order regardless of thread count."""
    jobs = list(enumerate(config.params_grid))
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(lambda job: _sweep_point(job[0], job[1], config), jobs))
    else:
        points = [_sweep_point(i, p, config) for i, p in jobs]
    n_failed = sum(1 for pt in points if not pt["ok"])
    return SweepReport(points=points, n_failed=n_failed)
