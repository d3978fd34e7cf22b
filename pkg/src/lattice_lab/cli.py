"""Command-line surface: config-driven runs with reproducible artifacts.

Every invocation writes into one run directory named by a content hash of the
config, so identical configs land in identical places with byte-identical
CSVs; the only timestamp lives in metadata.json.  Exit codes: 0 success,
1 invalid configuration, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np
import scipy

from . import __version__
from .analysis import SweepConfig, sweep
from .errors import ConfigError, LatticeLabError, ParameterError
from .fpe_solver import (
    Grid,
    SchemeConfig,
    evolve,
    gaussian_profile,
    init_state,
    tsallis_profile,
)
from .model import (
    derive_params,
    derived_to_dict,
    params_from_dict,
    tsallis_density,
)
from .symmetry import (
    GeneratorSpec,
    asymptotic_scan,
    closed_A,
    closed_a2,
    extract_A,
    flow_map,
    stationary_profile,
)

COMMANDS = ("params", "stationary", "evolve", "flow", "residuals", "scan", "sweep")

_FLOAT_FMT = "%.17g"


@dataclass
class RunConfig:
    command: str
    raw: dict
    params: LatticeParams | None
    seed: int
    sections: dict


_SECTION_KEYS = {
    "grid": {"p_max", "n"},
    "scheme": {"method", "dt", "theta"},
    "evolve": {"t_end", "sample_every", "initial", "observers"},
    "flow": {"p0", "w0", "s_min", "s_max", "n_s", "sigma"},
    "residuals": {"sigma", "n_samples", "p_min", "p_max", "w_min", "w_max"},
    "scan": {"sigma", "p_min", "p_max", "points_per_decade"},
}

_REQUIRED = {
    "params": ("params",),
    "stationary": ("params", "grid"),
    "evolve": ("params", "grid", "scheme", "evolve"),
    "flow": ("params", "flow"),
    "residuals": ("params", "residuals"),
    "scan": ("params", "scan"),
    "sweep": ("sweep",),
}


def validate_config(raw_text: str, command: str) -> RunConfig:
    """Parse and validate a JSON config for the given command.

    Schema check first (unknown keys rejected with the offending key named),
    then semantic validation through the model constructors.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    try:
        raw = json.loads(raw_text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    required = _REQUIRED[command]
    allowed = set(required) | {"seed"}
    unknown = raw.keys() - allowed
    if unknown:
        raise ConfigError(
            f"unknown config key(s) for {command!r}: {', '.join(sorted(unknown))}"
        )
    missing = set(required) - raw.keys()
    if missing:
        raise ConfigError(f"missing config key(s): {', '.join(sorted(missing))}")

    for section, keys in _SECTION_KEYS.items():
        if section in raw:
            block = raw[section]
            if not isinstance(block, dict):
                raise ConfigError(f"config section {section!r} must be an object")
            bad = block.keys() - keys
            if bad:
                raise ConfigError(
                    f"unknown key(s) in {section!r}: {', '.join(sorted(bad))}"
                )

    params = None
    if "params" in raw:
        params = params_from_dict(raw["params"])
        derive_params(params)  # semantic validation (physical range, normalizability)

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")

    sections = {k: v for k, v in raw.items() if k not in ("params", "seed")}
    if command == "sweep":
        # validated here so schema errors surface as exit code 1
        block = dict(raw["sweep"])
        block.setdefault("seed", seed)
        try:
            sections["sweep"] = SweepConfig.from_dict(block)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc
    return RunConfig(command=command, raw=raw, params=params, seed=seed, sections=sections)


def _config_hash(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_FLOAT_FMT % v if isinstance(v, float) else str(v) for v in row))
            fh.write("\n")


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    raise TypeError(f"not JSON-serializable: {type(obj)!r}")


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items() if not k.startswith("_")}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _run_params(cfg: RunConfig, out_dir: str) -> dict:
    derived = derived_to_dict(derive_params(cfg.params))
    print(json.dumps(derived, indent=2, sort_keys=True))
    _write_json(os.path.join(out_dir, "derived.json"), derived)
    return {"derived": derived}


def _grid_from(cfg_block: dict) -> Grid:
    return Grid(p_max=float(cfg_block["p_max"]), n=int(cfg_block["n"]))


def _run_stationary(cfg: RunConfig, out_dir: str) -> dict:
    grid = _grid_from(cfg.sections["grid"])
    d = derive_params(cfg.params)
    w = tsallis_density(grid.centers, d)
    _write_csv(
        os.path.join(out_dir, "stationary.csv"),
        ("p", "w"),
        zip(grid.centers.tolist(), w.tolist()),
    )
    return {"n": grid.n, "p_max": grid.p_max}


def _initial_profile(block: dict, d):
    kind = block.get("type")
    if kind == "gaussian":
        return gaussian_profile(float(block.get("width", 1.0)))
    if kind == "tsallis":
        return tsallis_profile(d)
    if kind == "custom":
        return np.asarray(block["values"], dtype=float)
    raise ConfigError(f"unknown initial profile type {kind!r}")


def _run_evolve(cfg: RunConfig, out_dir: str) -> dict:
    grid = _grid_from(cfg.sections["grid"])
    scheme_block = dict(cfg.sections["scheme"])
    scheme = SchemeConfig(
        method=scheme_block.get("method", "chang-cooper"),
        dt=float(scheme_block["dt"]),
        theta=float(scheme_block.get("theta", 0.5)),
    )
    ev = cfg.sections["evolve"]
    d = derive_params(cfg.params)
    initial = ev.get("initial", {"type": "gaussian", "width": 1.0})
    if not isinstance(initial, dict) or "type" not in initial:
        raise ConfigError("evolve.initial must be an object with a 'type' key")
    state = init_state(grid, _initial_profile(initial, d))
    observers = tuple(ev.get("observers", ("mass", "m2", "l1_to_w0", "stat_residual")))
    result = evolve(
        state,
        cfg.params,
        scheme,
        t_end=float(ev["t_end"]),
        observers=observers,
        sample_every=ev.get("sample_every"),
    )
    header = ("t",) + observers
    _write_csv(
        os.path.join(out_dir, "trajectory.csv"),
        header,
        ([rec[k] for k in header] for rec in result.records),
    )
    _write_csv(
        os.path.join(out_dir, "final_field.csv"),
        ("p", "w"),
        zip(grid.centers.tolist(), result.final.values.tolist()),
    )
    return {
        "n_steps": result.n_steps,
        "t_end": result.final.t,
        "caveats": result.caveats,
        "final": {k: result.records[-1].get(k) for k in header},
    }


def _run_flow(cfg: RunConfig, out_dir: str) -> dict:
    block = cfg.sections["flow"]
    d = derive_params(cfg.params)
    gen = GeneratorSpec.canonical(d, sigma=float(block.get("sigma", -2.0)))
    p0 = float(block["p0"])
    w0val = block.get("w0")
    w0val = tsallis_density(p0, d) if w0val is None else float(w0val)
    s_grid = np.linspace(
        float(block.get("s_min", -2.0)),
        float(block.get("s_max", 2.0)),
        int(block.get("n_s", 81)),
    )
    rows = []
    for s in s_grid:
        p_s, w_s = flow_map(p0, w0val, float(s), gen)
        rows.append((float(s), p_s, w_s))
    _write_csv(os.path.join(out_dir, "orbit.csv"), ("s", "p", "w"), rows)
    return {"p0": p0, "w0": w0val, "n_s": int(s_grid.size)}


def _run_residuals(cfg: RunConfig, out_dir: str) -> dict:
    block = cfg.sections["residuals"]
    d = derive_params(cfg.params)
    sigma = block.get("sigma", -2.0)
    n_samples = int(block.get("n_samples", 100))
    rng = np.random.default_rng(cfg.seed)
    p_lo, p_hi = float(block.get("p_min", 0.1)), float(block.get("p_max", 10.0))
    w_lo, w_hi = float(block.get("w_min", 0.1)), float(block.get("w_max", 2.0))
    full = sigma == -2.0

    rows = []
    max_dev = {"a2": 0.0, "a1": 0.0, "a0": 0.0, "a3": 0.0}
    for _ in range(n_samples):
        p = float(rng.uniform(p_lo, p_hi))
        w = float(rng.uniform(w_lo, w_hi))
        s = float(sigma) if sigma is not None else float(rng.uniform(-3.0, 1.0))
        gen = GeneratorSpec.canonical(d, sigma=s)
        ext = extract_A(p, 0.0, w, cfg.params, gen)
        a2_closed = float(closed_a2(p, cfg.params, s))
        row = [p, w, s, ext.a2, a2_closed, _rel(ext.a2, a2_closed)]
        max_dev["a2"] = max(max_dev["a2"], row[-1])
        if full:
            ref = closed_A(p, w, cfg.params, -2.0)
            for name, got, want in (
                ("a1", ext.a1, ref.a1),
                ("a0", ext.a0, ref.a0),
                ("a3", ext.a3, ref.a3),
            ):
                dev = _rel(got, want)
                row.extend([got, want, dev])
                max_dev[name] = max(max_dev[name], dev)
        rows.append(tuple(row))

    header = ["p", "w", "sigma", "a2_extracted", "a2_closed", "rel_dev_a2"]
    if full:
        for name in ("a1", "a0", "a3"):
            header.extend([f"{name}_extracted", f"{name}_closed", f"rel_dev_{name}"])
    _write_csv(os.path.join(out_dir, "residuals.csv"), header, rows)
    summary = {"n_samples": n_samples, "sigma": sigma, "max_rel_dev": _sanitize(max_dev)}
    _write_json(os.path.join(out_dir, "residuals_summary.json"), summary)
    return summary


def _rel(got: float, want: float) -> float:
    scale = max(abs(got), abs(want))
    if scale == 0.0:
        return 0.0
    return abs(got - want) / scale


def _run_scan(cfg: RunConfig, out_dir: str) -> dict:
    block = cfg.sections["scan"]
    d = derive_params(cfg.params)
    sigma = float(block.get("sigma", -2.0))
    p_min = float(block.get("p_min", 10.0))
    p_max = float(block.get("p_max", 1e6))
    per_decade = int(block.get("points_per_decade", 5))
    n_points = max(4, int(round(per_decade * np.log10(p_max / p_min))) + 1)
    gen = GeneratorSpec.canonical(d, sigma=sigma)
    report = asymptotic_scan(
        cfg.params, gen, stationary_profile(d), p_ladder=np.geomspace(p_min, p_max, n_points)
    )
    _write_csv(
        os.path.join(out_dir, "scan.csv"), ("p", "abs_A0", "abs_A1", "abs_A2"), report.rows()
    )
    summary = _sanitize(report.summary())
    _write_json(os.path.join(out_dir, "scan_summary.json"), summary)
    return summary


def _run_sweep(cfg: RunConfig, out_dir: str, threads: int) -> dict:
    report = sweep(cfg.sections["sweep"], threads=threads)
    for point in report.points:
        for scan_entry in point.get("scans", ()):
            decay = scan_entry.get("_report")
            if decay is None:
                continue
            name = f"point_{point['index']}_sigma_{scan_entry['sigma']:g}.csv"
            _write_csv(
                os.path.join(out_dir, name), ("p", "abs_A0", "abs_A1", "abs_A2"), decay.rows()
            )
    payload = _sanitize(report.to_dict())
    _write_json(os.path.join(out_dir, "report.json"), payload)
    return {"n_points": len(report.points), "n_failed": report.n_failed}


def _resolve_threads(value) -> int:
    if value is not None:
        return max(1, int(value))
    env = os.environ.get("LATTICE_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"LATTICE_LAB_THREADS must be an integer, got {env!r}") from exc
    return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lattice-lab",
        description="Numerical laboratory for momentum transport in an optical lattice",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to a JSON run configuration")
    parser.add_argument("--out", default="runs", help="parent directory for run artifacts")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for sweeps (default: LATTICE_LAB_THREADS or 1)")
    args = parser.parse_args(argv)

    t_start = time.perf_counter()
    try:
        with open(args.config) as fh:
            raw_text = fh.read()
        cfg = validate_config(raw_text, args.command)
        threads = _resolve_threads(args.threads)
    except (OSError, LatticeLabError) as exc:
        print(f"lattice-lab: invalid configuration: {exc}", file=sys.stderr)
        return 1

    run_dir = os.path.join(args.out, f"{args.command}-{_config_hash(cfg.raw)}")
    os.makedirs(run_dir, exist_ok=True)

    try:
        if args.command == "params":
            summary = _run_params(cfg, run_dir)
        elif args.command == "stationary":
            summary = _run_stationary(cfg, run_dir)
        elif args.command == "evolve":
            summary = _run_evolve(cfg, run_dir)
        elif args.command == "flow":
            summary = _run_flow(cfg, run_dir)
        elif args.command == "residuals":
            summary = _run_residuals(cfg, run_dir)
        elif args.command == "scan":
            summary = _run_scan(cfg, run_dir)
        else:
            summary = _run_sweep(cfg, run_dir, threads)
    except (ConfigError, ParameterError) as exc:
        print(f"lattice-lab: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except LatticeLabError as exc:
        print(f"lattice-lab: numerical failure: {exc}", file=sys.stderr)
        return 2

    metadata = {
        "command": args.command,
        "config": cfg.raw,
        "run_dir": run_dir,
        "summary": _sanitize(summary),
        "versions": {
            "lattice-lab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "kernel_backend": _kernel_backend(),
        },
        "timings": {"total_s": time.perf_counter() - t_start},
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    _write_json(os.path.join(run_dir, "metadata.json"), metadata)
    print(f"lattice-lab: artifacts written to {run_dir}", file=sys.stderr)
    return 0


def _kernel_backend() -> str:
    from . import _kernels

    return _kernels.BACKEND


if __name__ == "__main__":
    sys.exit(main())
