"""Command-line entry point.

Subcommands: exit-sweep, area-check, step-convergence, di-gap,
gexit-suite, kl-scan, immse-check, st-check.  Each reads a flat
``key = value`` config file validated against a strict per-subcommand
schema (unknown keys are rejected), runs the experiment, and writes
results.csv, results.json and manifest.json into the output directory.

Exit status: 0 success, 1 config or I/O error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__, infotheory as it
from .channels import (
    ChannelFamily,
    bec_family,
    bsc_family,
    capacity,
    qbiawgn_family,
    qpsk_awgn_family,
    sufficient_transparency,
    transition_matrix,
)
from .errors import ConfigError, ExitlabError, InvariantViolation
from .experiments import (
    ExperimentConfig,
    area_check,
    build_code,
    di_monotonicity,
    exit_sweep,
    gexit_suite,
    kl_collapse_scan,
    step_convergence,
    write_csv,
    write_json,
)

REQUIRED = object()

# key -> (type, default); types: int float str bool floats ints
SCHEMAS = {
    "exit-sweep": {
        "code": ("str", REQUIRED),
        "n": ("int", 0),
        "k": ("int", 0),
        "code_seed": ("int", 0),
        "d_v": ("int", 3),
        "d_c": ("int", 6),
        "family": ("str", REQUIRED),
        "nbins": ("int", 64),
        "grid": ("floats", REQUIRED),
        "trials": ("int", 2000),
        "seed": ("int", REQUIRED),
        "decoder": ("str", "auto"),
        "bp_iterations": ("int", 50),
        "include_gexit": ("bool", False),
        "gexit_delta": ("float", 1e-4),
    },
    "step-convergence": {
        "rate": ("float", REQUIRED),
        "n_list": ("ints", REQUIRED),
        "family": ("str", "bec"),
        "grid": ("floats", REQUIRED),
        "trials": ("int", 2000),
        "seed": ("int", REQUIRED),
    },
    "di-gap": {
        "code": ("str", REQUIRED),
        "n": ("int", 0),
        "k": ("int", 0),
        "code_seed": ("int", 0),
        "family": ("str", REQUIRED),
        "nbins": ("int", 64),
        "grid": ("floats", REQUIRED),
        "seed": ("int", 0),
    },
    "gexit-suite": {
        "code": ("str", REQUIRED),
        "n": ("int", 0),
        "k": ("int", 0),
        "code_seed": ("int", 0),
        "family": ("str", REQUIRED),
        "grid": ("floats", REQUIRED),
        "delta": ("float", 1e-4),
        "seed": ("int", 0),
    },
    "kl-scan": {
        "code": ("str", "random_linear"),
        "n": ("int", 16),
        "k": ("int", 8),
        "code_seed": ("int", 0),
        "family": ("str", "bsc"),
        "grid": ("floats", REQUIRED),
        "seed": ("int", 0),
    },
    "immse-check": {
        "code": ("str", REQUIRED),
        "n": ("int", 0),
        "snr": ("float", REQUIRED),
        "delta": ("float", 1e-2),
        "quad_points": ("int", 25),
        "seed": ("int", 0),
    },
    "st-check": {
        "family": ("str", REQUIRED),
        "param": ("float", REQUIRED),
        "nbins": ("int", 64),
        "ncells": ("int", 9),
        "seed": ("int", 0),
    },
}
SCHEMAS["area-check"] = dict(SCHEMAS["exit-sweep"])


def parse_kv_text(text: str) -> dict:
    """Parse flat 'key = value' lines; '#' starts a comment."""
    out = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        key = key.strip()
        if key in out:
            raise ConfigError(f"line {ln}: duplicate key {key!r}")
        out[key] = val.strip()
    return out


def _convert(key: str, kind: str, raw: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "str":
            return raw
        if kind == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if kind == "floats":
            return [float(v) for v in raw.split(",") if v.strip() != ""]
        if kind == "ints":
            return [int(v) for v in raw.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as {kind}") from exc
    raise ConfigError(f"unknown schema type {kind!r}")  # pragma: no cover


def validate_config(path: str, subcommand: str, overrides: dict | None = None) -> dict:
    """Strict schema check; fills defaults so the manifest is self-contained."""
    schema = SCHEMAS[subcommand]
    with open(path) as fh:
        raw = parse_kv_text(fh.read())
    problems = [f"unknown key {k!r}" for k in raw if k not in schema]
    cfg = {}
    for key, (kind, default) in schema.items():
        if key in raw:
            try:
                cfg[key] = _convert(key, kind, raw[key])
            except ConfigError as exc:
                problems.append(str(exc))
        elif default is REQUIRED:
            problems.append(f"missing required key {key!r}")
        else:
            cfg[key] = default
    for key, val in (overrides or {}).items():
        if val is not None:
            cfg[key] = val
    problems.extend(_semantic_problems(subcommand, cfg))
    if problems:
        raise ConfigError("; ".join(problems))
    return cfg


def _semantic_problems(subcommand: str, cfg: dict) -> list:
    out = []
    if "trials" in cfg and cfg["trials"] < 1:
        out.append("trials must be >= 1")
    if "grid" in cfg:
        g = cfg["grid"]
        if len(g) < 1 or any(b <= a for a, b in zip(g, g[1:])):
            out.append("grid must be strictly increasing")
    if "delta" in cfg and cfg["delta"] <= 0:
        out.append("delta must be positive")
    return out


def emit_config(subcommand: str, cfg: dict) -> str:
    """Inverse of validate_config for round-tripping into the manifest."""
    lines = [f"# {subcommand} configuration"]
    for key in SCHEMAS[subcommand]:
        v = cfg[key]
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, list):
            v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


def _code_spec(cfg: dict) -> dict:
    kind = cfg["code"]
    spec = {"kind": kind}
    if kind in ("repetition", "spc", "uncoded"):
        spec["n"] = cfg["n"]
    elif kind == "random_linear":
        spec.update(n=cfg["n"], k=cfg["k"], seed=cfg["code_seed"])
    elif kind == "ldpc":
        spec.update(n=cfg["n"], d_v=cfg["d_v"], d_c=cfg["d_c"], seed=cfg["code_seed"])
    elif kind != "hamming74":
        raise ConfigError(f"unknown code {kind!r}")
    return spec


def _family(cfg: dict) -> ChannelFamily:
    kind = cfg["family"]
    if kind == "bec":
        return bec_family()
    if kind == "bsc":
        return bsc_family()
    if kind == "qbiawgn":
        return qbiawgn_family(nbins=cfg.get("nbins", 64))
    if kind == "qpsk_awgn":
        return qpsk_awgn_family(ncells=cfg.get("ncells", 9))
    raise ConfigError(f"unknown family {kind!r}")


def _run_exit_sweep(cfg: dict, workers: int):
    family = _family(cfg)
    tolerances = {
        "decoder": cfg["decoder"],
        "bp_iterations": cfg["bp_iterations"],
        "include_gexit": cfg["include_gexit"],
        "gexit_delta": cfg["gexit_delta"],
    }
    config = ExperimentConfig(
        code=_code_spec(cfg),
        family=family.to_config(),
        grid=cfg["grid"],
        trials=cfg["trials"],
        seed=cfg["seed"],
        tolerances=tolerances,
    )
    curve = exit_sweep(config, workers=workers)
    cols, rows = curve.to_table()
    return cols, rows, {"rate": curve.rate, "n": curve.n}


def _run_area_check(cfg: dict, workers: int):
    cols, rows, extra = _run_exit_sweep(cfg, workers)
    family = _family(cfg)
    config = ExperimentConfig(
        code=_code_spec(cfg),
        family=family.to_config(),
        grid=cfg["grid"],
        trials=cfg["trials"],
        seed=cfg["seed"],
        tolerances={"decoder": cfg["decoder"]},
    )
    curve = exit_sweep(config, workers=workers)
    res = area_check(curve)
    cols2 = ["area", "expected", "deviation", "integration_error"]
    rows2 = [[res[c] for c in cols2]]
    return cols2, rows2, {"curve_rows": rows, **extra, **res}


def _run_step_convergence(cfg: dict, workers: int):
    res = step_convergence(
        rate=cfg["rate"],
        n_list=cfg["n_list"],
        family=_family(cfg),
        grid=cfg["grid"],
        trials=cfg["trials"],
        seed=cfg["seed"],
        workers=workers,
    )
    res.check()
    cols = ["n", "param", "capacity", "ei", "ei_stderr"]
    rows = list(res.rows())
    extra = {
        "widths": {str(n): res.widths[n] for n in res.n_list},
        "thresholds": {str(n): res.thresholds[n] for n in res.n_list},
        "capacity_matching_param": res.capacity_matching_param,
    }
    return cols, rows, extra


def _run_di_gap(cfg: dict, workers: int):
    code, _ = build_code(_code_spec(cfg))
    table = di_monotonicity(code, _family(cfg), cfg["grid"])
    cols = ["param", "i_independent", "i_coded", "gap"]
    return cols, list(table.rows()), {}


def _run_gexit_suite(cfg: dict, workers: int):
    code, _ = build_code(_code_spec(cfg))
    res = gexit_suite(code, _family(cfg), cfg["grid"], delta=cfg["delta"])
    cols = [
        "param",
        "gexit",
        "gexit_i_mean",
        "gexit0",
        "dg",
        "eq13_max_abs_err",
        "eq11_max_abs_err",
        "decomposition_err",
    ]
    extra = {
        "dg_integral": res.dg_integral,
        "gap_difference": res.gap_difference,
        "decomposition_residual": res.decomposition_residual,
        "eq11_residual": res.eq11_residual,
        "eq13_residual": res.eq13_residual,
    }
    return cols, list(res.rows()), extra


def _run_kl_scan(cfg: dict, workers: int):
    code, _ = build_code(_code_spec(cfg))
    res = kl_collapse_scan(code, _family(cfg), cfg["grid"])
    cols = ["param", "capacity", "capacity_minus_rate", "max_pairwise_kl"]
    return cols, list(res.rows()), {}


def _run_immse_check(cfg: dict, workers: int):
    spec = {"kind": cfg["code"]}
    if cfg["code"] in ("repetition", "spc", "uncoded"):
        spec["n"] = cfg["n"]
    code, _ = build_code(spec)
    rj, rm = it.immse_residual(code, cfg["snr"], cfg["delta"], npts=cfg["quad_points"])
    cols = ["snr", "delta", "residual_joint", "residual_marginal"]
    return cols, [[cfg["snr"], cfg["delta"], rj, rm]], {}


def _run_st_check(cfg: dict, workers: int):
    family = _family(cfg)
    chan = transition_matrix(family, cfg["param"])
    witness = sufficient_transparency(chan)
    cols = ["param", "capacity", "input_size", "witness"]
    wtxt = "none" if witness is None else ";".join(map(str, witness))
    rows = [[cfg["param"], capacity(family, cfg["param"]), chan.input_size, wtxt]]
    return cols, rows, {"transparent": witness is not None}


RUNNERS = {
    "exit-sweep": _run_exit_sweep,
    "area-check": _run_area_check,
    "step-convergence": _run_step_convergence,
    "di-gap": _run_di_gap,
    "gexit-suite": _run_gexit_suite,
    "kl-scan": _run_kl_scan,
    "immse-check": _run_immse_check,
    "st-check": _run_st_check,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="exitlab", description=__doc__)
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--out", default=".")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    sub = args.subcommand
    t0 = time.time()
    try:
        overrides = {"seed": args.seed}
        if "trials" in SCHEMAS[sub]:
            overrides["trials"] = args.trials
        cfg = validate_config(args.config, sub, overrides)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        cols, rows, extra = RUNNERS[sub](cfg, args.workers)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except (ExitlabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "results.csv")
    json_path = os.path.join(args.out, "results.json")
    manifest_path = os.path.join(args.out, "manifest.json")
    norm_text = emit_config(sub, cfg)
    write_csv(csv_path, cols, rows, comment=f"exitlab {sub}")
    write_json(json_path, {"subcommand": sub, **cfg, "extra": _jsonable(extra)}, cols, rows)
    manifest = {
        "subcommand": sub,
        "config": _jsonable(cfg),
        "config_hash": hashlib.sha256(norm_text.encode()).hexdigest(),
        "seed": cfg.get("seed"),
        "tool_version": __version__,
        "wall_time_s": round(time.time() - t0, 3),
    }
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if args.verbose:
        print(f"{sub}: {len(rows)} result rows -> {csv_path}")
    return 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


if __name__ == "__main__":
    sys.exit(main())
