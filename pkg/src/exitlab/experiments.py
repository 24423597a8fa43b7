"""Experiment orchestration: EXIT sweeps, area checks, step-function
convergence, DI-gap monotonicity, GEXIT identity suites, KL-collapse scans.

Runs are deterministic: every Monte Carlo draw derives from (master seed,
grid-point index), so results do not depend on worker count or execution
order.  Result objects carry a check() that raises InvariantViolation,
naming the failed assertion, instead of silently clamping.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from . import infotheory as it
from .channels import ChannelFamily, capacity, transition_matrix, uniform_input_mi
from .codes import (
    LinearCode,
    TannerGraph,
    enumerate_codebook,
    make_hamming74,
    make_random_linear,
    make_regular_ldpc,
    make_repetition,
    make_spc,
    make_uncoded,
)
from .errors import ConfigError, DomainError, InvariantViolation

FLOAT_FMT = "%.12g"
EI_SLACK = 1e-9


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng([int(seed)] + [int(p) for p in path])


def build_code(spec: dict) -> tuple[LinearCode, TannerGraph | None]:
    """Instantiate a code from a flat description dict."""
    kind = spec.get("kind")
    if kind == "repetition":
        return make_repetition(int(spec["n"])), None
    if kind == "spc":
        return make_spc(int(spec["n"])), None
    if kind == "hamming74":
        return make_hamming74(), None
    if kind == "uncoded":
        return make_uncoded(int(spec["n"])), None
    if kind == "random_linear":
        return make_random_linear(int(spec["n"]), int(spec["k"]), int(spec.get("seed", 0))), None
    if kind == "ldpc":
        return make_regular_ldpc(
            int(spec["n"]), int(spec["d_v"]), int(spec["d_c"]), int(spec.get("seed", 0))
        )
    raise ConfigError(f"unknown code kind {kind!r}")


@dataclass
class ExperimentConfig:
    """Seeded, fully reproducible description of one sweep."""

    code: dict
    family: dict
    grid: list
    trials: int
    seed: int
    tolerances: dict = field(default_factory=dict)
    out_dir: str | None = None

    def validate(self) -> "ExperimentConfig":
        g = np.asarray(self.grid, dtype=float)
        if g.size < 1 or (np.diff(g) <= 0).any():
            raise ConfigError("grid must be non-empty and strictly increasing")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.seed is None:
            raise ConfigError("seed is required; runs take no entropy from the environment")
        build_code(self.code)
        ChannelFamily.from_config(self.family)
        return self

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "family": self.family,
            "grid": list(map(float, self.grid)),
            "trials": self.trials,
            "seed": self.seed,
            "tolerances": self.tolerances,
            "out_dir": self.out_dir,
        }

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        return ExperimentConfig(
            code=d["code"],
            family=d["family"],
            grid=list(d["grid"]),
            trials=int(d["trials"]),
            seed=int(d["seed"]),
            tolerances=dict(d.get("tolerances", {})),
            out_dir=d.get("out_dir"),
        ).validate()


@dataclass
class ExitCurve:
    """EXIT curve over a channel-parameter grid, one row per grid point."""

    param: np.ndarray
    capacity: np.ndarray
    intrinsic_mi: np.ndarray
    ei: np.ndarray
    ei_stderr: np.ndarray
    gexit: np.ndarray
    method: list
    rate: float
    n: int
    orientation: str
    log2m: float = 1.0

    COLUMNS = ("param", "capacity", "intrinsic_mi", "ei", "ei_stderr", "gexit", "method")

    def check(self) -> "ExitCurve":
        for i in range(self.param.size):
            lo = -3.0 * self.ei_stderr[i] - EI_SLACK
            hi = self.log2m + 3.0 * self.ei_stderr[i] + EI_SLACK
            if not (lo <= self.ei[i] <= hi):
                raise InvariantViolation(
                    f"EI out of range at param={self.param[i]}: {self.ei[i]}"
                )
        sign = -1.0 if self.orientation == "noisiness_increasing" else 1.0
        for i in range(self.param.size - 1):
            step = sign * (self.ei[i + 1] - self.ei[i])
            slack = 3.0 * (self.ei_stderr[i] + self.ei_stderr[i + 1]) + EI_SLACK
            if step < -slack:
                raise InvariantViolation(
                    "EI must be monotone along the quality axis; violated between "
                    f"param={self.param[i]} and {self.param[i + 1]}"
                )
        return self

    def rows(self):
        for i in range(self.param.size):
            yield [
                self.param[i],
                self.capacity[i],
                self.intrinsic_mi[i],
                self.ei[i],
                self.ei_stderr[i],
                self.gexit[i],
                self.method[i],
            ]

    def to_table(self) -> tuple[list, list]:
        return list(self.COLUMNS), [list(r) for r in self.rows()]


def _sweep_point(cfg_dict: dict, idx: int) -> dict:
    cfg = ExperimentConfig.from_dict(cfg_dict)
    family = ChannelFamily.from_config(cfg.family)
    code, tanner = build_code(cfg.code)
    w = float(cfg.grid[idx])
    chan = transition_matrix(family, w)
    cap = capacity(family, w)
    imi = uniform_input_mi(chan)
    est = it.average_ei(
        code,
        family,
        w,
        trials=cfg.trials,
        seed=int(derive_rng(cfg.seed, idx).integers(1 << 62)),
        method=cfg.tolerances.get("decoder", "auto"),
        tanner=tanner,
        bp_iterations=int(cfg.tolerances.get("bp_iterations", 50)),
    )
    gexit_val = float("nan")
    if cfg.tolerances.get("include_gexit") and family.kind in ("bec", "bsc"):
        delta = float(cfg.tolerances.get("gexit_delta", 1e-4))
        lo, hi = family.param_range()
        if lo + delta < w < hi - delta and code.k <= 16:
            gexit_val = it.gexit_numeric(enumerate_codebook(code), family, w, delta).value
    return {
        "param": w,
        "capacity": cap,
        "intrinsic_mi": imi,
        "ei": est.value,
        "ei_stderr": est.standard_error,
        "gexit": gexit_val,
        "method": est.method + (f"[{est.decoder}]" if est.decoder else ""),
    }


def exit_sweep(config: ExperimentConfig, workers: int = 1) -> ExitCurve:
    """One EXIT curve; deterministic under the seed, loud on invariant failure."""
    config.validate()
    family = ChannelFamily.from_config(config.family)
    code, _ = build_code(config.code)
    cfg_dict = config.to_dict()
    idxs = list(range(len(config.grid)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_sweep_point, [cfg_dict] * len(idxs), idxs))
    else:
        points = [_sweep_point(cfg_dict, i) for i in idxs]
    curve = ExitCurve(
        param=np.array([p["param"] for p in points]),
        capacity=np.array([p["capacity"] for p in points]),
        intrinsic_mi=np.array([p["intrinsic_mi"] for p in points]),
        ei=np.array([p["ei"] for p in points]),
        ei_stderr=np.array([p["ei_stderr"] for p in points]),
        gexit=np.array([p["gexit"] for p in points]),
        method=[p["method"] for p in points],
        rate=code.rate,
        n=code.n,
        orientation=family.orientation,
    )
    return curve.check()


def area_check(curve: ExitCurve, endpoint_tol: float = 1e-6) -> dict:
    """Trapezoidal area of EI over the intrinsic-MI axis vs (1-R) log2 M."""
    order = np.argsort(curve.intrinsic_mi)
    x = curve.intrinsic_mi[order]
    y = curve.ei[order]
    if x[0] > endpoint_tol or x[-1] < curve.log2m - endpoint_tol:
        raise DomainError(
            "incomplete coverage: curve must span the intrinsic-MI range "
            f"[0, {curve.log2m}] (got [{x[0]}, {x[-1]}])"
        )
    area = float(np.trapezoid(y, x))
    area_half = float(np.trapezoid(y[::2], x[::2]))
    expected = (1.0 - curve.rate) * curve.log2m
    return {
        "area": area,
        "expected": expected,
        "deviation": area - expected,
        "integration_error": abs(area - area_half) / 3.0,
    }


@dataclass
class StepConvergenceResult:
    """EXIT curves of one rate at several block lengths, with widths."""

    rate: float
    family: dict
    grid: np.ndarray
    trials: int
    seed: int
    n_list: list
    curves: dict  # n -> ExitCurve
    widths: dict  # n -> float
    thresholds: dict  # n -> EI=1/2 crossing

    @property
    def capacity_matching_param(self) -> float:
        return 1.0 - self.rate  # BEC: C(eps) = 1 - eps crosses R at eps = 1 - R

    def check(self) -> "StepConvergenceResult":
        ws = [self.widths[n] for n in self.n_list]
        for a, b in zip(ws, ws[1:]):
            if not b < a:
                raise InvariantViolation(
                    f"transition width must shrink with n: {dict(zip(self.n_list, ws))}"
                )
        return self

    def rows(self):
        for n in self.n_list:
            c = self.curves[n]
            for i in range(c.param.size):
                yield [n, c.param[i], c.capacity[i], c.ei[i], c.ei_stderr[i]]


def _crossing(params: np.ndarray, ei: np.ndarray, level: float) -> float:
    """Linearly interpolated parameter where a decreasing EI crosses level."""
    for i in range(ei.size - 1):
        a, b = ei[i], ei[i + 1]
        if (a - level) * (b - level) <= 0 and a != b:
            t = (a - level) / (a - b)
            return float(params[i] + t * (params[i + 1] - params[i]))
    raise ConfigError(
        f"EI never crosses {level} on the grid; extend it beyond "
        f"[{params[0]}, {params[-1]}]"
    )


def step_convergence(
    rate: float,
    n_list: list,
    family: ChannelFamily,
    grid: list,
    trials: int,
    seed: int,
    workers: int = 1,
) -> StepConvergenceResult:
    """Transition sharpening of random linear codes as n grows (BEC decoder).

    The 0.1-0.9 EI crossing width per block length must shrink strictly
    with n (checked by .check()); thresholds are reported against the
    capacity-matching parameter, never asserted.
    """
    if family.kind != "bec":
        raise DomainError("step convergence uses the exact BEC rank decoder")
    curves, widths, thresholds = {}, {}, {}
    for n in n_list:
        k = int(round(rate * n))
        cfg = ExperimentConfig(
            code={"kind": "random_linear", "n": int(n), "k": k, "seed": int(seed) + int(n)},
            family=family.to_config(),
            grid=list(grid),
            trials=trials,
            seed=int(seed) + int(n),
            tolerances={"decoder": "bec_rank"},
        )
        curve = exit_sweep(cfg, workers=workers)
        curves[n] = curve
        widths[n] = _crossing(curve.param, curve.ei, 0.1) - _crossing(curve.param, curve.ei, 0.9)
        thresholds[n] = _crossing(curve.param, curve.ei, 0.5)
    return StepConvergenceResult(
        rate=rate,
        family=family.to_config(),
        grid=np.asarray(grid, dtype=float),
        trials=trials,
        seed=seed,
        n_list=list(n_list),
        curves=curves,
        widths=widths,
        thresholds=thresholds,
    )


@dataclass
class DiGapTable:
    params: np.ndarray
    gaps: list  # MiGap per point
    orientation: str

    def check(self) -> "DiGapTable":
        for g in self.gaps:
            g.check()
        vals = np.array([g.gap for g in self.gaps])
        sign = -1.0 if self.orientation == "quality_increasing" else 1.0
        diffs = sign * np.diff(vals)
        if (diffs > 1e-10).any():
            raise InvariantViolation(
                "MI gap must be non-decreasing in channel quality"
            )
        return self

    def rows(self):
        for p, g in zip(self.params, self.gaps):
            yield [p, g.i_independent, g.i_coded, g.gap]


def di_monotonicity(code: LinearCode, family: ChannelFamily, grid: list) -> DiGapTable:
    """Exact independent-vs-coded MI gap along the grid, sign and monotonicity."""
    cb = enumerate_codebook(code)
    gaps = []
    for w in grid:
        chan = transition_matrix(family, float(w))
        gaps.append(it.di_gap(cb, chan, param=float(w)))
    return DiGapTable(np.asarray(grid, dtype=float), gaps, family.orientation).check()


@dataclass
class GexitSuiteResult:
    params: np.ndarray
    rows_per_point: list
    dg_integral: float
    gap_difference: float
    decomposition_residual: float
    eq11_residual: float
    eq13_residual: float

    def check(self, fd_tol: float = 1e-8) -> "GexitSuiteResult":
        for row in self.rows_per_point:
            if row["dg"] < -fd_tol:
                raise InvariantViolation(
                    f"DG must be nonnegative; got {row['dg']} at {row['param']}"
                )
        return self

    def rows(self):
        for r in self.rows_per_point:
            yield [
                r["param"],
                r["gexit"],
                r["gexit_i_mean"],
                r["gexit0"],
                r["dg"],
                r["eq13_max_abs_err"],
                r["eq11_max_abs_err"],
                r["decomposition_err"],
            ]


def gexit_suite(
    code: LinearCode, family: ChannelFamily, grid: list, delta: float = 1e-4
) -> GexitSuiteResult:
    """Per-point GEXIT identities plus the integral-vs-gap bookkeeping.

    Checks, per point: the per-symbol decomposition, the extrinsic-route
    identity for GEXIT_i, and both sides of the derivative identity
    GEXIT0_i - GEXIT_i = -d/dw_i I(z_i; y_i).  Integrates DG over the grid
    (Simpson) and compares with the gap difference between the endpoints.
    """
    cb = enumerate_codebook(code)
    rows = []
    gaps = []
    for w in grid:
        w = float(w)
        comp = it.dg_gap(cb, family, w, delta)
        joint = it.gexit_numeric(cb, family, w, delta).value
        chan = transition_matrix(family, w)
        gaps.append(it.di_gap(cb, chan, param=w).gap)
        rows.append(
            {
                "param": w,
                "gexit": joint,
                "gexit_i_mean": float(np.mean(comp["gexit_i"])) / 1.0,
                "gexit0": comp["gexit0"],
                "dg": comp["dg"],
                "decomposition_err": abs(joint - np.mean(comp["gexit_i"])),
                "eq11_max_abs_err": float(
                    np.max(np.abs(comp["gexit_i"] - comp["gexit_i_via_zy"]))
                ),
                "eq13_max_abs_err": float(
                    np.max(np.abs(comp["eq13_lhs"] - comp["eq13_rhs"]))
                ),
            }
        )
    params = np.asarray(grid, dtype=float)
    dg_vals = np.array([r["dg"] for r in rows])
    dg_integral = float(simpson(dg_vals, x=params))
    gap_difference = float(gaps[0] - gaps[-1])
    return GexitSuiteResult(
        params=params,
        rows_per_point=rows,
        dg_integral=dg_integral,
        gap_difference=gap_difference,
        decomposition_residual=max(r["decomposition_err"] for r in rows),
        eq11_residual=max(r["eq11_max_abs_err"] for r in rows),
        eq13_residual=max(r["eq13_max_abs_err"] for r in rows),
    ).check()


@dataclass
class KlCollapseResult:
    params: np.ndarray
    capacities: np.ndarray
    rate: float
    max_kl: np.ndarray

    def rows(self):
        for i in range(self.params.size):
            yield [
                self.params[i],
                self.capacities[i],
                self.capacities[i] - self.rate,
                self.max_kl[i],
            ]


def kl_collapse_scan(
    code: LinearCode,
    family: ChannelFamily,
    grid: list,
    positions: list | None = None,
) -> KlCollapseResult:
    """Max pairwise extrinsic KL per grid point, by exact enumeration.

    Above-capacity points (C < R) should collapse toward zero, below-capacity
    points stay bounded away; the table reports the capacity margin alongside.
    """
    if family.kind not in ("bec", "bsc"):
        raise DomainError("KL collapse scan is defined for BSC and BEC")
    cb = enumerate_codebook(code)
    n = code.n
    if positions is None:
        positions = list(range(n))
    caps, kls = [], []
    for w in grid:
        w = float(w)
        chan = transition_matrix(family, w)
        caps.append(capacity(family, w))
        worst = 0.0
        for i in positions:
            table = it.extrinsic_kl_exact(cb, chan, i)
            finite = [v for v in table.values() if np.isfinite(v)]
            if finite:
                worst = max(worst, max(finite))
        kls.append(worst)
    return KlCollapseResult(
        params=np.asarray(grid, dtype=float),
        capacities=np.asarray(caps),
        rate=code.rate,
        max_kl=np.asarray(kls),
    )


# ---------------------------------------------------------------------------
# table emission


def format_cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FLOAT_FMT % float(v)


def write_csv(path, colnames, rows, comment: str = ""):
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append(f"# columns: {','.join(colnames)}")
    lines.append(",".join(colnames))
    for r in rows:
        lines.append(",".join(format_cell(v) for v in r))
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text


def read_csv(path):
    colnames, rows = None, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if colnames is None:
                colnames = line.split(",")
            else:
                rows.append(line.split(","))
    return colnames, rows


def write_json(path, config_dict: dict, colnames, rows):
    doc = {
        "config": config_dict,
        "columns": list(colnames),
        "results": [[format_cell(v) for v in r] for r in rows],
    }
    text = json.dumps(doc, indent=1, sort_keys=True)
    with open(path, "w") as fh:
        fh.write(text + "\n")
    return text


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
