"""OMA x RIN x constellation sweeps, floor calibration and result files."""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import __version__
from .constellation import BUILTIN, parse
from .detection import build_context
from .evaluation import BITS_PER_SYMBOL, QuadratureSpec, StopRule, monte_carlo, quadrature_ser
from .labeling import builtin_labelings
from .model import (DEFAULT_BANDWIDTH, DEFAULT_BETA, DEFAULT_NEP, ChannelParams, beta_from_extinction_ratio,
                    db_to_linear, oma_to_eta, snr)
from .optimizer import saturation_params
from .rng import derive_seed

CSV_HEADER = ("oma_dbm", "rin_db_hz", "constellation", "snr_db", "ser", "ber",
              "ser_ci95", "ber_ci95", "trials", "seed")

DEFAULT_OMA_GRID = tuple(round(-8 + 0.5 * i, 12) for i in range(33))
DEFAULT_RIN_LIST = (-147.0, -144.0, -141.0)
DEFAULT_MC_MIN_BER = 1e-7

# target BER floors (SER/5 at high OMA) per RIN level
REFERENCE_FLOORS = {-141.0: 6.2e-4, -144.0: 1.77026e-5, -147.0: 2.8244e-8}


def fmt(x: float) -> str:
    return f"{x:.9g}"


@dataclass(frozen=True)
class SweepConfig:
    oma_dbm_grid: tuple = DEFAULT_OMA_GRID
    rin_list: tuple = DEFAULT_RIN_LIST
    constellations: tuple = ("cross", "reference", "optimized")
    nep: float = DEFAULT_NEP
    bandwidth_b: float = DEFAULT_BANDWIDTH
    beta: float | None = DEFAULT_BETA
    extinction_ratio_db: float | None = None
    min_symbol_errors: int = 100
    max_trials: int = 10**9
    seed: int = 0
    mc_min_ber: float = DEFAULT_MC_MIN_BER

    def __post_init__(self):
        if not self.oma_dbm_grid or not self.rin_list or not self.constellations:
            raise ValueError("sweep grids must be nonempty")
        self.channel_template()  # validates parameters

    @property
    def effective_beta(self) -> float:
        if self.extinction_ratio_db is not None:
            return beta_from_extinction_ratio(db_to_linear(self.extinction_ratio_db))
        return DEFAULT_BETA if self.beta is None else self.beta

    def channel_template(self) -> ChannelParams:
        return ChannelParams(nep=self.nep, bandwidth_b=self.bandwidth_b,
                             rin_db_hz=self.rin_list[0], beta=self.effective_beta)

    def stop_rule(self) -> StopRule:
        return StopRule(self.min_symbol_errors, self.max_trials)

    @classmethod
    def from_mapping(cls, values: dict) -> "SweepConfig":
        rename = {"oma_dbm": "oma_dbm_grid", "rin_db_hz": "rin_list", "nep_w_sqrthz": "nep",
                  "bandwidth_hz": "bandwidth_b"}
        kwargs = {rename.get(k, k): v for k, v in values.items()}
        if "extinction_ratio_db" in kwargs and "beta" not in kwargs:
            kwargs["beta"] = None
        return cls(**kwargs)

    def echo(self) -> dict:
        beta = self.effective_beta
        return {
            "oma_dbm": ",".join(fmt(v) for v in self.oma_dbm_grid),
            "rin_db_hz": ",".join(fmt(v) for v in self.rin_list),
            "constellations": ",".join(self.constellations),
            "nep_w_sqrthz": fmt(self.nep),
            "bandwidth_hz": fmt(self.bandwidth_b),
            "beta": fmt(beta),
            "extinction_ratio_db": "" if self.extinction_ratio_db is None else fmt(self.extinction_ratio_db),
            "min_symbol_errors": str(self.min_symbol_errors),
            "max_trials": str(self.max_trials),
            "seed": str(self.seed),
            "mc_min_ber": fmt(self.mc_min_ber),
        }


def resolve_constellation(name: str):
    """Builtin name or path to a labeled constellation file."""
    if name in BUILTIN:
        return builtin_labelings()[name]
    path = Path(name)
    c, lab = parse(path.read_text(encoding="utf-8"), name=path.stem)
    if lab is None:
        raise ValueError(f"{path}: constellation file has no labels")
    return c, lab


@dataclass(frozen=True)
class SweepRow:
    oma_dbm: float
    rin_db_hz: float
    constellation: str
    snr_db: float
    ser: float
    ber: float
    ser_ci95: float
    ber_ci95: float
    trials: int
    seed: int

    def as_strings(self) -> list:
        return [fmt(self.oma_dbm), fmt(self.rin_db_hz), self.constellation, fmt(self.snr_db),
                fmt(self.ser), fmt(self.ber), fmt(self.ser_ci95), fmt(self.ber_ci95),
                str(self.trials), str(self.seed)]

    @property
    def quadrature_only(self) -> bool:
        return self.trials == 0


@dataclass
class RunManifest:
    config: dict
    case_seeds: dict = field(default_factory=dict)
    quadrature_only: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    wall_time_s: float = 0.0
    tool_version: str = __version__
    extra: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [f"tool_version = {self.tool_version}"]
        lines += [f"config.{k} = {v}" for k, v in self.config.items()]
        lines += [f"{k} = {v}" for k, v in self.extra.items()]
        lines += [f"case_seed.{k} = {v}" for k, v in self.case_seeds.items()]
        lines += [f"quadrature_only.{i} = {v}" for i, v in enumerate(self.quadrature_only)]
        lines += [f"failure.{i} = {v}" for i, v in enumerate(self.failures)]
        lines.append(f"wall_time_s = {self.wall_time_s:.3f}")
        return "\n".join(lines) + "\n"


def case_seed(cfg: SweepConfig, i_rin: int, i_oma: int) -> int:
    # shared by all constellations of a case so they see common random numbers
    return derive_seed(cfg.seed, i_rin, i_oma)


def run_case(cfg: SweepConfig, name: str, constellation, labeling, rin: float, oma: float, seed: int):
    params = cfg.channel_template().replace(rin_db_hz=rin, eta=oma_to_eta(oma))
    model = params.noise_model()
    ctx = build_context(constellation, model, params.beta, labeling)
    snr_db = snr(constellation, model, params.beta).db
    predicted = quadrature_ser(ctx, QuadratureSpec(refine=False))
    if predicted.ber < cfg.mc_min_ber:
        q = quadrature_ser(ctx)
        return SweepRow(oma, rin, name, snr_db, q.ser, q.ber, q.error_bound,
                        q.error_bound / BITS_PER_SYMBOL, 0, seed), True
    est = monte_carlo(ctx, cfg.stop_rule(), seed=seed)
    return SweepRow(oma, rin, name, snr_db, est.ser, est.ber, est.ser_ci95, est.ber_ci95,
                    est.symbol_trials, seed), False


def run_sweep(cfg: SweepConfig, threads: int = 1):
    """One row per (constellation, RIN, OMA), sorted in that order.

    SER and BER come from Monte Carlo, except for cases whose quadrature BER
    is below ``cfg.mc_min_ber``: those are computed by quadrature and carry
    ``trials = 0`` with the quadrature error bound as the interval.
    """
    t0 = time.perf_counter()
    consts = [(i, name, *resolve_constellation(name)) for i, name in enumerate(cfg.constellations)]
    manifest = RunManifest(cfg.echo())
    cases = []
    for i_rin, rin in enumerate(cfg.rin_list):
        for i_oma, oma in enumerate(cfg.oma_dbm_grid):
            seed = case_seed(cfg, i_rin, i_oma)
            manifest.case_seeds[f"{fmt(rin)}.{fmt(oma)}"] = seed
            for i_c, name, c, lab in consts:
                cases.append(((i_c, rin, oma), name, c, lab, rin, oma, seed))

    def job(case):
        key, name, c, lab, rin, oma, seed = case
        try:
            row, quad = run_case(cfg, name, c, lab, rin, oma, seed)
            return key, row, quad, None
        except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
            return key, None, False, f"{name} rin={fmt(rin)} oma={fmt(oma)}: {exc!r}"

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(job, cases))
    else:
        results = [job(c) for c in cases]
    results.sort(key=lambda r: r[0])
    rows = []
    for key, row, quad, err in results:
        if err is not None:
            manifest.failures.append(err)
            continue
        rows.append(row)
        if quad:
            manifest.quadrature_only.append(f"{row.constellation} {fmt(row.rin_db_hz)} {fmt(row.oma_dbm)}")
    manifest.wall_time_s = time.perf_counter() - t0
    return rows, manifest


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.as_strings())
    return buf.getvalue()


def read_csv(text: str) -> list:
    lines = text.splitlines()
    while lines and lines[0].startswith("#"):
        lines.pop(0)
    reader = csv.reader(lines)
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise ValueError(f"unexpected header {header}")
    out = []
    for rec in reader:
        out.append(SweepRow(float(rec[0]), float(rec[1]), rec[2], float(rec[3]), float(rec[4]),
                            float(rec[5]), float(rec[6]), float(rec[7]), int(rec[8]), int(rec[9])))
    return out


def emit_csv(rows, manifest: RunManifest, out_dir, csv_name: str = "sweep.csv",
             manifest_name: str = "manifest.txt"):
    if not rows:
        raise ValueError("no rows to write")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / csv_name
    man_path = out_dir / manifest_name
    csv_path.write_text(rows_to_csv(rows), encoding="utf-8", newline="")
    man_path.write_text(manifest.to_text(), encoding="utf-8", newline="")
    return csv_path, man_path


# --- floor calibration ------------------------------------------------------

@dataclass(frozen=True)
class Calibration:
    params: ChannelParams
    target_rin_db_hz: float
    target_floor: float
    achieved_floor: float
    sigma_rin_sq: float


def floor_ser(params: ChannelParams, rin_db_hz: float, name: str = "optimized",
              spec: QuadratureSpec = QuadratureSpec(refine=False)):
    """Quadrature SER and BER at the saturation operating point."""
    c, lab = resolve_constellation(name)
    sat = saturation_params(params, rin_db_hz)
    return quadrature_ser(build_context(c, sat.noise_model(), sat.beta, lab), spec)


def floor_monte_carlo(params: ChannelParams, rin_db_hz: float, name: str = "optimized",
                      stop: StopRule = StopRule(1000), seed: int = 0):
    c, lab = resolve_constellation(name)
    sat = saturation_params(params, rin_db_hz)
    return monte_carlo(build_context(c, sat.noise_model(), sat.beta, lab), stop, seed=seed)


def calibrate_floor(target_rin_db_hz: float = -144.0, ber_floor: float = REFERENCE_FLOORS[-144.0],
                    template: ChannelParams | None = None, name: str = "optimized",
                    bracket: tuple = (1e6, 1e15), rtol: float = 0.02) -> Calibration:
    """Fit the noise bandwidth so that the saturated SER/5 equals ``ber_floor``.

    ``beta`` and NEP stay fixed; the bandwidth scales the RIN variance (and the
    thermal variance, which is negligible at saturation).  Root-finding is
    done in log-bandwidth.
    """
    if not 0 < ber_floor < 0.5:
        raise ValueError("target floor must be in (0, 0.5)")
    template = template or ChannelParams()

    def gap(log_b):
        p = template.replace(bandwidth_b=math.exp(log_b))
        ser = floor_ser(p, target_rin_db_hz, name).ser
        return math.log(max(ser, 1e-300) / BITS_PER_SYMBOL) - math.log(ber_floor)

    lo, hi = (math.log(b) for b in bracket)
    f_lo, f_hi = gap(lo), gap(hi)
    if f_lo * f_hi > 0:
        raise ValueError(f"target floor {ber_floor:g} unreachable for bandwidth in {bracket}")
    log_b = brentq(gap, lo, hi, xtol=1e-9, rtol=1e-12)
    params = template.replace(bandwidth_b=math.exp(log_b))
    achieved = floor_ser(params, target_rin_db_hz, name).ser / BITS_PER_SYMBOL
    if abs(achieved / ber_floor - 1) > rtol:
        raise ValueError(f"calibration missed target: {achieved:g} vs {ber_floor:g}")
    srin = params.replace(rin_db_hz=target_rin_db_hz).noise_model().sigma_rin_sq
    return Calibration(params, target_rin_db_hz, ber_floor, achieved, srin)


def gains_at(rows, oma_dbm: float, rin_db_hz: float, base: str = "cross") -> dict:
    """SNR gain in dB of each constellation over ``base`` at one sweep point."""
    sel = {r.constellation: r.snr_db for r in rows
           if np.isclose(r.oma_dbm, oma_dbm) and np.isclose(r.rin_db_hz, rin_db_hz)}
    return {k: v - sel[base] for k, v in sel.items() if k != base}


def with_calibration(cfg: SweepConfig, cal: Calibration) -> SweepConfig:
    return replace(cfg, bandwidth_b=cal.params.bandwidth_b)
