"""Exhaustive SER minimisation over 32-point subsets of QAM-36."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

from .constellation import RemovalSet, enumerate_all_removals, enumerate_symmetric_removals, remove_points
from .detection import build_context
from .evaluation import QuadratureSpec, StopRule, monte_carlo, quadrature_ser
from .model import PAM6, ChannelParams, NoiseModel, rin_variance

SYMMETRIC = "symmetric"
FULL = "full"
QUADRATURE = "quadrature"
MONTE_CARLO = "monte-carlo"

SATURATION_THERMAL_FRACTION = 0.01


class CandidateEvaluationError(RuntimeError):
    def __init__(self, removal, cause):
        super().__init__(f"evaluation failed for removal set {removal}: {cause}")
        self.removal = removal


@dataclass(frozen=True)
class SearchReport:
    best: RemovalSet
    best_ser: float
    ranked: list
    evaluator: str
    config: dict = field(default_factory=dict)
    rechecked: list = field(default_factory=list)

    def rank_of(self, removal) -> int:
        removal = removal if isinstance(removal, RemovalSet) else RemovalSet(frozenset(removal))
        for i, (r, _) in enumerate(self.ranked):
            if r == removal:
                return i + 1
        raise KeyError(removal)

    def ser_of(self, removal) -> float:
        return self.ranked[self.rank_of(removal) - 1][1]


def saturation_params(template: ChannelParams, rin_db_hz: float | None = None) -> ChannelParams:
    """Operating point deep in the RIN-limited regime.

    ``eta`` is chosen so the thermal variance is 1% of the smallest non-zero
    RIN term ``(x + beta)^2 * sigma_rin^2``.
    """
    params = template if rin_db_hz is None else template.replace(rin_db_hz=rin_db_hz)
    if not params.rin_enabled:
        raise ValueError("saturation operating point needs RIN enabled")
    srin = rin_variance(params)
    smallest = min((x + params.beta) ** 2 for x in PAM6 if x + params.beta > 0)
    target = SATURATION_THERMAL_FRACTION * smallest * srin
    if params.nep == 0:
        return params
    eta_w = params.nep * math.sqrt(params.bandwidth_b / target)
    return params.replace(eta=eta_w * 1e3)


def saturation_operating_point(template: ChannelParams, rin_db_hz: float | None = None) -> NoiseModel:
    return saturation_params(template, rin_db_hz).noise_model()


def _candidates(mode: str) -> list:
    if mode == SYMMETRIC:
        return enumerate_symmetric_removals()
    if mode == FULL:
        return list(enumerate_all_removals())
    raise ValueError(f"unknown search mode {mode!r}")


def _evaluate(removal, model, beta, evaluator, quad_spec, mc_trials, seed):
    ctx = build_context(remove_points(removal), model, beta)
    try:
        if evaluator == QUADRATURE:
            return quadrature_ser(ctx, quad_spec).ser
        if evaluator == MONTE_CARLO:
            # fixed trial count and one seed for all candidates: common random numbers
            stop = StopRule(min_symbol_errors=mc_trials + 1, max_trials=mc_trials)
            return monte_carlo(ctx, stop, seed=seed).ser
    except Exception as exc:  # noqa: BLE001 - re-raised with the candidate attached
        raise CandidateEvaluationError(removal, exc) from exc
    raise ValueError(f"unknown evaluator {evaluator!r}")


def _rank_key(item):
    # SERs equal to 12 significant digits are ties (mirror images differ only by rounding)
    r, ser = item
    return float(f"{ser:.12g}"), r.encoding


def optimize_constellation(model: NoiseModel, beta: float, mode: str = SYMMETRIC,
                           evaluator: str = QUADRATURE, quad_spec: QuadratureSpec | None = None,
                           mc_trials: int = 200_000, seed: int = 0, threads: int = 1,
                           recheck_top: int = 10, candidates=None) -> SearchReport:
    """Rank every candidate removal set by SER.

    Ranking ties are broken by the canonical removal-set encoding.  With the
    Monte Carlo evaluator the best ``recheck_top`` candidates are re-ranked by
    quadrature and the best of those is reported.
    """
    if quad_spec is None:
        quad_spec = QuadratureSpec(refine=False)
    cands = list(candidates) if candidates is not None else _candidates(mode)

    def job(r):
        return _evaluate(r, model, beta, evaluator, quad_spec, mc_trials, seed)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            sers = list(pool.map(job, cands))
    else:
        sers = [job(r) for r in cands]
    ranked = sorted(zip(cands, sers), key=_rank_key)

    rechecked = []
    best, best_ser = ranked[0]
    if evaluator == MONTE_CARLO and recheck_top:
        for r, _ in ranked[:recheck_top]:
            rechecked.append((r, _evaluate(r, model, beta, QUADRATURE, quad_spec, mc_trials, seed)))
        rechecked.sort(key=_rank_key)
        best, best_ser = rechecked[0]

    config = {
        "mode": mode if candidates is None else "custom",
        "evaluator": evaluator,
        "beta": beta,
        "sigma_th_sq": model.sigma_th_sq,
        "sigma_rin_sq": model.sigma_rin_sq,
        "candidates": len(cands),
        "seed": seed,
    }
    if evaluator == QUADRATURE:
        config.update({f"quad_{k}": v for k, v in asdict(quad_spec).items()})
    else:
        config["mc_trials"] = mc_trials
    return SearchReport(best, best_ser, ranked, evaluator, config, rechecked)


def format_removal(r: RemovalSet) -> str:
    return " ".join(f"{p.x1}:{p.x2}" for p in r.sorted_points())


def parse_removal(text: str) -> RemovalSet:
    pts = []
    for tok in text.split():
        a, b = tok.split(":")
        pts.append((int(a), int(b)))
    return RemovalSet(frozenset(pts))


def report_to_csv(report: SearchReport) -> str:
    buf = io.StringIO()
    for k, v in report.config.items():
        buf.write(f"# {k} = {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "removed_points", "ser", "evaluator"])
    for i, (r, ser) in enumerate(report.ranked, start=1):
        w.writerow([i, format_removal(r), f"{ser:.9g}", report.evaluator])
    return buf.getvalue()


def read_search_csv(text: str) -> list:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    return [(int(r["rank"]), parse_removal(r["removed_points"]), float(r["ser"]), r["evaluator"]) for r in rows]
