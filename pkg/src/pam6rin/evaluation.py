"""Symbol and bit error rates: Monte Carlo and a deterministic grid quadrature."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import binomtest

from . import _backend, rng
from .detection import DetectorContext
from .model import PAM6

BITS_PER_SYMBOL = 5
DEFAULT_CHUNK = 1 << 16
_POPCOUNT32 = np.array([bin(i).count("1") for i in range(32)], dtype=np.int64)


# --- Monte Carlo ------------------------------------------------------------

@dataclass(frozen=True)
class StopRule:
    min_symbol_errors: int = 100
    max_trials: int = 10**9

    def __post_init__(self):
        if self.min_symbol_errors < 1:
            raise ValueError("min_symbol_errors must be >= 1")
        if self.max_trials < 1:
            raise ValueError("max_trials must be >= 1")


def wilson_halfwidth(successes: int, trials: int, confidence: float = 0.95) -> float:
    if trials == 0:
        return 0.5
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence, method="wilson")
    return 0.5 * (ci.high - ci.low)


@dataclass(frozen=True)
class ErrorEstimate:
    ser: float
    ber: float
    symbol_trials: int
    symbol_errors: int
    bit_errors: int
    ser_ci95: float
    ber_ci95: float
    seed: int
    upper_bound_only: bool = False

    @property
    def ser_stderr(self) -> float:
        n = self.symbol_trials
        return math.sqrt(max(self.ser * (1 - self.ser), 0.0) / n) if n else math.inf

    @classmethod
    def from_counts(cls, trials: int, sym_err: int, bit_err: int, seed: int) -> "ErrorEstimate":
        nbits = BITS_PER_SYMBOL * trials
        return cls(
            ser=sym_err / trials,
            ber=bit_err / nbits,
            symbol_trials=trials,
            symbol_errors=sym_err,
            bit_errors=bit_err,
            ser_ci95=wilson_halfwidth(sym_err, trials),
            ber_ci95=wilson_halfwidth(bit_err, nbits),
            seed=seed,
            upper_bound_only=sym_err == 0,
        )


def draw_chunk(seed: int, chunk: int, n: int, m: int = 32):
    """Transmitted indices and unit-variance noise for one chunk.

    Draws depend only on ``(seed, chunk)``, so candidates evaluated with the
    same seed see common random numbers.
    """
    g = rng.generator(seed, rng.STREAM_MONTE_CARLO, chunk)
    idx = g.integers(0, m, size=n, dtype=np.intp)
    z = g.standard_normal((n, 2))
    return idx, z


def _run_chunk(ctx: DetectorContext, seed: int, chunk: int, n: int):
    idx, z = draw_chunk(seed, chunk, n, len(ctx.points))
    return _backend.kernels.mc_count(idx, z, ctx.points, ctx.var, ctx.codes)


def monte_carlo(ctx: DetectorContext, stop: StopRule = StopRule(), seed: int = 0,
                chunk_size: int = DEFAULT_CHUNK, threads: int = 1) -> ErrorEstimate:
    """Estimate SER and BER of ML detection by simulation.

    Trials are generated in fixed-size chunks, each from its own counter
    block.  The chunks are reduced in order and the stopping rule is checked
    after every chunk, so the result does not depend on ``threads``.  Bit
    errors are the Hamming distance between sent and detected labels.
    """
    chunk_size = int(chunk_size)
    trials = sym = bits = 0
    chunk = 0
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        while sym < stop.min_symbol_errors and trials < stop.max_trials:
            sizes = []
            remaining = stop.max_trials - trials
            for _ in range(max(1, threads)):
                if remaining <= 0:
                    break
                sizes.append(min(chunk_size, remaining))
                remaining -= sizes[-1]
            ids = range(chunk, chunk + len(sizes))
            if pool is None:
                results = [_run_chunk(ctx, seed, c, n) for c, n in zip(ids, sizes)]
            else:
                results = list(pool.map(lambda a: _run_chunk(ctx, seed, *a), zip(ids, sizes)))
            # speculative chunks past the stopping point are discarded
            for n, (s, b) in zip(sizes, results):
                trials += n
                sym += s
                bits += b
                chunk += 1
                if sym >= stop.min_symbol_errors:
                    break
    finally:
        if pool is not None:
            pool.shutdown()
    return ErrorEstimate.from_counts(trials, sym, bits, seed)


def ber_over_ser_ratio(estimate) -> float:
    if not estimate.ser > 0:
        raise ValueError("SER is zero; ratio undefined")
    return estimate.ber / estimate.ser


# --- quadrature -------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    """Grid quadrature settings.

    ``h`` is the nominal cell width; the grid uses the largest width not above
    ``h`` that divides the PAM spacing into an odd number of cells, so every
    constellation point sits on a cell centre.  Cells on a decision boundary
    are split ``subdivide x subdivide``.
    """

    h: float = 0.05
    k: float = 8.0
    refine: bool = True
    subdivide: int = 8
    max_cells: int = 3000

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not self.k >= 6:
            raise ValueError("k must be >= 6")
        if self.subdivide < 1:
            raise ValueError("subdivide must be >= 1")

    def halved(self) -> "QuadratureSpec":
        return QuadratureSpec(self.h / 2, self.k, self.refine, self.subdivide, self.max_cells)


@dataclass(frozen=True)
class QuadratureResult:
    ser: float
    ber: float | None
    error_bound: float
    transition: np.ndarray  # P(detect j | send i)
    h: float
    lost_mass: float
    converged: bool = True


class QuadratureDivergence(RuntimeWarning):
    pass


def _grid(h: float, half_extent: float, max_cells: int):
    spacing = PAM6[1] - PAM6[0]
    n = math.ceil(spacing / h)
    if n % 2 == 0:
        n += 1
    step = spacing / n
    span = PAM6[-1] - PAM6[0]
    margin = half_extent - PAM6[-1]
    if (span + 2 * margin) / step > max_cells:
        step = (span + 2 * margin) / max_cells
    inner = round(span / step)
    m = math.ceil(margin / step)
    centres = PAM6[0] + step * np.arange(-m, inner + m + 1)
    edges = np.concatenate([centres - step / 2, [centres[-1] + step / 2]])
    return step, edges, centres


def _cell_masses(edges: np.ndarray, mu: float, sd: float) -> np.ndarray:
    """Gaussian probability of each interval between consecutive edges (last axis)."""
    if sd == 0:
        out = np.zeros(edges.shape[:-1] + (edges.shape[-1] - 1,))
        lo, hi = edges[..., :-1], edges[..., 1:]
        out[(lo <= mu) & (mu < hi)] = 1.0
        return out
    # upper tail difference is exact where the lower CDF rounds to 1
    t = (edges - mu) / sd
    up = ndtr(-t)
    return up[..., :-1] - up[..., 1:]


def _detect_grid(c1, c2, ctx, threads):
    y = np.empty((len(c1), 2))
    y[:, 0] = c1
    y[:, 1] = c2
    k = _backend.kernels
    if threads <= 1 or len(y) < 4096:
        return k.ml_detect_batch(y, ctx.points, ctx.var)
    parts = np.array_split(y, threads)
    with ThreadPoolExecutor(threads) as pool:
        out = list(pool.map(lambda p: k.ml_detect_batch(p, ctx.points, ctx.var), parts))
    return np.concatenate(out)


def _transition_level(ctx: DetectorContext, spec: QuadratureSpec, threads: int):
    pts, var = ctx.points, ctx.var
    sd = np.sqrt(var)
    sdmax = float(sd.max())
    half = PAM6[-1] + spec.k * sdmax
    step, edges, centres = _grid(spec.h, half, spec.max_cells)
    n = len(centres)
    m = len(pts)
    C1, C2 = np.meshgrid(centres, centres, indexing="ij")
    region = _detect_grid(C1.ravel(), C2.ravel(), ctx, threads).reshape(n, n)

    boundary = np.zeros((n, n), dtype=bool)
    if spec.subdivide > 1:
        for a, b in (((slice(1, None), slice(None)), (slice(None, -1), slice(None))),
                     ((slice(None), slice(1, None)), (slice(None), slice(None, -1))),
                     ((slice(1, None), slice(1, None)), (slice(None, -1), slice(None, -1))),
                     ((slice(1, None), slice(None, -1)), (slice(None, -1), slice(1, None)))):
            d = region[a] != region[b]
            boundary[a] |= d
            boundary[b] |= d
    bi, bj = np.nonzero(boundary)
    interior = ~boundary
    reg_flat = np.where(interior, region, m).ravel()

    s = spec.subdivide
    if len(bi):
        frac = np.arange(s + 1) / s * step
        se1 = edges[bi][:, None] + frac[None, :]
        se2 = edges[bj][:, None] + frac[None, :]
        sc1 = 0.5 * (se1[:, :-1] + se1[:, 1:])
        sc2 = 0.5 * (se2[:, :-1] + se2[:, 1:])
        Y1 = np.broadcast_to(sc1[:, :, None], (len(bi), s, s)).ravel()
        Y2 = np.broadcast_to(sc2[:, None, :], (len(bi), s, s)).ravel()
        sub_region = _detect_grid(Y1, Y2, ctx, threads)

    reg_grid = reg_flat.reshape(n, n)
    if len(bi):
        sub_region = sub_region.reshape(len(bi), s * s)
    T = np.zeros((m, m))
    for i in range(m):
        # each point only needs cells within k of its own deviations
        w1 = _window(centres, pts[i, 0], spec.k * sd[i, 0] + step)
        w2 = _window(centres, pts[i, 1], spec.k * sd[i, 1] + step)
        ma = _cell_masses(edges[w1.start:w1.stop + 1], pts[i, 0], sd[i, 0])
        mb = _cell_masses(edges[w2.start:w2.stop + 1], pts[i, 1], sd[i, 1])
        M = np.outer(ma, mb).ravel()
        T[i] = np.bincount(reg_grid[w1, w2].ravel(), weights=M, minlength=m + 1)[:m]
        if len(bi):
            sel = (bi >= w1.start) & (bi < w1.stop) & (bj >= w2.start) & (bj < w2.stop)
            if sel.any():
                sa = _cell_masses(se1[sel], pts[i, 0], sd[i, 0])
                sb = _cell_masses(se2[sel], pts[i, 1], sd[i, 1])
                W = (sa[:, :, None] * sb[:, None, :]).ravel()
                T[i] += np.bincount(sub_region[sel].ravel(), weights=W, minlength=m)[:m]
    return T, step


def _window(centres: np.ndarray, mu: float, radius: float) -> slice:
    lo = int(np.searchsorted(centres, mu - radius, side="left"))
    hi = int(np.searchsorted(centres, mu + radius, side="right"))
    return slice(max(lo, 0), min(hi, len(centres)))


def _rates(T: np.ndarray, codes: np.ndarray | None):
    m = len(T)
    off = T.copy()
    np.fill_diagonal(off, 0.0)
    ser = float(off.sum() / m)
    lost = float(max(0.0, 1.0 - T.sum(axis=1).max()))
    ber = None
    if codes is not None:
        ham = _POPCOUNT32[(codes[:, None] ^ codes[None, :]) & 31]
        ber = float((T * ham).sum() / (m * BITS_PER_SYMBOL))
    return ser, ber, lost


def quadrature_ser(ctx: DetectorContext, spec: QuadratureSpec = QuadratureSpec(),
                   threads: int = 1) -> QuadratureResult:
    """SER (and BER when the context has a labeling) by integrating over decision regions.

    The probability that ``x`` is detected as ``x'`` is the Gaussian mass of
    the cells whose centre ML-detects to ``x'``; per-cell mass is a product of
    normal CDF differences.  With ``spec.refine`` the computation is repeated
    at ``h/2`` and the difference is the error bound; a coarser ``2h`` level
    detects refinement that fails to converge.
    """
    codes = ctx.codes if ctx.labeling is not None else None
    T, step = _transition_level(ctx, spec, threads)
    ser, ber, lost = _rates(T, codes)
    if not spec.refine:
        return QuadratureResult(ser, ber, lost, T, step, lost)
    T2, step2 = _transition_level(ctx, spec.halved(), threads)
    ser2, ber2, lost2 = _rates(T2, codes)
    coarse = QuadratureSpec(spec.h * 2, spec.k, False, spec.subdivide, spec.max_cells)
    ser0, _, _ = _rates(_transition_level(ctx, coarse, threads)[0], None)
    d_fine = abs(ser2 - ser)
    d_coarse = abs(ser - ser0)
    converged = d_fine <= d_coarse or d_fine <= 1e-12 * max(ser2, 1e-300) or d_fine < 1e-15
    if not converged:
        warnings.warn(f"quadrature refinement not converging: |dSER| {d_coarse:.3g} -> {d_fine:.3g}",
                      QuadratureDivergence, stacklevel=2)
    # without monotone refinement the coarse-level difference is added to stay conservative
    bound = d_fine + lost2 if converged else d_fine + d_coarse + lost2
    return QuadratureResult(ser2, ber2, bound, T2, step2, lost2, converged)
