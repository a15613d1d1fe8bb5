"""Maximum-likelihood detection under symbol-dependent Gaussian noise.

The 32-point sets are not Cartesian products, so detection is joint over both
dimensions; slicing each PAM-6 component separately is not ML.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .constellation import Constellation
from .model import NoiseModel, Observation2D, Point2D, variance


@dataclass(frozen=True)
class DetectorContext:
    constellation: Constellation
    model: NoiseModel
    beta: float
    labeling: object = None
    points: np.ndarray = field(init=False, repr=False, compare=False)
    var: np.ndarray = field(init=False, repr=False, compare=False)
    log_var: np.ndarray = field(init=False, repr=False, compare=False)
    codes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = self.constellation.as_array()
        var = variance(pts, self.model, self.beta)
        with np.errstate(divide="ignore"):
            log_var = np.log(var)
        codes = (self.labeling.codes(self.constellation) if self.labeling is not None
                 else np.arange(len(pts), dtype=np.int64))
        for name, value in (("points", pts), ("var", var), ("log_var", log_var), ("codes", codes)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    def with_model(self, model: NoiseModel, beta: float | None = None) -> "DetectorContext":
        return DetectorContext(self.constellation, model, self.beta if beta is None else beta, self.labeling)


def build_context(constellation: Constellation, model: NoiseModel, beta: float, labeling=None) -> DetectorContext:
    return DetectorContext(constellation, model, beta, labeling)


def log_likelihood(y, x, ctx: DetectorContext) -> float:
    """``-1/2 * sum_i [ln var_i + (y_i - x_i)^2 / var_i]`` for one candidate.

    A zero-variance dimension gives ``-inf`` unless ``y_i == x_i``, in which
    case ``+inf`` is returned as a sentinel for a certain match.
    """
    x = Point2D(*x)
    if x not in ctx.constellation:
        raise ValueError(f"{x} is not in the constellation")
    k = ctx.constellation.index(x)
    total = 0.0
    sentinel = False
    for d in range(2):
        v = ctx.var[k, d]
        r = y[d] - x[d]
        if v == 0:
            if r != 0:
                return -math.inf
            sentinel = True
            continue
        total += math.log(v) + r * r / v
    return math.inf if sentinel else -0.5 * total


def ml_detect_indices(y, ctx: DetectorContext) -> np.ndarray:
    """Indices into ``ctx.constellation.points`` for an ``(n, 2)`` array of outputs."""
    y = np.asarray(y, dtype=float).reshape(-1, 2)
    return _backend.kernels.ml_detect_batch(y, ctx.points, ctx.var)


def ml_detect(y, ctx: DetectorContext) -> Point2D:
    """Most likely transmitted point; ties go to the earlier point in canonical order."""
    k = int(ml_detect_indices(np.asarray(y, dtype=float)[None, :], ctx)[0])
    return ctx.constellation.points[k]


def demap(x_hat, ctx: DetectorContext) -> str:
    if ctx.labeling is None:
        raise ValueError("detector context has no labeling")
    x_hat = Point2D(*x_hat)
    if x_hat not in ctx.constellation:
        raise ValueError(f"{x_hat} is not in the constellation")
    return ctx.labeling[x_hat]


def swap_observation(y) -> Observation2D:
    return Observation2D(y[1], y[0])
