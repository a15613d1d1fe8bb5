import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from pam6rin.constellation import cross_qam32, optimized_qam32, reference_qam32
from pam6rin.detection import build_context, demap, log_likelihood, ml_detect, ml_detect_indices, swap_observation
from pam6rin.labeling import builtin_labeling
from pam6rin.model import NoiseModel, variance

coord = st.floats(-8, 8, allow_nan=False)


def density_argmax(y, pts, var):
    """Oracle: scipy normal log-densities, summed over dimensions."""
    lp = norm.logpdf(y[None, :], loc=pts, scale=np.sqrt(var)).sum(axis=1)
    return lp


@pytest.mark.parametrize("make", [cross_qam32, reference_qam32, optimized_qam32])
def test_matches_density_oracle(backend, make):
    ctx = build_context(make(), NoiseModel(0.2, 3e-3), 5.25)
    g = np.random.default_rng(0)
    y = g.uniform(-7, 7, (2000, 2))
    det = ml_detect_indices(y, ctx)
    for yi, k in zip(y, det):
        lp = density_argmax(yi, ctx.points, ctx.var)
        best = np.max(lp)
        # the pick is a maximiser up to rounding
        assert lp[k] >= best - 1e-9 * max(1.0, abs(best))


def test_log_likelihood_matches_oracle():
    ctx = build_context(optimized_qam32(), NoiseModel(0.2, 3e-3), 5.0)
    y = (0.7, -2.2)
    for k, p in enumerate(ctx.constellation.points):
        ref = norm.logpdf(y, loc=p, scale=np.sqrt(ctx.var[k])).sum() + math.log(2 * math.pi)
        assert log_likelihood(y, p, ctx) == pytest.approx(ref, rel=1e-12)


def test_homoscedastic_is_minimum_distance(backend):
    ctx = build_context(cross_qam32(), NoiseModel(1.0, 0.0), 5.0)
    g = np.random.default_rng(1)
    y = g.uniform(-7, 7, (5000, 2))
    d2 = ((y[:, None, :] - ctx.points[None]) ** 2).sum(axis=2)
    np.testing.assert_array_equal(ml_detect_indices(y, ctx), np.argmin(d2, axis=1))


@settings(max_examples=300)
@given(coord, coord)
def test_swap_symmetry(a, b):
    ctx = build_context(optimized_qam32(), NoiseModel(0.2, 3e-3), 5.25)
    lp = density_argmax(np.array([a, b]), ctx.points, ctx.var)
    top = np.sort(lp)[-2:]
    if top[1] - top[0] < 1e-9:
        return  # tie: the canonical-order rule is not swap invariant
    assert ml_detect(swap_observation((a, b)), ctx) == ml_detect((a, b), ctx).swapped()


@pytest.mark.parametrize("model", [NoiseModel(0.1, 1e-3), NoiseModel(0, 1e-3), NoiseModel(0, 0)])
def test_noiseless_outputs_detect_correctly(backend, model):
    ctx = build_context(optimized_qam32(), model, 5.0)
    for p in ctx.constellation.points:
        assert ml_detect(p, ctx) == p


def test_zero_variance_rules():
    # sigma_th = 0 makes every x1 = -5 point exact in that dimension
    ctx = build_context(optimized_qam32(), NoiseModel(0, 1e-3), 5.0)
    assert log_likelihood((-5, 1.3), (-5, 1), ctx) == math.inf
    assert log_likelihood((-4.9, 1.3), (-5, 1), ctx) == -math.inf
    assert ml_detect((-5, 1.3), ctx).x1 == -5
    assert ml_detect((-4.999, -5), ctx).x1 != -5


def test_errors():
    ctx = build_context(optimized_qam32(), NoiseModel(0.1, 1e-3), 5.0)
    with pytest.raises(ValueError):
        log_likelihood((0, 0), (1, 3), ctx)
    with pytest.raises(ValueError):
        demap((1, 1), ctx)
    lctx = build_context(optimized_qam32(), NoiseModel(0.1, 1e-3), 5.0, builtin_labeling("optimized"))
    assert demap((5, -3), lctx) == "10001"
    with pytest.raises(ValueError):
        demap((3, 1), lctx)


def test_context_arrays_read_only():
    ctx = build_context(optimized_qam32(), NoiseModel(0.1, 1e-3), 5.0)
    with pytest.raises(ValueError):
        ctx.var[0, 0] = 1.0
    np.testing.assert_allclose(ctx.var, variance(ctx.points, ctx.model, 5.0))
