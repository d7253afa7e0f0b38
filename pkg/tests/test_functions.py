import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyadvar import (
    ArgumentError,
    PiecewiseConstantFn,
    SampleGrid,
    dilate_dyadic,
    dyadic_average,
    integrate,
    translate,
)
from dyadvar.functions import combine, linear_combination

from strategies import step_functions

CHI = PiecewiseConstantFn.indicator(0.0, 1.0)
coefficients = st.integers(-3 * 2**10, 3 * 2**10).map(lambda k: math.ldexp(k, -10))


def riemann(f, a, b, cells=10**6):
    xs = a + (np.arange(cells) + 0.5) * (b - a) / cells
    return float(np.sum(f(xs)) * (b - a) / cells)


# representation -------------------------------------------------------------


def test_canonical_form_merges_and_trims():
    f = PiecewiseConstantFn([0, 1, 2, 3, 4], [0.0, 2.0, 2.0, 0.0])
    assert f.breakpoints.tolist() == [1.0, 3.0]
    assert f.values.tolist() == [2.0]
    assert PiecewiseConstantFn([0, 1], [0.0]).is_zero


@pytest.mark.parametrize(
    "b, v",
    [([0.0], []), ([0, 1, 2], [1.0]), ([1, 0], [1.0]), ([0, 0], [1.0]), ([0, np.inf], [1.0]), ([0, 1], [np.nan])],
)
def test_invalid_representation_rejected(b, v):
    with pytest.raises(ArgumentError):
        PiecewiseConstantFn(b, v)


def test_right_continuous_evaluation():
    f = PiecewiseConstantFn([0, 1, 3], [2.0, -1.0])
    assert f(0.0) == 2.0
    assert f(1.0) == -1.0
    assert f(3.0) == 0.0
    assert f(-1e-300) == 0.0
    assert f(np.array([0.5, 2.0])).tolist() == [2.0, -1.0]


def test_equality_is_representational():
    assert PiecewiseConstantFn([0, 1, 2], [1.0, 1.0]) == PiecewiseConstantFn([0, 2], [1.0])
    assert hash(PiecewiseConstantFn([0, 1, 2], [1.0, 1.0])) == hash(PiecewiseConstantFn([0, 2], [1.0]))
    assert PiecewiseConstantFn.zero() == PiecewiseConstantFn([0, 1], [0.0])


def test_json_round_trip():
    f = PiecewiseConstantFn([-0.5, 0.25, 3], [1.5, -2.0])
    g = PiecewiseConstantFn.from_json(f.to_json())
    assert f == g
    assert json.loads(f.to_json()) == {"breakpoints": [-0.5, 0.25, 3.0], "values": [1.5, -2.0]}
    with pytest.raises(ArgumentError):
        PiecewiseConstantFn.from_dict({"values": [1.0]})


def test_arrays_are_read_only():
    with pytest.raises(ValueError):
        CHI.values[0] = 3.0


def test_lp_norm_exact():
    f = PiecewiseConstantFn([0, 1, 3], [2.0, -1.0])
    assert f.lp_norm(1) == 4.0
    assert f.lp_norm(2) == pytest.approx(math.sqrt(6.0), rel=1e-15)
    assert f.lp_norm(math.inf) == 2.0


def test_combine_and_linear_combination():
    f = PiecewiseConstantFn([0, 2], [1.0])
    g = PiecewiseConstantFn([1, 3], [2.0])
    h = linear_combination([2.0, -1.0], [f, g])
    assert h == PiecewiseConstantFn([0, 1, 2, 3], [2.0, 0.0, -2.0])
    assert f + g == combine([f, g], lambda vals: vals[0] + vals[1])
    assert (f - f).is_zero


# integrate -------------------------------------------------------------------


def test_integrate_indicator_full_support():
    assert integrate(CHI, 0.0, 1.0) == 1.0


def test_integrate_zero_function():
    assert integrate(PiecewiseConstantFn.zero(), -3.0, 7.0) == 0.0


def test_integrate_two_pieces_matches_riemann():
    f = PiecewiseConstantFn([0, 1, 3], [2.0, -1.0])
    assert integrate(f, 0.5, 2.0) == 0.0
    assert abs(riemann(f, 0.5, 2.0)) < 1e-5


def test_integrate_rejects_bad_bounds():
    with pytest.raises(ArgumentError):
        integrate(CHI, 1.0, 0.0)
    with pytest.raises(ArgumentError):
        integrate(CHI, 0.0, math.inf)
    with pytest.raises(ArgumentError):
        integrate(CHI, math.nan, 1.0)


def test_integrate_matches_riemann_on_random_functions():
    rng = np.random.default_rng(7)
    for _ in range(10):
        b = np.sort(rng.uniform(-3, 3, size=6))
        f = PiecewiseConstantFn(b, rng.uniform(-1, 1, size=5))
        a, c = sorted(rng.uniform(-4, 4, size=2))
        exact = integrate(f, a, c)
        oracle = riemann(f, a, c)
        assert abs(exact - oracle) <= 1e-5 * max(1.0, abs(exact))


@settings(max_examples=200, deadline=None)
@given(step_functions(), st.lists(st.floats(-6, 6), min_size=3, max_size=3))
def test_integrate_additive(f, pts):
    a, b, c = sorted(pts)
    assert abs(integrate(f, a, c) - integrate(f, a, b) - integrate(f, b, c)) <= 1e-12


# dyadic averages -------------------------------------------------------------


@pytest.mark.parametrize("n, x, want", [(0, 0.0, 1.0), (0, 0.5, 0.5), (1, 0.0, 0.5)])
def test_dyadic_average_indicator(n, x, want):
    assert dyadic_average(CHI, n, x) == want


def test_dyadic_average_formula_on_unit_interval():
    for x in np.linspace(0, 1, 17):
        assert dyadic_average(CHI, 0, float(x)) == pytest.approx(1 - x, abs=1e-15)


def test_dyadic_average_exponent_range():
    dyadic_average(CHI, 60, 0.0)
    with pytest.raises(ArgumentError):
        dyadic_average(CHI, 61, 0.0)
    with pytest.raises(ArgumentError):
        dyadic_average(CHI, -61, 0.0)


@settings(max_examples=200, deadline=None)
@given(
    step_functions(),
    step_functions(),
    coefficients,
    coefficients,
    st.integers(-10, 10),
    st.floats(-8, 8),
)
def test_dyadic_average_linear(f, g, alpha, beta, n, x):
    h = linear_combination([alpha, beta], [f, g])
    lhs = dyadic_average(h, n, x)
    rhs = alpha * dyadic_average(f, n, x) + beta * dyadic_average(g, n, x)
    scale = abs(alpha) * dyadic_average(f.abs(), n, x) + abs(beta) * dyadic_average(g.abs(), n, x)
    assert abs(lhs - rhs) <= 1e-12 * max(scale, 1e-300) + 1e-300


@settings(max_examples=200, deadline=None)
@given(step_functions(), st.integers(-20, 20), st.integers(-20, 20), st.floats(-8, 8))
def test_dyadic_average_dilation_covariance(f, n, k, x):
    lhs = dyadic_average(dilate_dyadic(f, k), n, x)
    rhs = dyadic_average(f, n + k, math.ldexp(x, k))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(step_functions(), st.integers(-10, 10), st.integers(-2**12, 2**12), st.integers(-2**12, 2**12))
def test_dyadic_average_translation_covariance(f, n, ti, xi):
    t, x = math.ldexp(ti, -8), math.ldexp(xi, -8)
    lhs = dyadic_average(translate(f, t), n, x)
    rhs = dyadic_average(f, n, x - t)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-15)


# dilation and translation ------------------------------------------------------


def test_dilate_examples():
    assert dilate_dyadic(CHI, 1) == PiecewiseConstantFn.indicator(0.0, 0.5)
    assert dilate_dyadic(CHI, 0) == CHI
    g = dilate_dyadic(PiecewiseConstantFn([0, 2], [3.0]), -1)
    assert g == PiecewiseConstantFn([0, 4], [3.0])
    assert g(3.0) == 3.0


def test_dilate_range():
    dilate_dyadic(CHI, 40)
    with pytest.raises(ArgumentError):
        dilate_dyadic(CHI, 41)


def test_translate_examples():
    assert translate(CHI, 0.0) == CHI
    assert translate(CHI, 2.0) == PiecewiseConstantFn.indicator(2.0, 3.0)
    with pytest.raises(ArgumentError):
        translate(CHI, math.inf)


# sample grids -------------------------------------------------------------------


def test_sample_grid_points_are_cell_midpoints():
    g = SampleGrid(-1.0, 0.25, 8)
    assert g.points().tolist() == [-0.875, -0.625, -0.375, -0.125, 0.125, 0.375, 0.625, 0.875]
    assert g.stop == 1.0
    assert g.edges()[0] == -1.0 and g.edges()[-1] == 1.0


def test_sample_grid_halved_and_dilated():
    g = SampleGrid(-16.0, 2.0**-10, 32 * 2**10)
    h = g.halved()
    assert (h.start, h.stop, h.count) == (g.start, g.stop, 2 * g.count)
    d = g.dilated(3)
    assert np.array_equal(d.points(), np.ldexp(g.points(), -3))


@pytest.mark.parametrize("args", [(0.0, 0.0, 4), (0.0, -1.0, 4), (0.0, 1.0, 0), (math.nan, 1.0, 3)])
def test_sample_grid_rejects_invalid(args):
    with pytest.raises(ArgumentError):
        SampleGrid(*args)


def test_sample_grid_avoids_lattice_breakpoints():
    g = SampleGrid(-4.0, 2.0**-8, 8 * 2**8)
    scaled = np.ldexp(g.points(), 8)
    assert np.all(scaled != np.round(scaled))
