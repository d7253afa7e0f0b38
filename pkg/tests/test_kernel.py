import math

import numpy as np
import pytest

from dyadvar import ArgumentError, PreconditionError
from dyadvar.kernel import (
    AnnulusSpec,
    DrParams,
    KernelParams,
    auto_range,
    dr_constant_profile,
    dr_integral,
    dr_integral_quadrature,
    fourier_multiplier_norm,
    hormander_by_annuli,
    hormander_integral,
    indicator_differences,
    kernel_component,
    kernel_components,
    kernel_diff_norm_brute,
    kernel_diff_norm_closed,
    kernel_diff_norm_many,
    kernel_configuration_holds,
    multiplier_components,
    multiplier_grids,
    _piecewise_integral,
)
from dyadvar.cli import random_kernel_configurations

ROOT2 = math.sqrt(2.0)


def hormander_reference(x, s=2.0):
    """Hand-derived value: with x = 2^m theta, theta in [1, 2),
    H / 2^{1/s} = theta/4 + (1 - 3 theta/4) [theta < 4/3] for theta > 1, and 1/2 at theta = 1."""
    mant, e = math.frexp(x)
    theta = 2 * mant
    if theta == 1.0:
        val = 0.5
    else:
        val = theta / 4 + (1 - 0.75 * theta if theta < 4 / 3 else 0.0)
    return 2 ** (1 / s) * val


# components -------------------------------------------------------------------


@pytest.mark.parametrize("n", [-5, 0, 3, 60])
def test_component_vanishes_on_nonnegative(n):
    assert kernel_component(n, 0.0) == 0.0
    assert kernel_component(n, 0.4) == 0.0


def test_component_examples():
    assert kernel_component(0, -0.75) == 1.0
    assert kernel_component(0, -0.25) == -1.0


def test_component_open_endpoints():
    assert kernel_component(0, -1.0) == 0.0
    assert kernel_component(0, -0.5) == 1.0


def test_component_range():
    with pytest.raises(ArgumentError):
        kernel_component(61, -1.0)
    with pytest.raises(ArgumentError):
        kernel_component(0.5, -1.0)


def test_components_vectorised():
    ns = np.arange(-3, 4)
    vals = kernel_components(ns, np.full(ns.shape, -0.75))
    assert vals.tolist() == [kernel_component(int(n), -0.75) for n in ns]


# difference norms ----------------------------------------------------------------


def test_brute_zero_cases():
    assert kernel_diff_norm_brute(0.3, 0.3, 1.0) == 0.0
    assert kernel_diff_norm_brute(2.0, 3.0, 1.0) == 0.0
    assert auto_range(0.0, 0.0) is None


def test_closed_form_examples():
    assert kernel_diff_norm_closed(0.75, 0.0, 2.5, 0, 1, 2.0) == pytest.approx(ROOT2 / 2, rel=1e-15)
    assert kernel_diff_norm_closed(0.75, 0.0, 3.5, 0, 1, 2.0) == 0.0


def test_closed_form_precondition():
    with pytest.raises(PreconditionError):
        kernel_diff_norm_closed(0.75, 0.0, 1.5, 0, 1, 2.0)
    with pytest.raises(PreconditionError):
        kernel_diff_norm_closed(0.75, 0.0, 2.5, 1, 1, 2.0)
    assert not kernel_configuration_holds(0.0, 0.0, 2.5, 0, 1)


def test_closed_form_matches_brute_and_single_index():
    rng = np.random.Generator(np.random.PCG64(3))
    configs = random_kernel_configurations(rng, 2000)
    assert len(configs) > 1990
    for x, x0, y, i, j in configs:
        for s in (2.0, 3.0):
            closed = kernel_diff_norm_closed(x, x0, y, i, j, s)
            assert abs(closed - kernel_diff_norm_brute(x, x0, y, KernelParams(s))) <= 1e-12
        ns = np.arange(j - 40, j + 41)
        phi = indicator_differences(ns, x, x0, y)
        assert np.all(phi[ns != j] == 0.0)


def test_brute_fixed_range_and_vectorised():
    x, x0 = 0.75, 0.0
    ys = np.array([2.5, 3.5, -0.2, 0.3])
    many = kernel_diff_norm_many(x, x0, ys, 2.0)
    for y, v in zip(ys, many):
        assert v == pytest.approx(kernel_diff_norm_brute(x, x0, float(y)), rel=1e-13, abs=1e-300)
        wide = kernel_diff_norm_brute(x, x0, float(y), KernelParams(2.0, (-40, 40)))
        assert v == pytest.approx(wide, rel=1e-12, abs=1e-300)


def test_kernel_params_validation():
    with pytest.raises(ArgumentError):
        KernelParams(1.0)
    with pytest.raises(ArgumentError):
        KernelParams(2.0, (3, 1))


# D_r -----------------------------------------------------------------------------


def test_dr_params():
    assert DrParams(1.0).r_conj == math.inf
    for r in (1.5, 2.0, 4.0):
        d = DrParams(r)
        assert abs(1 / r + 1 / d.r_conj - 1) <= 1e-12
    with pytest.raises(ArgumentError):
        DrParams(0.5)
    with pytest.raises(ArgumentError):
        AnnulusSpec(0.0, 2)
    with pytest.raises(ArgumentError):
        AnnulusSpec(1.0, 1)


def test_dr_integral_zero_integrand():
    # on (4x, 8x) with x = 1 the integrand lives on (4, 5) only; the interval (5, 8) is silent
    vals = kernel_diff_norm_many(1.0, 0.0, np.linspace(5.01, 7.99, 50), 2.0)
    assert np.all(vals == 0.0)


@pytest.mark.parametrize("r", [1.0, 2.0])
def test_dr_integral_matches_quadrature(r):
    spec = AnnulusSpec(1.0, 2)
    exact = dr_integral(spec, DrParams(r))
    quad = dr_integral_quadrature(spec, DrParams(r))
    assert quad == pytest.approx(exact, rel=1e-6)
    if r == 1.0:
        assert exact == pytest.approx(ROOT2 / 4, rel=1e-15)


@pytest.mark.parametrize("x", [0.3, 1.0, 2.5])
@pytest.mark.parametrize("r", [1.0, 2.0, 3.0])
def test_dr_integral_dilation_law(x, r):
    for l in (2, 5, 9):
        a = dr_integral(AnnulusSpec(2 * x, l), DrParams(r))
        b = dr_integral(AnnulusSpec(x, l), DrParams(r))
        assert a == pytest.approx(2 ** (1 / r - 1) * b, rel=1e-10)


def test_profile_nonnegative_and_decaying():
    prof = dr_constant_profile(1.0, 40, DrParams(1.0))
    c = np.array([v for _, v in prof])
    assert np.all(c >= 0)
    ratios = c[11:] / c[10:-1]
    assert np.all(ratios <= 0.6)
    sums = np.cumsum(c)
    assert sums[-1] - sums[28] < 1e-6  # L = 30 -> 40


@pytest.mark.parametrize("x", [0.3, 1.0, 2.5, 0.77])
@pytest.mark.parametrize("r", [1.0, 2.0])
def test_dr_integral_matches_breakpoint_enumeration(x, r):
    for l in range(2, 31):
        spec = AnnulusSpec(x, l)
        a, b = spec.bounds
        enum = _piecewise_integral(x, a, b, r, 2.0) ** (1 / r)
        assert dr_integral(spec, DrParams(r)) == pytest.approx(enum, rel=1e-9)


def test_profile_exact_far_out():
    # c_l = 2^{1/s} x^{1/r} |S_l|^{1/r'} 2^{-j} with a single piece per annulus, so c_{l+1}/c_l = 2^{-1/r}
    prof = dr_constant_profile(1.0, 80, DrParams(2.0))
    c = np.array([v for _, v in prof])
    assert np.all(c > 0)
    assert np.allclose(c[5:] / c[4:-1], 2 ** -0.5, rtol=1e-12)


def test_profile_rejects_short_range():
    with pytest.raises(ArgumentError):
        dr_constant_profile(1.0, 1, DrParams(1.0))


# Hormander ----------------------------------------------------------------------


@pytest.mark.parametrize("x", [0.3, 1.0, 1.7])
def test_hormander_doubling_invariance(x):
    assert hormander_integral(2 * x) == pytest.approx(hormander_integral(x), rel=1e-10)


@pytest.mark.parametrize("x", [0.3, 1.0, 1.7, 4.0, 0.77])
@pytest.mark.parametrize("s", [2.0, 3.0])
def test_hormander_matches_hand_formula(x, s):
    assert hormander_integral(x, KernelParams(s)) == pytest.approx(hormander_reference(x, s), rel=1e-12)


@pytest.mark.parametrize("x", [0.3, 1.0, 1.7])
def test_hormander_annulus_decomposition(x):
    assert hormander_by_annuli(x) == pytest.approx(hormander_integral(x), rel=1e-8)


def test_hormander_rejects_nonpositive():
    with pytest.raises(ArgumentError):
        hormander_integral(0.0)
    with pytest.raises(ArgumentError):
        hormander_by_annuli(-1.0)


# multiplier -----------------------------------------------------------------------


def test_multiplier_at_zero():
    assert fourier_multiplier_norm(0.0) == 0.0


@pytest.mark.parametrize("xi", [0.1, 1.0, 7.3, 1e-5, 3e4])
def test_multiplier_symmetry_and_doubling(xi):
    v = fourier_multiplier_norm(xi)
    assert fourier_multiplier_norm(-xi) == pytest.approx(v, rel=1e-14)
    assert fourier_multiplier_norm(2 * xi) == pytest.approx(v, rel=1e-10)


def test_multiplier_window_captures_the_tails():
    ns, m = multiplier_components(1.3)
    mag = np.abs(m)
    assert mag[0] < 1e-16 and mag[-1] < 1e-16
    assert mag.max() > 0.1


def test_multiplier_grid_sup_stable():
    period, full = multiplier_grids(1000)
    sup_p = max(fourier_multiplier_norm(float(t)) for t in period)
    sup_f = max(fourier_multiplier_norm(float(t)) for t in full)
    assert math.isfinite(sup_f)
    assert abs(sup_p - sup_f) <= 1e-6 * sup_f
    _, dense = multiplier_grids(2000)
    sup_d = max(fourier_multiplier_norm(float(t)) for t in dense)
    assert abs(sup_d - sup_f) <= 1e-3 * sup_f


def test_multiplier_rejects_nonfinite():
    with pytest.raises(ArgumentError):
        fourier_multiplier_norm(math.inf)
