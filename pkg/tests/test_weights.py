import math

import numpy as np
import pytest

from dyadvar import ArgumentError, SampleGrid
from dyadvar.variation import lp_norm
from dyadvar.weights import (
    ConstantWeight,
    IntervalFamily,
    PiecewiseWeight,
    PowerWeight,
    TwoSidedPowerWeight,
    a1_characteristic,
    a1_report,
    ainfty_witness,
    ap_characteristic,
    depth_trace_verdict,
    weight_from_dict,
    weight_from_json,
    weight_integral,
    weighted_distribution,
    weighted_distribution_curve,
    weighted_lp_norm,
)

UNIT = IntervalFamily((0.0, 1.0), 0, 0, shifted=False)
DEEP = IntervalFamily((0.0, 1.0), -12, 0)
TEST_WEIGHTS = [
    ConstantWeight(2.5),
    PowerWeight(0.5),
    PowerWeight(-0.5),
    PowerWeight(0.25, 3.0),
    TwoSidedPowerWeight(-0.3, 0.6),
    PiecewiseWeight((-1.0, 0.0, 0.5), (2.0, 0.5), 1.0),
]


def quad(w, a, b, cells=2_000_000):
    xs = a + (np.arange(cells) + 0.5) * (b - a) / cells
    return float(np.sum(w(xs)) * (b - a) / cells)


# integrals ------------------------------------------------------------------------


def test_weight_integral_examples():
    assert weight_integral(ConstantWeight(1.0), 0, 3) == 3.0
    assert weight_integral(PowerWeight(0.5), 0, 1) == pytest.approx(2 / 3, rel=1e-15)
    assert weight_integral(PowerWeight(-0.5), 0, 1) == pytest.approx(2.0, rel=1e-15)


def test_weight_integral_quadrature_oracle():
    assert quad(PowerWeight(0.5), 0, 1) == pytest.approx(2 / 3, rel=1e-8)
    for w in TEST_WEIGHTS:
        if min(w.to_dict().get(k, 0.0) for k in ("a", "a_neg", "a_pos")) < 0:
            continue  # midpoint sums converge too slowly near an integrable singularity
        assert weight_integral(w, -0.7, 1.3) == pytest.approx(quad(w, -0.7, 1.3), rel=1e-7)


def test_weight_integral_across_origin_and_bounds():
    w = PowerWeight(0.5)
    assert weight_integral(w, -1, 1) == pytest.approx(4 / 3, rel=1e-15)
    assert weight_integral(w, 2, 2) == 0.0
    with pytest.raises(ArgumentError):
        weight_integral(w, 1, 0)
    with pytest.raises(ArgumentError):
        weight_integral(w, 0, math.inf)


def test_weight_descriptors():
    assert weight_from_json('{"kind":"power","a":0.5}') == PowerWeight(0.5)
    assert weight_from_dict({"kind": "constant"}) == ConstantWeight(1.0)
    assert weight_from_dict(PowerWeight(0.5).to_dict()) == PowerWeight(0.5)
    for w in TEST_WEIGHTS:
        assert weight_from_json(w.to_json()).to_dict() == w.to_dict()
    for bad in ('{"kind":"power","a":-1}', '{"kind":"power"}', '{"kind":"gauss"}', "[1]", "not json",
                '{"kind":"constant","c":0}', '{"kind":"piecewise","breakpoints":[0,1],"values":[-1]}'):
        with pytest.raises(ArgumentError):
            weight_from_json(bad)


def test_power_of_power_weight():
    w = PowerWeight(0.5).power(2.0)
    assert isinstance(w, PowerWeight) and w.a == 1.0


# A_p ------------------------------------------------------------------------------


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_constant_weight_is_ap_with_constant_one(p):
    rep = ap_characteristic(ConstantWeight(4.0), p, DEEP)
    assert abs(rep.characteristic - 1.0) <= 1e-12


def test_root_interval_value_for_sqrt_weight():
    rep = ap_characteristic(PowerWeight(0.5), 2.0, UNIT)
    assert rep.characteristic == pytest.approx(4 / 3, rel=1e-12)
    assert ap_characteristic(PowerWeight(0.5), 2.0, DEEP).characteristic >= 4 / 3 - 1e-10


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_power_weight_trace_stabilizes_inside_the_class(a):
    rep = ap_characteristic(PowerWeight(a), 2.0, DEEP)
    assert rep.verdict == "stabilizes"
    assert all(b >= a_ for a_, b in zip(rep.trace, rep.trace[1:]))


@pytest.mark.parametrize("a", [1.0, 1.5])
def test_power_weight_trace_diverges_outside_the_class(a):
    rep = ap_characteristic(PowerWeight(a), 2.0, DEEP)
    assert rep.verdict == "diverges"
    assert not math.isfinite(rep.characteristic)


@pytest.mark.parametrize("w", TEST_WEIGHTS)
def test_characteristic_lower_bound_and_nesting(w):
    fam = IntervalFamily((-1.0, 1.0), -8, 0)
    prev = math.inf
    for p in (1.25, 1.5, 2.0, 3.0, 5.0):
        c = ap_characteristic(w, p, fam).characteristic
        assert c >= 1 - 1e-12
        assert c <= prev + 1e-10
        prev = c


def test_ap_rejects_bad_p():
    with pytest.raises(ArgumentError):
        ap_characteristic(ConstantWeight(), 1.0, UNIT)
    with pytest.raises(ArgumentError):
        ap_characteristic(ConstantWeight(), math.inf, UNIT)


def test_a1_examples():
    assert a1_characteristic(ConstantWeight(3.0), DEEP) == pytest.approx(1.0, abs=1e-12)
    assert a1_characteristic(PowerWeight(-0.5), UNIT) == pytest.approx(2.0, rel=1e-12)
    assert a1_characteristic(PowerWeight(0.5), DEEP) == math.inf
    assert a1_report(PowerWeight(0.5), DEEP).verdict == "diverges"


@pytest.mark.parametrize("w", TEST_WEIGHTS)
def test_a1_implies_ap(w):
    fam = IntervalFamily((-1.0, 1.0), -8, 0)
    if math.isfinite(a1_characteristic(w, fam)):
        for p in (1.5, 2.0, 4.0):
            assert math.isfinite(ap_characteristic(w, p, fam).characteristic)


def test_depth_trace_verdicts():
    assert depth_trace_verdict([1.0, 1.2, 1.3, 1.3, 1.3, 1.3]) == "stabilizes"
    assert depth_trace_verdict([1.0, 2.0, 4.0, 8.0]) == "diverges"
    assert depth_trace_verdict([1.0, math.inf, math.inf, math.inf]) == "diverges"
    assert depth_trace_verdict([1.0, 1.1, 1.2, 1.3]) == "undecided"


def test_interval_family_shape():
    fam = IntervalFamily((0.0, 1.0), -3, 0)
    assert fam.depth == 4
    assert fam.at_depth(2).m_min == -1
    ivs = fam.intervals()
    assert np.all(ivs[:, 1] > ivs[:, 0])
    assert len(fam) == len(ivs)
    with pytest.raises(ArgumentError):
        IntervalFamily((1.0, 0.0))
    with pytest.raises(ArgumentError):
        fam.at_depth(5)


# A_infinity -------------------------------------------------------------------------


def test_ainfty_examples():
    w = PowerWeight(0.5)
    assert ainfty_witness(w, (0, 1), [], 0.5, 0.1)
    assert ainfty_witness(w, (0, 1), [(0, 1)], 0.5, 0.1)
    assert ainfty_witness(w, (0, 1), [(0, 0.1)], 0.2, 0.1)
    with pytest.raises(ArgumentError):
        ainfty_witness(w, (0, 1), [(0.5, 1.5)], 0.2, 0.1)


def test_unequal_two_sided_exponents_leave_a2():
    # on [-L, L] the product of averages grows like L^{-0.9}
    rep = ap_characteristic(TEST_WEIGHTS[4], 2.0, IntervalFamily((-1.0, 1.0), -8, 0))
    assert rep.verdict == "diverges"


@pytest.mark.parametrize(
    "w", [ConstantWeight(), PowerWeight(-0.5), PowerWeight(0.5), TwoSidedPowerWeight(0.4, 0.4), TEST_WEIGHTS[5]]
)
def test_ainfty_holds_for_certified_weights(w):
    assert ap_characteristic(w, 2.0, IntervalFamily((-1.0, 1.0), -8, 0)).verdict == "stabilizes"
    rng = np.random.Generator(np.random.PCG64(11))
    for _ in range(1000):
        q0 = float(rng.uniform(-2, 2))
        q1 = q0 + float(rng.uniform(1e-3, 3))
        pieces = []
        for _ in range(int(rng.integers(0, 4))):
            a = float(rng.uniform(q0, q1))
            pieces.append((a, min(q1, a + float(rng.uniform(0, 0.003)) * (q1 - q0))))
        assert ainfty_witness(w, (q0, q1), pieces, 0.01, 0.01)


# weighted grid quantities --------------------------------------------------------------


def test_weighted_lp_norm_examples():
    g = SampleGrid(0.0, 2.0**-10, 2**10)
    assert weighted_lp_norm(np.zeros(g.count), g, PowerWeight(0.5), 2) == 0.0
    assert weighted_lp_norm(np.full(g.count, 3.0), g, PowerWeight(0.5), 1) == pytest.approx(2.0, rel=1e-12)
    v = np.random.default_rng(0).uniform(size=g.count)
    assert weighted_lp_norm(v, g, ConstantWeight(), 3) == pytest.approx(lp_norm(v, g, 3), rel=1e-12)
    with pytest.raises(ArgumentError):
        weighted_lp_norm(v, g, ConstantWeight(), 0.5)


def test_weighted_distribution_examples():
    g = SampleGrid(0.0, 0.25, 8)
    v = np.array([0, 1, 1, 0, 1, 0, 0, 0], dtype=float)
    assert weighted_distribution(v, g, ConstantWeight(), 0.5) == 0.75
    assert weighted_distribution(v, g, ConstantWeight(), 2.0) == 0.0
    with pytest.raises(ArgumentError):
        weighted_distribution(v, g, ConstantWeight(), 0.0)


def test_weighted_distribution_monotone_in_lambda():
    g = SampleGrid(-2.0, 2.0**-8, 4 * 2**8)
    v = np.abs(np.sin(7 * g.points()))
    lams = np.geomspace(1e-3, 2, 50)
    curve = weighted_distribution_curve(v, g, PowerWeight(0.5), lams)
    assert np.all(np.diff(curve) <= 0)
    for lam, c in zip(lams[::7], curve[::7]):
        assert c == pytest.approx(weighted_distribution(v, g, PowerWeight(0.5), float(lam)), rel=1e-12)
