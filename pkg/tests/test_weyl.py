"""Exponential sums, complete sums, oscillatory integrals, arcs, moments."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import fresnel, sici

from hyperspike.forms import DiagonalForm, count_box_positive
from hyperspike.weyl import (
    BoundParams,
    OscillatoryTable,
    box_error_term,
    classify_arc,
    complete_sum,
    major_arc_residual,
    moment_integral,
    moment_integral_quadrature,
    oscillatory_v,
    oscillatory_v_unit,
    weyl_bound_envelope,
    weyl_sum,
)

EULER = 0.5772156649015329


def v2_closed_form(b: float) -> complex:
    """d=1, k=2 unit-cube integral via sine/cosine integrals (test oracle)."""
    if b == 0:
        return 1 + 0j
    z = 2 * math.pi * abs(b)
    si, ci = sici(z)
    cin = EULER + math.log(z) - ci
    v = complex(si, cin) / z
    return v if b > 0 else v.conjugate()


def v1_closed_form(b: float) -> complex:
    """d=1, k=1: (e(b) - 1) / (2 pi i b)."""
    if b == 0:
        return 1 + 0j
    return (np.exp(2j * math.pi * b) - 1) / (2j * math.pi * b)


def v1_fresnel(b: float) -> complex:
    """d=2, k=1 via Fresnel integrals."""
    if b == 0:
        return 1 + 0j
    z = 2.0 * math.sqrt(abs(b))
    s, c = fresnel(z)
    v = complex(c, s) / z
    return v if b > 0 else v.conjugate()


# ---------------------------------------------------------------------------
# the exponential sum
# ---------------------------------------------------------------------------


def test_weyl_sum_examples():
    assert weyl_sum(0.0, 3, (3.9, 2.1)) == pytest.approx(6.0)
    assert abs(weyl_sum(0.5, 1, (4,))) < 1e-12
    assert weyl_sum(0.5, 1, (2, 2)) == pytest.approx(2.0)


@given(
    alpha=st.floats(-3, 3, allow_nan=False),
    d=st.integers(1, 3),
    lims=st.lists(st.integers(1, 4), min_size=1, max_size=2),
)
@settings(deadline=None, max_examples=40)
def test_weyl_sum_periodicity_and_conjugation(alpha, d, lims):
    box = tuple(float(l) for l in lims)
    f0 = weyl_sum(alpha, d, box)
    assert abs(f0 - weyl_sum(alpha + 1.0, d, box)) < 1e-9
    assert abs(f0.conjugate() - weyl_sum(-alpha, d, box)) < 1e-9
    assert abs(f0) <= math.prod(lims) + 1e-12


# ---------------------------------------------------------------------------
# complete sums
# ---------------------------------------------------------------------------


def test_complete_sum_examples():
    assert complete_sum(1, 7, 4, 3) == 1
    assert complete_sum(5, 3, 1, 1) == pytest.approx(0.0, abs=1e-10)
    assert complete_sum(5, 10, 1, 1) == pytest.approx(5.0)
    assert complete_sum(4, 1, 2, 1) == pytest.approx(2 + 2j)


def brute_complete_sum(q, a, d, k):
    import itertools
    total = 0j
    for x in itertools.product(range(1, q + 1), repeat=k):
        total += np.exp(2j * math.pi * a * (math.prod(x) ** d) / q)
    return total


@pytest.mark.parametrize("q,a,d,k", [
    (6, 1, 1, 2), (8, 3, 2, 2), (9, 2, 3, 1), (12, 5, 2, 2), (7, 4, 1, 3),
])
def test_complete_sum_vs_bruteforce(q, a, d, k):
    assert complete_sum(q, a, d, k) == pytest.approx(brute_complete_sum(q, a, d, k), abs=1e-8)


def test_reduced_fraction_invariance():
    # q^-k S(q, a) depends only on a/q
    pairs = [((4, 1), (8, 2)), ((3, 2), (9, 6)), ((5, 2), (20, 8)), ((6, 1), (12, 2))]
    for (q1, a1), (q2, a2) in pairs:
        for d, k in [(1, 1), (2, 1), (2, 2), (3, 2)]:
            lhs = complete_sum(q1, a1, d, k) / q1**k
            rhs = complete_sum(q2, a2, d, k) / q2**k
            assert abs(lhs - rhs) < 1e-12


def test_box_error_term():
    assert box_error_term(3, (4, 2)) == 21
    assert box_error_term(3, (2, 4)) == 21
    assert box_error_term(7, (5,)) == 7


# ---------------------------------------------------------------------------
# oscillatory integrals
# ---------------------------------------------------------------------------


def test_unit_integral_values():
    assert oscillatory_v_unit(0.0, 2, 3) == 1
    assert abs(oscillatory_v_unit(1.0, 1, 1)) < 1e-9
    v = oscillatory_v_unit(0.5, 1, 1)
    assert abs(v) == pytest.approx(2 / math.pi, abs=1e-9)
    assert v.real == pytest.approx(0.0, abs=1e-9)


def test_oscillatory_v_scaling():
    box = (2.0, 3.0)
    beta = 0.05
    expected = 6.0 * oscillatory_v_unit(6.0 * beta, 1, 2)
    assert oscillatory_v(beta, 1, box) == pytest.approx(expected, abs=1e-9)
    assert oscillatory_v(0.0, 2, box) == pytest.approx(6.0)


def test_quadrature_matches_closed_forms():
    for b in (0.3, 2.2, 17.5, -4.4):
        assert oscillatory_v_unit(b, 1, 1) == pytest.approx(v1_closed_form(b), abs=1e-9)
        assert oscillatory_v_unit(b, 1, 2) == pytest.approx(v2_closed_form(b), abs=1e-9)
        assert oscillatory_v_unit(b, 2, 1) == pytest.approx(v1_fresnel(b), abs=1e-9)


def test_table_matches_closed_forms_wide_range():
    tab12 = OscillatoryTable(1, 2, 3000.0)
    tab11 = OscillatoryTable(1, 1, 3000.0)
    tab21 = OscillatoryTable(2, 1, 3000.0)
    bs = np.array([0.0, 0.17, 3.3, 151.2, 2999.0, -47.0])
    for b, v in zip(bs, tab12.values(bs)):
        assert complex(v) == pytest.approx(v2_closed_form(float(b)), abs=1e-10)
    for b, v in zip(bs, tab11.values(bs)):
        assert complex(v) == pytest.approx(v1_closed_form(float(b)), abs=1e-10)
    for b, v in zip(bs, tab21.values(bs)):
        assert complex(v) == pytest.approx(v1_fresnel(float(b)), abs=1e-10)


def test_table_matches_quadrature_d2_k2():
    tab = OscillatoryTable(2, 2, 64.0)
    for b in (0.4, 5.5, 60.0):
        assert complex(tab.values(np.array([b]))[0]) == pytest.approx(
            oscillatory_v_unit(b, 2, 2, 1e-11), abs=1e-8)


def test_decay_envelope_shape():
    # |V_k(b)| |b|^(1/d) / (1 + log|b|)^(k-1) bounded by a small constant
    bs = np.geomspace(3.0, 1e6, 200)
    for dk, closed in [((1, 1), v1_closed_form), ((1, 2), v2_closed_form),
                       ((2, 1), v1_fresnel)]:
        d, k = dk
        vals = np.array([abs(closed(float(b))) for b in bs])
        normalized = vals * bs ** (1.0 / d) / (1.0 + np.log(bs)) ** (k - 1)
        assert normalized.max() <= 10.0
    # k = 2, d = 2 over the table range
    tab = OscillatoryTable(2, 2, 2e4)
    bs = np.geomspace(3.0, 2e4, 120)
    vals = np.abs(tab.values(bs))
    normalized = vals * bs**0.5 / (1.0 + np.log(bs))
    assert normalized.max() <= 10.0


# ---------------------------------------------------------------------------
# arcs
# ---------------------------------------------------------------------------


def test_classify_arc_examples():
    lab = classify_arc(0.5, 3.0, 100.0, 1)
    assert lab.major and (lab.approx.a, lab.approx.q) == (1, 2)
    assert lab.approx.beta == pytest.approx(0.0)
    assert not classify_arc(0.25, 2.0, 1000.0, 1).major
    lab0 = classify_arc(0.0, 5.0, 100.0, 1)
    assert lab0.major and (lab0.approx.a, lab0.approx.q) == (0, 1)


def test_classify_arc_warns_outside_recommended_range():
    with pytest.warns(UserWarning):
        classify_arc(0.5, 50.0, 100.0, 1, k=2)


def test_classify_arc_large_q_continued_fraction_path():
    alpha = 1.0 / 20001.0
    lab = classify_arc(alpha, 3e4, 1e9, 1)  # width 3e-5 excludes the q=1 arc
    assert lab.major
    assert (lab.approx.a, lab.approx.q) == (1, 20001)
    assert not classify_arc(0.5 + 1.0 / math.e, 2e4, 1e9, 1).major


def test_major_arc_residual_at_rational_points():
    # q = 1, beta = 0: approx = <X> exactly matches f(0)
    res = major_arc_residual(0.0, 1, (9.0, 7.0), Q=2.0)
    assert res.residual < 1e-9
    assert res.exact == pytest.approx(63.0)
    # d=2, k=1, q=4: Gauss-sum drift stays within the stated envelope
    res2 = major_arc_residual(0.25, 2, (100.0,), Q=5.0)
    assert res2.approx == pytest.approx((2 + 2j) / 4 * 100, abs=1e-9)
    assert res2.ratio <= 10.0


def test_major_arc_residual_rejects_minor():
    with pytest.raises(ValueError):
        major_arc_residual(0.25, 1, (1000.0,), Q=2.0)


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------


def test_moment_examples():
    assert moment_integral(1, 1, (7,), 2) == 7
    assert moment_integral(2, 1, (3,), 4) == 15
    assert moment_integral(1, 2, (2, 2), 2) == count_box_positive(
        DiagonalForm(1, 2, (1, -1)), (2, 2))


def test_moment_quadrature_identity():
    for d, k, box, power in [
        (1, 1, (12,), 2), (2, 1, (9,), 4), (1, 2, (4, 5), 2), (2, 2, (4, 4), 4),
    ]:
        exact = moment_integral(d, k, box, power)
        quadr = moment_integral_quadrature(d, k, box, power)
        assert abs(quadr - exact) <= 1e-6 * exact


def test_hua_type_envelope():
    # int |f|^(n0) <= fitted <X>^(n0 - d + 0.3) on cube boxes, d <= 2
    fitted = 4.0
    for d, n0 in [(1, 2), (2, 4)]:
        for k in (1, 2):
            for x in (3, 5, 8):
                box = (float(x),) * k
                val = moment_integral(d, k, box, n0)
                bound = fitted * float(x) ** (k * (n0 - d + 0.3))
                assert val <= bound


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def test_bound_params():
    bp = BoundParams.for_degree(2, 2)
    assert bp.D_weyl == 2
    assert bp.omega == pytest.approx((8 * 2 * 2) ** -8)
    assert bp.eta == pytest.approx(bp.omega / (2 * 2**2 * 2 * 2))


def test_weyl_bound_envelope():
    val = weyl_bound_envelope(1 / 50, 2, (100.0,), 1, 50)
    assert val == pytest.approx(100**2 * (1 / 50 + 1 / 100 + 50 / 1e4))
    # trivially dominates |f| at q = 1
    assert weyl_bound_envelope(0.0, 1, (5.0, 3.0), 0, 1) >= 15.0
    # permutation invariance of the box
    assert weyl_bound_envelope(1 / 7, 1, (4.0, 9.0), 1, 7) == pytest.approx(
        weyl_bound_envelope(1 / 7, 1, (9.0, 4.0), 1, 7))
    with pytest.raises(ValueError):
        weyl_bound_envelope(0.5, 1, (5.0,), 1, 4)  # gcd fine but |q a - a|>1/q
