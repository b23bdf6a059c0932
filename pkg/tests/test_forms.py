"""Exact counting kernel: multisets, box counts, shells, height counts."""

import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from hyperspike.forms import (
    Box,
    DiagonalForm,
    Variety,
    bilinear_pair_count,
    count_box_positive,
    count_box_primitive,
    count_box_primitive_direct,
    count_box_signed,
    height_count,
    height_count_bilinear,
    height_count_direct,
    product_value_multiset,
    theta,
)


# ---------------------------------------------------------------------------
# value multisets
# ---------------------------------------------------------------------------


def test_product_multiset_examples():
    assert product_value_multiset(1, (2, 2)) == {1: 1, 2: 2, 4: 1}
    assert product_value_multiset(2, (3,)) == {1: 1, 4: 1, 9: 1}
    assert product_value_multiset(1, (2,), "signed_nonzero") == {
        1: 1, -1: 1, 2: 1, -2: 1}


@given(
    d=st.integers(1, 3),
    limits=st.lists(st.integers(1, 4), min_size=1, max_size=3),
    frac=st.floats(0.0, 0.99),
)
@settings(deadline=None, max_examples=40)
def test_multiset_total_mass(d, limits, frac):
    bounds = tuple(l + frac for l in limits)
    pos = product_value_multiset(d, bounds, "positive")
    assert sum(pos.values()) == math.prod(limits)
    signed = product_value_multiset(d, bounds, "signed_nonzero")
    assert sum(signed.values()) == math.prod(2 * l for l in limits)


def test_multiset_rejects_bad_input():
    with pytest.raises(ValueError):
        product_value_multiset(0, (2,))
    with pytest.raises(ValueError):
        product_value_multiset(1, (0.5,))
    with pytest.raises(ValueError):
        product_value_multiset(1, ())


# ---------------------------------------------------------------------------
# box counts
# ---------------------------------------------------------------------------


def test_count_positive_examples():
    assert count_box_positive(DiagonalForm(1, 1, (1, -1)), (5,)) == 5
    assert count_box_positive(DiagonalForm(1, 2, (1, -1)), (2, 2)) == 6
    assert count_box_positive(DiagonalForm(1, 1, (1, 1, -2)), (3,)) == 5


def test_count_signed_examples():
    assert count_box_signed(DiagonalForm(1, 1, (1, -1)), (5,)) == 10
    assert count_box_signed(DiagonalForm(2, 1, (1, -1)), (5,)) == 20
    assert count_box_signed(DiagonalForm(1, 1, (1, 1)), (3,)) == 6


def test_count_primitive_examples():
    f = DiagonalForm(1, 1, (1, -1))
    assert count_box_primitive(f, (5,)) == 2
    assert count_box_primitive(f, (1,)) == 2
    assert count_box_primitive_direct(f, (5,)) == 2


def brute_positive(form, limits):
    count = 0
    ranges = [range(1, l + 1) for l in limits] * form.terms
    for tup in itertools.product(*ranges):
        val = 0
        k = form.factors
        for j, c in enumerate(form.coeffs):
            prod = 1
            for r in range(k):
                prod *= tup[j * k + r]
            val += c * prod**form.degree
        if val == 0:
            count += 1
    return count


@pytest.mark.parametrize("d,k,coeffs,limits", [
    (1, 1, (1, -1), (4,)),
    (1, 1, (1, 1, -2), (4,)),
    (2, 1, (1, 1, -2), (5,)),
    (1, 2, (1, -1), (3, 2)),
    (1, 2, (1, 1, -1), (2, 3)),
    (3, 1, (1, -1, 1), (3,)),
])
def test_count_positive_vs_bruteforce(d, k, coeffs, limits):
    form = DiagonalForm(d, k, coeffs)
    assert count_box_positive(form, limits) == brute_positive(form, limits)


def test_counts_monotone_in_each_bound():
    form = DiagonalForm(1, 2, (1, 1, -1))
    base = count_box_signed(form, (3, 3))
    assert count_box_signed(form, (4, 3)) >= base
    assert count_box_signed(form, (3, 4)) >= base
    assert count_box_positive(form, (4, 3)) >= count_box_positive(form, (3, 3))


def test_counts_invariant_under_factor_and_term_permutation():
    form = DiagonalForm(1, 2, (2, 2, -3))
    assert count_box_signed(form, (2, 4)) == count_box_signed(form, (4, 2))
    swapped = DiagonalForm(1, 2, (2, -3, 2))
    assert count_box_signed(form, (3, 3)) == count_box_signed(swapped, (3, 3))


def test_noninteger_bounds_floor_convention():
    f = DiagonalForm(1, 1, (1, -1))
    assert count_box_signed(f, (2.5,)) == count_box_signed(f, (2,)) == 4


@pytest.mark.parametrize("d", [1, 2, 3])
def test_parity_and_sign_decomposition(d):
    for k, coeffs, limits in [
        (1, (1, -1), (5,)),
        (1, (1, 1, -2), (4,)),
        (2, (1, -1), (3, 2)),
        (2, (1, 1, -1), (3, 3)),
    ]:
        form = DiagonalForm(d, k, coeffs)
        box = Box(tuple(float(l) for l in limits))
        signed = count_box_signed(form, box)
        s = form.terms
        if d % 2 == 0:
            assert signed == 2 ** (k * s) * count_box_positive(form, box)
        else:
            total = sum(
                count_box_positive(form.scaled(eta), box)
                for eta in itertools.product((1, -1), repeat=s)
            )
            assert signed == 2 ** ((k - 1) * s) * total


def test_mobius_primitive_vs_direct():
    for d, k, coeffs, limits in [
        (1, 1, (1, 1, -2), (8,)),
        (2, 1, (1, -1, 1), (6,)),
        (1, 2, (1, 1, -1), (4, 4)),
        (2, 2, (1, -1, 2), (3, 3)),
    ]:
        form = DiagonalForm(d, k, coeffs)
        assert count_box_primitive(form, limits) == count_box_primitive_direct(form, limits)


def test_mobius_route_matches_spec_breakdown():
    # mu(1) M(5) + mu(2) M(5/2) + mu(3) M(5/3) + mu(5) M(1) = 10 - 4 - 2 - 2
    f = DiagonalForm(1, 1, (1, -1))
    ms = [count_box_signed(f, (5.0 / l,)) for l in (1, 2, 3, 5)]
    assert ms == [10, 4, 2, 2]
    assert count_box_primitive(f, (5,)) == ms[0] - ms[1] - ms[2] - ms[3]


# ---------------------------------------------------------------------------
# shells, height counts
# ---------------------------------------------------------------------------

EQ05 = Variety((1, 1, 1), 2, 1)  # bilinear three-term benchmark


def test_theta_examples():
    assert theta(EQ05, (1, 1)) == 0
    with pytest.raises(ValueError):
        theta(EQ05, (0, 1))
    # independent in-test enumeration for m = (1, 2)
    def shell(m):
        out = []
        for v in itertools.product(*[range(-m, m + 1)] * 3):
            if 0 in v or max(abs(x) for x in v) != m:
                continue
            if math.gcd(math.gcd(abs(v[0]), abs(v[1])), abs(v[2])) == 1:
                out.append(v)
        return out

    expected = sum(
        1
        for x in shell(1)
        for y in shell(2)
        if x[0] * y[0] + x[1] * y[1] + x[2] * y[2] == 0
    )
    assert theta(EQ05, (1, 2)) == expected


def test_theta_symmetric_in_factors():
    assert theta(EQ05, (1, 2)) == theta(EQ05, (2, 1))


def test_height_count_small_values():
    assert height_count(EQ05, 1) == 0
    assert height_count(EQ05, 16) == height_count_direct(EQ05, 16)
    assert height_count(EQ05, 81) == height_count_direct(EQ05, 81)


def test_height_count_positive_definite_is_zero():
    v = Variety((1, 2, 3), 1, 2)  # d = 2, all positive: no nonzero solutions
    assert height_count(v, 40) == 0


def test_height_count_requires_positive_exponent():
    with pytest.raises(ValueError):
        height_count(Variety((1, 1, 1), 1, 3), 10)  # alpha = 0


def test_bilinear_fast_path_matches_generic():
    for bound in (16, 100, 400):
        assert height_count_bilinear(EQ05, bound) == height_count(EQ05, bound)


def test_bilinear_fast_path_other_coefficients():
    v = Variety((1, 2, -1), 2, 1)
    for bound in (25, 100):
        assert height_count_bilinear(v, bound) == height_count(v, bound)


def test_bilinear_pair_count_tiny():
    # |x| = |y| = 1 pairs: x . y is a sum of three odd terms, never zero
    assert bilinear_pair_count((1, 1, 1), 1) == 0


def test_theta_sum_equals_primitive_box_count():
    # Theta(X) = sum_{m <= X} theta(m) agrees with the transposed-form
    # row-primitive box count
    form = DiagonalForm(1, 2, (1, 1, 1))
    for box in [(2, 2), (3, 2), (3, 3)]:
        total = sum(
            theta(EQ05, (m1, m2))
            for m1 in range(1, box[0] + 1)
            for m2 in range(1, box[1] + 1)
        )
        assert total == count_box_primitive(form, box)
