from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kzbkit.exactalg import (
    Echelon,
    FracSeries,
    InconclusiveError,
    LinearForm,
    MultiPoly,
    NotSimplePoleError,
    Q,
    TruncatedSeries,
    frac_equal,
    kernel,
    naive_series_mul,
    rank,
    rat_from_str,
    rat_to_str,
    residue_in,
    series_mul,
)

FV = ("p", "q")
PV = ("a",)

small = st.integers(min_value=-5, max_value=5)


def random_series(draw_terms, order=5):
    terms = {}
    for (i, j, k), c in draw_terms.items():
        if i + j < order:
            terms[(i, j)] = terms.get((i, j), MultiPoly.const(PV, 0)) + MultiPoly(PV, {(k,): c})
    return TruncatedSeries(FV, PV, order, terms)


series_terms = st.dictionaries(st.tuples(st.integers(0, 4), st.integers(0, 4), st.integers(0, 2)), small, max_size=8)


def test_rational_string_roundtrip():
    assert rat_to_str(Q(3, 6)) == "1/2"
    assert rat_to_str(Q(-4)) == "-4/1"
    assert rat_from_str("-7/3") == Q(-7, 3)


@given(st.integers(-10**6, 10**6), st.integers(1, 10**6))
def test_rational_serialization_property(a, b):
    assert rat_from_str(rat_to_str(Q(a, b))) == Q(a, b)


@settings(max_examples=60, deadline=None)
@given(series_terms, series_terms)
def test_product_matches_naive_convolution(ta, tb):
    a, b = random_series(ta), random_series(tb)
    assert series_mul(a, b) == naive_series_mul(a, b)


@settings(max_examples=40, deadline=None)
@given(series_terms)
def test_exp_log_inverse(ta):
    a = random_series(ta)
    a = a - TruncatedSeries.const(FV, PV, a.order, a.constant_term())  # zero constant term
    assert a.exp().log() == a
    one = TruncatedSeries.const(FV, PV, a.order, 1)
    u = one + a
    assert u * u.inv() == one


def test_binomial_substitution():
    s = TruncatedSeries.var(("p", "q"), (), 4, "p") ** 2
    out = s.substitute({"p": LinearForm({"p": 1, "q": 1})})
    assert out.terms == {(2, 0): MultiPoly.const((), 1), (1, 1): MultiPoly.const((), 2),
                         (0, 2): MultiPoly.const((), 1)}


def test_geometric_expansion_oracle():
    # 1/(p+q) against (1/p) * sum_k (-q/p)^k, written over p^(K+1)
    K = 6
    a = FracSeries(TruncatedSeries.const(FV, (), 12, 1), [LinearForm({"p": 1, "q": 1})])
    terms = {}
    for k in range(K + 1):
        terms[(K - k, k)] = (-1) ** k
    b = FracSeries(TruncatedSeries(FV, (), 12, terms), [LinearForm({"p": 1})] * (K + 1))
    # exact remainder: 1/(p+q) - sum = (-q)^(K+1) / (p^(K+1) (p+q))
    rem = FracSeries(TruncatedSeries(FV, (), 12, {(0, K + 1): (-1) ** (K + 1)}),
                     [LinearForm({"p": 1})] * (K + 1) + [LinearForm({"p": 1, "q": 1})])
    assert frac_equal(a - b, rem).equal
    assert not frac_equal(a, b).equal


def test_frac_equal_finds_difference():
    a = FracSeries(TruncatedSeries.const(FV, (), 6, 1), [LinearForm({"p": 1})])
    b = FracSeries(TruncatedSeries.const(FV, (), 6, 2), [LinearForm({"p": 1})])
    cmp = frac_equal(a, b)
    assert not cmp.equal and cmp.witness is not None


def test_frac_equal_requires_positive_order():
    a = FracSeries(TruncatedSeries.const(FV, (), 2, 1), [LinearForm({"p": 1})] * 3)
    with pytest.raises(InconclusiveError):
        frac_equal(a, a)


def test_residue_simple_pole():
    # (p + 2q)/(p - q) has residue 3q along p = q
    num = TruncatedSeries(FV, (), 6, {(1, 0): 1, (0, 1): 2})
    r = residue_in(FracSeries(num, [LinearForm({"p": 1, "q": -1})]), LinearForm({"p": 1, "q": -1}), "p")
    assert r.num.terms == {(1,): MultiPoly.const((), 3)}


def test_residue_regular_is_zero_and_double_pole_raises():
    num = TruncatedSeries.const(FV, (), 6, 1)
    f = LinearForm({"p": 1, "q": -1})
    assert residue_in(FracSeries(num, [LinearForm({"p": 1})]), f, "p").num.is_zero()
    with pytest.raises(NotSimplePoleError):
        residue_in(FracSeries(num, [f, f]), f, "p")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.dictionaries(st.integers(0, 5), small, max_size=4), max_size=6))
def test_echelon_rank_matches_fractions(vectors):
    # independent Gaussian elimination over Fraction
    rows = [[Fraction(v.get(c, 0)) for c in range(6)] for v in vectors]
    r = 0
    for c in range(6):
        piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c] / rows[r][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        r += 1
    assert rank(vectors) == r


def test_kernel_basis():
    imgs = [{0: 1}, {0: 2}, {1: 1}]
    ker = kernel(imgs)
    assert len(ker) == 1
    v = ker[0]
    assert v.get(0, 0) * 1 + v.get(1, 0) * 2 == 0 and v.get(2, 0) == 0


def test_echelon_reduce_is_canonical():
    e = Echelon()
    e.add({0: 1, 1: 1})
    e.add({1: 1, 2: 1})
    assert e.reduce({0: 1}) == e.reduce({2: 1})


def test_multipoly_json_roundtrip():
    p = MultiPoly(("a", "b"), {(1, 0): Q(1, 2), (0, 3): -2})
    assert MultiPoly.from_json(p.to_json()) == p
