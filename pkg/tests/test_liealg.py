from __future__ import annotations

from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kzbkit.exactalg import Q
from kzbkit.liealg import (
    MUT_SIGMA2,
    ExteriorQuotient,
    FreeLieElem,
    GradedQuotient,
    SpanChecker,
    T,
    X,
    Y,
    ad_power,
    bracket,
    center_probe,
    iso_roundtrip,
    is_lyndon,
    kzb_gauge_check,
    left_normed_assoc,
    lie,
    lyndon_words,
    map_elem,
    maurer_cartan,
    necklace_count,
    phi_check,
    phi_image,
    present_t1n,
    psi_check,
    relations_G,
    standard_factorization,
    t1n_dims,
    t_elem,
    verify_g_parity,
    verify_maurer_cartan,
    x_,
    y_,
)

# the graded dimensions below come from running the two quotient constructions
# and agreeing; they are frozen here so a regression in either one shows up
T12_DIMS = {1: 4, 2: 1, 3: 2, 4: 3, 5: 6, 6: 9}
T13_DIMS = {1: 6, 2: 3, 3: 6, 4: 10, 5: 22, 6: 39}

SYMS = [("a", 1), ("a", 2), ("a", 3)]


def weighted_lyndon_count(weights: dict, total: int) -> int:
    n = 0
    for length in range(1, total + 1):
        for w in product(sorted(weights), repeat=length):
            if sum(weights[s] for s in w) == total and is_lyndon(w):
                n += 1
    return n


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 7))
def test_lyndon_generation_matches_witt(k, length):
    words = lyndon_words(list(range(k)), length)
    assert len(words) == len(set(words)) == necklace_count(k, length)
    assert all(is_lyndon(w) for w in words)


def test_standard_factorization():
    assert standard_factorization((1, 1, 2)) == ((1,), (1, 2))
    assert standard_factorization((1, 2, 2)) == ((1, 2), (2,))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(SYMS), min_size=1, max_size=6))
def test_right_nested_bracket_expands_correctly(syms):
    # Lyndon-basis arithmetic against the direct ab - ba expansion
    assert lie(*syms).to_assoc() == left_normed_assoc(syms)


lie_elems = st.lists(st.tuples(st.lists(st.sampled_from(SYMS), min_size=1, max_size=3), st.integers(-3, 3)),
                     max_size=3).map(lambda parts: sum((lie(*w) * c for w, c in parts), FreeLieElem.zero()))


@settings(max_examples=60, deadline=None)
@given(lie_elems, lie_elems, lie_elems)
def test_bracket_axioms(a, b, c):
    assert bracket(a, b) == -bracket(b, a)
    assert bracket(a, a).is_zero()
    jac = bracket(a, bracket(b, c)) + bracket(b, bracket(c, a)) + bracket(c, bracket(a, b))
    assert jac.is_zero()


def test_sample_bracket_expansion():
    e = lie(("X", 1), ("X", 2), ("Y", 3))
    want = left_normed_assoc([("X", 1), ("X", 2), ("Y", 3)])
    assert e.to_assoc() == want
    assert len(want) == 4


@pytest.mark.parametrize("k", [2, 3, 4])
def test_free_quotients_follow_witt(k):
    gens = [("a", i) for i in range(k)]
    grade = lambda s: (1,)  # noqa: E731
    a = GradedQuotient(gens, [], 5, grade).dims()
    b = ExteriorQuotient(gens, [], 5, grade).dims()
    want = {d: necklace_count(k, d) for d in range(1, 6)}
    assert a == want and b == want


def test_t12_and_t13_dims_from_both_routes():
    for n, want in ((2, T12_DIMS), (3, T13_DIMS)):
        rep = t1n_dims(n, 6)
        assert rep["agree"]
        assert {int(k): v for k, v in rep["dims"].items()} == want
        assert {int(k): v for k, v in rep["oracle_dims"].items()} == want


def test_t12_is_center_plus_free_on_two():
    for d, v in T12_DIMS.items():
        assert v == necklace_count(2, d) + (2 if d == 1 else 0)


def test_t13_grows_by_free_algebra_on_weights_1_1_2():
    # passing from two points to three adds a free Lie algebra on x_3, y_3 and one t
    for d in range(1, 7):
        assert T13_DIMS[d] - T12_DIMS[d] == weighted_lyndon_count({"x": 1, "y": 1, "t": 2}, d)


def test_t1n_presentation_basics():
    q = present_t1n(2, 4)
    assert q.dims()[1] == 4
    assert q.evaluate(t_elem(1, 2)) == q.evaluate(t_elem(2, 1))
    by = q.dims_by_grade()
    assert by[(2, 1, 1)] == 1


def test_center():
    assert center_probe(5)


def test_relation_table_samples():
    rel = relations_G(3, 1)
    assert rel[("sigma2", 1, 2, 3, 0, 0)] == bracket(T(1, 2, 0), T(2, 3, 0)) + bracket(T(1, 2, 0), T(1, 3, 0))
    assert rel[("kappa1", 1, 2, 0)] == bracket(Y(1) + Y(2), T(1, 2, 0))
    assert rel[("kappa", 3, 1, 2, 1)] == bracket(Y(3), T(1, 2, 1)) + bracket(T(1, 2, 0), T(1, 3, 0))
    assert rel[("Rcp4", 1, 2, 0)] == bracket(X(1), T(1, 2, 0)) - T(1, 2, 1)


def test_phi_is_well_defined():
    for n in (2, 3, 4):
        assert phi_check(n).passed, n


def test_psi_is_well_defined():
    v = psi_check(3, 6, 3)
    assert v.passed and v.details["checked"] > 0


def test_psi_detects_sigma2_mutation():
    v = psi_check(3, 6, 2, frozenset({MUT_SIGMA2}))
    assert not v.passed and v.counterexample["relation"][0] == "sigma2"


def test_phi_psi_on_higher_t():
    # phi(psi(T_12^2)) - T_12^2 = [X1,[X1,T^0]] - T^2 = ad X1 (R_cp4 at 0) + R_cp4 at 1
    rel = relations_G(2, 2)
    lhs = ad_power(X(1), 2, T(1, 2, 0)) - T(1, 2, 2)
    assert lhs == bracket(X(1), rel[("Rcp4", 1, 2, 0)]) + rel[("Rcp4", 1, 2, 1)]
    span = SpanChecker([bracket(X(1), rel[("Rcp4", 1, 2, 0)]), rel[("Rcp4", 1, 2, 1)]])
    assert span.contains(lhs)
    assert not span.contains(T(1, 2, 2))


def test_psi_phi_identity_on_generators():
    img = map_elem(FreeLieElem.gen(("t", 1, 2)), phi_image)
    assert img == -T(1, 2, 0)
    for n in (2, 3):
        assert iso_roundtrip(n, 3).passed


def test_maurer_cartan_lowest_coefficients():
    mc = maurer_cartan(2, 0)
    assert mc[("CC", 1, 2)] == bracket(X(1), X(2))
    assert mc[("P", 1, 2)] == bracket(Y(1), Y(2))


def test_maurer_cartan_matches_table():
    for n in (2, 3, 4):
        assert verify_maurer_cartan(n, 1).passed, n
    assert not verify_maurer_cartan(3, 1, frozenset({MUT_SIGMA2})).passed


def test_kzb_gauge_and_parity():
    assert kzb_gauge_check(2, 5).passed
    assert verify_g_parity(6).passed


def test_generator_symbols():
    assert x_(2) == ("x", 2) and y_(1) == ("y", 1)
    with pytest.raises(ValueError):
        T(2, 1, 0)
    assert (bracket(X(1), X(1))).is_zero()
    assert (X(1) * Q(2)).terms == {(("X", 1),): 2}
