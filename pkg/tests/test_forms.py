from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from kzbkit.exactalg import Q, frac_equal
from kzbkit.forms import (
    DC,
    DP,
    FLAG_RHO_S2_JK,
    OM,
    Frame,
    Realizer,
    d_abstract,
    exact_sequence,
    form_degree,
    i_basis,
    ibasis_degree,
    k_generators,
    kgen_abstract_image,
    om,
    one_form_basis,
    residue1_table,
    residue2_table,
    sigma_basis,
    sigma_injectivity,
    verify_kernel_vanishing,
    wedge_abstract,
    wedge_basis,
)

_REAL = Realizer(Frame.standard(3), 4)


def same_two_form(a: dict, b: dict) -> bool:
    zero = _REAL.zero()
    for k in set(a) | set(b):
        if not frac_equal(a.get(k, zero), b.get(k, zero)).equal:
            return False
    return True


def realize_combination(combo: dict) -> dict:
    out: dict = {}
    for idx, c in combo.items():
        for k, s in _REAL.element(idx).items():
            s = s * c
            out[k] = out[k] + s if k in out else s
    return out


def test_om_orientation():
    assert om(2, 1, 3) == {OM(1, 2, 3): Q(-1)}
    assert om(2, 1, 2) == {OM(1, 2, 2): Q(1)}
    assert om(1, 2, -1) == {DP(1): 1, DP(2): -1}


def test_same_pair_wedges_vanish():
    assert wedge_basis(OM(1, 2, 0), OM(1, 2, 1)) == {}


def test_sprime_rewrite_lowest_case():
    # om_12^0 ^ om_13^0 has no I-basis element of its own and is rewritten
    got = wedge_abstract(om(1, 2, 0), om(1, 3, 0))
    assert got == {
        ("S2", 1, 2, 3, 0, 0): 1, ("S3", 1, 2, 3, 0, 0): -1,
        ("Q1", 1, 3, 1): 1, ("Q", 2, 1, 3, 1): -1,
        ("Q1", 1, 2, 1): -1, ("Q", 3, 1, 2, 1): 1,
        ("Q", 1, 2, 3, 1): 1, ("Q1", 2, 3, 1): -1,
    }
    # and the rewriting is an identity of realized two-forms
    lhs = _REAL.wedge(_REAL.one_form(om(1, 2, 0)), _REAL.one_form(om(1, 3, 0)))
    assert same_two_form(lhs, realize_combination(got))


basis31 = one_form_basis(3, 1)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(basis31), st.sampled_from(basis31))
def test_realized_wedge_matches_rewriting(x, y):
    lhs = _REAL.wedge(_REAL.one_form({x: Q(1)}), _REAL.one_form({y: Q(1)}))
    assert same_two_form(lhs, realize_combination(wedge_basis(x, y)))


coef = st.integers(-3, 3)
basis42 = one_form_basis(4, 2)
forms = st.dictionaries(st.sampled_from(basis42), coef.filter(bool), max_size=5)


@settings(max_examples=100, deadline=None)
@given(forms, forms)
def test_wedge_is_antisymmetric(f, g):
    fq = {k: Q(v) for k, v in f.items()}
    gq = {k: Q(v) for k, v in g.items()}
    fg = wedge_abstract(fq, gq)
    gf = wedge_abstract(gq, fq)
    assert fg == {k: -v for k, v in gf.items()}
    assert wedge_abstract(fq, fq) == {}


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(basis42), st.sampled_from(basis42))
def test_wedge_preserves_degree(x, y):
    # the rewriting raises alpha indices but never changes the total degree
    allowed = set(i_basis(4, 5))
    out = wedge_basis(x, y)
    assert set(out) <= allowed
    assert {ibasis_degree(k) for k in out} <= {form_degree(x) + form_degree(y)}


def test_d_of_lowest_om():
    # d om_12^0 = -(dc_1 - dc_2) ^ (dp_1 - dp_2)
    assert d_abstract(om(1, 2, 0)) == {("CP", 1, 1): -1, ("CP", 1, 2): 1, ("CP", 2, 1): 1, ("CP", 2, 2): -1}
    assert d_abstract({DP(1): Q(1), DC(2): Q(1)}) == {}


def test_kernel_generators_have_zero_abstract_image():
    for n, A in ((3, 3), (4, 2)):
        for g in k_generators(n, A):
            assert kgen_abstract_image(g) == {}, g


def test_kernel_generators_vanish_when_realized():
    for g in (("R", 1, 2, 1), ("S", 1, 3, 2, 0), ("T", 1, 2, 3, 1, 0), ("T", 1, 2, 3, 0, 2)):
        v = verify_kernel_vanishing(g, 3, 4)
        assert v.passed and v.certified_order >= 4, g


def test_sigma_basis_size():
    # P: 3, Q: 3 * 3, Q1: 3 * 3, S2 and S3: 2 * 9 at n = 3, A = 2
    assert len(sigma_basis(3, 2)) == 3 + 9 + 9 + 18


def test_residue_tables():
    assert residue1_table(3, 2).passed
    v = exact_sequence(3, 2)
    assert v.passed and v.details["kernel_dim"] == 6


def test_double_residue_table_and_flag():
    v = residue2_table(3, 1)
    assert v.passed
    assert FLAG_RHO_S2_JK in v.flags
    assert v.details["printed_line_mismatches"] == v.details["corrected_line_passes"] > 0


def test_injectivity_on_sigma():
    v = sigma_injectivity(3, 1)
    assert v.passed
