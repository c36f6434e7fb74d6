"""Universal elliptic series, the function ring of the vector extension, the
elements f_alpha and the Fay identities, all over Q[g2, g3].

Conventions: ``p`` is the formal uniformizer at the origin, ``t`` the fiber
coordinate of the extension.  theta(p) = p * E(p) with E even and invertible,
so every quotient below is a power series divided by linear forms.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

from .exactalg import (
    FracSeries,
    LinearForm,
    MultiPoly,
    NotSimplePoleError,
    Q,
    TruncatedSeries,
    Verdict,
    cancel_monomial_dens,
    factorial,
    format_poly,
    frac_equal,
    frac_is_zero,
)

G_VARS = ("g2", "g3")
WEIGHTS = {"g2": 4, "g3": 6}

# fault-injection switches recognised by this module
MUT_A2 = "a2-denominator-19"
MUT_FAY_SIGN = "fay-sign-flip"
MUT_F0 = "f0-sign"

FLAG_A4 = "a4-reads-g3"
FLAG_DY = "dy-reads-6x2"


def _g(name: str) -> MultiPoly:
    return MultiPoly.var(G_VARS, name)


# ------------------------------------------------------------ the curve

@dataclass(frozen=True)
class UniversalCurve:
    a: tuple[MultiPoly, ...]
    order: int

    def coeff(self, n: int) -> MultiPoly:
        return self.a[n] if n < len(self.a) else MultiPoly.const(G_VARS, 0)


@lru_cache(maxsize=64)
def universal_coeffs(N: int, mutations: frozenset = frozenset()) -> UniversalCurve:
    """Coefficients a_0..a_N of p^2 wp = 1 + sum a_n p^(n+2)."""
    zero = MultiPoly.const(G_VARS, 0)
    a = [zero] * (N + 1)
    if N >= 2:
        a[2] = _g("g2") * Q(1, 19 if MUT_A2 in mutations else 20)
    if N >= 4:
        a[4] = _g("g3") * Q(1, 28)
    for n in range(6, N + 1, 2):
        s = zero
        for p in range(2, n - 3, 2):
            s = s + a[p] * a[n - 2 - p]
        a[n] = s * Q(6, n * n - n - 12)
    return UniversalCurve(tuple(a), N)


@lru_cache(maxsize=64)
def E_series(order: int, var: str = "p", pvars: tuple[str, ...] = G_VARS,
             mutations: frozenset = frozenset()) -> TruncatedSeries:
    """theta(var) / var, known modulo var^order."""
    curve = universal_coeffs(max(order, 0), mutations)
    expo = {}
    for n in range(2, order - 2 + 1):
        if n + 2 < order and not curve.coeff(n).is_zero():
            expo[(n + 2,)] = curve.coeff(n).with_vars(pvars) * Q(-1, (n + 1) * (n + 2))
    return TruncatedSeries((var,), pvars, order, expo).exp()


def theta_tilde_univ(N: int, var: str = "p", mutations: frozenset = frozenset()) -> TruncatedSeries:
    """theta as a series with valuation exactly 1, known modulo var^N."""
    return E_series(N - 1, var, G_VARS, mutations).mul_linear(LinearForm({var: 1}))


def wp_univ(N: int, mutations: frozenset = frozenset(), pvars: tuple[str, ...] = G_VARS) -> FracSeries:
    """wp with Laurent accuracy N."""
    curve = universal_coeffs(N + 2, mutations)
    terms = {(0,): 1}
    for n in range(2, N):
        if not curve.coeff(n).is_zero():
            terms[(n + 2,)] = curve.coeff(n).with_vars(pvars)
    num = TruncatedSeries(("p",), pvars, N + 2, terms)
    return FracSeries(num, [LinearForm({"p": 1})] * 2)


def wp_prime_univ(N: int, mutations: frozenset = frozenset(), pvars: tuple[str, ...] = G_VARS) -> FracSeries:
    """d wp / dp with Laurent accuracy N: p^3 wp' = p P' - 2 P with P = p^2 wp."""
    P = wp_univ(N + 1, mutations, pvars).num
    num = P.deriv("p").mul_linear(LinearForm({"p": 1})) - P * 2
    return FracSeries(num, [LinearForm({"p": 1})] * 3)


def zeta_univ(N: int, mutations: frozenset = frozenset()) -> FracSeries:
    curve = universal_coeffs(N + 1, mutations)
    terms = {(0,): 1}
    for n in range(2, N):
        if not curve.coeff(n).is_zero():
            terms[(n + 2,)] = curve.coeff(n) * Q(-1, n + 1)
    return FracSeries(TruncatedSeries(("p",), G_VARS, N + 1, terms), [LinearForm({"p": 1})])


def _laurent_witness(cmp, shift: int) -> dict | None:
    if cmp.witness is None:
        return None
    exps, coeff = cmp.witness
    return {"monomial": f"p^{exps[0] - shift}", "coefficient": format_poly(coeff)}


def verify_weierstrass(N: int, mutations: frozenset = frozenset()) -> Verdict:
    """Check wp'^2 = 4 wp^3 - g2 wp - g3 through Laurent order N."""
    if N < 8:
        raise ValueError("verify_weierstrass needs N >= 8")
    pvars = G_VARS
    wp = wp_univ(N + 4, mutations)
    wpp = wp_prime_univ(N + 3, mutations)
    lhs = wpp * wpp
    rhs = wp * wp * wp * 4 - wp * _g("g2") - FracSeries(TruncatedSeries.const(("p",), pvars, N + 6, _g("g3")))
    cmp = frac_equal(lhs, rhs)
    flags = (FLAG_A4,)
    if cmp.equal:
        return Verdict(True, cmp.order, flags=flags)
    return Verdict(False, cmp.order, _laurent_witness(cmp, 6), flags)


# ------------------------------------------------- the ring of functions

class AElem:
    """Element of Q[g2,g3][c, x, y] / (y^2 - 4x^3 + g2 x + g3), y-degree <= 1.

    Keys are (power of c, power of x, power of y); ``c`` stands for c-tilde.
    """

    __slots__ = ("_t",)

    def __init__(self, terms: Mapping[tuple[int, int, int], "MultiPoly | int"] | None = None):
        t: dict = {}
        for k, v in (terms or {}).items():
            v = v if isinstance(v, MultiPoly) else MultiPoly.const(G_VARS, v)
            _acc(t, k, v)
        self._t = _normal(t)

    @classmethod
    def gen(cls, name: str) -> "AElem":
        key = {"c": (1, 0, 0), "x": (0, 1, 0), "y": (0, 0, 1)}[name]
        return cls({key: 1})

    @classmethod
    def const(cls, c: "MultiPoly | int") -> "AElem":
        return cls({(0, 0, 0): c})

    @property
    def terms(self) -> dict[tuple[int, int, int], MultiPoly]:
        return dict(self._t)

    def _lift(self, other) -> "AElem":
        return other if isinstance(other, AElem) else AElem.const(other)

    def __add__(self, other) -> "AElem":
        o = self._lift(other)
        t = dict(self._t)
        for k, v in o._t.items():
            _acc(t, k, v)
        return _mk(t)

    __radd__ = __add__

    def __neg__(self) -> "AElem":
        return _mk({k: -v for k, v in self._t.items()})

    def __sub__(self, other) -> "AElem":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "AElem":
        return (-self) + other

    def __mul__(self, other) -> "AElem":
        if not isinstance(other, AElem):
            if isinstance(other, MultiPoly):
                return _mk({k: v * other for k, v in self._t.items() if not (v * other).is_zero()})
            s = Q(other)
            return _mk({k: v * s for k, v in self._t.items()} if s else {})
        t: dict = {}
        for (c1, x1, y1), v1 in self._t.items():
            for (c2, x2, y2), v2 in other._t.items():
                _acc(t, (c1 + c2, x1 + x2, y1 + y2), v1 * v2)
        return _mk(_normal(t))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "AElem":
        out = AElem.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, AElem):
            other = AElem.const(other)
        return self._t == other._t

    def __hash__(self) -> int:
        return hash(frozenset(self._t))

    def is_zero(self) -> bool:
        return not self._t

    def pole_bound(self) -> int:
        """Upper bound on the pole order at the origin (c ~ 1/p, x ~ 1/p^2, y ~ 1/p^3)."""
        return max((c + 2 * x + 3 * y for (c, x, y) in self._t), default=0)

    def __repr__(self) -> str:
        if not self._t:
            return "AElem(0)"
        parts = []
        for (c, x, y), v in sorted(self._t.items()):
            mono = "*".join(s for s in (
                f"c^{c}" if c > 1 else "c" if c else "",
                f"x^{x}" if x > 1 else "x" if x else "",
                "y" if y else "") if s)
            parts.append(f"({format_poly(v)})" + (f"*{mono}" if mono else ""))
        return "AElem(" + " + ".join(parts) + ")"

    def to_json(self) -> list:
        return [[list(k), v.to_json()["terms"]] for k, v in sorted(self._t.items())]


def _acc(t: dict, k: tuple, v: MultiPoly) -> None:
    cur = t.get(k)
    nv = v if cur is None else cur + v
    if nv.is_zero():
        t.pop(k, None)
    else:
        t[k] = nv


def _normal(t: dict) -> dict:
    """Rewrite y^2 -> 4x^3 - g2 x - g3 until the y-degree is <= 1."""
    g2, g3 = _g("g2"), _g("g3")
    while any(y >= 2 for (_, _, y) in t):
        out: dict = {}
        for (c, x, y), v in t.items():
            if y >= 2:
                _acc(out, (c, x + 3, y - 2), v * 4)
                _acc(out, (c, x + 1, y - 2), -(v * g2))
                _acc(out, (c, x, y - 2), -(v * g3))
            else:
                _acc(out, (c, x, y), v)
        t = out
    return t


def _mk(t: dict) -> AElem:
    obj = AElem.__new__(AElem)
    obj._t = t
    return obj


def derive(a: AElem) -> AElem:
    """The derivation dx = y, dy = 6x^2 - g2/2, dc = x."""
    X, Y, C = AElem.gen("x"), AElem.gen("y"), AElem.gen("c")
    dy = X * X * 6 - AElem.const(_g("g2") * Q(1, 2))
    out = AElem()
    for (c, x, y), v in a._t.items():
        base = AElem({(0, 0, 0): v})
        if c:
            out = out + base * c * C ** (c - 1) * X ** x * Y ** y * X
        if x:
            out = out + base * x * C ** c * X ** (x - 1) * Y ** y * Y
        if y:
            out = out + base * C ** c * X ** x * dy
    return out


def antipode(a: AElem) -> AElem:
    """x -> x, y -> -y, c -> -c."""
    return _mk({(c, x, y): (v if (c + y) % 2 == 0 else -v) for (c, x, y), v in a._t.items()})


CAN_PVARS = ("g2", "g3", "t")


@lru_cache(maxsize=64)
def _can_generators(L: int, mutations: frozenset) -> dict[str, FracSeries]:
    """can images of x, y, c with Laurent accuracy L."""
    x = wp_univ(L, mutations, CAN_PVARS)
    y = wp_prime_univ(L, mutations, CAN_PVARS)
    # c -> t - theta'/theta = (t p - 1 - p E'/E) / p
    E = E_series(L + 2, "p", CAN_PVARS, mutations)
    dlogE = E.deriv("p") * E.truncate(L + 1).inv()
    p = LinearForm({"p": 1})
    t = TruncatedSeries.param(("p",), CAN_PVARS, L + 1, "t")
    one = TruncatedSeries.const(("p",), CAN_PVARS, L + 1, 1)
    num = (t.truncate(L).mul_linear(p) - one - dlogE.truncate(L).mul_linear(p))
    c = FracSeries(num, [p])
    return {"x": x, "y": y, "c": c}


def can_embed(a: AElem, N: int, mutations: frozenset = frozenset()) -> FracSeries:
    """Image of a in Q[g2,g3,t]((p)), certified to Laurent order >= N."""
    if a.is_zero():
        return FracSeries(TruncatedSeries.zero(("p",), CAN_PVARS, N))
    L = N + a.pole_bound()
    gens = _can_generators(L, mutations)
    one = FracSeries(TruncatedSeries.const(("p",), CAN_PVARS, L, 1))
    powers: dict[tuple[str, int], FracSeries] = {}

    def pw(name: str, k: int) -> FracSeries:
        if k == 0:
            return one
        key = (name, k)
        if key not in powers:
            powers[key] = pw(name, k - 1) * gens[name]
        return powers[key]

    total = None
    for (c, x, y), v in sorted(a._t.items()):
        term = pw("c", c) * pw("x", x) * pw("y", y) * v.with_vars(CAN_PVARS)
        total = term if total is None else total + term
    return total


def mu_restrict(a: AElem, mutations: frozenset = frozenset()) -> MultiPoly:
    """Residue of can(a) at p = 0 (coefficient of 1/p), a polynomial in t."""
    img = cancel_monomial_dens(can_embed(a, 2, mutations))
    d = len(img.dens)
    if d >= 2:
        raise NotSimplePoleError(f"pole of order {d} at the origin")
    if d == 0:
        return MultiPoly.const(CAN_PVARS, 0)
    return img.num.constant_term()


@dataclass(frozen=True)
class FSeriesGen:
    f: tuple[AElem, ...]   # f[0] is f_{-1}
    A: int

    def __getitem__(self, alpha: int) -> AElem:
        return self.f[alpha + 1]


def _aser_mul(a: list, b: list, K: int) -> list:
    out = [AElem() for _ in range(K)]
    for i, ai in enumerate(a[:K]):
        if ai.is_zero():
            continue
        for j in range(K - i):
            if not b[j].is_zero():
                out[i + j] = out[i + j] + ai * b[j]
    return out


def _aser_exp(a: list, K: int) -> list:
    e = [AElem() for _ in range(K)]
    e[0] = AElem.const(1)
    for m in range(1, K):
        acc = AElem()
        for k in range(1, m + 1):
            if not a[k].is_zero() and not e[m - k].is_zero():
                acc = acc + a[k] * e[m - k] * k
        e[m] = acc * Q(1, m)
    return e


@lru_cache(maxsize=32)
def f_alpha(A: int, slack: int = 0, mutations: frozenset = frozenset()) -> FSeriesGen:
    """f_{-1}..f_A from z theta(z)^-1 exp(-c z - sum_{k>=2} d^{k-2}(x) z^k / k!)."""
    K = A + 2 + slack
    expo = [AElem() for _ in range(K)]
    if K > 1:
        expo[1] = -AElem.gen("c")
    d = AElem.gen("x")
    for k in range(2, K):
        expo[k] = d * Q(-1, factorial(k))
        d = derive(d)
    ex = _aser_exp(expo, K)
    inv_e = E_series(K, "z", G_VARS, mutations).inv()
    ie = [AElem.const(inv_e.coeff((k,))) for k in range(K)]
    full = _aser_mul(ie, ex, K)
    fs = list(full[:A + 2])
    if MUT_F0 in mutations and len(fs) > 1:
        fs[1] = -fs[1]
    return FSeriesGen(tuple(fs), A)


def f_alpha_checked(A: int, mutations: frozenset = frozenset()) -> FSeriesGen:
    """f_alpha, re-derived with four extra orders of slack and compared."""
    a = f_alpha(A, 0, mutations)
    b = f_alpha(A + 4, 0, mutations)
    if any(a[k] != b[k] for k in range(-1, A + 1)):
        raise RuntimeError("f_alpha extraction depends on the truncation")
    return a


def verify_mu(A: int, mutations: frozenset = frozenset()) -> Verdict:
    fs = f_alpha_checked(A, mutations)
    t = MultiPoly.var(CAN_PVARS, "t")
    for alpha in range(A + 1):
        try:
            mu = mu_restrict(fs[alpha], mutations)
        except NotSimplePoleError as exc:
            return Verdict(False, alpha, {"alpha": alpha, "error": str(exc)})
        want = (-t) ** alpha * Q(1, factorial(alpha))
        if mu != want:
            return Verdict(False, alpha, {"alpha": alpha, "got": format_poly(mu), "want": format_poly(want)})
    if mu_restrict(fs[-1], mutations) != 0:
        return Verdict(False, 0, {"alpha": -1, "error": "mu(1) != 0"})
    return Verdict(True, A)


def verify_f_low(mutations: frozenset = frozenset()) -> Verdict:
    """f_{-1} = 1, f_0 = -c, f_1 = (c^2 - x)/2 exactly."""
    fs = f_alpha(1, 0, mutations)
    c, x = AElem.gen("c"), AElem.gen("x")
    want = {-1: AElem.const(1), 0: -c, 1: (c * c - x) * Q(1, 2)}
    for k, w in want.items():
        if fs[k] != w:
            return Verdict(False, None, {"alpha": k, "got": repr(fs[k]), "want": repr(w)})
    return Verdict(True, None)


def _theta_ratio_coeff(j: int, N: int, mutations: frozenset) -> FracSeries:
    """[z^j] theta(p+z)/theta(p) = theta^(j)(p) / (j! theta(p)), Laurent order N."""
    th = theta_tilde_univ(N + j + 1, "p", mutations).embed(("p",), CAN_PVARS)
    for _ in range(j):
        th = th.deriv("p")
    E = E_series(N + 1, "p", CAN_PVARS, mutations)
    num = th.truncate(N + 1) * E.inv() * Q(1, factorial(j))
    return FracSeries(num, [LinearForm({"p": 1})])


def verify_interm(A: int, N: int, mutations: frozenset = frozenset()) -> Verdict:
    """theta(z) (1/z + sum can(f_a) z^a) = e^{-tz} theta(p+z)/theta(p), z-degree <= A+1."""
    fs = f_alpha(A, 0, mutations)
    Ez = E_series(A + 2, "z", G_VARS)
    t = MultiPoly.var(CAN_PVARS, "t")
    cans = {alpha: can_embed(fs[alpha], N, mutations) for alpha in range(-1, A + 1)}
    ratios = {j: _theta_ratio_coeff(j, N, mutations) for j in range(A + 2)}
    orders = []
    for k in range(A + 2):
        lhs = None
        for j in range(k + 1):
            e = Ez.coeff((j,))
            if e.is_zero():
                continue
            term = cans[k - j - 1] * e.with_vars(CAN_PVARS)
            lhs = term if lhs is None else lhs + term
        rhs = None
        for i in range(k + 1):
            term = ratios[k - i] * ((-t) ** i * Q(1, factorial(i)))
            rhs = term if rhs is None else rhs + term
        cmp = frac_equal(lhs, rhs)
        orders.append(cmp.order)
        if not cmp.equal:
            exps, coeff = cmp.witness
            shift = max(len(lhs.dens), len(rhs.dens))
            return Verdict(False, k, {"z_power": k, "p_power": exps[0] - shift,
                                      "coefficient": format_poly(coeff)})
    return Verdict(True, min(A + 2, min(orders)))


# ---------------------------------------------------------------- Fay

@lru_cache(maxsize=16)
def _kernel_numerator(M: int, mutations: frozenset = frozenset(), pvars: tuple[str, ...] = G_VARS) -> TruncatedSeries:
    """(u+w) E(u+w) / (E(u) E(w)) over (u, w), known modulo degree M."""
    Eu = E_series(M, "u", pvars, mutations)
    Eu2 = Eu.embed(("u", "w"), pvars)
    Ew2 = Eu.rename({"u": "w"}).embed(("u", "w"), pvars)
    sum_form = LinearForm({"u": 1, "w": 1})
    Esum = Eu.substitute({"u": sum_form}, ("u", "w"))
    Esum = Eu2.like(Esum._t, Esum.order)
    num = Esum.truncate(M - 1).mul_linear(sum_form)
    return num * Eu2.inv() * Ew2.inv()


def kernel_F(a: LinearForm, b: LinearForm, fvars: tuple[str, ...], M: int,
             mutations: frozenset = frozenset(), pvars: tuple[str, ...] = G_VARS) -> FracSeries:
    """F(a, b) = theta(a+b) / (theta(a) theta(b)) realised over ``fvars``."""
    G = _kernel_numerator(M, mutations, pvars)
    num = G.substitute({"u": a, "w": b}, fvars)
    return FracSeries(num, [a, b])


def fay_universal(order: int, mutations: frozenset = frozenset()) -> Verdict:
    """Three-term Fay identity in (p, p', z, z') through Laurent order ``order``."""
    fv = ("p", "q", "z", "w")   # q stands for p', w for z'
    M = order + 4
    P, P2, Z, Z2 = (LinearForm({v: 1}) for v in fv)
    PP = LinearForm({"p": 1, "q": 1})
    ZZ = LinearForm({"z": 1, "w": 1})
    mZ = LinearForm({"z": -1})

    def F(a, b):
        return kernel_F(a, b, fv, M, mutations)

    sign = -1 if MUT_FAY_SIGN in mutations else 1
    total = F(P, Z) * F(PP, Z2) - F(P2, Z2) * F(P, ZZ) + F(PP, ZZ) * F(P2, mZ) * sign
    cmp = frac_is_zero(total)
    if cmp.equal:
        return Verdict(True, cmp.order)
    exps, coeff = cmp.witness
    return Verdict(False, cmp.order, {"cleared_monomial": dict(zip(("p", "p'", "z", "z'"), exps)),
                                      "coefficient": format_poly(coeff)})


def f_generating_numerator(A: int, L: int, mutations: frozenset = frozenset()) -> TruncatedSeries:
    """p z (1/z + sum_{a<=A} can(f_a) z^a) over (p, z), params (g2, g3, t)."""
    fs = f_alpha(A, 0, mutations)
    terms: dict = {(1, 0): 1}
    M = A + 2
    for alpha in range(A + 1):
        img = cancel_monomial_dens(can_embed(fs[alpha], L, mutations))
        if len(img.dens) > 1:
            raise NotSimplePoleError(f"f_{alpha} has a pole of order {len(img.dens)}")
        num = img.num if img.dens else img.num.mul_linear(LinearForm({"p": 1}))
        M = min(M, alpha + 1 + num.order)
        for (e,), c in num.terms.items():
            terms[(e, alpha + 1)] = c
    return TruncatedSeries(("p", "z"), CAN_PVARS, M, terms)


def fay_npoint(n: int, i: int, j: int, k: int, A: int, order: int,
               mutations: frozenset = frozenset()) -> Verdict:
    """Three-term Fay identity among pulled-back generating series of the f_alpha."""
    if not 1 <= i < j < k <= n:
        raise ValueError("need 1 <= i < j < k <= n")
    fv = tuple(f"p{a}" for a in (i, j, k)) + ("z", "w")
    tv = G_VARS + tuple(f"t{a}" for a in range(1, n + 1))
    Nf = f_generating_numerator(A, order + 4, mutations)

    def pull(a: int, b: int, w: LinearForm) -> FracSeries:
        tab = MultiPoly.var(tv, f"t{a}") - MultiPoly.var(tv, f"t{b}")
        s = Nf.subs_params({"t": tab}, tv)
        pab = LinearForm({f"p{a}": 1, f"p{b}": -1})
        num = s.substitute({"p": pab, "z": w}, fv)
        return FracSeries(num, [pab, w])

    Z, Z2 = LinearForm({"z": 1}), LinearForm({"w": 1})
    ZZ = LinearForm({"z": 1, "w": 1})
    mZ = LinearForm({"z": -1})
    sign = -1 if MUT_FAY_SIGN in mutations else 1
    total = (pull(i, j, Z) * pull(i, k, Z2) - pull(j, k, Z2) * pull(i, j, ZZ)
             + pull(i, k, ZZ) * pull(j, k, mZ) * sign)
    cmp = frac_is_zero(total)
    if cmp.equal:
        return Verdict(True, cmp.order)
    exps, coeff = cmp.witness
    return Verdict(False, cmp.order, {"cleared_monomial": dict(zip(fv, exps)), "coefficient": format_poly(coeff)})


def fay_cusp_value(p: Q, q: Q, z: Q, w: Q, sign: int = 1) -> Q:
    """Three-term combination for the degenerate kernel 1/u + 1/v at a rational point."""
    def F(u, v):
        return 1 / u + 1 / v
    return F(p, z) * F(p + q, w) - F(q, w) * F(p, z + w) + sign * F(p + q, z + w) * F(q, -z)
