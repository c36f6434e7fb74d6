"""Exact arithmetic substrate.

Rationals are ``gmpy2.mpq``.  Multivariate polynomials, truncated power series
and quotients of series by products of linear forms are built on top of them.
Exponent vectors are packed into Python integers (16 bits per variable) so that
monomial multiplication is a single integer addition; the public API only
exposes plain tuples.
"""
from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

from gmpy2 import mpq

Rational = type(mpq(0))
Number = Union[int, Rational]

_BITS = 16
_MASK = (1 << _BITS) - 1
_ZERO = mpq(0)
_ONE = mpq(1)


class ExactAlgError(Exception):
    """Base class for errors raised by the exact substrate."""


class StructuralError(ExactAlgError):
    """Operands live over incompatible variable lists."""


class DomainError(ExactAlgError):
    """Operation undefined for the given input (e.g. exp of a unit)."""


class InconclusiveError(ExactAlgError):
    """The available accuracy does not certify anything."""


class NotSimplePoleError(ExactAlgError):
    """A residue was requested along a form that is not a simple pole."""


# ---------------------------------------------------------------- rationals

def Q(num: Number | str, den: Number = 1) -> Rational:
    if isinstance(num, str):
        return rat_from_str(num)
    return mpq(num, den) if den != 1 else mpq(num)


def rat_to_str(q: Number) -> str:
    q = mpq(q)
    return f"{q.numerator}/{q.denominator}"


def rat_from_str(s: str) -> Rational:
    s = s.strip()
    if "/" in s:
        a, b = s.split("/")
        if int(b) <= 0:
            raise ValueError(f"bad denominator in {s!r}")
        return mpq(int(a), int(b))
    return mpq(int(s))


def factorial(k: int) -> int:
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


def binom(n: int, k: int) -> int:
    if k < 0 or n < 0 or k > n:
        return 0
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out


# ----------------------------------------------------------- exponent codec

def pack(exps: Sequence[int]) -> int:
    key = 0
    for i, e in enumerate(exps):
        if e < 0 or e > _MASK:
            raise DomainError(f"exponent {e} out of range")
        key |= e << (_BITS * i)
    return key


def unpack(key: int, n: int) -> tuple[int, ...]:
    return tuple((key >> (_BITS * i)) & _MASK for i in range(n))


def _packed_degree(key: int) -> int:
    d = 0
    while key:
        d += key & _MASK
        key >>= _BITS
    return d


_DEG_CACHE: dict[int, int] = {}


def _deg(key: int) -> int:
    d = _DEG_CACHE.get(key)
    if d is None:
        d = _packed_degree(key)
        if len(_DEG_CACHE) < 4_000_000:
            _DEG_CACHE[key] = d
    return d


def _unit(i: int) -> int:
    return 1 << (_BITS * i)


def _remap_key(key: int, index_map: Sequence[int]) -> int:
    """Move field i of ``key`` to field index_map[i]."""
    out = 0
    i = 0
    while key:
        e = key & _MASK
        if e:
            out += e << (_BITS * index_map[i])
        key >>= _BITS
        i += 1
    return out


def _field(key: int, i: int) -> int:
    return (key >> (_BITS * i)) & _MASK


# ------------------------------------------------------ raw poly kernels
# A raw polynomial is a dict packed-exponent -> mpq without zero values.

def _padd_into(acc: dict, p: Mapping[int, Rational], scale: Rational = _ONE) -> None:
    for e, c in p.items():
        v = acc.get(e, _ZERO) + c * scale
        if v:
            acc[e] = v
        else:
            acc.pop(e, None)


def _pmul(a: Mapping[int, Rational], b: Mapping[int, Rational]) -> dict:
    if len(a) < len(b):
        a, b = b, a
    out: dict = {}
    get = out.get
    for eb, cb in b.items():
        for ea, ca in a.items():
            k = ea + eb
            v = get(k, _ZERO) + ca * cb
            if v:
                out[k] = v
            else:
                del out[k]
    return out


def _pscale(a: Mapping[int, Rational], s: Rational) -> dict:
    if not s:
        return {}
    return {e: c * s for e, c in a.items()}


# ------------------------------------------------------------ MultiPoly

class MultiPoly:
    """Polynomial with rational coefficients over an ordered variable list."""

    __slots__ = ("vars", "_t")

    def __init__(self, vars: Sequence[str], terms: Mapping[tuple[int, ...], Number] | None = None):
        self.vars = tuple(vars)
        t: dict = {}
        for e, c in (terms or {}).items():
            if len(e) != len(self.vars):
                raise StructuralError(f"exponent {e} does not match variables {self.vars}")
            c = mpq(c)
            if c:
                k = pack(e)
                v = t.get(k, _ZERO) + c
                if v:
                    t[k] = v
                else:
                    t.pop(k, None)
        self._t = t

    @classmethod
    def _raw(cls, vars: tuple[str, ...], t: dict) -> "MultiPoly":
        obj = cls.__new__(cls)
        obj.vars = vars
        obj._t = t
        return obj

    @classmethod
    def const(cls, vars: Sequence[str], c: Number) -> "MultiPoly":
        c = mpq(c)
        return cls._raw(tuple(vars), {0: c} if c else {})

    @classmethod
    def var(cls, vars: Sequence[str], name: str) -> "MultiPoly":
        vars = tuple(vars)
        return cls._raw(vars, {_unit(vars.index(name)): _ONE})

    @property
    def terms(self) -> dict[tuple[int, ...], Rational]:
        n = len(self.vars)
        return {unpack(k, n): c for k, c in self._t.items()}

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.vars != self.vars:
                raise StructuralError(f"variable lists differ: {self.vars} vs {other.vars}")
            return other
        return MultiPoly.const(self.vars, other)

    def __add__(self, other) -> "MultiPoly":
        o = self._coerce(other)
        t = dict(self._t)
        _padd_into(t, o._t)
        return MultiPoly._raw(self.vars, t)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly._raw(self.vars, {e: -c for e, c in self._t.items()})

    def __sub__(self, other) -> "MultiPoly":
        o = self._coerce(other)
        t = dict(self._t)
        _padd_into(t, o._t, -_ONE)
        return MultiPoly._raw(self.vars, t)

    def __rsub__(self, other) -> "MultiPoly":
        return (-self) + other

    def __mul__(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            o = self._coerce(other)
            return MultiPoly._raw(self.vars, _pmul(self._t, o._t))
        return MultiPoly._raw(self.vars, _pscale(self._t, mpq(other)))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MultiPoly":
        out = MultiPoly.const(self.vars, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, MultiPoly):
            return self.vars == other.vars and self._t == other._t
        if isinstance(other, (int, Rational)):
            other = mpq(other)
            if not other:
                return not self._t
            return self._t == {0: other}
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.vars, frozenset(self._t.items())))

    def __bool__(self) -> bool:
        return bool(self._t)

    def is_zero(self) -> bool:
        return not self._t

    def constant(self) -> Rational:
        return self._t.get(0, _ZERO)

    def coeff(self, exps: Sequence[int]) -> Rational:
        return self._t.get(pack(exps), _ZERO)

    def degree(self, var: str | None = None) -> int:
        if not self._t:
            return -1
        if var is None:
            return max(_deg(k) for k in self._t)
        i = self.vars.index(var)
        return max(_field(k, i) for k in self._t)

    def weights(self, w: Mapping[str, int]) -> set[int]:
        ws = [w.get(v, 0) for v in self.vars]
        n = len(self.vars)
        return {sum(a * b for a, b in zip(unpack(k, n), ws)) for k in self._t}

    def with_vars(self, vars: Sequence[str]) -> "MultiPoly":
        vars = tuple(vars)
        if vars == self.vars:
            return self
        try:
            idx = [vars.index(v) for v in self.vars]
        except ValueError:
            live = {v for k in self._t for v, e in zip(self.vars, unpack(k, len(self.vars))) if e}
            missing = live - set(vars)
            if missing:
                raise StructuralError(f"cannot drop live variables {sorted(missing)}") from None
            idx = [vars.index(v) if v in vars else 0 for v in self.vars]
        return MultiPoly._raw(vars, {_remap_key(k, idx): c for k, c in self._t.items()})

    def subs(self, values: Mapping[str, "MultiPoly | Number"], target_vars: Sequence[str] | None = None) -> "MultiPoly":
        """Ring homomorphism: each variable goes to a polynomial over ``target_vars``."""
        target = tuple(target_vars) if target_vars is not None else self.vars
        images = []
        for v in self.vars:
            if v in values:
                img = values[v]
                img = img.with_vars(target) if isinstance(img, MultiPoly) else MultiPoly.const(target, img)
            else:
                img = MultiPoly.var(target, v)
            images.append(img)
        return _poly_compose(self._t, len(self.vars), [im._t for im in images], target)

    def evaluate(self, values: Mapping[str, Number]) -> Rational:
        out = _ZERO
        n = len(self.vars)
        vals = [mpq(values[v]) for v in self.vars]
        for k, c in self._t.items():
            term = c
            for e, x in zip(unpack(k, n), vals):
                if e:
                    term *= x ** e
            out += term
        return out

    def sorted_terms(self) -> list[tuple[tuple[int, ...], Rational]]:
        n = len(self.vars)
        return sorted((unpack(k, n), c) for k, c in self._t.items())

    def to_json(self) -> dict:
        return {"vars": list(self.vars), "terms": [[list(e), rat_to_str(c)] for e, c in self.sorted_terms()]}

    @classmethod
    def from_json(cls, doc: Mapping) -> "MultiPoly":
        return cls(doc["vars"], {tuple(e): rat_from_str(c) for e, c in doc["terms"]})

    def __repr__(self) -> str:
        return f"MultiPoly({format_poly(self)})"


def _poly_compose(t: Mapping[int, Rational], n: int, images: Sequence[dict], target: tuple[str, ...]) -> MultiPoly:
    powers: list[list[dict]] = [[{0: _ONE}] for _ in range(n)]
    out: dict = {}
    for k, c in t.items():
        term = {0: c}
        for i, e in enumerate(unpack(k, n)):
            if e:
                pw = powers[i]
                while len(pw) <= e:
                    pw.append(_pmul(pw[-1], images[i]))
                term = _pmul(term, pw[e])
        _padd_into(out, term)
    return MultiPoly._raw(target, out)


def format_poly(p: MultiPoly) -> str:
    if not p._t:
        return "0"
    parts = []
    for e, c in p.sorted_terms():
        mono = "*".join(v if x == 1 else f"{v}^{x}" for v, x in zip(p.vars, e) if x)
        cs = str(c)
        if not mono:
            parts.append(cs)
        elif c == 1:
            parts.append(mono)
        elif c == -1:
            parts.append("-" + mono)
        else:
            parts.append(f"{cs}*{mono}")
    return " + ".join(parts).replace("+ -", "- ")


# ------------------------------------------------------ TruncatedSeries
# raw series: dict fkey -> raw poly (dict pkey -> mpq)

def _sadd_into(acc: dict, s: Mapping[int, Mapping[int, Rational]], scale: Rational = _ONE) -> None:
    for fe, poly in s.items():
        cur = acc.get(fe)
        if cur is None:
            cur = {}
            acc[fe] = cur
        _padd_into(cur, poly, scale)
        if not cur:
            del acc[fe]


def _smul(a: Mapping[int, Mapping[int, Rational]], b: Mapping[int, Mapping[int, Rational]], order: int | None) -> dict:
    """Product of raw series, dropping formal degree >= order (None: keep all)."""
    if len(a) < len(b):
        a, b = b, a
    bl = sorted(((_deg(k), k, p) for k, p in b.items()), key=lambda x: x[0])
    out: dict = {}
    for ka, pa in a.items():
        da = _deg(ka)
        if order is not None and da >= order:
            continue
        for db, kb, pb in bl:
            if order is not None and da + db >= order:
                break
            k = ka + kb
            cur = out.get(k)
            if cur is None:
                cur = {}
                out[k] = cur
            get = cur.get
            for eb, cb in pb.items():
                for ea, ca in pa.items():
                    e = ea + eb
                    v = get(e, _ZERO) + ca * cb
                    if v:
                        cur[e] = v
                    else:
                        del cur[e]
            if not cur:
                del out[k]
    return out


def _homogeneous_parts(t: Mapping[int, Mapping[int, Rational]], order: int) -> list[dict]:
    parts: list[dict] = [dict() for _ in range(max(order, 0))]
    for k, p in t.items():
        d = _deg(k)
        if d < order:
            parts[d][k] = p
    return parts


class TruncatedSeries:
    """Power series in formal variables, known modulo total formal degree >= order.

    Coefficients are polynomials in a separate list of parameter variables,
    which are never truncated.
    """

    __slots__ = ("fvars", "pvars", "order", "_t")

    def __init__(self, fvars: Sequence[str], pvars: Sequence[str], order: int,
                 terms: Mapping[tuple[int, ...], "MultiPoly | Number"] | None = None):
        self.fvars = tuple(fvars)
        self.pvars = tuple(pvars)
        self.order = int(order)
        t: dict = {}
        for fe, c in (terms or {}).items():
            if len(fe) != len(self.fvars):
                raise StructuralError(f"exponent {fe} does not match {self.fvars}")
            if sum(fe) >= self.order:
                continue
            if isinstance(c, MultiPoly):
                poly = c.with_vars(self.pvars)._t
            else:
                c = mpq(c)
                poly = {0: c} if c else {}
            if poly:
                cur = t.setdefault(pack(fe), {})
                _padd_into(cur, poly)
                if not cur:
                    del t[pack(fe)]
        self._t = t

    @classmethod
    def _raw(cls, fvars: tuple[str, ...], pvars: tuple[str, ...], order: int, t: dict) -> "TruncatedSeries":
        obj = cls.__new__(cls)
        obj.fvars = fvars
        obj.pvars = pvars
        obj.order = order
        obj._t = t
        return obj

    # constructors
    @classmethod
    def zero(cls, fvars: Sequence[str], pvars: Sequence[str], order: int) -> "TruncatedSeries":
        return cls._raw(tuple(fvars), tuple(pvars), order, {})

    @classmethod
    def const(cls, fvars: Sequence[str], pvars: Sequence[str], order: int, c: "MultiPoly | Number") -> "TruncatedSeries":
        return cls(fvars, pvars, order, {(0,) * len(tuple(fvars)): c})

    @classmethod
    def var(cls, fvars: Sequence[str], pvars: Sequence[str], order: int, name: str) -> "TruncatedSeries":
        fvars = tuple(fvars)
        t = {_unit(fvars.index(name)): {0: _ONE}} if order > 1 else {}
        return cls._raw(fvars, tuple(pvars), order, t)

    @classmethod
    def param(cls, fvars: Sequence[str], pvars: Sequence[str], order: int, name: str) -> "TruncatedSeries":
        pvars = tuple(pvars)
        return cls._raw(tuple(fvars), pvars, order, {0: {_unit(pvars.index(name)): _ONE}} if order > 0 else {})

    def like(self, t: dict, order: int | None = None) -> "TruncatedSeries":
        return TruncatedSeries._raw(self.fvars, self.pvars, self.order if order is None else order, t)

    # inspection
    @property
    def terms(self) -> dict[tuple[int, ...], MultiPoly]:
        n = len(self.fvars)
        return {unpack(k, n): MultiPoly._raw(self.pvars, dict(p)) for k, p in self._t.items()}

    def sorted_terms(self) -> list[tuple[tuple[int, ...], MultiPoly]]:
        n = len(self.fvars)
        rows = [(unpack(k, n), MultiPoly._raw(self.pvars, dict(p))) for k, p in self._t.items()]
        rows.sort(key=lambda r: (sum(r[0]), r[0]))
        return rows

    def coeff(self, exps: Sequence[int]) -> MultiPoly:
        return MultiPoly._raw(self.pvars, dict(self._t.get(pack(exps), {})))

    def constant_term(self) -> MultiPoly:
        return self.coeff((0,) * len(self.fvars))

    def is_zero(self) -> bool:
        return not self._t

    def valuation(self) -> int | None:
        if not self._t:
            return None
        return min(_deg(k) for k in self._t)

    def first_term(self) -> tuple[tuple[int, ...], MultiPoly] | None:
        rows = self.sorted_terms()
        return rows[0] if rows else None

    def _check(self, other: "TruncatedSeries") -> None:
        if self.fvars != other.fvars or self.pvars != other.pvars:
            raise StructuralError(
                f"variable lists differ: {self.fvars}/{self.pvars} vs {other.fvars}/{other.pvars}")

    def _coerce(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            self._check(other)
            return other
        return TruncatedSeries.const(self.fvars, self.pvars, self.order, other)

    # arithmetic
    def __add__(self, other) -> "TruncatedSeries":
        o = self._coerce(other)
        order = min(self.order, o.order)
        t = {k: dict(p) for k, p in self._t.items() if _deg(k) < order}
        _sadd_into(t, {k: p for k, p in o._t.items() if _deg(k) < order})
        return self.like(t, order)

    __radd__ = __add__

    def __neg__(self) -> "TruncatedSeries":
        return self.like({k: {e: -c for e, c in p.items()} for k, p in self._t.items()})

    def __sub__(self, other) -> "TruncatedSeries":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "TruncatedSeries":
        return (-self) + other

    def __mul__(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            self._check(other)
            order = min(self.order, other.order)
            return self.like(_smul(self._t, other._t, order), order)
        if isinstance(other, MultiPoly):
            q = other.with_vars(self.pvars)._t
            t = {}
            for k, p in self._t.items():
                r = _pmul(p, q)
                if r:
                    t[k] = r
            return self.like(t)
        s = mpq(other)
        if not s:
            return self.like({})
        return self.like({k: _pscale(p, s) for k, p in self._t.items()})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "TruncatedSeries":
        if k < 0:
            return self.inv() ** (-k)
        out = TruncatedSeries.const(self.fvars, self.pvars, self.order, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (self.fvars, self.pvars, self.order, self._t) == (other.fvars, other.pvars, other.order, other._t)

    def __hash__(self) -> int:
        return hash((self.fvars, self.pvars, self.order, len(self._t)))

    def truncate(self, order: int) -> "TruncatedSeries":
        order = min(order, self.order)
        return self.like({k: p for k, p in self._t.items() if _deg(k) < order}, order)

    def with_order(self, order: int) -> "TruncatedSeries":
        """Declare a (possibly larger) accuracy; only valid for exact inputs."""
        return self.like({k: p for k, p in self._t.items() if _deg(k) < order}, order)

    def mul_linear(self, form: "LinearForm") -> "TruncatedSeries":
        """Multiply by a linear form; accuracy rises by one."""
        t: dict = {}
        for v, c in form.items():
            u = _unit(self.fvars.index(v))
            for k, p in self._t.items():
                cur = t.setdefault(k + u, {})
                _padd_into(cur, p, c)
                if not cur:
                    del t[k + u]
        return self.like(t, self.order + 1)

    def mul_poly_exact(self, other: "TruncatedSeries", extra: int) -> "TruncatedSeries":
        """Multiply by an exact polynomial of valuation >= extra; accuracy rises by extra."""
        return self.like(_smul(self._t, other._t, self.order + extra), self.order + extra)

    def deriv(self, name: str) -> "TruncatedSeries":
        i = self.fvars.index(name)
        u = _unit(i)
        t = {}
        for k, p in self._t.items():
            e = _field(k, i)
            if e:
                t[k - u] = _pscale(p, mpq(e))
        return self.like(t, self.order - 1)

    def param_deriv(self, name: str) -> "TruncatedSeries":
        i = self.pvars.index(name)
        u = _unit(i)
        t = {}
        for k, p in self._t.items():
            q = {}
            for e, c in p.items():
                x = _field(e, i)
                if x:
                    q[e - u] = c * x
            if q:
                t[k] = q
        return self.like(t)

    def extract(self, name: str, power: int) -> "TruncatedSeries":
        """Coefficient of name**power, as a series in the remaining formal variables."""
        i = self.fvars.index(name)
        rest = self.fvars[:i] + self.fvars[i + 1:]
        idx = [j if j < i else j - 1 for j in range(len(self.fvars))]
        t = {}
        for k, p in self._t.items():
            if _field(k, i) == power:
                kk = k - (power << (_BITS * i))
                t[_remap_key(kk, idx)] = dict(p)
        return TruncatedSeries._raw(rest, self.pvars, self.order - power, t)

    def embed(self, fvars: Sequence[str], pvars: Sequence[str]) -> "TruncatedSeries":
        """Re-express over larger (or reordered) variable lists."""
        fvars, pvars = tuple(fvars), tuple(pvars)
        if fvars == self.fvars and pvars == self.pvars:
            return self
        fi = [fvars.index(v) for v in self.fvars]
        pi = [pvars.index(v) if v in pvars else -1 for v in self.pvars]
        t = {}
        for k, p in self._t.items():
            q = {}
            for e, c in p.items():
                if any(pi[j] < 0 and _field(e, j) for j in range(len(pi))):
                    raise StructuralError("cannot drop a live parameter")
                q[_remap_key(e, [max(x, 0) for x in pi])] = c
            t[_remap_key(k, fi)] = q
        return TruncatedSeries._raw(fvars, pvars, self.order, t)

    def rename(self, fmap: Mapping[str, str] | None = None, pmap: Mapping[str, str] | None = None) -> "TruncatedSeries":
        fmap = fmap or {}
        pmap = pmap or {}
        return TruncatedSeries._raw(tuple(fmap.get(v, v) for v in self.fvars),
                                    tuple(pmap.get(v, v) for v in self.pvars), self.order, self._t)

    def map_coeffs(self, fn) -> "TruncatedSeries":
        """Apply a linear map MultiPoly -> MultiPoly (over the same pvars) coefficientwise."""
        t = {}
        for k, p in self._t.items():
            q = fn(MultiPoly._raw(self.pvars, p))._t
            if q:
                t[k] = q
        return self.like(t)

    def subs_params(self, values: Mapping[str, "MultiPoly | Number"], pvars: Sequence[str] | None = None) -> "TruncatedSeries":
        target = tuple(pvars) if pvars is not None else self.pvars
        images = []
        for v in self.pvars:
            if v in values:
                img = values[v]
                img = img.with_vars(target) if isinstance(img, MultiPoly) else MultiPoly.const(target, img)
            else:
                img = MultiPoly.var(target, v)
            images.append(img._t)
        n = len(self.pvars)
        cache: dict = {}
        t = {}
        for k, p in self._t.items():
            q: dict = {}
            for e, c in p.items():
                img = cache.get(e)
                if img is None:
                    img = _poly_compose({e: _ONE}, n, images, target)._t
                    cache[e] = img
                _padd_into(q, img, c)
            if q:
                t[k] = q
        return TruncatedSeries._raw(self.fvars, target, self.order, t)

    def substitute(self, assignments: Mapping[str, "LinearForm"], fvars: Sequence[str] | None = None) -> "TruncatedSeries":
        """Ring homomorphism sending formal variables to linear forms in ``fvars``."""
        target = tuple(fvars) if fvars is not None else self.fvars
        order = self.order
        imgs: list[dict] = []
        for v in self.fvars:
            if v in assignments:
                form = assignments[v]
                img: dict = {}
                for w, c in form.items():
                    img[_unit(target.index(w))] = {0: mpq(c)}
            else:
                img = {_unit(target.index(v)): {0: _ONE}}
            imgs.append(img)
        n = len(self.fvars)
        powers: list[list[dict]] = [[{0: {0: _ONE}}] for _ in range(n)]
        t: dict = {}
        for k, p in self._t.items():
            term = {0: p}
            for i, e in enumerate(unpack(k, n)):
                if e:
                    pw = powers[i]
                    while len(pw) <= e:
                        pw.append(_smul(pw[-1], imgs[i], order))
                    term = _smul(term, pw[e], order)
            _sadd_into(t, term)
        return TruncatedSeries._raw(target, self.pvars, order, t)

    # transcendental operations (Euler-operator recurrences on homogeneous parts)
    def exp(self) -> "TruncatedSeries":
        if self.constant_term():
            raise DomainError("exp needs a series with zero constant term")
        N = self.order
        a = _homogeneous_parts(self._t, N)
        e: list[dict] = [dict() for _ in range(max(N, 0))]
        if N > 0:
            e[0] = {0: {0: _ONE}}
        for m in range(1, N):
            acc: dict = {}
            for k in range(1, m + 1):
                if a[k] and e[m - k]:
                    _sadd_into(acc, _smul(a[k], e[m - k], None), mpq(k))
            e[m] = {kk: _pscale(p, mpq(1, m)) for kk, p in acc.items()}
        t: dict = {}
        for part in e:
            t.update(part)
        return self.like(t)

    def log(self) -> "TruncatedSeries":
        if self.constant_term() != 1:
            raise DomainError("log needs constant term 1")
        N = self.order
        a = _homogeneous_parts(self._t, N)
        L: list[dict] = [dict() for _ in range(max(N, 0))]
        for m in range(1, N):
            acc = {k: dict(p) for k, p in a[m].items()}
            for k in range(1, m):
                if L[k] and a[m - k]:
                    _sadd_into(acc, _smul(L[k], a[m - k], None), mpq(-k, m))
            L[m] = acc
        t: dict = {}
        for part in L:
            t.update(part)
        return self.like(t)

    def inv(self) -> "TruncatedSeries":
        c0 = self.constant_term()
        if c0.is_zero() or set(c0._t) != {0}:
            raise DomainError("inverse needs a nonzero rational constant term")
        ic = 1 / c0._t[0]
        N = self.order
        a = _homogeneous_parts(self._t, N)
        b: list[dict] = [dict() for _ in range(max(N, 0))]
        if N > 0:
            b[0] = {0: {0: ic}}
        for m in range(1, N):
            acc: dict = {}
            for k in range(1, m + 1):
                if a[k] and b[m - k]:
                    _sadd_into(acc, _smul(a[k], b[m - k], None), -ic)
            b[m] = acc
        t: dict = {}
        for part in b:
            t.update(part)
        return self.like(t)

    def homogeneous_part(self, d: int) -> "TruncatedSeries":
        return self.like({k: p for k, p in self._t.items() if _deg(k) == d})

    def to_json(self) -> dict:
        return {
            "fvars": list(self.fvars),
            "pvars": list(self.pvars),
            "order": self.order,
            "terms": [[list(e), c.to_json()["terms"]] for e, c in
                      sorted(self.sorted_terms(), key=lambda r: r[0])],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "TruncatedSeries":
        pv = doc["pvars"]
        terms = {tuple(e): MultiPoly(pv, {tuple(x): rat_from_str(c) for x, c in cterms})
                 for e, cterms in doc["terms"]}
        return cls(doc["fvars"], pv, doc["order"], terms)

    def __repr__(self) -> str:
        rows = []
        for e, c in self.sorted_terms()[:12]:
            mono = "*".join(v if x == 1 else f"{v}^{x}" for v, x in zip(self.fvars, e) if x) or "1"
            rows.append(f"({format_poly(c)})*{mono}")
        more = " + ..." if len(self._t) > 12 else ""
        return "TruncatedSeries(" + " + ".join(rows) + more + f" + O({self.order}))"


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    return a * b


def series_exp(a: TruncatedSeries) -> TruncatedSeries:
    return a.exp()


def series_log(a: TruncatedSeries) -> TruncatedSeries:
    return a.log()


def series_inv(a: TruncatedSeries) -> TruncatedSeries:
    return a.inv()


def substitute(a: TruncatedSeries, assignments: Mapping[str, "LinearForm"],
               fvars: Sequence[str] | None = None) -> TruncatedSeries:
    return a.substitute(assignments, fvars)


def naive_series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Term-by-term convolution over tuple exponents; reference routine for tests."""
    a._check(b)
    order = min(a.order, b.order)
    acc: dict[tuple[int, ...], MultiPoly] = {}
    for ea, ca in a.terms.items():
        for eb, cb in b.terms.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            if sum(e) >= order:
                continue
            acc[e] = acc.get(e, MultiPoly.const(a.pvars, 0)) + ca * cb
    return TruncatedSeries(a.fvars, a.pvars, order, acc)


# ------------------------------------------------------------- LinearForm

class LinearForm:
    """Nonzero homogeneous linear form in formal variables."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Mapping[str, Number]):
        c = {v: mpq(x) for v, x in coeffs.items() if x}
        if not c:
            raise DomainError("a linear form must be nonzero")
        self._c = c

    @classmethod
    def of(cls, *pairs: tuple[str, Number]) -> "LinearForm":
        acc: dict = {}
        for v, x in pairs:
            acc[v] = acc.get(v, 0) + x
        return cls(acc)

    def items(self) -> Iterable[tuple[str, Rational]]:
        return self._c.items()

    def coeff(self, v: str) -> Rational:
        return self._c.get(v, _ZERO)

    def support(self) -> set[str]:
        return set(self._c)

    def canonical(self, order: Sequence[str]) -> tuple[Rational, "LinearForm"]:
        """Return (lead, f/lead) with lead the first nonzero coefficient in ``order``."""
        for v in order:
            if v in self._c:
                lead = self._c[v]
                return lead, LinearForm({w: x / lead for w, x in self._c.items()})
        raise StructuralError(f"form {self} uses variables outside {order}")

    def key(self, order: Sequence[str]) -> tuple:
        return tuple(self._c.get(v, _ZERO) for v in order)

    def substitute(self, assignments: Mapping[str, "LinearForm"]) -> dict[str, Rational]:
        out: dict = {}
        for v, c in self._c.items():
            if v in assignments:
                for w, x in assignments[v].items():
                    out[w] = out.get(w, _ZERO) + c * x
            else:
                out[v] = out.get(v, _ZERO) + c
        return {w: x for w, x in out.items() if x}

    def as_series(self, fvars: Sequence[str], pvars: Sequence[str], order: int) -> TruncatedSeries:
        fvars = tuple(fvars)
        t = {_unit(fvars.index(v)): {0: c} for v, c in self._c.items()} if order > 1 else {}
        return TruncatedSeries._raw(fvars, tuple(pvars), order, t)

    def __neg__(self) -> "LinearForm":
        return LinearForm({v: -c for v, c in self._c.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, LinearForm) and self._c == other._c

    def __hash__(self) -> int:
        return hash(frozenset(self._c.items()))

    def __repr__(self) -> str:
        parts = []
        for v, c in self._c.items():
            parts.append(v if c == 1 else f"-{v}" if c == -1 else f"{c}*{v}")
        return "(" + " + ".join(parts).replace("+ -", "- ") + ")"


# ------------------------------------------------------------- FracSeries

class FracSeries:
    """A truncated series divided by a multiset of canonical linear forms.

    The accuracy ``order`` is the Laurent accuracy: numerator accuracy minus the
    number of denominator factors, so each simple factor costs one order.
    """

    __slots__ = ("num", "dens")

    def __init__(self, num: TruncatedSeries, dens: Iterable[LinearForm] = ()):
        scale = _ONE
        canon = []
        for f in dens:
            lead, g = f.canonical(num.fvars)
            scale *= lead
            canon.append(g)
        canon.sort(key=lambda g: g.key(num.fvars))
        self.num = num if scale == 1 else num * (1 / scale)
        self.dens = tuple(canon)

    @property
    def fvars(self) -> tuple[str, ...]:
        return self.num.fvars

    @property
    def pvars(self) -> tuple[str, ...]:
        return self.num.pvars

    @property
    def order(self) -> int:
        return self.num.order - len(self.dens)

    def den_counter(self) -> Counter:
        return Counter(self.dens)

    @classmethod
    def of(cls, x: "FracSeries | TruncatedSeries") -> "FracSeries":
        return x if isinstance(x, FracSeries) else cls(x)

    def over(self, dens: Counter) -> TruncatedSeries:
        """Numerator over the (larger) denominator multiset ``dens``."""
        extra = dens - self.den_counter()
        if self.den_counter() - dens:
            raise StructuralError("target denominator does not contain own denominator")
        out = self.num
        for f, m in extra.items():
            for _ in range(m):
                out = out.mul_linear(f)
        return out

    def _common(self, other: "FracSeries") -> Counter:
        return self.den_counter() | other.den_counter()

    def _coerce(self, other) -> "FracSeries":
        if isinstance(other, FracSeries):
            self.num._check(other.num)
            return other
        if isinstance(other, TruncatedSeries):
            self.num._check(other)
            return FracSeries(other)
        return FracSeries(TruncatedSeries.const(self.fvars, self.pvars, self.num.order, other))

    def __add__(self, other) -> "FracSeries":
        o = self._coerce(other)
        common = self._common(o)
        return FracSeries(self.over(common) + o.over(common), list(common.elements()))

    __radd__ = __add__

    def __neg__(self) -> "FracSeries":
        return FracSeries._raw(-self.num, self.dens)

    def __sub__(self, other) -> "FracSeries":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "FracSeries":
        return (-self) + other

    def __mul__(self, other) -> "FracSeries":
        if isinstance(other, FracSeries):
            self.num._check(other.num)
            dens = self.dens + other.dens
            va = self.num.valuation()
            vb = other.num.valuation()
            # a product of numerators is accurate to min(Na + vb, Nb + va)
            acc = min(self.num.order + (vb or 0), other.num.order + (va or 0))
            full = self.num.like(_smul(self.num._t, other.num._t, acc), acc)
            return FracSeries._raw(full, tuple(sorted(dens, key=lambda g: g.key(self.fvars))))
        if isinstance(other, TruncatedSeries):
            return self * FracSeries(other)
        return FracSeries._raw(self.num * other, self.dens)

    __rmul__ = __mul__

    @classmethod
    def _raw(cls, num: TruncatedSeries, dens: tuple) -> "FracSeries":
        obj = cls.__new__(cls)
        obj.num = num
        obj.dens = dens
        return obj

    def substitute(self, assignments: Mapping[str, LinearForm], fvars: Sequence[str] | None = None) -> "FracSeries":
        num = self.num.substitute(assignments, fvars)
        dens = [LinearForm(f.substitute(assignments)) for f in self.dens]
        return FracSeries(num, dens)

    def subs_params(self, values: Mapping[str, "MultiPoly | Number"], pvars: Sequence[str] | None = None) -> "FracSeries":
        return FracSeries._raw(self.num.subs_params(values, pvars), self.dens)

    def embed(self, fvars: Sequence[str], pvars: Sequence[str]) -> "FracSeries":
        return FracSeries(self.num.embed(fvars, pvars), self.dens)

    def rename(self, fmap: Mapping[str, str] | None = None, pmap: Mapping[str, str] | None = None) -> "FracSeries":
        fmap = fmap or {}
        num = self.num.rename(fmap, pmap)
        return FracSeries(num, [LinearForm({fmap.get(v, v): c for v, c in f.items()}) for f in self.dens])

    def with_num_order(self, order: int) -> "FracSeries":
        return FracSeries._raw(self.num.truncate(order), self.dens)

    def to_json(self) -> dict:
        return {"num": self.num.to_json(),
                "dens": [{v: rat_to_str(c) for v, c in sorted(f.items())} for f in self.dens]}

    def __repr__(self) -> str:
        return f"FracSeries({self.num!r} / {list(self.dens)})"


@dataclass(frozen=True)
class FracComparison:
    equal: bool
    order: int
    witness: tuple[tuple[int, ...], MultiPoly] | None = None

    def __bool__(self) -> bool:
        return self.equal


def frac_equal(a: "FracSeries | TruncatedSeries", b: "FracSeries | TruncatedSeries | Number") -> FracComparison:
    """Compare by cross-multiplication; the certified order is the Laurent accuracy."""
    a = FracSeries.of(a)
    b = a._coerce(b)
    order = min(a.order, b.order)
    if order <= 0:
        raise InconclusiveError(f"certified order {order} <= 0; raise the truncation")
    common = a._common(b)
    diff = a.over(common) - b.over(common)
    diff = diff.truncate(order + sum(common.values()))
    first = diff.first_term()
    return FracComparison(first is None, order, first)


def frac_is_zero(a: "FracSeries | TruncatedSeries") -> FracComparison:
    return frac_equal(a, 0)


def residue_in(a: FracSeries, f: LinearForm, pivot: str) -> FracSeries:
    """Coefficient of f^-1 after the change of coordinates u := f eliminating ``pivot``."""
    if f.coeff(pivot) == 0:
        raise DomainError(f"pivot {pivot} does not occur in {f}")
    lead, g = f.canonical(a.fvars)
    mult = a.den_counter()[g]
    rest_vars = tuple(v for v in a.fvars if v != pivot)
    if mult == 0:
        # regular along f: the residue vanishes
        return FracSeries(TruncatedSeries.zero(rest_vars, a.pvars, a.order + 1))
    if mult != 1:
        raise NotSimplePoleError(f"{f} has multiplicity {mult} in the denominator")
    c = f.coeff(pivot)
    restr = LinearForm({v: -x / c for v, x in f.items() if v != pivot}) if len(f.support()) > 1 else None
    others = list(a.dens)
    others.remove(g)
    if restr is None:
        # pivot vanishes on the divisor
        num = _set_zero(a.num, pivot)
        dens = []
        for h in others:
            coeffs = {v: x for v, x in h.items() if v != pivot}
            if not coeffs:
                raise DomainError("denominator vanishes identically on the divisor")
            dens.append(LinearForm(coeffs))
    else:
        num = a.num.substitute({pivot: restr}, a.fvars)
        num = _set_zero(num, pivot)
        dens = []
        for h in others:
            coeffs = {v: x for v, x in h.substitute({pivot: restr}).items()}
            if not coeffs:
                raise DomainError("denominator vanishes identically on the divisor")
            dens.append(LinearForm(coeffs))
    num = _drop_var(num, pivot, rest_vars)
    # a = (s * N) / (f * D) with g = f / lead
    return FracSeries(num * lead, dens) if lead != 1 else FracSeries(num, dens)


def _set_zero(s: TruncatedSeries, var: str) -> TruncatedSeries:
    i = s.fvars.index(var)
    return s.like({k: p for k, p in s._t.items() if not _field(k, i)})


def _drop_var(s: TruncatedSeries, var: str, rest: tuple[str, ...]) -> TruncatedSeries:
    i = s.fvars.index(var)
    idx = [j if j < i else j - 1 for j in range(len(s.fvars))]
    t = {}
    for k, p in s._t.items():
        if _field(k, i):
            raise StructuralError("variable still present")
        t[_remap_key(k, idx)] = p
    return TruncatedSeries._raw(rest, s.pvars, s.order, t)


# ---------------------------------------------------- sparse linear algebra

class Echelon:
    """Incremental sparse row echelon form over Q.

    Columns are non-negative integers; a row's pivot is its smallest column and
    is normalized to 1.  ``reduce`` returns the unique remainder supported on
    non-pivot columns, which serves as a normal form modulo the row space.
    """

    def __init__(self) -> None:
        self.rows: dict[int, dict[int, Rational]] = {}

    def __len__(self) -> int:
        return len(self.rows)

    def reduce(self, vec: Mapping[int, Number]) -> dict[int, Rational]:
        v = {c: mpq(x) for c, x in vec.items() if x}
        heap = list(v)
        heapq.heapify(heap)
        rows = self.rows
        while heap:
            c = heapq.heappop(heap)
            x = v.get(c)
            if x is None:
                continue
            row = rows.get(c)
            if row is None:
                continue
            del v[c]
            for cc, y in row.items():
                if cc == c:
                    continue
                old = v.get(cc)
                if old is None:
                    v[cc] = -x * y
                    heapq.heappush(heap, cc)
                else:
                    nv = old - x * y
                    if nv:
                        v[cc] = nv
                    else:
                        del v[cc]
        return v

    def add(self, vec: Mapping[int, Number]) -> bool:
        r = self.reduce(vec)
        if not r:
            return False
        piv = min(r)
        inv = 1 / r[piv]
        self.rows[piv] = {c: x * inv for c, x in r.items()}
        return True

    def contains(self, vec: Mapping[int, Number]) -> bool:
        return not self.reduce(vec)

    def pivots(self) -> set[int]:
        return set(self.rows)


def rank(vectors: Iterable[Mapping[int, Number]]) -> int:
    e = Echelon()
    for v in vectors:
        e.add(v)
    return len(e)


def kernel(images: Sequence[Mapping[int, Number]]) -> list[dict[int, Rational]]:
    """Basis of {c : sum_k c_k images[k] = 0} as sparse coefficient vectors."""
    width = 1 + max((max(v) for v in images if v), default=0)
    e = Echelon()
    basis = []
    for k, img in enumerate(images):
        vec = {c: mpq(x) for c, x in img.items() if x}
        vec[width + k] = _ONE
        r = e.reduce(vec)
        if r and min(r) >= width:
            basis.append({c - width: x for c, x in r.items()})
        if r:
            piv = min(r)
            inv = 1 / r[piv]
            e.rows[piv] = {c: x * inv for c, x in r.items()}
    return basis


class Indexer:
    """Stable assignment of integer column indices to hashable keys."""

    def __init__(self) -> None:
        self.index: dict = {}
        self.keys: list = []

    def __call__(self, key) -> int:
        i = self.index.get(key)
        if i is None:
            i = len(self.keys)
            self.index[key] = i
            self.keys.append(key)
        return i

    def __len__(self) -> int:
        return len(self.keys)


def iter_monomials(nvars: int, degree: int) -> Iterator[tuple[int, ...]]:
    if nvars == 0:
        if degree == 0:
            yield ()
        return
    if nvars == 1:
        yield (degree,)
        return
    for first in range(degree, -1, -1):
        for rest in iter_monomials(nvars - 1, degree - first):
            yield (first,) + rest


# ------------------------------------------------------------ verdicts

@dataclass
class Verdict:
    """Outcome of one verification routine."""

    passed: bool
    certified_order: int | None
    counterexample: dict | None = None
    flags: tuple[str, ...] = ()
    details: dict | None = None

    def __bool__(self) -> bool:
        return self.passed


def cancel_monomial_dens(a: FracSeries) -> FracSeries:
    """Cancel powers of the single formal variable of a univariate FracSeries."""
    if len(a.fvars) != 1:
        raise StructuralError("cancellation is only sound for one formal variable")
    v = a.fvars[0]
    num = a.num
    dens = list(a.dens)
    if num.is_zero():
        return FracSeries(num.like({}, num.order - len(dens)))
    unit = LinearForm({v: 1})
    while dens and unit in dens and (num.valuation() or 0) >= 1:
        dens.remove(unit)
        num = num.like({k - 1: p for k, p in num._t.items()}, num.order - 1)
    return FracSeries(num, dens)
