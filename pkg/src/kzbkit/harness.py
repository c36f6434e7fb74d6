"""Suite configuration, the verification catalog, reports and the command line."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Callable, Sequence

from . import __version__
from . import elliptic as ell
from . import forms as frm
from . import liealg as lie
from .exactalg import ExactAlgError, InconclusiveError, Rational, Verdict, rat_to_str

PROFILES = {
    "desk": {"n": 3, "D": 6, "A": 3, "order": 8, "alpha_elliptic": 6},
    "nightly": {"n": 4, "D": 7, "A": 3, "order": 10, "alpha_elliptic": 6},
}

MUTATIONS = (ell.MUT_A2, ell.MUT_FAY_SIGN, lie.MUT_SIGMA2, ell.MUT_F0)

STATUSES = ("pass", "fail", "inconclusive")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class SuiteConfig:
    n: int = 3
    D: int = 6
    A: int = 3
    order: int = 8
    alpha_elliptic: int = 6
    suites: tuple[str, ...] = ("all",)
    strict: bool = False
    jobs: int = 1
    mutations: tuple[str, ...] = ()
    profile: str = "desk"

    def validate(self) -> None:
        if self.n < 2 or self.D < 2 or self.A < 0 or self.order < 4 or self.alpha_elliptic < 0:
            raise UsageError("need n >= 2, D >= 2, A >= 0, order >= 4")
        if self.jobs < 1:
            raise UsageError("--jobs must be positive")
        for m in self.mutations:
            if m not in MUTATIONS:
                raise UsageError(f"unknown mutation {m!r}")

    def report_view(self) -> dict:
        """Config as recorded in reports (execution-only fields omitted)."""
        d = asdict(self)
        d.pop("jobs")
        d["suites"] = list(self.suites)
        d["mutations"] = sorted(self.mutations)
        return d


def profile_defaults(env: dict | None = None) -> dict:
    env = os.environ if env is None else env
    name = env.get("KZBKIT_PROFILE", "desk") or "desk"
    if name not in PROFILES:
        raise UsageError(f"KZBKIT_PROFILE must be one of {sorted(PROFILES)}, got {name!r}")
    return dict(PROFILES[name], profile=name)


# ------------------------------------------------------------- catalog

@dataclass(frozen=True)
class Item:
    name: str
    module: str
    identity: str
    params: Callable[[SuiteConfig], dict]
    run: Callable[[SuiteConfig, frozenset], Verdict]
    flags: tuple[str, ...] = ()


def _all_of(verdicts: Sequence[tuple[str, Verdict]]) -> Verdict:
    order = None
    flags: list[str] = []
    for label, v in verdicts:
        for f in v.flags:
            if f not in flags:
                flags.append(f)
        if v.certified_order is not None:
            order = v.certified_order if order is None else min(order, v.certified_order)
        if not v.passed:
            cex = dict(v.counterexample or {})
            cex.setdefault("check", label)
            return Verdict(False, v.certified_order, cex, tuple(flags))
    return Verdict(True, order, None, tuple(flags))


def _mu(cfg, mut):
    return _all_of([("low-order f", ell.verify_f_low(mut)), ("mu", ell.verify_mu(cfg.alpha_elliptic, mut))])


def _fay_npoint(cfg, mut):
    out = []
    for i, j, k in combinations(range(1, cfg.n + 1), 3):
        out.append((f"points {i},{j},{k}", ell.fay_npoint(cfg.n, i, j, k, cfg.order + 2, cfg.order - 1, mut)))
    return _all_of(out)


def _kernel(kind):
    def run(cfg, mut):
        gens = [g for g in frm.k_generators(cfg.n, cfg.A) if g[0] == kind]
        out = []
        for g in gens:
            abstract = frm.kgen_abstract_image(g)
            if abstract:
                return Verdict(False, None, {"generator": list(g), "abstract_class": str(abstract)})
            out.append((str(g), frm.verify_kernel_vanishing(g, cfg.n, cfg.order - 1)))
        if not out:
            return Verdict(True, cfg.order - 1)
        return _all_of(out)
    return run


def _residue2(cfg, mut):
    a = min(cfg.A, 2)
    return _all_of([("tables", frm.residue2_table(cfg.n, a)), ("injectivity", frm.sigma_injectivity(cfg.n, a))])


def _kzb(cfg, mut):
    return _all_of([("gauge", lie.kzb_gauge_check(cfg.n, cfg.D)), ("parity", lie.verify_g_parity(cfg.order))])


def _p(*keys):
    names = {"n": "n", "D": "D", "A": "alpha_max", "order": "order", "alpha_elliptic": "alpha_max"}

    def f(cfg):
        return {names[k]: getattr(cfg, k) for k in keys}
    return f


def _p_res2(cfg):
    return {"n": cfg.n, "alpha_max": min(cfg.A, 2)}


CATALOG: dict[str, Item] = {it.name: it for it in [
    Item("weierstrass-ode", "elliptic", "(wp')^2 = 4 wp^3 - g2 wp - g3 for the universal Laurent series",
         lambda c: {"order": max(c.order, 8)}, lambda c, m: ell.verify_weierstrass(max(c.order, 8), m),
         (ell.FLAG_A4,)),
    Item("interm", "elliptic", "theta(z) sum can(f_a) z^a = e^{-tz} theta(p+z)/theta(p)",
         _p("alpha_elliptic", "order"), lambda c, m: ell.verify_interm(c.alpha_elliptic, c.order, m), (ell.FLAG_DY,)),
    Item("mu-f-alpha", "elliptic", "f_-1 = 1, f_0 = -c, f_1 = (c^2 - x)/2 and mu(f_a) = (-t)^a/a!",
         _p("alpha_elliptic"), _mu, (ell.FLAG_DY,)),
    Item("fay-universal", "elliptic", "three-term Fay identity for F(p,z) = theta(p+z)/(theta(p) theta(z))",
         _p("order"), lambda c, m: ell.fay_universal(c.order, m)),
    Item("fay-npoint", "elliptic", "algebraic Fay identity for the pulled-back generating series on each triple",
         lambda c: {"n": c.n, "order": c.order - 1}, _fay_npoint),
    Item("kernel-R", "forms", "dp_i ^ om_ij - dp_j ^ om_ij vanishes as a realized 2-form",
         lambda c: {"n": c.n, "alpha_max": c.A, "order": c.order - 1}, _kernel("R")),
    Item("kernel-S", "forms", "om_ij^a ^ om_ij^b vanishes as a realized 2-form",
         lambda c: {"n": c.n, "alpha_max": c.A, "order": c.order - 1}, _kernel("S")),
    Item("kernel-T", "forms", "the Fay-derived combination T(i,j,k,a,b) vanishes as a realized 2-form",
         lambda c: {"n": c.n, "alpha_max": c.A, "order": c.order - 1}, _kernel("T")),
    Item("residue1-table", "forms", "res along p_i = p_j of om_ij^a is (-(t_i - t_j))^a/a!, zero on the rest",
         lambda c: {"n": c.n, "alpha_max": c.A + 1}, lambda c, m: frm.residue1_table(c.n, c.A + 1)),
    Item("residue2-table", "forms", "second residues of the Sigma basis and their double residues",
         _p_res2, _residue2, (frm.FLAG_RHO_S2_JK,)),
    Item("exact-sequence", "forms", "kernel of the assembled residue map on one-forms is span{dc_i, dp_i}",
         lambda c: {"n": c.n, "alpha_max": c.A + 1}, lambda c, m: frm.exact_sequence(c.n, c.A + 1)),
    Item("phi-welldef", "liealg", "x -> X, y -> Y, t_ij -> -T_ij^0 respects the relations of t_{1,n}",
         _p("n", "A"), lambda c, m: lie.phi_check(c.n, c.A), ("xi-plus-xj-reading",)),
    Item("psi-welldef", "liealg", "T_ij^a -> -(ad x_i)^a t_ij kills every relation of G",
         _p("n", "D", "A"), lambda c, m: lie.psi_check(c.n, c.D, c.A, m), ("kappa-sum-reading",)),
    Item("iso-roundtrip", "liealg", "psi o phi = id and phi o psi (T^a) = T^a modulo R_cp",
         _p("n", "D", "A"), lambda c, m: lie.iso_roundtrip(c.n, c.A, c.D)),
    Item("maurer-cartan-flat", "liealg", "d omega + 1/2 omega^2 has exactly the relation table as coefficients",
         _p("n", "A"), lambda c, m: lie.verify_maurer_cartan(c.n, c.A, m), ("kappa-sum-reading",)),
    Item("kzb-gauge", "liealg", "exp(ad sum c_k x_k) t_ij = exp(c_ij ad x_i) t_ij, and g(p,x) + g(-p,-x) = 0",
         lambda c: {"n": c.n, "D": c.D, "order": c.order}, _kzb),
    Item("t1n-dims", "liealg", "graded dimensions of t_{1,n} agree between two independent constructions",
         _p("n", "D"), lambda c, m: lie.verify_t1n_dims(c.n, c.D), ("xi-plus-xj-reading",)),
]}

MODULES = ("elliptic", "forms", "liealg")


def resolve_items(suites: Sequence[str]) -> list[str]:
    names: set[str] = set()
    for s in suites:
        if s == "all":
            names |= set(CATALOG)
        elif s in MODULES:
            names |= {k for k, it in CATALOG.items() if it.module == s}
        elif s in CATALOG:
            names.add(s)
        else:
            raise UsageError(f"unknown suite or item {s!r}")
    return sorted(names)


# --------------------------------------------------------------- reports

@dataclass
class ItemResult:
    name: str
    params: dict
    status: str
    certified_order: int | None
    duration_ms: int
    counterexample: dict | None = None
    flags: list[str] | None = None

    def to_json(self) -> dict:
        d = {"name": self.name, "params": self.params, "status": self.status,
             "certified_order": self.certified_order, "duration_ms": self.duration_ms}
        if self.counterexample is not None:
            d["counterexample"] = self.counterexample
        if self.flags:
            d["flags"] = list(self.flags)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ItemResult":
        return cls(d["name"], d["params"], d["status"], d["certified_order"], d["duration_ms"],
                   d.get("counterexample"), d.get("flags"))


@dataclass
class Report:
    version: str
    config: dict
    items: list[ItemResult] = field(default_factory=list)

    @property
    def summary(self) -> dict:
        counts = {s: sum(1 for it in self.items if it.status == s) for s in STATUSES}
        return {"total": len(self.items), **counts}

    def exit_code(self, strict: bool | None = None) -> int:
        strict = self.config.get("strict", False) if strict is None else strict
        bad = {"fail", "inconclusive"} if strict else {"fail"}
        return 1 if any(it.status in bad for it in self.items) else 0

    def to_json(self) -> dict:
        return {"version": self.version, "config": self.config,
                "items": [it.to_json() for it in self.items], "summary": self.summary}

    @classmethod
    def from_json(cls, d: dict) -> "Report":
        r = cls(d["version"], d["config"], [ItemResult.from_json(x) for x in d["items"]])
        if d.get("summary") is not None and d["summary"] != r.summary:
            raise ValueError("report summary inconsistent with items")
        return r


def jsonable(x):
    """Recursively convert verification payloads to JSON values; rationals become 'num/den'."""
    if isinstance(x, Rational):
        return rat_to_str(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (str, int, float, bool)) or x is None:
        return x
    return str(x)


def emit_json(r: Report) -> str:
    return json.dumps(r.to_json(), indent=2, sort_keys=True) + "\n"


def _cell(obj) -> str:
    return json.dumps(obj, sort_keys=True).replace("|", "\\u007c")


def emit_markdown(r: Report) -> str:
    lines = [f"# kzbkit verification report {r.version}", "",
             f"config: `{_cell(r.config)}`", "",
             "| item | identity | status | certified order | duration ms | params | flags | counterexample |",
             "|---|---|---|---|---|---|---|---|"]
    for it in r.items:
        ident = CATALOG[it.name].identity if it.name in CATALOG else ""
        lines.append("| " + " | ".join([
            it.name, ident.replace("|", "/"), it.status,
            "" if it.certified_order is None else str(it.certified_order), str(it.duration_ms),
            _cell(it.params), _cell(it.flags or []),
            "" if it.counterexample is None else _cell(it.counterexample)]) + " |")
    s = r.summary
    lines += ["", f"summary: `{_cell(s)}`", ""]
    return "\n".join(lines)


def parse_markdown(text: str) -> Report:
    version, config, items = None, None, []
    for line in text.splitlines():
        if line.startswith("# kzbkit verification report "):
            version = line.rsplit(" ", 1)[1]
        elif line.startswith("config: `"):
            config = json.loads(line[len("config: `"):-1])
        elif line.startswith("| ") and not line.startswith("| item |"):
            cells = [c.strip() for c in line[2:-2].split(" | ")]
            name, _, status, cert, dur, params, flags, cex = cells
            flags_v = json.loads(flags)
            items.append(ItemResult(name, json.loads(params), status, int(cert) if cert else None, int(dur),
                                    json.loads(cex) if cex else None, flags_v or None))
    if version is None or config is None:
        raise ValueError("not a kzbkit markdown report")
    return Report(version, config, items)


def emit(r: Report, fmt: str) -> str:
    return emit_json(r) if fmt == "json" else emit_markdown(r)


def parse(text: str, fmt: str) -> Report:
    return Report.from_json(json.loads(text)) if fmt == "json" else parse_markdown(text)


# ------------------------------------------------------------ execution

def run_item(name: str, cfg: SuiteConfig) -> ItemResult:
    it = CATALOG[name]
    mut = frozenset(cfg.mutations)
    t0 = time.perf_counter()
    flags = list(it.flags)
    try:
        v = it.run(cfg, mut)
        status = "pass" if v.passed else "fail"
        cex = v.counterexample
        cert = v.certified_order
        for f in v.flags:
            if f not in flags:
                flags.append(f)
    except InconclusiveError as exc:
        status, cex, cert = "inconclusive", {"reason": str(exc)}, None
    except (ExactAlgError, ValueError, ArithmeticError) as exc:
        status, cex, cert = "fail", {"error": f"{type(exc).__name__}: {exc}"}, None
    ms = int(round((time.perf_counter() - t0) * 1000))
    if mut:
        flags.extend(f"mutation:{m}" for m in sorted(mut))
    return ItemResult(name, jsonable(it.params(cfg)), status, cert, ms,
                      None if cex is None else jsonable(cex), sorted(flags) or None)


def _run_item_star(args):
    return run_item(*args)


def run_suite(cfg: SuiteConfig) -> Report:
    cfg.validate()
    names = resolve_items(cfg.suites)
    if cfg.jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_item_star, [(n, cfg) for n in names]))
    else:
        results = [run_item(n, cfg) for n in names]
    results.sort(key=lambda r: r.name)
    return Report(__version__, cfg.report_view(), results)


# ------------------------------------------------------------------ CLI

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"kzbkit: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kzbkit", description="Exact verification of elliptic KZB identities.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    v = sub.add_parser("verify", help="run verification items")
    v.add_argument("--suite", action="append", default=None, metavar="NAME",
                   help="item name, module name (elliptic, forms, liealg) or all; repeatable")
    v.add_argument("--n", type=int)
    v.add_argument("--depth", type=int, dest="D")
    v.add_argument("--alpha-max", type=int, dest="A")
    v.add_argument("--order", type=int)
    v.add_argument("--strict", action="store_true", help="treat inconclusive items as failures")
    v.add_argument("--jobs", type=int, default=1)
    v.add_argument("--format", choices=("json", "markdown"), default="json")
    v.add_argument("--out", metavar="PATH")
    v.add_argument("--mutate", action="append", default=[], metavar="NAME", choices=MUTATIONS,
                   help="inject a deliberate constant mutation (harness sensitivity test)")
    d = sub.add_parser("dims", help="graded dimensions of t_{1,n}")
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--depth", type=int, dest="D", required=True)
    d.add_argument("--format", choices=("json",), default="json")
    sub.add_parser("list", help="print the item catalog")
    return p


def config_from_args(ns, env=None) -> SuiteConfig:
    base = profile_defaults(env)
    for k in ("n", "D", "A", "order"):
        if getattr(ns, k) is not None:
            base[k] = getattr(ns, k)
    return SuiteConfig(suites=tuple(ns.suite or ["all"]), strict=ns.strict, jobs=ns.jobs,
                       mutations=tuple(ns.mutate), **base)


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        if ns.command == "list":
            for it in CATALOG.values():
                print(f"{it.name:20s} {it.module:9s} {it.identity}")
            return 0
        if ns.command == "dims":
            if ns.n < 2 or ns.D < 2:
                raise UsageError("need n >= 2 and depth >= 2")
            _write(json.dumps(lie.t1n_dims(ns.n, ns.D), indent=2, sort_keys=True) + "\n", None)
            return 0
        cfg = config_from_args(ns)
        cfg.validate()
        resolve_items(cfg.suites)
    except UsageError as exc:
        print(f"kzbkit: error: {exc}", file=sys.stderr)
        return 2
    report = run_suite(cfg)
    _write(emit(report, ns.format), ns.out)
    return report.exit_code()


if __name__ == "__main__":
    raise SystemExit(main())
