from __future__ import annotations

import json
import subprocess
import sys

import pytest

from kzbkit import harness
from kzbkit.exactalg import InconclusiveError, Q, Verdict
from kzbkit.harness import (
    CATALOG,
    Item,
    ItemResult,
    Report,
    SuiteConfig,
    UsageError,
    emit_json,
    emit_markdown,
    main,
    parse,
    profile_defaults,
    resolve_items,
    run_item,
    run_suite,
)

SMALL = ["--n", "3", "--depth", "4", "--alpha-max", "1", "--order", "5"]
FAST = ["--suite", "weierstrass-ode", "--suite", "phi-welldef", "--suite", "kzb-gauge"]


def run_cli(args, capsys):
    code = main(args)
    return code, capsys.readouterr()


def strip_durations(doc: dict) -> dict:
    doc = json.loads(json.dumps(doc))
    for it in doc["items"]:
        it.pop("duration_ms")
    return doc


def test_catalog_is_complete():
    assert len(CATALOG) == 17
    assert set(resolve_items(["all"])) == set(CATALOG)
    assert resolve_items(["elliptic"]) == ["fay-npoint", "fay-universal", "interm", "mu-f-alpha", "weierstrass-ode"]
    with pytest.raises(UsageError):
        resolve_items(["nope"])


def test_verify_passes_with_exit_zero(capsys):
    code, out = run_cli(["verify", *FAST, *SMALL], capsys)
    assert code == 0
    doc = json.loads(out.out)
    assert doc["summary"] == {"total": 3, "pass": 3, "fail": 0, "inconclusive": 0}
    assert [it["name"] for it in doc["items"]] == sorted(it["name"] for it in doc["items"])


def test_mutation_gives_exit_one(capsys):
    code, out = run_cli(["verify", "--suite", "weierstrass-ode", *SMALL, "--mutate", "a2-denominator-19"], capsys)
    assert code == 1
    item = json.loads(out.out)["items"][0]
    assert item["status"] == "fail"
    assert "mutation:a2-denominator-19" in item["flags"]
    assert item["counterexample"]["monomial"] == "p^-2"


def test_usage_errors_exit_two(capsys):
    assert run_cli(["verify", "--suite", "no-such-item"], capsys)[0] == 2
    assert run_cli(["verify", "--n", "1"], capsys)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--mutate", "bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_single_item_at_order_12():
    rep = run_suite(SuiteConfig(suites=("weierstrass-ode",), order=12))
    assert [(it.name, it.status, it.certified_order) for it in rep.items] == [("weierstrass-ode", "pass", 12)]


def test_report_is_deterministic_modulo_durations():
    cfg = SuiteConfig(n=3, D=4, A=1, order=5, suites=("forms",))
    a = run_suite(cfg).to_json()
    b = run_suite(cfg).to_json()
    assert json.dumps(strip_durations(a), sort_keys=True) == json.dumps(strip_durations(b), sort_keys=True)


def test_parallel_matches_serial():
    cfg = SuiteConfig(n=3, D=4, A=1, order=5, suites=("liealg",))
    a = run_suite(cfg).to_json()
    b = run_suite(SuiteConfig(n=3, D=4, A=1, order=5, suites=("liealg",), jobs=2)).to_json()
    assert strip_durations(a) == strip_durations(b)


def test_json_and_markdown_round_trip():
    rep = run_suite(SuiteConfig(n=3, D=4, A=1, order=5, suites=("residue2-table", "weierstrass-ode")))
    rep.items.append(ItemResult("made-up", {"x": "1/2"}, "fail", None, 3, {"why": "a|b"}, None))
    for fmt in ("json", "markdown"):
        text = harness.emit(rep, fmt)
        back = parse(text, fmt)
        assert back.to_json() == rep.to_json(), fmt
    assert "residue2-S2-jk-printed-line-inconsistent" in emit_markdown(rep)


def test_summary_and_exit_codes_from_report():
    empty = Report("0", {})
    assert empty.summary == {"total": 0, "pass": 0, "fail": 0, "inconclusive": 0}
    assert empty.exit_code() == 0
    inc = Report("0", {"strict": False}, [ItemResult("a", {}, "inconclusive", None, 0)])
    assert inc.exit_code() == 0
    assert inc.exit_code(strict=True) == 1
    assert Report("0", {"strict": True}, inc.items).exit_code() == 1
    doc = json.loads(emit_json(inc))
    doc["summary"]["pass"] = 5
    with pytest.raises(ValueError):
        Report.from_json(doc)


def test_inconclusive_and_errors_are_reported(monkeypatch):
    def raise_inconclusive(cfg, mut):
        raise InconclusiveError("need more terms")

    def raise_value(cfg, mut):
        raise ValueError("bad input")

    monkeypatch.setitem(CATALOG, "fake-inc", Item("fake-inc", "elliptic", "x", lambda c: {}, raise_inconclusive))
    monkeypatch.setitem(CATALOG, "fake-err", Item("fake-err", "elliptic", "x", lambda c: {}, raise_value))
    monkeypatch.setitem(CATALOG, "fake-ok", Item("fake-ok", "elliptic", "x", lambda c: {"q": Q(1, 3)},
                                                 lambda c, m: Verdict(True, 7, None, ("note",))))
    cfg = SuiteConfig()
    r = run_item("fake-inc", cfg)
    assert r.status == "inconclusive" and "need more terms" in r.counterexample["reason"]
    r = run_item("fake-err", cfg)
    assert r.status == "fail" and r.counterexample["error"].startswith("ValueError")
    r = run_item("fake-ok", cfg)
    assert (r.status, r.certified_order, r.params, r.flags) == ("pass", 7, {"q": "1/3"}, ["note"])


def test_profiles():
    assert profile_defaults({})["n"] == 3
    night = profile_defaults({"KZBKIT_PROFILE": "nightly"})
    assert (night["n"], night["D"], night["order"]) == (4, 7, 10)
    with pytest.raises(UsageError):
        profile_defaults({"KZBKIT_PROFILE": "weekly"})


def test_out_file_and_markdown(tmp_path, capsys):
    path = tmp_path / "r.md"
    code, out = run_cli(["verify", "--suite", "phi-welldef", *SMALL, "--format", "markdown", "--out", str(path)],
                        capsys)
    assert code == 0 and out.out == ""
    rep = parse(path.read_text(), "markdown")
    assert rep.items[0].name == "phi-welldef" and rep.items[0].status == "pass"


def test_dims_and_list_commands(capsys):
    code, out = run_cli(["dims", "--n", "2", "--depth", "5"], capsys)
    assert code == 0
    doc = json.loads(out.out)
    assert doc["agree"] and doc["dims"] == {"1": 4, "2": 1, "3": 2, "4": 3, "5": 6}
    code, out = run_cli(["list"], capsys)
    assert code == 0 and len(out.out.strip().splitlines()) == 17
    assert run_cli(["dims", "--n", "1", "--depth", "3"], capsys)[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kzbkit", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "t1n-dims" in proc.stdout
