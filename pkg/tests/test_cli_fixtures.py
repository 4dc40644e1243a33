import json
import subprocess
import sys

import pytest

from ssdolb.checks import REGISTRY, run_checks
from ssdolb.cli import main
from ssdolb.fixtures import (
    ScenarioParseError, ScenarioValidationError, build_scenario, list_fixtures, load_fixture,
    parse_scenario, parse_sheaf, space_to_json,
)

CIRCLE = {"points": ["a", "b", "x", "y"],
          "relations": [["a", "x"], ["a", "y"], ["b", "x"], ["b", "y"]]}


def test_bundled_fixtures():
    assert list_fixtures() == ["broken_connector", "point", "s1_circle"]
    sc = load_fixture("s1_circle")
    assert sc.seed == 1 and set(sc.sheaves) == {"Q"}


@pytest.mark.parametrize("name", ["point", "s1_circle"])
def test_good_fixtures_pass_every_check(name):
    results = run_checks(load_fixture(name), list(REGISTRY))
    assert [r.name for r in results if not r.passed] == []


def test_broken_fixture_names_the_failing_rectangle():
    results = {r.name: r for r in run_checks(load_fixture("broken_connector"))}
    assert not results["ss_module"].passed
    assert "[0, 1, 2]" in results["ss_module"].diff[0]
    assert results["cohomology"].passed


def test_parse_errors_report_position():
    with pytest.raises(ScenarioParseError, match="line 2, column"):
        parse_scenario('{"space":\n ]')


@pytest.mark.parametrize("raw, match", [
    ({}, "missing 'space'"),
    ({"space": {"points": ["a", "a"]}}, "duplicate"),
    ({"space": CIRCLE, "covers": {"U": [["a"]]}}, "not open"),
    ({"space": CIRCLE, "covers": {"U": [["a", "x", "y"]]}}, "misses points"),
    ({"space": CIRCLE, "sheaves": {"F": {"stalks": {"q": 1}}}}, "unknown point"),
    ({"space": CIRCLE, "sheaves": {"F": {"stalks": {"a": 1, "x": 1},
                                         "restrictions": [{"from": "a", "to": "x",
                                                           "matrix": [[1, 2]]}]}}}, "shape"),
    ({"space": CIRCLE, "sheaves": {"F": {"stalks": {"a": 1, "x": 1},
                                         "restrictions": [{"from": "a", "to": "x",
                                                           "matrix": [[0.5]]}]}}}, "inexact"),
])
def test_validation_errors(raw, match):
    with pytest.raises(ScenarioValidationError, match=match):
        build_scenario(raw)


def test_sheaf_json_round_trip():
    sc = load_fixture("s1_circle")
    out = json.loads(subprocess_free_gen(["gen", "sheaf", "--space", "s1_circle", "--seed", "4"]))
    f = parse_sheaf(sc.space, out["sheaves"]["F"], "F")
    again = build_scenario({"space": space_to_json(sc.space), "sheaves": out["sheaves"]})
    assert again.sheaves["F"].same_data(f)


def subprocess_free_gen(argv):
    import contextlib
    import io
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        assert main(argv) == 0
    return buf.getvalue()


def test_run_exit_codes(tmp_path, capsys):
    assert main(["run", "point"]) == 0
    assert main(["run", "broken_connector"]) == 1
    assert main(["run", "point", "--checks", "nope"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"space": [')
    assert main(["run", str(bad)]) == 3
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    err = capsys.readouterr().err
    assert "unknown checks: nope" in err and "parse error" in err


def test_report_is_deterministic(tmp_path, capsys):
    r1, r2 = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["run", "s1_circle", "--report", str(r1)]) == 0
    assert main(["run", "s1_circle", "--report", str(r2)]) == 0
    a, b = json.loads(r1.read_text()), json.loads(r2.read_text())
    assert a["body_sha256"] == b["body_sha256"]
    a.pop("timings"), b.pop("timings")
    assert a == b
    table = capsys.readouterr().out
    assert "H(Q) bar" in table and "[1, 1]" in table


def test_seed_override_and_check_subset(capsys):
    assert main(["run", "s1_circle", "--checks", "exactness,cech", "--seed", "9"]) == 0
    out = capsys.readouterr().out
    assert "seed 9" in out and "exactness" in out and "zigzag" not in out


def test_gen_is_deterministic_and_capped(capsys):
    a = subprocess_free_gen(["gen", "ses", "--space", "s1_circle", "--seed", "5"])
    b = subprocess_free_gen(["gen", "ses", "--space", "s1_circle", "--seed", "5"])
    assert a == b
    tower = json.loads(subprocess_free_gen(["gen", "ss-tower", "--space", "s1_circle",
                                            "--seed", "2"]))
    assert set(tower["covers"]) == {"fine", "mid", "coarse"}
    assert main(["gen", "sheaf", "--space", "s1_circle", "--seed", "1", "--rank", "4"]) == 2


def test_generated_ses_loads_as_a_scenario(capsys):
    frag = json.loads(subprocess_free_gen(["gen", "ses", "--space", "s1_circle", "--seed", "3"]))
    sc = build_scenario(dict(frag, space=CIRCLE))
    assert set(sc.maps) == {"i", "p"}


def test_list_checks(capsys):
    assert main(["--list-checks"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in REGISTRY)


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ssdolb", "run", "point"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "result PASS" in proc.stdout
