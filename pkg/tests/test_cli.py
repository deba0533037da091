"""Tests for the command-line front end."""

import json
import subprocess
import sys

import pytest

from treelie import __version__, cli

GOLDEN_QUATERNION_DOT = """digraph lie_cayley {
  rankdir=LR;
  node [shape=box];
  d1_1 [label="i", word="i"];
  d1_2 [label="j", word="j"];
  d2_1 [label="-1", word="-1"];
  d1_1 -> d2_1 [label="j"];
  d1_2 -> d2_1 [label="i"];
  d1_1 -> d2_1 [style=dashed];
  d1_2 -> d2_1 [style=dashed];
}
"""

DIHEDRAL_AUTOMATON = """{"p": 2, "initial": "a",
 "states": {"a": {"perm": 1, "children": ["1", "1"]},
            "b": {"perm": 0, "children": ["a", "b"]}}}
"""


def run(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --- series ------------------------------------------------------------------

def test_series_table(capsys):
    code, out, _ = run(["series", "--group", "grigorchuk", "--kind",
                        "lcs", "--level", "3", "--degree", "5"], capsys)
    assert code == 0
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert lines[0] == "index\tlog2_index\trank\tfaithful"
    assert lines[1].startswith("1\t0\t3\t")
    assert lines[2].startswith("2\t3\t2\t")
    assert "log2|G|=7" in out


def test_series_json_and_checks(capsys):
    code, out, _ = run(["series", "--group", "grigorchuk", "--kind",
                        "dim", "--level", "3", "--format", "json"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["version"] == __version__
    assert payload["checks"]["status"] == "ok"
    assert [r["rank"] for r in payload["rows"]] == [3, 2, 1, 1]
    assert [r["log2_index"] for r in payload["rows"]] == [0, 3, 5, 6]


def test_series_subgroups(capsys):
    code, out, _ = run(["series", "--group", "grigorchuk", "--kind",
                        "lcs", "--level", "3", "--degree", "3",
                        "--subgroup", "K", "--subgroup", "gamma_3"],
                       capsys)
    assert code == 0
    assert "subgroup K log2_order=3 log2_index=4" in out
    assert "subgroup gamma_3 log2_order=2 log2_index=5" in out


def test_series_faithful_flags(capsys):
    # ranks that agree with the next-lower level are flagged
    code, out, _ = run(["series", "--group", "grigorchuk", "--kind",
                        "lcs", "--level", "4", "--degree", "4"], capsys)
    assert code == 0
    rows = [l.split("\t") for l in out.splitlines()
            if l and not l.startswith("#")][1:]
    assert rows[0][3] == "yes"      # rank 3 stable from level 3
    assert rows[1][3] == "yes"      # rank 2 stable


# --- cayley -------------------------------------------------------------------

def test_cayley_quaternion_golden(capsys):
    code, out, _ = run(["cayley", "--group", "quaternion",
                        "--format", "dot"], capsys)
    assert code == 0
    assert out == GOLDEN_QUATERNION_DOT


def test_cayley_json(capsys):
    code, out, _ = run(["cayley", "--group", "grigorchuk", "--series",
                        "lcs", "--level", "3", "--degrees", "3",
                        "--format", "json", "--check"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["version"] == __version__
    degrees = [v["degree"] for v in payload["vertices"]]
    assert degrees.count(1) == 3 and degrees.count(2) == 2
    assert all(e["weight"] == 1 for e in payload["edges"])


def test_cayley_file_group(tmp_path, capsys):
    f = tmp_path / "dihedral.json"
    f.write_text(DIHEDRAL_AUTOMATON)
    code, out, _ = run(["cayley", "--group", str(f), "--series", "lcs",
                        "--level", "3", "--degrees", "3",
                        "--format", "dot"], capsys)
    assert code == 0
    assert "d1_1 -> d2_1" in out
    assert out.endswith("}\n")


# --- growth -------------------------------------------------------------------

def test_growth_table(capsys):
    code, out, _ = run(["growth", "--group", "grigorchuk", "--level",
                        "3", "--radius", "4", "--against-dims"], capsys)
    assert code == 0
    rows = [l.split("\t") for l in out.splitlines()
            if l and not l.startswith("#")][1:]
    balls = [int(r[1]) for r in rows]
    assert balls[0] == 1
    assert balls == sorted(balls)
    assert "a_n <= ball(n): ok" in out


def test_growth_faithful_prefix(capsys):
    # radius-2 balls already stable between levels 2 and 3
    code, out, _ = run(["growth", "--group", "grigorchuk", "--level",
                        "3", "--radius", "2"], capsys)
    assert code == 0
    rows = [l.split("\t") for l in out.splitlines()
            if l and not l.startswith("#")][1:]
    assert rows[0][2] == "yes" and rows[1][2] == "yes"


# --- vn ------------------------------------------------------------------------

def test_vn_profile(capsys):
    code, out, _ = run(["vn", "--group", "grigorchuk", "--level", "2"],
                       capsys)
    assert code == 0
    rows = [l.split("\t") for l in out.splitlines()
            if l and not l.startswith("#")][1:]
    assert [r[1] for r in rows] == ["1", "1", "1", "1"]


def test_vn_check_dec1(capsys):
    code, out, _ = run(["vn", "--group", "overgroup", "--level", "2",
                        "--check-dec1", "--json"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["ok"] is True
    assert payload["hypothesis"] is True
    assert all(r["ok"] == "pass" for r in payload["rows"])


# --- gs and jennings ------------------------------------------------------------

def test_gs_witness(capsys):
    code, out, _ = run(["gs", "--d", "2", "--relators-profile", "0^7,1*",
                        "--xi", "3/4", "--degree", "12"], capsys)
    assert code == 0
    assert "witness value -1631/16384 (negative)" in out
    rows = [l.split("\t") for l in out.splitlines()
            if l and not l.startswith("#")][1:]
    assert rows[8][1] == "255"
    assert rows[12][1] == "3967"


def test_gs_json(capsys):
    code, out, _ = run(["gs", "--degree", "10", "--json"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["witness"]["value"] == "-1631/16384"
    assert payload["witness"]["negative"] is True
    assert payload["bound"][:4] == [1, 2, 4, 8]


def test_jennings_table(capsys):
    code, out, _ = run(["jennings", "--b", "2,1", "--degree", "4"],
                       capsys)
    assert code == 0
    rows = [l.split("\t") for l in out.splitlines()
            if l and not l.startswith("#")][1:]
    assert [r[1] for r in rows] == ["1", "2", "2", "2", "1"]
    assert "total=8" in out


def test_jennings_char_zero(capsys):
    code, out, _ = run(["jennings", "--b", "1", "--p", "0", "--degree",
                        "5", "--json"], capsys)
    assert code == 0
    assert json.loads(out)["coeffs"] == [1, 1, 1, 1, 1, 1]


def test_series_alias_routing(capsys):
    code1, out1, _ = run(["series", "jennings", "--b", "2,1",
                          "--degree", "4"], capsys)
    code2, out2, _ = run(["jennings", "--b", "2,1", "--degree", "4"],
                         capsys)
    assert code1 == code2 == 0
    assert out1 == out2
    code3, out3, _ = run(["series", "gs", "--degree", "8"], capsys)
    assert code3 == 0
    assert "witness value" in out3


# --- exit codes -----------------------------------------------------------------

def test_exit_code_config_error(capsys):
    code, _, err = run(["series", "--group", "nosuch"], capsys)
    assert code == 2
    assert "error" in err

    code, _, err = run(["jennings", "--b", "1,x"], capsys)
    assert code == 2

    code, _, err = run(["series", "--kind", "nope"], capsys)
    assert code == 2


def test_exit_code_budget(capsys):
    code, _, err = run(["series", "--group", "grigorchuk", "--kind",
                        "lcs", "--level", "3", "--budget", "4"], capsys)
    assert code == 3
    assert "budget" in err


def test_budget_env_override(capsys, monkeypatch):
    monkeypatch.setenv("TREELIE_BUDGET", "4")
    code, _, err = run(["series", "--group", "grigorchuk", "--kind",
                        "lcs", "--level", "3"], capsys)
    assert code == 3


def test_determinism(capsys):
    _, out1, _ = run(["series", "--group", "grigorchuk", "--kind", "lcs",
                      "--level", "3", "--format", "json"], capsys)
    _, out2, _ = run(["series", "--group", "grigorchuk", "--kind", "lcs",
                      "--level", "3", "--format", "json"], capsys)
    assert out1 == out2


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "treelie.cli", "jennings", "--b", "2,1",
         "--degree", "4"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "total=8" in proc.stdout
