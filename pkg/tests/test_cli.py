import io
import json
import subprocess
import sys

import pytest

from symblicit.cli import RECORD_KEYS, load_manifest, main, run_bench

OK_PROP = 'P=? [ F "ok" ]'


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def value_of(text):
    line = next(l for l in text.splitlines() if l.startswith("value = "))
    return line[len("value = "):]


def test_check_rational_zeroconf():
    code, text = run("check", "zeroconf", "--prop", OK_PROP, "--engine", "symblicit",
                     "--arith", "rational")
    assert code == 0
    assert value_of(text) == "4375/4376"
    assert "states_total" in text


def test_check_value_iteration():
    code, text = run("check", "zeroconf.pm", "--prop", OK_PROP, "--engine", "vi",
                     "--epsilon", "1e-12")
    assert code == 0
    assert abs(float(value_of(text)) - 4375 / 4376) < 1e-9


def test_check_brp_with_constants():
    code, text = run("check", "brp", "--const", "N=64", "--const", "MAX=5",
                     "--prop", 'P=? [ F "error" ]')
    assert code == 0
    assert abs(float(value_of(text)) / 4.48e-08 - 1) < 0.01


def test_stats_json_record(tmp_path):
    path = tmp_path / "rec.json"
    code, _ = run("check", "zeroconf", "--prop", OK_PROP, "--arith", "rational",
                  "--stats-json", str(path))
    assert code == 0
    rec = json.loads(path.read_text())
    assert tuple(rec) == RECORD_KEYS
    assert rec["value"] == "4375/4376"
    assert rec["infinite"] is False
    assert rec["states_total"] == 7
    code, text = run("check", "zeroconf", "--prop", 'R{"tries"}=? [ F "ok" ]',
                     "--stats-json", "-")
    rec = json.loads(text.splitlines()[-1])
    assert rec["infinite"] is True and rec["value"] == "inf"


def test_prop_file(tmp_path):
    f = tmp_path / "p.props"
    f.write_text("// reachability\n" + OK_PROP + "\n")
    code, text = run("check", "zeroconf", "--prop-file", str(f), "--arith", "rational")
    assert code == 0 and value_of(text) == "4375/4376"


def test_trace_dump():
    code, text = run("check", "zeroconf", "--prop", OK_PROP, "--arith", "rational",
                     "--trace")
    assert code == 0
    assert "eliminated" in text


@pytest.mark.parametrize("argv,expected", [
    (["check", "zeroconf"], 1),
    (["check", "zeroconf", "--prop", OK_PROP, "--arith", "decimal"], 1),
    (["check", "zeroconf", "--prop", OK_PROP, "--const", "n"], 1),
    (["frobnicate"], 1),
    (["check", "no-such-model", "--prop", OK_PROP], 2),
    (["check", "zeroconf", "--prop", 'P=? [ F "nope" ]'], 2),
    (["check", "zeroconf", "--prop", OK_PROP, "--const", "bogus=1"], 2),
    (["check", "brp", "--prop", 'P=? [ F "error" ]', "--max-states", "10"], 3),
    (["check", "cell", "--prop", 'R=? [ S ]'], 3),
])
def test_exit_codes(argv, expected, capsys):
    code, _ = run(*argv)
    assert code == expected
    assert "error" in capsys.readouterr().err


def test_empty_manifest(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("[]")
    code, text = run("bench", str(path))
    assert code == 0
    assert text.strip().splitlines() == [text.strip().splitlines()[0]]
    assert "instance" in text


def test_bench_rows_and_json(tmp_path):
    stats = tmp_path / "bench.json"
    code, text = run("bench", "--only", "zeroconf", "--stats-json", str(stats))
    assert code == 0
    rows = json.loads(stats.read_text())
    assert [r["ok"] for r in rows] == [True, True]
    assert "4375/4376" in text


def test_bench_reports_mismatch():
    rows = [{"name": "wrong", "model": "zeroconf", "property": OK_PROP,
             "arith": "rational", "expected": "1/2", "tolerance": 0}]
    (res,) = run_bench(rows, out=None)
    assert not res["ok"]
    rows = [{"name": "broken", "model": "zeroconf", "property": 'P=? [ F "x" ]'}]
    (res,) = run_bench(rows, out=None)
    assert not res["ok"] and "unknown label" in res["error"]


def test_bundled_manifest_is_well_formed():
    rows = load_manifest()
    names = [r["name"] for r in rows]
    assert len(names) == len(set(names))
    assert any(r.get("slow") for r in rows)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "symblicit", "check", "zeroconf", "--prop", OK_PROP,
         "--arith", "rational"],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "value = 4375/4376"
