import csv
import io
import json
import subprocess
import sys

import pytest

from backyard.cli import main, parse_seeds


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_parse_seeds():
    assert parse_seeds("0-3") == [0, 1, 2, 3]
    assert parse_seeds("1,4,9") == [1, 4, 9]
    assert parse_seeds("2,5-6") == [2, 5, 6]


def test_seed_env_default(monkeypatch, capsys):
    monkeypatch.setenv("BACKYARD_SEED", "17")
    code, out = run(capsys, "--cmd", "ops_fuzz", "--n", "64", "--trials", "200")
    assert code == 0
    assert json.loads(out)["seeds"] == [17]


def test_ops_fuzz_report_is_deterministic(capsys):
    args = ("--cmd", "ops_fuzz", "--n", "256", "--trials", "3000", "--seeds", "0-2", "--mode-bins", "phf")
    code, a = run(capsys, *args)
    _, b = run(capsys, *args)
    assert code == 0 and a == b
    rep = json.loads(a)
    assert rep["schema_version"] == 1 and rep["command"] == "ops_fuzz"
    assert [r["seed"] for r in rep["rows"]] == [0, 1, 2]
    assert rep["summary"]["mismatches"] == 0
    assert rep["tolerance"] == {"mismatches": 0}
    assert all("seconds" not in r for r in rep["rows"])


def test_empty_sequence_is_a_trivial_pass(capsys):
    code, out = run(capsys, "--cmd", "ops_fuzz", "--n", "64", "--trials", "0")
    rep = json.loads(out)
    assert code == 0 and rep["rows"][0]["ops"] == 0 and rep["summary"]["hard_failures"] == 0


def test_succinct_fuzz_and_csv(capsys):
    code, out = run(capsys, "--cmd", "ops_fuzz", "--structure", "succinct", "--n", "256", "--u", "2^14",
                    "--trials", "2000", "--seeds", "3,4", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 2
    assert {r["seed"] for r in rows} == {"3", "4"}
    assert all(r["mismatches"] == "0" and r["schema_version"] == "1" for r in rows)


def test_queue_stats_and_starvation(capsys):
    code, out = run(capsys, "--cmd", "queue_stats", "--n", "2^10", "--seeds", "0-1", "--mode-bins", "phf")
    rep = json.loads(out)
    assert code == 0 and rep["summary"]["max_queue"] <= rep["summary"]["bound"]
    code, out = run(capsys, "--cmd", "queue_stats", "--L", "0", "--n", "256")
    rep = json.loads(out)
    assert code == 0 and rep["summary"]["starvation_detected"]
    assert rep["rows"][0]["grows"] and rep["rows"][0]["monotone"]


def test_large_l_keeps_queue_near_empty(capsys):
    code, out = run(capsys, "--cmd", "queue_stats", "--n", "2^10", "--L", "1000", "--seeds", "0")
    assert json.loads(out)["rows"][0]["cuckoo_queue_high"] <= 1


def test_overflow_stats(capsys):
    code, out = run(capsys, "--cmd", "overflow_stats", "--n", "2^12", "--seeds", "0-4")
    rep = json.loads(out)
    assert code == 0 and len(rep["rows"]) == 5 and rep["summary"]["bound"] == 64
    code, out = run(capsys, "--cmd", "overflow_stats", "--n", "2^12", "--seeds", "0-1", "--mode-perm", "table")
    assert all(r["mode"] == "perm" for r in json.loads(out)["rows"])


def test_space_audit(capsys):
    code, out = run(capsys, "--cmd", "space_audit")
    rep = json.loads(out)
    assert code == 0
    sanity = [r for r in rep["rows"] if r["row"] == "sanity"]
    assert sanity[0]["info_bound"] == 11
    bits = [r for r in rep["rows"] if r["row"] == "bits"]
    assert len(bits) == 3 and all(r["bits_hash_descriptors"] > 0 and r["ok"] for r in bits)
    assert all(r["ok"] for r in rep["rows"] if r["row"] == "words")


def test_fpr_and_bench(capsys):
    code, out = run(capsys, "--cmd", "fpr", "--n", "500", "--delta", "0.05", "--trials", "5000")
    rep = json.loads(out)
    assert code == 0 and rep["summary"]["false_negatives"] == 0
    code, out = run(capsys, "--cmd", "bench", "--n", "200", "--seeds", "0-1")
    rows = json.loads(out)["rows"]
    assert code == 0 and len(rows) == 2
    assert all(r["ops"] == {"insert": 200, "lookup_hit": 200, "lookup_miss": 200, "delete": 200} for r in rows)


def test_strict_turns_statistics_into_exit_3(capsys):
    # a bound that cannot hold at this size: tiny n with a huge per-op share of the overflow budget
    code, out = run(capsys, "--cmd", "overflow_stats", "--n", "64", "--eps", "0.9", "--seeds", "0-9", "--strict")
    rep = json.loads(out)
    assert code == (3 if rep["summary"]["statistical_exceedances"] else 0)


def test_bad_arguments_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--cmd", "nope"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["--cmd", "ops_fuzz", "--seeds", "x"])
    assert e.value.code == 2


def test_out_file_and_module_entry(tmp_path):
    out = tmp_path / "r.json"
    proc = subprocess.run([sys.executable, "-m", "backyard", "--cmd", "ops_fuzz", "--n", "64", "--trials", "100",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["summary"]["mismatches"] == 0


def test_invalid_parameters_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--cmd", "ops_fuzz", "--eps", "1.5"])
    assert e.value.code == 2
