import csv
import io
import json
import subprocess
import sys

import pytest

from matchkit.cli import main

PAW = ["--graph", "paw", "--measure", "1/5,3/10,1/4,1/4"]


def run(capsys, *args):
    code = main(list(args))
    return code, capsys.readouterr().out


def test_ncond_exit_codes(capsys):
    code, out = run(capsys, "ncond", "--graph", "paw", "--measure", "uniform")
    assert code == 1
    assert json.loads(out)["violations"][0]["set"] == ["1"]
    code, out = run(capsys, "ncond", *PAW)
    assert code == 0 and json.loads(out)["satisfied"]


def test_simulate_csv_matches_golden_run(capsys):
    code, out = run(capsys, "simulate", *PAW, "--arrivals", "13423132214", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["n", "event_class", "W", "B", "F", "matched_with"]
    assert [r[2].replace(" ", "") for r in rows[1:]] == ["1", "13", "1", "", "3", "31", "313", "13", "3", "31", "1"]
    assert rows[8][3] == "1 3 ~3"


def test_simulate_jsonl_is_deterministic(capsys):
    args = ["simulate", *PAW, "--steps", "200", "--seed", "5", "--policy", "uniform"]
    a = run(capsys, *args)
    b = run(capsys, *args)
    assert a == b and a[0] == 0
    assert len(json.loads(a[1])["steps"]) == 200


def test_identity_commands(capsys):
    code, out = run(capsys, "kelly-check", *PAW, "--max-len", "2")
    assert code == 0 and json.loads(out)["max_residual_num"] == 0
    code, out = run(capsys, "balance-check", "--graph", "k3", "--measure", "uniform", "--max-len", "3")
    assert code == 0 and json.loads(out)["passed"]
    code, out = run(capsys, "verify-product-form", *PAW, "--trunc-len", "6", "--steps", "200000")
    assert code == 0
    assert json.loads(out)["normalizing_constant"]["Z"] == "75/4"


def test_property_commands(capsys):
    code, out = run(capsys, "property", "subadd", "--graph", "paw", "--policy", "ms", "--trials", "2000")
    assert code == 1 and json.loads(out)["violations"]
    code, out = run(capsys, "property", "nonexp", "--graph", "weak6", "--policy", "ml", "--trials", "300")
    assert code == 0


def test_erasing_commands(capsys):
    code, out = run(capsys, "erasing", "minimal", "--graph", "paw", "--word", "22", "--cap", "6")
    assert code == 0 and json.loads(out)["word"] == "34"
    code, out = run(capsys, "erasing", "strong", "--graph", "weak6")
    assert code == 0 and json.loads(out)["length"] == 6
    code, out = run(capsys, "erasing", "verify", "--graph", "weak6", "--z", "142356", "--strong")
    assert code == 0 and json.loads(out)["verified"]
    code, out = run(capsys, "erasing", "verify", "--graph", "paw", "--word", "13", "--z", "24")
    assert code == 0


def test_perfect_sample_output(capsys, tmp_path):
    target = tmp_path / "s.jsonl"
    code, _ = run(capsys, "perfect-sample", "--graph", "k3", "--measure", "uniform", "--samples", "3",
                  "--seed", "1", "--out", str(target))
    assert code == 0
    rows = [json.loads(x) for x in target.read_text().splitlines()]
    assert [r["stream"] for r in rows] == [0, 1, 2]
    code, out = run(capsys, "perfect-sample", "--graph", "paw", "--measure", "1/5,3/10,1/4,1/4", "--policy", "ms")
    assert code == 2


def test_windows_and_reverse(capsys):
    code, out = run(capsys, "match-window", "--graph", "weak6", "--periodic", "142356", "--steps", "24")
    assert code == 0
    doc = json.loads(out)
    assert doc["even"]["pairs"] != doc["odd"]["pairs"]
    code, out = run(capsys, "reverse-check", "--graph", "paw", "--arrivals", "134231322142")
    assert code == 0 and "".join(json.loads(out)["exchanged"]) == "~2~4~3~1~2~2~4~3~1~2~3~1"


@pytest.mark.parametrize("args", [
    ["ncond", "--graph", "nope", "--measure", "uniform"],
    ["simulate", "--graph", "paw", "--measure", "1/2,1/2"],
    ["simulate", *PAW, "--arrivals", "19"],
    ["frobnicate"],
])
def test_bad_input_exits_2(capsys, args):
    with pytest.raises(SystemExit) as err:
        raise SystemExit(main(args))
    assert err.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "matchkit", "analyze-graph", "--graph", "paw"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "independent_sets" in proc.stdout
