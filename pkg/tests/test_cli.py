import csv
import subprocess
import sys

import pytest

from wallopt.cli import COMPARISON_HEADER, SUMMARY_HEADER, cmd_report, main
from wallopt.optimizer import OptimizerConfig, ParamSpec, optimize, read_trace

SIM = ["--default-house", "--synthetic-days", "21", "--seed", "5"]


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _files(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def test_simulate_smoke(tmp_path, capsys):
    assert main(["simulate", *SIM, "--out", str(tmp_path / "run")]) == 0
    out = tmp_path / "run"
    assert set(_files(out)) == {"zone_conditions.csv", "zone_pmv.csv", "objective.csv", "objective.txt"}
    rows = _rows(out / "objective.csv")
    assert rows[-1]["zone"] == "TOTAL"
    assert capsys.readouterr().out.startswith("PMV_total = ")
    assert (out / "zone_pmv.csv").read_text().splitlines()[0] == "hour,zone,pmv,ppd,occupants"


def test_missing_weather_exits_2(tmp_path, capsys):
    missing = tmp_path / "nowhere.csv"
    status = main(["simulate", "--default-house", "--weather", str(missing), "--out", str(tmp_path / "o")])
    assert status == 2
    assert str(missing) in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_bad_building_file_exits_2(tmp_path, capsys):
    cfg = tmp_path / "b.cfg"
    cfg.write_text("[zone a]\nfloor_area = ten\n")
    assert main(["simulate", "--building", str(cfg), "--synthetic-days", "8", "--out", str(tmp_path / "o")]) == 2
    assert "b.cfg:1: section [zone a] missing key 'surfaces'" in capsys.readouterr().err


def test_reruns_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["simulate", *SIM, "--out", str(tmp_path / name / "sim")]) == 0
        assert main(["weather-gen", "--synthetic-days", "10", "--seed", "3", "--out", str(tmp_path / name / "w")]) == 0
        assert main(["optimize", *SIM, "--layer", "concrete", "--min-step", "0.01",
                     "--out", str(tmp_path / name / "opt")]) == 0
    for sub in ("sim", "w", "opt"):
        assert _files(tmp_path / "a" / sub) == _files(tmp_path / "b" / sub)


def test_weather_gen_round_trips_into_simulate(tmp_path):
    assert main(["weather-gen", "--synthetic-days", "21", "--seed", "5", "--out", str(tmp_path / "w")]) == 0
    assert main(["simulate", "--default-house", "--weather", str(tmp_path / "w" / "weather.csv"),
                 "--out", str(tmp_path / "from_file")]) == 0
    assert main(["simulate", *SIM, "--out", str(tmp_path / "synthetic")]) == 0
    assert _files(tmp_path / "from_file") == _files(tmp_path / "synthetic")


def test_optimize_concrete_direction(tmp_path):
    out = tmp_path / "opt"
    assert main(["optimize", "--default-house", "--synthetic-days", "42", "--seed", "1", "--layer", "concrete",
                 "--min-step", "0.005", "--out", str(out)]) == 0
    (row,) = _rows(out / "summary.csv")
    assert list(row) == list(SUMMARY_HEADER)
    assert float(row["optimized_total_pmv"]) <= float(row["baseline_total_pmv"])
    assert float(row["optimized_thickness_m"]) >= float(row["baseline_thickness_m"]) == 0.2032
    comparison = _rows(out / "comparison.csv")
    assert list(comparison[0]) == list(COMPARISON_HEADER)
    items = [(r["quantity"], r["item"]) for r in comparison]
    assert ("pmv", "kitchen") in items and ("pmv", "TOTAL") in items and ("thickness_mm", "wall") in items
    trace = read_trace(out / "trace.csv")
    assert trace.names == ("concrete",)
    assert float(row["optimized_total_pmv"]) == min(r.cost for r in trace)


MOCK = """import re
x = float(re.search(r"wood=(\\S+)", open("in.txt").read()).group(1))
open("out.txt", "w").write("PMV_total = %r\\n" % ((x - 0.1) ** 2 + 0.5))
"""


def test_optimize_through_bridge_matches_in_process(tmp_path):
    (tmp_path / "eval.py").write_text(MOCK)
    (tmp_path / "tpl.txt").write_text("wood=%wood%\n")
    (tmp_path / "bridge.cfg").write_text(
        f"[coupling]\ntemplate = tpl.txt\ninput = in.txt\ncommand = {sys.executable} {tmp_path / 'eval.py'}\n"
        "output = out.txt\ntimeout = 30\n")
    out = tmp_path / "opt"
    assert main(["optimize", "--default-house", "--layer", "wood", "--bridge", str(tmp_path / "bridge.cfg"),
                 "--min-step", "0.001", "--out", str(out)]) == 0
    remote = read_trace(out / "trace.csv")
    local = optimize(lambda v: (v[0] - 0.1) ** 2 + 0.5, [ParamSpec("wood", initial=0.025)],
                     OptimizerConfig(min_step=0.001))
    assert [r.params for r in remote] == [r.params for r in local.trace]
    assert all(abs(a.cost - b.cost) <= 1e-9 for a, b in zip(remote, local.trace))
    (row,) = _rows(out / "summary.csv")
    assert float(row["optimized_thickness_m"]) == pytest.approx(0.1, abs=1e-3)


def test_optimize_bad_layer_and_failure_cleanup(tmp_path, capsys):
    with pytest.raises(SystemExit):
        main(["optimize", *SIM, "--layer", "mortar", "--out", str(tmp_path / "x")])
    (tmp_path / "tpl.txt").write_text("wood=%wood%\n")
    (tmp_path / "bridge.cfg").write_text(
        "[coupling]\ntemplate = tpl.txt\ninput = in.txt\ncommand = false\noutput = out.txt\n")
    out = tmp_path / "fail"
    assert main(["optimize", "--default-house", "--layer", "wood", "--bridge", str(tmp_path / "bridge.cfg"),
                 "--out", str(out)]) == 1
    assert "exit status 1" in capsys.readouterr().err
    assert not out.exists()


def _report_files(tmp_path, base, best, base_mm, best_mm):
    trace = tmp_path / "trace.csv"
    trace.write_text("eval,concrete,cost,move,accepted\n"
                     f"0,{base_mm / 1000},{base},initial,1\n1,{best_mm / 1000},{best},exploratory,1\n")
    summary = tmp_path / "summary.csv"
    with open(summary, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerow(["concrete", base_mm / 1000, best_mm / 1000, base_mm, best_mm, 0, base, best, 0, 2, 1])
    return trace, summary


def test_report_percentages_and_sensations(tmp_path):
    text = cmd_report(*_report_files(tmp_path, 1.45, 0.55, 210.0, 250.0))
    assert "(-62%)" in text
    assert "slightly warm (near slightly warm/warm boundary) -> slightly warm (near neutral/slightly warm boundary)" \
        in text
    wall = [line for line in text.splitlines() if line.startswith("wall")]
    assert wall and wall[0].endswith("+19%")


def test_report_empty_trace_is_error(tmp_path, capsys):
    trace, summary = _report_files(tmp_path, 1.0, 0.5, 200.0, 300.0)
    trace.write_text("eval,concrete,cost,move,accepted\n")
    assert main(["report", "--trace", str(trace), "--summary", str(summary)]) == 2
    assert "no evaluations" in capsys.readouterr().err


def test_pmv_command(capsys):
    assert main(["pmv", "--ta", "22", "--rh", "60", "--vel", "0.1"]) == 0
    value, ppd_value, label = capsys.readouterr().out.strip().split(",")
    assert float(value) == pytest.approx(-0.75, abs=0.01)
    assert label == "slightly cool"
    assert main(["pmv", "--ta", "22", "--rh", "160"]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "wallopt", "pmv", "--ta", "27", "--rh", "60", "--vel", "0.1"],
                          capture_output=True, text=True, check=True)
    assert float(proc.stdout.split(",")[0]) == pytest.approx(0.77, abs=0.01)
