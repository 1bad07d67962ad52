import csv
import subprocess
import sys
from pathlib import Path

import pytest

from divauction.cli import AGGREGATE_COLUMNS, ConfigError, main, parse_config
from divauction.numerics import Dyadic, from_decimal
from divauction.regret import REPORT_COLUMNS

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text, name="run"):
    p = tmp_path / f"{name}.cfg"
    p.write_text(text)
    return str(p)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


MINIMAL = "M = 1\nT = 16\ngamma0 = 0.5\nvaluations = 0.75\nbuyer_mode = truthful\nseeds = 0\n"


def test_minimal_simulate(tmp_path, capsys):
    cfg = write(tmp_path, MINIMAL, "minimal")
    out = tmp_path / "out"
    assert main(["simulate", cfg, "--out", str(out), "--workers", "1"]) == 0
    trace = rows(out / "minimal_seed0_trace.csv")
    assert len(trace) == 1 + 16
    assert trace[0][:3] == ["t", "period", "active_buyer"]
    report = rows(out / "minimal_report.csv")
    assert report[0] == REPORT_COLUMNS
    assert len(report) == 2
    assert "seed 0: regret" in capsys.readouterr().out


def test_two_buyer_example_respects_the_subhorizon_bound(tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", str(CONFIGS / "two_buyers.cfg"), "--out", str(out), "--workers", "1", "--quiet"]) == 0
    report = rows(out / "two_buyers_report.csv")
    col = report[0].index("subhorizons")
    assert len(report) == 1 + 5
    for row in report[1:]:
        I1, I2 = map(int, row[col].split(";"))
        assert I1 <= 68 and I1 + I2 == 2**12
        assert row[report[0].index("lemma3")] == "1"


def test_reruns_are_byte_identical(tmp_path):
    text = "M = 3\nT = 2^10\ngamma0 = 0.5\nvaluations = random(seed, 6)\nbuyer_mode = envelope_coin:0.4\nseeds = 0..2\n"
    cfg = write(tmp_path, text)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", cfg, "--out", str(a), "--workers", "1", "--quiet"]) == 0
    assert main(["simulate", cfg, "--out", str(b), "--workers", "2", "--quiet"]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert len(names) == 4
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    cfg = write(tmp_path, MINIMAL)
    target = tmp_path / "from_env"
    monkeypatch.setenv("DIVAUCTION_OUT", str(target))
    assert main(["simulate", cfg, "--workers", "1", "--quiet"]) == 0
    assert (target / "run_report.csv").exists()


@pytest.mark.parametrize("text", [
    MINIMAL.replace("0.75", "1.5"),
    MINIMAL.replace("0.75", "abc"),
    MINIMAL.replace("M = 1", "M = 2"),
    MINIMAL.replace("truthful", "greedy"),
    MINIMAL.replace("gamma0 = 0.5", "gamma0 = 1.2"),
    MINIMAL + "r = 1\n",
    MINIMAL + "colour = blue\n",
    MINIMAL.replace("truthful", "dp_optimal").replace("T = 16", "T = 40"),
    MINIMAL + "gammas = 0.9\n",
    "M = 1\n",
])
def test_config_errors_exit_two(tmp_path, capsys, text):
    assert main(["simulate", write(tmp_path, text), "--out", str(tmp_path), "--workers", "1"]) == 2
    assert "config error" in capsys.readouterr().err


def test_usage_errors_exit_two(tmp_path):
    assert main(["verify", "everything"]) == 2
    assert main([]) == 2
    assert main(["simulate", str(tmp_path / "missing.cfg")]) == 2
    assert main(["simulate", write(tmp_path, MINIMAL), "--workers", "0"]) == 2


def test_bound_violation_exits_one(tmp_path, capsys):
    # a non-maximal buyer whose subhorizon outgrows its closed-form bound
    text = ("M = 3\nT = 2^16\ngamma0 = 0.5\nvaluations = 0.390625, 0.328125, 0.453125\n"
            "buyer_mode = envelope_always_reject\nseeds = 4\n")
    assert main(["simulate", write(tmp_path, text), "--out", str(tmp_path), "--workers", "1", "--quiet"]) == 1
    assert "seed 4, lemma3" in capsys.readouterr().err


def test_dp_buyer_simulation(tmp_path):
    text = "M = 1\nT = 12\ngamma0 = 0.5\nvaluations = 0.6\nbuyer_mode = dp_optimal\nseeds = 0\n"
    assert main(["simulate", write(tmp_path, text), "--out", str(tmp_path), "--workers", "1", "--quiet"]) == 0
    trace = rows(tmp_path / "run_seed0_trace.csv")
    accepted = [r[5] for r in trace[1:]]
    assert accepted == ["0", "0", "1", "1", "1", "0", "0", "1", "1", "1", "1", "1"]


def test_sweep_counts_rows(tmp_path):
    text = ("M = 1, 2\nT = 2^6, 2^8\ngamma0 = 0.5\nvaluations = random(seed, 6)\n"
            "buyer_mode = envelope_always_reject, envelope_coin:0.5\nseeds = 0..2\nname = small\n")
    out = tmp_path / "out"
    assert main(["sweep", write(tmp_path, text), "--out", str(out), "--workers", "1", "--quiet"]) == 0
    games = rows(out / "small_games.csv")
    agg = rows(out / "small_aggregate.csv")
    assert games[0] == REPORT_COLUMNS and len(games) == 1 + 2 * 2 * 2 * 3
    assert agg[0] == AGGREGATE_COLUMNS and len(agg) == 1 + 8
    h = agg[0]
    for row in agg[1:]:
        assert int(row[h.index("games")]) == 3
        assert float(row[h.index("regret_max")]) <= float(row[h.index("bound_theorem1_min")])
        assert row[h.index("violations")] == "0"
    hashes = {r[0] for r in games[1:]} | {r[0] for r in agg[1:]}
    assert len(hashes) == 1 and len(hashes.pop()) == 12


def test_config_parsing_details():
    cfg = parse_config("M=2\nT=2^4, 100\ngamma0=0.5\nvaluations=0.5,1\nbuyer_mode=truthful\nseeds=3..5 # three\n")
    assert cfg.T == (16, 100)
    assert cfg.seeds == (3, 4, 5)
    assert cfg.valuations == (Dyadic(1, -1), Dyadic(1))
    fixed = parse_config("M=2\nT=4\ngamma0=0.5\nvaluations=random(7, 3)\nbuyer_mode=truthful\n")
    assert fixed.valuations == ("random", 7, 3) and fixed.seeds == (0,)
    assert parse_config("M=1\nT=4\ngamma0=0.5\nvaluations=0.1\nbuyer_mode=truthful\n").valuations == (from_decimal("0.1"),)
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("M=1\nM=1\n")


def test_config_hash_ignores_layout():
    a = parse_config("M = 1\nT = 16\ngamma0 = 0.5\nvaluations = 0.75\nbuyer_mode = truthful\n")
    b = parse_config("# comment\nbuyer_mode=truthful\nvaluations=0.75\ngamma0=0.5\nT=16\nM=1\n")
    c = parse_config("M = 1\nT = 17\ngamma0 = 0.5\nvaluations = 0.75\nbuyer_mode = truthful\n")
    assert a.digest == b.digest != c.digest


def test_verify_mechanics(capsys):
    assert main(["verify", "mechanics", "--quiet"]) == 0
    assert capsys.readouterr().out == ""
    assert main(["verify", "mechanics"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("PASS ") and "checks passed" in out


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, MINIMAL)
    proc = subprocess.run([sys.executable, "-m", "divauction", "simulate", cfg, "--out", str(tmp_path), "--quiet"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
