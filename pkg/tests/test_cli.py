import csv
import io

import pytest

from ipdmoran.analysis import SweepResult
from ipdmoran.cli import main

SMALL_ROSTER = '"Cooperator" = scripted Cooperator\n"Defector" = scripted Defector\n"Tit For Tat" = scripted TitForTat\n'


@pytest.fixture
def roster_file(tmp_path):
    path = tmp_path / "roster.txt"
    path.write_text(SMALL_ROSTER)
    return str(path)


def test_exact_abcd(capsys):
    assert main(["exact", "--abcd", "1,5,0,3", "--N", "3"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out.split("\n", 1)[1])))
    assert rows[0] == ["i", "x_i"]
    assert float(rows[2][1]) == pytest.approx(1 / 1.3)


def test_exact_pair(capsys):
    assert main(["exact", "--pair", "Defector", "Cooperator", "--N", "2"]) == 0
    assert capsys.readouterr().out.splitlines()[-2] == "1,1.0"


def test_usage_errors(capsys, tmp_path):
    assert main(["exact", "--N", "3"]) == 1
    assert main(["exact", "--abcd", "1,2,3", "--N", "3"]) == 1
    assert main(["moran", "Nobody", "Defector", "--N", "3"]) == 1
    assert main(["nonsense"]) == 1
    assert main(["exact", "--abcd", "1,5,0,3", "--N", "3", "--matrix", "3,0,7,1"]) == 1
    bad = tmp_path / "bad.txt"
    bad.write_text('"x" = memone 1 1 0\n')
    assert main(["sweep", "--roster", str(bad), "--out", str(tmp_path)]) == 1


def test_runtime_error_exit_code(tmp_path):
    assert main(["sweep", "--cache", str(tmp_path / "missing"), "--out", str(tmp_path)]) == 3


def test_moran(capsys):
    assert main(["moran", "Defector", "Cooperator", "--N", "3", "--i", "1", "--reps", "200"]) == 0
    line = capsys.readouterr().out.splitlines()[-1].split(",")
    assert line[:5] == ["Defector", "Cooperator", "3", "1", "200"]


def test_sweep_rank_corr_pipeline(tmp_path, roster_file):
    out = tmp_path / "out"
    args = ["--roster", roster_file, "--n-min", "2", "--n-max", "4", "--reps", "50", "--turns", "20", "--out", str(out)]
    assert main(["sweep", *args]) == 0
    sweep_csv = out / "sweep.csv"
    res = SweepResult.read(sweep_csv)
    assert res.sizes() == [2, 3, 4] and len(res.names()) == 3
    assert main(["rank", "--sweep", str(sweep_csv), "--out", str(out)]) == 0
    assert main(["corr", "--sweep", str(sweep_csv), "--out", str(out), "--kind", "invade"]) == 0
    assert (out / "ranks_resist.csv").exists() and (out / "corr_invade.csv").exists()


def test_sweep_jobs_give_identical_csv(tmp_path, roster_file):
    base = ["sweep", "--roster", roster_file, "--n-max", "4", "--reps", "30", "--turns", "20", "--seed", "5"]
    assert main([*base, "--out", str(tmp_path / "a"), "--jobs", "1"]) == 0
    assert main([*base, "--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_config_file(tmp_path, roster_file):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# desk run\nroster={roster_file}\nn-max=3\nreps=20\nturns=10\nout={tmp_path / 'c'}\n")
    assert main(["sweep", "--config", str(cfg)]) == 0
    assert SweepResult.read(tmp_path / "c" / "sweep.csv").sizes() == [2, 3]
    # command-line flags override the file
    assert main(["sweep", "--config", str(cfg), "--n-max", "2"]) == 0
    assert SweepResult.read(tmp_path / "c" / "sweep.csv").sizes() == [2]
    cfg.write_text("no-such-key=1\n")
    assert main(["sweep", "--config", str(cfg)]) == 1


def test_sample_and_reuse_cache(tmp_path, roster_file):
    assert main(["sample", "--roster", roster_file, "--turns", "10", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "cache.csv").exists() and (tmp_path / "cache.json").exists()
    assert main(["moran", "Defector", "Tit For Tat", "--N", "4", "--reps", "20", "--roster", roster_file,
                 "--cache", str(tmp_path / "cache")]) == 0


def test_validate_exit_codes(tmp_path, capsys):
    ok = main(["validate", "--pair", "Defector", "Cooperator", "--sizes", "3", "5", "--reps", "500", "--out", str(tmp_path)])
    assert ok == 0
    assert "ok" in capsys.readouterr().out
    assert (tmp_path / "validation.csv").exists()


def test_coop_rate(tmp_path, roster_file):
    assert main(["coop-rate", "Cooperator", "--roster", roster_file, "--turns", "5", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "coop_rate_Cooperator.csv").read_text().splitlines()
    assert text[0] == "round,rate" and all(line.endswith(",1.0") for line in text[1:])


def test_train(tmp_path, capsys):
    args = ["train", "--states", "2", "--population", "4", "--generations", "1", "--N", "4", "--reps", "5",
            "--turns", "10", "--samples", "5", "--opponents", "Cooperator", "Defector", "--out", str(tmp_path)]
    assert main(args) == 0
    assert "handshake" in capsys.readouterr().out
    assert (tmp_path / "champion.txt").read_text().startswith("fsm 2")
    assert (tmp_path / "history.csv").read_text().startswith("generation,best,mean\n0,")


def test_plots(tmp_path, roster_file):
    pytest.importorskip("matplotlib")
    assert main(["coop-rate", "Cooperator", "--roster", roster_file, "--turns", "5", "--out", str(tmp_path), "--plot"]) == 0
    assert (tmp_path / "coop_rate_Cooperator.svg").read_text().lstrip().startswith("<?xml")
