import csv
import io

import pytest

from d2dcache.cli import main

SPEC = "lambda_u: 3.0e-4\ntrials: 20\nseed: 1\n"


@pytest.fixture
def spec(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(SPEC)
    return path


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_optimize(spec, capsys):
    assert main(["optimize", "--config", str(spec)]) == 0
    out = rows(capsys.readouterr().out)
    assert len(out) == 100
    assert sum(float(r["q_S-1"]) for r in out) == pytest.approx(2.0, abs=1e-9)


def test_analytic(spec, capsys):
    assert main(["analytic", "--config", str(spec)]) == 0
    out = rows(capsys.readouterr().out)
    assert [r["system"] for r in out] == ["S-1", "S-2"]
    assert all(0 <= float(r["sp_total"]) <= 1 for r in out)


def test_simulate_overrides(spec, tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--config", str(spec), "--trials", "5", "--seed", "9",
                 "--out", str(out)]) == 0
    got = rows(out.read_text())
    assert {r["trials"] for r in got} == {"5"} and {r["seed"] for r in got} == {"9"}


def test_sweep_and_compare(tmp_path, capsys):
    path = tmp_path / "sw.yaml"
    path.write_text("sweep:\n  lambda_u: [2.0e-4, 3.0e-4]\ntrials: 10\n")
    out = tmp_path / "sw.csv"
    assert main(["sweep", "--config", str(path), "--out", str(out)]) == 0
    assert len(rows(out.read_text())) == 4
    assert main(["compare", str(out)]) == 0
    assert "mean" in capsys.readouterr().out


def test_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("lambda_u: 5.0e-4\nrho: 1.5\n")
    assert main(["analytic", "--config", str(path)]) == 2
    assert "rho" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert main(["optimize", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_sweep_failure_exit_code(tmp_path, monkeypatch):
    import d2dcache.experiments as ex

    def boom(*a, **k):
        raise RuntimeError("boom")

    monkeypatch.setattr(ex, "evaluate_point", boom)
    path = tmp_path / "sw.yaml"
    path.write_text("lambda_u: 2.0e-4\ntrials: 3\n")
    assert main(["sweep", "--config", str(path), "--out", str(tmp_path / "x.csv")]) == 1
