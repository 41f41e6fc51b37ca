import json

import pytest

from mwmc.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, ConfigError, main, parse_grid, parse_methods
from mwmc.experiments import CSV_HEADER

SMALL = ["--n", "10", "--rank", "2", "--rprime", "4", "--angles-u", "3,1", "--angles-v", "2,1"]


class TestParseGrid:
    def test_range_inclusive(self):
        assert parse_grid("0.1:0.9:0.05") == tuple(round(0.1 + 0.05 * k, 10) for k in range(17))
        assert parse_grid("0.5:1.0:0.25") == (0.5, 0.75, 1.0)

    def test_list(self):
        assert parse_grid("0.3, 0.6,0.9") == (0.3, 0.6, 0.9)

    @pytest.mark.parametrize("text", ["", "0.1:0.9", "0.9:0.1:0.1", "0.1:0.9:0", "a,b"])
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            parse_grid(text)


def test_parse_methods_aliases():
    assert parse_methods("single,optimal,single_weight") == ("single_weight", "multi_weight_optimal")
    with pytest.raises(ConfigError):
        parse_methods("best")


@pytest.mark.parametrize("argv", [
    ["--angles-preset", "accurate", "--perturbation", "0.01"],
    ["--angles-u", "1,2,3,4"],
    ["--methods", "unweighted,magic"],
    ["--n", "10", "--rank", "4", "--rprime", "8"],
    ["--p-grid", "0:0.5:0.1"],
    ["--p-grid", "0.5:1.5:0.5"],
    ["--trials", "0"],
    ["--angles-u", "1,x,3,4", "--angles-v", "1,2,3,4"],
    ["--workers", "0"],
])
def test_invalid_config_exit_code(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path / "r.csv")]) == EXIT_CONFIG
    assert "invalid configuration" in capsys.readouterr().err
    assert not (tmp_path / "r.csv").exists()


def test_small_run_outputs(tmp_path, capsys):
    out, rep = tmp_path / "r.csv", tmp_path / "b.json"
    argv = SMALL + ["--p-grid", "0.8,1.0", "--trials", "2", "--methods", "unweighted,multi",
                    "--out", str(out), "--bounds-report", str(rep)]
    assert main(argv) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + 2 * 2 * 2
    report = json.loads(rep.read_text())
    assert set(report) == {"unweighted", "multi_weight"}
    for entry in report.values():
        assert {"alphas", "p_required_uniform", "exceeds_one", "feasible", "weights"} <= set(entry)
    assert "unweighted: p* = " in capsys.readouterr().out


def test_repeat_runs_identical(tmp_path):
    argv = SMALL + ["--p-grid", "0.6,0.9", "--trials", "2", "--methods", "unweighted,single",
                    "--quiet"]
    assert main(argv + ["--out", str(tmp_path / "a.csv")]) == EXIT_OK
    assert main(argv + ["--out", str(tmp_path / "b.csv")]) == EXIT_OK
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_systematic_nonconvergence_exit(tmp_path, capsys):
    out = tmp_path / "r.csv"
    argv = SMALL + ["--p-grid", "0.5", "--trials", "2", "--methods", "unweighted",
                    "--max-iters", "1", "--out", str(out), "--quiet"]
    assert main(argv) == EXIT_SOLVER
    assert "did not converge" in capsys.readouterr().err
    assert out.exists()


def test_perturbation_mode(tmp_path):
    argv = ["--n", "10", "--rank", "2", "--rprime", "4", "--perturbation", "1e-3",
            "--p-grid", "1.0", "--trials", "1", "--methods", "unweighted", "--quiet",
            "--out", str(tmp_path / "r.csv")]
    assert main(argv) == EXIT_OK
