import json

import numpy as np
import pytest

from sirvar import io
from sirvar.cli import main


def run(*argv):
    return main(list(argv))


def read_meta(run_dir):
    with open(run_dir / "metadata.json", encoding="utf-8") as fh:
        return json.load(fh)


class TestUsage:
    def test_help_exits_zero(self, capsys):
        assert run("--help") == 0
        assert "run-sd" in capsys.readouterr().out

    def test_subcommand_help_lists_flags_with_defaults(self, capsys):
        assert run("run-mc", "--help") == 0
        out = capsys.readouterr().out
        for flag in ("--out", "--seed", "--weeks", "--population", "--contact-rate",
                     "--infection-prob", "--illness-duration", "--threads", "--format",
                     "--vary", "--sigma", "--replicates"):
            assert flag in out
        assert "default" in out

    def test_unknown_flag_exits_2(self, tmp_path, capsys):
        assert run("run-sd", "--out", str(tmp_path / "x"), "--bogus") == 2
        capsys.readouterr()

    def test_unknown_scenario_exits_2(self, tmp_path, capsys):
        assert run("run-mc", "--vary", "weather", "--out", str(tmp_path / "x")) == 2
        capsys.readouterr()

    def test_missing_out_exits_2(self, capsys):
        assert run("run-sd") == 2
        capsys.readouterr()

    def test_invalid_topology_flags_exit_2(self, tmp_path, capsys):
        assert run("run-abm", "--out", str(tmp_path / "x"), "--k", "3") == 2
        assert run("run-abm", "--out", str(tmp_path / "x"), "--p-rewire", "1.5") == 2
        capsys.readouterr()
        assert not (tmp_path / "x").exists()


class TestRunSd:
    def test_defaults_write_15_weeks(self, tmp_path, capsys):
        out = tmp_path / "sd"
        assert run("run-sd", "--out", str(out)) == 0
        capsys.readouterr()
        ref = io.load_reference(out / "series.csv")
        assert ref.series.weeks == 15
        meta = read_meta(out)
        assert meta["kind"] == "sd"
        assert meta["params"]["contact_rate"] == pytest.approx(5.654, abs=2e-3)
        assert meta["peak_infected"] == pytest.approx(3754, abs=2)

    def test_single_week(self, tmp_path, capsys):
        out = tmp_path / "sd1"
        assert run("run-sd", "--out", str(out), "--weeks", "1") == 0
        capsys.readouterr()
        assert io.load_reference(out / "series.csv").series.weeks == 1

    def test_dt_convergence(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("run-sd", "--out", str(a), "--dt", "0.1") == 0
        assert run("run-sd", "--out", str(b), "--dt", "0.05") == 0
        capsys.readouterr()
        ra = read_meta(a)["cumulative_recovered_final"]
        rb = read_meta(b)["cumulative_recovered_final"]
        assert abs(ra - rb) / rb < 1e-4


class TestRunMc:
    def test_single_replicate_tiny_sigma_matches_run_sd(self, tmp_path, capsys):
        sd_dir, mc_dir = tmp_path / "sd", tmp_path / "mc"
        assert run("run-sd", "--out", str(sd_dir)) == 0
        assert run("run-mc", "--vary", "all", "--replicates", "1", "--sigma", "1e-9",
                   "--out", str(mc_dir)) == 0
        capsys.readouterr()
        sd_series = io.load_run(sd_dir)["series"]
        mc_matrix = io.load_run(mc_dir)["ensemble"].matrix
        assert mc_matrix[0] == pytest.approx(sd_series.infected, rel=1e-6)

    def test_seeded_rerun_is_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("run-mc", "--vary", "contact", "--replicates", "12",
                       "--seed", "42", "--out", str(out)) == 0
        capsys.readouterr()
        assert (a / "ensemble.csv").read_bytes() == (b / "ensemble.csv").read_bytes()
        assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()

    def test_metadata_allows_rerun(self, tmp_path, capsys):
        out = tmp_path / "mc"
        assert run("run-mc", "--vary", "illness", "--replicates", "8",
                   "--seed", "9", "--out", str(out)) == 0
        capsys.readouterr()
        loaded = io.load_run(out)
        rerun = io.rerun_from_metadata(loaded["metadata"])
        assert np.array_equal(rerun.matrix, loaded["ensemble"].matrix)
        assert "elapsed_seconds" in loaded["metadata"]


def read_summary_column(run_dir, col):
    lines = (run_dir / "summary.csv").read_text().splitlines()
    header = lines[0].split(",")
    idx = header.index(col)
    return np.array([float(line.split(",")[idx]) for line in lines[1:]])


def read_summary_iqr(run_dir):
    return read_summary_column(run_dir, "iqr")


def read_summary_median(run_dir):
    return read_summary_column(run_dir, "median")


class TestRunAbm:
    def test_single_replicate(self, tmp_path, capsys):
        out = tmp_path / "abm"
        assert run("run-abm", "--out", str(out), "--population", "500",
                   "--replicates", "1", "--seed", "3") == 0
        capsys.readouterr()
        loaded = io.load_run(out)
        assert loaded["ensemble"].replicates == 1
        assert loaded["metadata"]["elapsed_seconds"] > 0.0

    def test_rewiring_extremes_change_variance(self, tmp_path, capsys):
        frozen, random_net = tmp_path / "p0", tmp_path / "p1"
        common = ["--population", "400", "--replicates", "12", "--seed", "5",
                  "--contact-rate", "8", "--infection-prob", "0.3",
                  "--initial-infected", "4", "--weeks", "8"]
        assert run("run-abm", "--out", str(frozen), "--p-rewire", "0", *common) == 0
        assert run("run-abm", "--out", str(random_net), "--p-rewire", "1", *common) == 0
        capsys.readouterr()
        iqr_frozen = read_summary_iqr(frozen)
        iqr_random = read_summary_iqr(random_net)
        week_frozen = int(np.argmax(read_summary_median(frozen)))
        week_random = int(np.argmax(read_summary_median(random_net)))
        assert iqr_frozen[week_frozen] != iqr_random[week_random]

    def test_json_format(self, tmp_path, capsys):
        out = tmp_path / "abm"
        assert run("run-abm", "--out", str(out), "--population", "300",
                   "--replicates", "2", "--format", "json") == 0
        capsys.readouterr()
        loaded = io.load_run(out)
        assert loaded["ensemble"].replicates == 2


class TestCompare:
    def test_input_equal_to_reference_gives_p_one(self, tmp_path, capsys):
        sd_dir = tmp_path / "sd"
        assert run("run-sd", "--out", str(sd_dir)) == 0
        report = tmp_path / "report"
        assert run("compare", "--reference", str(sd_dir / "series.csv"),
                   "--inputs", str(sd_dir), "--out", str(report)) == 0
        capsys.readouterr()
        lines = (report / "report.csv").read_text().splitlines()
        row = dict(zip(lines[0].split(","), lines[1].split(",")))
        assert float(row["p_value"]) == 1.0
        assert row["reject_at_5pct"] == "False"

    def test_row_per_input_with_variation_totals(self, tmp_path, capsys):
        sd_dir = tmp_path / "sd"
        mc_dir = tmp_path / "mc"
        abm_dir = tmp_path / "abm"
        assert run("run-sd", "--out", str(sd_dir)) == 0
        assert run("run-mc", "--vary", "all", "--replicates", "6", "--out", str(mc_dir)) == 0
        assert run("run-abm", "--out", str(abm_dir), "--population", "300",
                   "--replicates", "4") == 0
        report = tmp_path / "report"
        assert run("compare", "--reference", str(io.synthetic_reference_path()),
                   "--inputs", str(sd_dir), str(mc_dir), str(abm_dir),
                   "--out", str(report)) == 0
        capsys.readouterr()
        lines = (report / "report.csv").read_text().splitlines()
        assert len(lines) == 4
        assert (report / "report.txt").exists()
        mc_row = lines[2].split(",")
        assert mc_row[1] == "ensemble"
        assert float(mc_row[-1]) > 0.0

    def test_length_mismatch_exits_1(self, tmp_path, capsys):
        sd_dir = tmp_path / "sd"
        assert run("run-sd", "--out", str(sd_dir), "--weeks", "10") == 0
        report = tmp_path / "report"
        code = run("compare", "--reference", str(io.synthetic_reference_path()),
                   "--inputs", str(sd_dir), "--out", str(report))
        err = capsys.readouterr().err
        assert code == 1
        assert "mismatch" in err
