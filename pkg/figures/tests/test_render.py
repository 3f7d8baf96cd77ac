import json
from pathlib import Path

import pytest

from repnet_figures import KINDS, FigureSpec, SchemaError, render
from repnet_figures.cli import main

ACCEPTANCE_CSV = Path(__file__).resolve().parents[2] / "tests" / ".acceptance_cache" / "csv"


@pytest.fixture(scope="session")
def sweep_dir(tmp_path_factory) -> Path:
    """Real sweep CSVs: the cached acceptance sweep if present, else a small one."""
    if (ACCEPTANCE_CSV / "summary.csv").exists():
        return ACCEPTANCE_CSV
    from repnet.experiments import ExperimentConfig, run_experiment

    out = tmp_path_factory.mktemp("sweep")
    cfg = ExperimentConfig(
        n=40,
        density=0.25,
        density_kind="links_per_user",
        tau_values=[0.0, 0.1, 0.2, 0.3, 0.4],
        t_max=400,
        runs=3,
        seed=77,
    )
    run_experiment(cfg, out_dir=out)
    return out


def hist_inputs(sweep_dir: Path, prefix: str) -> list[Path]:
    paths = sorted(sweep_dir.glob(f"{prefix}_tau*.csv"))
    assert paths, f"no {prefix} histograms in {sweep_dir}"
    return [paths[0], paths[-1]][: min(2, len(paths))]


class TestKinds:
    def test_all_five_kinds_render(self, sweep_dir, tmp_path):
        specs = {
            "tau-sweep-benefit": [sweep_dir / "summary.csv"],
            "m-sweep-benefit": [sweep_dir / "summary.csv"],
            "core-size-hist": hist_inputs(sweep_dir, "hist_core_size"),
            "lambda1-hist": hist_inputs(sweep_dir, "hist_lambda1"),
            "lifetime-recovery": [sweep_dir / "segments.csv"],
        }
        assert set(specs) == set(KINDS)
        for kind, inputs in specs.items():
            out = tmp_path / f"{kind}.png"
            meta = render(FigureSpec(inputs=inputs, kind=kind, out=out))
            assert out.exists() and out.stat().st_size > 0
            assert meta["kind"] == kind

    def test_tau_curve_peak_matches_csv_argmax(self, sweep_dir, tmp_path):
        summary = sweep_dir / "summary.csv"
        rows = [line.split(",") for line in summary.read_text().splitlines()[1:]]
        csv_argmax = max(rows, key=lambda r: float(r[3]))[0]
        meta = render(
            FigureSpec([summary], "tau-sweep-benefit", tmp_path / "curve.png")
        )
        assert meta["argmax_x"] == float(csv_argmax)

    def test_histogram_overlay_two_series(self, sweep_dir, tmp_path):
        inputs = hist_inputs(sweep_dir, "hist_core_size")
        out = tmp_path / "overlay.png"
        meta = render(
            FigureSpec(inputs, "core-size-hist", out, labels=["low cost", "high cost"])
        )
        assert out.exists()
        assert meta["points"] > 0

    def test_lambda1_rebinning(self, sweep_dir, tmp_path):
        inputs = hist_inputs(sweep_dir, "hist_lambda1")[:1]
        fine = render(FigureSpec(inputs, "lambda1-hist", tmp_path / "fine.png"))
        coarse = render(
            FigureSpec(inputs, "lambda1-hist", tmp_path / "coarse.png", bin_width=0.1)
        )
        assert coarse["points"] <= fine["points"]

    def test_m_sweep_axis_conversion(self, sweep_dir, tmp_path):
        meta = render(
            FigureSpec([sweep_dir / "summary.csv"], "m-sweep-benefit", tmp_path / "m.png", n=40)
        )
        assert (tmp_path / "m.png").exists()
        assert meta["points"] > 0


class TestValidation:
    def test_missing_column_named(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("tau,p,runs,mean_lifetime\n0.1,0.01,3,2.0\n")
        out = tmp_path / "x.png"
        with pytest.raises(SchemaError, match="mean_b"):
            render(FigureSpec([bad], "tau-sweep-benefit", out))
        assert not out.exists()

    def test_header_only_csv_rejected(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("value,probability\n")
        out = tmp_path / "x.png"
        with pytest.raises(SchemaError, match="no data rows"):
            render(FigureSpec([empty], "core-size-hist", out))
        assert not out.exists()

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(SchemaError, match="kind"):
            FigureSpec([tmp_path / "a.csv"], "pie-chart", tmp_path / "x.png")

    def test_three_histogram_inputs_rejected(self, tmp_path):
        csvs = []
        for i in range(3):
            p = tmp_path / f"h{i}.csv"
            p.write_text("value,probability\n1,1.0\n")
            csvs.append(p)
        with pytest.raises(SchemaError, match="at most two"):
            render(FigureSpec(csvs, "core-size-hist", tmp_path / "x.png"))


class TestDeterminism:
    def test_identical_bytes_on_rerender(self, sweep_dir, tmp_path):
        spec1 = FigureSpec([sweep_dir / "summary.csv"], "tau-sweep-benefit", tmp_path / "a.png")
        spec2 = FigureSpec([sweep_dir / "summary.csv"], "tau-sweep-benefit", tmp_path / "b.png")
        render(spec1)
        render(spec2)
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


class TestCli:
    def test_cli_renders_and_reports_json(self, sweep_dir, tmp_path, capsys):
        out = tmp_path / "c.png"
        code = main([
            "--in", str(sweep_dir / "summary.csv"),
            "--kind", "tau-sweep-benefit",
            "--out", str(out), "--json",
        ])
        assert code == 0
        meta = json.loads(capsys.readouterr().out)
        assert meta["out"] == str(out)
        assert out.exists()

    def test_cli_schema_error_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        code = main(["--in", str(bad), "--kind", "lambda1-hist", "--out", str(tmp_path / "x.png")])
        assert code == 1
        assert "missing column" in capsys.readouterr().err
