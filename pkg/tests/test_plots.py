import pytest

from bolduc.harness import ExperimentConfig, run_experiment
from bolduc.plots import load_trace, main, render_report


@pytest.fixture(scope="module")
def trace_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("plots") / "trace.csv"
    cfg = ExperimentConfig(
        function="ackley",
        dimension=2,
        budget=10,
        n_init=3,
        method="bolduc",
        strategy="topm",
        m=20,
        trials=2,
        seed=1,
        out=str(out),
    )
    run_experiment(cfg)
    return out


class TestLoadTrace:
    def test_columns_present(self, trace_csv):
        trace = load_trace(trace_csv)
        assert trace["t"].max() == 10
        assert set(trace["method"]) == {"bolduc"}
        assert trace["log_regret"].dtype.kind == "f"

    def test_empty_file_rejected(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("trial,t,method\n")
        with pytest.raises(ValueError):
            load_trace(empty)


class TestRenderReport:
    def test_writes_three_figures(self, trace_csv, tmp_path):
        written = render_report([trace_csv], out_dir=tmp_path)
        assert len(written) == 3
        for path in written:
            assert path.exists()
            assert path.stat().st_size > 1000  # real PNG, not a stub

    def test_default_out_dir_is_alongside_csv(self, trace_csv):
        written = render_report([trace_csv], prefix="side")
        for path in written:
            assert path.parent == trace_csv.parent
            assert path.name.startswith("side_")

    def test_overlays_multiple_traces(self, trace_csv, tmp_path):
        written = render_report([trace_csv, trace_csv], out_dir=tmp_path, prefix="two")
        assert all(p.exists() for p in written)

    def test_cli_main(self, trace_csv, tmp_path, capsys):
        code = main([str(trace_csv), "--out-dir", str(tmp_path), "--prefix", "cli"])
        assert code == 0
        out = capsys.readouterr().out
        assert out.count("wrote") == 3
