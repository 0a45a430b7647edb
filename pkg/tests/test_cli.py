"""Command-line interface: subcommands, outputs, exit codes."""

import json

import numpy as np
import pytest

from gspart import build_knn_graph, save_graph, save_trace_csv, SignalTrace
from gspart.cli import main
from gspart.errors import NumericalFailureError


@pytest.fixture()
def graph_files(tmp_path):
    rng = np.random.default_rng(0)
    g = build_knn_graph(rng.uniform(0, 1, (24, 2)), 3)
    edges = tmp_path / "edges.txt"
    coords = tmp_path / "coords.csv"
    save_graph(g, edges, coords_path=coords)
    return g, edges, coords


class TestPartitionCommand:
    def test_proposed_bipartition_writes_trace(self, tmp_path, graph_files):
        _, edges, coords = graph_files
        out = tmp_path / "out"
        code = main(["partition", "--graph", str(edges), "--coords", str(coords),
                     "--signal", "hd", "--alpha", "2.0", "--n-subsets", "2",
                     "--out", str(out)])
        assert code == 0
        assert (out / "partition.csv").exists()
        assert (out / "objective_trace.csv").exists()

    def test_srel(self, tmp_path, graph_files):
        _, edges, _ = graph_files
        out = tmp_path / "out"
        code = main(["partition", "--graph", str(edges), "--method", "srel",
                     "--n-subsets", "4", "--out", str(out)])
        assert code == 0

    def test_sfrob_needs_dictionary(self, tmp_path, graph_files):
        _, edges, _ = graph_files
        code = main(["partition", "--graph", str(edges), "--method", "sfrob",
                     "--out", str(tmp_path)])
        assert code == 2

    def test_missing_graph_file(self, tmp_path):
        code = main(["partition", "--graph", str(tmp_path / "nope.txt"),
                     "--signal", "bl", "--out", str(tmp_path)])
        assert code == 2


class TestScheduleCommand:
    def test_schedule_with_dumps(self, tmp_path):
        rng = np.random.default_rng(1)
        n, T = 16, 6
        X = rng.normal(size=(n, 1)) @ np.ones((1, T)) + 0.1 * rng.normal(size=(n, T))
        trace_path = tmp_path / "trace.csv"
        save_trace_csv(SignalTrace(signals=X), trace_path)
        out = tmp_path / "out"
        code = main(["schedule", "--trace", str(trace_path), "--n-subsets", "2",
                     "--buffer-width", "4", "--budget", "50", "--max-outer", "2",
                     "--max-inner", "10", "--out", str(out),
                     "--dump-partitions", "--dump-dictionaries"])
        assert code == 0
        assert (out / "metrics.csv").exists()
        assert (out / "partition_epoch0.csv").exists()
        assert (out / "dictionary_t1.txt").exists()


class TestExperimentCommand:
    def test_static_tiny(self, tmp_path):
        cfg = {"schema_version": 1, "kind": "static", "seed": 2, "runs": 1,
               "graph": {"n_nodes": 32, "k_min": 2, "k_max": 3},
               "n_subsets": 2, "bandwidths": [4], "pws_smooth_cols": 6,
               "pdca": {"max_iters": 200}}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        code = main(["experiment", "static", "--config", str(path),
                     "--out", str(tmp_path / "res")])
        assert code == 0
        assert (tmp_path / "res" / "static_summary.csv").exists()

    def test_bad_config_exit_2(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"schema_version": 1, "kind": "static",
                                    "wrong": True}))
        assert main(["experiment", "static", "--config", str(path)]) == 2

    def test_kind_mismatch_exit_2(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"schema_version": 1, "kind": "static"}))
        assert main(["experiment", "online", "--config", str(path)]) == 2

    def test_numerical_failure_exit_3(self, tmp_path, monkeypatch):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"schema_version": 1, "kind": "static"}))

        def boom(cfg):
            raise NumericalFailureError("synthetic failure")

        monkeypatch.setattr("gspart.cli.run_static_experiment", boom)
        assert main(["experiment", "static", "--config", str(path)]) == 3


class TestIngestCommand:
    def test_synthetic_fallback_pipeline(self, tmp_path):
        out = tmp_path / "data"
        code = main(["ingest", "--synthetic-fallback", "80", "--n-sensors", "48",
                     "--k", "6", "--seed", "4", "--out", str(out)])
        assert code == 0
        assert (out / "graph_edges.txt").exists()
        assert (out / "coords.csv").exists()
        assert (out / "trace.csv").exists()

    def test_missing_inputs_exit_2(self, tmp_path):
        assert main(["ingest", "--out", str(tmp_path)]) == 2
