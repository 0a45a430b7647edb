"""Command-line harness for partitioning, scheduling, and experiments.

Exit codes: 0 on success, 2 on configuration or input errors, 3 on numerical
failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .baselines import sfrob_partition, srel_partition
from .dictlearn import DictLearnConfig, load_dictionary, save_dictionary
from .errors import InvalidInputError, NumericalFailureError
from .experiments import (ConfigError, load_config, run_ablation,
                          run_online_experiment, run_real_experiment,
                          run_static_experiment)
from .graphs import gft_basis, load_graph, save_graph
from .partition import (PdcaConfig, hierarchical_partition, pdca_bipartition,
                        Partition, save_objective_trace, save_partition)
from .realdata import ingest_real, synthetic_fallback_dataset
from .scheduler import SchedulerConfig, run, save_metrics_csv
from .signals import SubspaceDictionary, load_trace_csv, save_trace_csv

logger = logging.getLogger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gspart")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="partition a graph's nodes")
    p.add_argument("--graph", required=True, help="edge-list file (i j w lines)")
    p.add_argument("--coords", default=None, help="optional coords CSV")
    p.add_argument("--method", choices=["proposed", "srel", "sfrob"], default="proposed")
    p.add_argument("--n-subsets", type=int, default=2)
    p.add_argument("--dict-file", default=None, help="dense dictionary checkpoint")
    p.add_argument("--signal", choices=["hd", "bl"], default=None,
                   help="build a dictionary from the graph spectrum")
    p.add_argument("--alpha", type=float, default=10.0, help="diffusion rate for hd")
    p.add_argument("--bandwidth", type=int, default=32, help="cutoff for bl")
    p.add_argument("--lipschitz", type=float, default=1e3)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")

    s = sub.add_parser("schedule", help="run online scheduling over a trace CSV")
    s.add_argument("--trace", required=True, help="signal trace CSV (t,node,value)")
    s.add_argument("--n-subsets", type=int, default=8)
    s.add_argument("--sigma2", type=float, default=0.0, help="measurement noise variance")
    s.add_argument("--buffer-width", type=int, default=20)
    s.add_argument("--budget", type=float, default=3e2)
    s.add_argument("--max-outer", type=int, default=6)
    s.add_argument("--max-inner", type=int, default=40)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=".")
    s.add_argument("--dump-partitions", action="store_true",
                   help="write one partition CSV per epoch")
    s.add_argument("--dump-dictionaries", action="store_true",
                   help="write a dictionary checkpoint per step")

    e = sub.add_parser("experiment", help="run one of the bundled experiments")
    e.add_argument("what", choices=["static", "online", "real", "ablation"])
    e.add_argument("--config", required=True, help="JSON config path")
    e.add_argument("--seed", type=int, default=None, help="override config seed")
    e.add_argument("--out", default=None, help="override output directory")

    i = sub.add_parser("ingest", help="station CSVs -> graph + trace files")
    i.add_argument("--stations", default=None)
    i.add_argument("--measurements", default=None)
    i.add_argument("--synthetic-fallback", type=int, default=None, metavar="N_STATIONS",
                   help="generate synthetic station files with N stations first")
    i.add_argument("--regions", default=None,
                   help="comma-separated region names to keep")
    i.add_argument("--n-sensors", type=int, default=256)
    i.add_argument("--k", type=int, default=8)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--out", default=".")
    return parser


def _load_partition_dictionary(args, g) -> SubspaceDictionary | None:
    if args.dict_file is not None:
        return load_dictionary(args.dict_file)
    if args.signal == "hd":
        basis = gft_basis(g)
        filt = np.exp(-args.alpha * basis.eigenvalues)
        return SubspaceDictionary((basis.eigenvectors * filt) @ basis.eigenvectors.T)
    if args.signal == "bl":
        basis = gft_basis(g)
        if not 1 <= args.bandwidth <= g.n_nodes:
            raise InvalidInputError("bandwidth out of range")
        return SubspaceDictionary(basis.eigenvectors[:, :args.bandwidth])
    return None


def _cmd_partition(args) -> int:
    g = load_graph(args.graph, coords_path=args.coords)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    A = _load_partition_dictionary(args, g)
    if args.method == "srel":
        part = srel_partition(g, args.n_subsets, seed=args.seed)
    elif args.method == "sfrob":
        if A is None:
            raise InvalidInputError("sfrob needs --dict-file or --signal")
        part = sfrob_partition(A, args.n_subsets)
    else:
        if A is None:
            raise InvalidInputError("proposed needs --dict-file or --signal")
        cfg = PdcaConfig(lipschitz=args.lipschitz, beta=args.beta, seed=args.seed)
        if args.n_subsets == 2:
            s1, s2, trace = pdca_bipartition(A, cfg)
            part = Partition(subsets=[s1, s2])
            save_objective_trace(trace, out / "objective_trace.csv")
        else:
            import math

            levels = int(round(math.log2(args.n_subsets)))
            if 2 ** levels != args.n_subsets:
                raise InvalidInputError("proposed needs a power-of-two subset count")
            part = hierarchical_partition(A, levels, cfg)
    save_partition(part, out / "partition.csv")
    print(f"wrote {out / 'partition.csv'} ({part.n_subsets} subsets)")
    return 0


def _cmd_schedule(args) -> int:
    trace = load_trace_csv(args.trace)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = SchedulerConfig(
        n_subsets=args.n_subsets, buffer_width=args.buffer_width,
        sigma=float(np.sqrt(args.sigma2)), seed=args.seed,
        learn=DictLearnConfig(budget=args.budget, max_outer=args.max_outer,
                              max_inner=args.max_inner),
        pdca=PdcaConfig(seed=args.seed))
    seen_epochs: set[int] = set()

    def dump(state, rec):
        if args.dump_partitions and state.epoch not in seen_epochs:
            seen_epochs.add(state.epoch)
            save_partition(state.partition, out / f"partition_epoch{state.epoch}.csv")
        if args.dump_dictionaries:
            save_dictionary(state.dictionary, out / f"dictionary_t{rec.t}.txt")

    records = run(trace, cfg, step_callback=dump)
    save_metrics_csv(records, out / "metrics.csv")
    print(f"wrote {out / 'metrics.csv'} ({len(records)} steps)")
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        from dataclasses import replace

        cfg = replace(cfg, out_dir=args.out)
    if cfg.kind != args.what:
        raise ConfigError(f"config kind {cfg.kind!r} does not match {args.what!r}")
    runner = {"static": run_static_experiment, "online": run_online_experiment,
              "real": run_real_experiment, "ablation": run_ablation}[args.what]
    result = runner(cfg)
    for key in ("averages", "means"):
        if key in result:
            for name, value in sorted(result[key].items()):
                print(f"{name}: {value:.2f} dB" if np.isscalar(value) else f"{name}")
            break
    print(f"outputs in {cfg.out_dir}")
    return 0


def _cmd_ingest(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stations, measurements = args.stations, args.measurements
    if args.synthetic_fallback is not None:
        stations = stations or str(out / "fallback_stations.csv")
        measurements = measurements or str(out / "fallback_measurements.csv")
        synthetic_fallback_dataset(stations, measurements,
                                   n_stations=args.synthetic_fallback, seed=args.seed)
    if stations is None or measurements is None:
        raise InvalidInputError("ingest needs --stations/--measurements "
                                "or --synthetic-fallback")
    regions = args.regions.split(",") if args.regions else None
    g, trace = ingest_real(stations, measurements, regions=regions,
                           n_sensors=args.n_sensors, k=args.k, seed=args.seed)
    save_graph(g, out / "graph_edges.txt", coords_path=out / "coords.csv")
    save_trace_csv(trace, out / "trace.csv")
    print(f"wrote graph ({g.n_nodes} nodes) and trace ({trace.n_steps} steps) to {out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"partition": _cmd_partition, "schedule": _cmd_schedule,
                "experiment": _cmd_experiment, "ingest": _cmd_ingest}
    try:
        return handlers[args.command](args)
    except (ConfigError, InvalidInputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
