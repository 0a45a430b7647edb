"""Config-driven experiment harness: static, online, real-data, and ablation."""

from __future__ import annotations

import csv
import json
import logging
import math
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import sfrob_partition, srel_partition
from .dictlearn import DictLearnConfig
from .errors import InvalidInputError
from .graphs import Graph, build_knn_graph, gft_basis
from .partition import Partition, PdcaConfig, hierarchical_partition, save_partition
from .realdata import ingest_real, synthetic_fallback_dataset
from .sampling import Measurement, minimax_reconstruct, mse_db
from .scheduler import SchedulerConfig, run, run_fixed
from .signals import (SubspaceDictionary, heat_diffusion, make_tv_trace,
                      piecewise_smooth)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class ConfigError(InvalidInputError):
    """Configuration file or parameter problem."""


def subseed(*parts) -> int:
    """Deterministic child seed from mixed int/str parts."""
    entropy = [p if isinstance(p, (int, np.integer)) else zlib.crc32(str(p).encode())
               for p in parts]
    return int(np.random.SeedSequence([int(e) for e in entropy])
               .generate_state(1, dtype=np.uint32)[0])


def run_seeds(master: int, n_runs: int) -> list[int]:
    return [subseed(master, "run", r) for r in range(n_runs)]


@dataclass
class GraphSpec:
    n_nodes: int = 256
    k_min: int = 2
    k_max: int = 8

    def __post_init__(self):
        if self.n_nodes < 2 or not 1 <= self.k_min <= self.k_max < self.n_nodes:
            raise ConfigError("invalid graph spec")


@dataclass
class DataSpec:
    """Where the station data comes from for real/ablation experiments."""

    stations: str = ""
    measurements: str = ""
    synthetic_fallback: bool = True
    fallback_stations: int = 320
    regions: list[str] | None = None
    n_sensors: int = 256
    k: int = 8
    year_start: int = 2016
    year_end: int = 2021

    def __post_init__(self):
        if not self.synthetic_fallback and (not self.stations or not self.measurements):
            raise ConfigError("real data requires station and measurement paths")
        if self.n_sensors < 4 or self.k < 1:
            raise ConfigError("invalid data spec")


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment."""

    kind: str
    seed: int = 0
    runs: int = 1
    out_dir: str = "."
    graph: GraphSpec = field(default_factory=GraphSpec)
    data: DataSpec = field(default_factory=DataSpec)
    n_subsets: int = 4
    noise_sigma2: float = 1e-3
    heat_alpha: float = 10.0
    pws_smooth_cols: int = 32
    bandwidths: list[int] = field(default_factory=lambda: [10, 32, 100, 256])
    n_steps: int = 64
    drift_p: float = 0.5
    buffer_width: int = 20
    sfrob_bandwidth: int = 32
    # ranking merge used for the SRel baseline (round_robin interleaves the
    # centrality-ranked clusters before the cyclic deal)
    srel_merge: str = "round_robin"
    # Diffusion rates act on the spectrum rescaled by the largest eigenvalue,
    # so the surviving bandwidth does not depend on the graph's weight scale.
    normalized_filters: bool = True
    pdca: PdcaConfig = field(default_factory=PdcaConfig)
    learn: DictLearnConfig = field(default_factory=lambda: DictLearnConfig(
        budget=3e2, max_outer=6, max_inner=40))

    def __post_init__(self):
        if self.kind not in ("static", "online", "real", "ablation"):
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.noise_sigma2 < 0:
            raise ConfigError("noise variance must be nonnegative")
        if self.n_subsets < 2:
            raise ConfigError("n_subsets must be >= 2")
        k = math.log2(self.n_subsets)
        if self.kind != "static" and 2 ** int(round(k)) != self.n_subsets:
            raise ConfigError("online experiments need a power-of-two subset count")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.noise_sigma2)


_SECTION_TYPES = {
    "graph": GraphSpec,
    "data": DataSpec,
    "pdca": PdcaConfig,
    "learn": DictLearnConfig,
}


def _build_section(cls, payload: dict, name: str):
    if not isinstance(payload, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    allowed = set(cls.__dataclass_fields__)
    unknown = set(payload) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    try:
        return cls(**payload)
    except InvalidInputError as exc:
        raise ConfigError(f"bad {name!r} section: {exc}") from exc


def config_from_dict(payload: dict) -> ExperimentConfig:
    """Strictly validated config: unknown keys are rejected, version is pinned."""
    if not isinstance(payload, dict):
        raise ConfigError("config must be a mapping")
    payload = dict(payload)
    version = payload.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    allowed = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(payload) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in payload.items():
        if key in _SECTION_TYPES:
            kwargs[key] = _build_section(_SECTION_TYPES[key], value, key)
        else:
            kwargs[key] = value
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    except InvalidInputError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(payload)


def _write_csv(path, header: list[str], rows: list[list]) -> None:
    for row in rows:
        if len(row) != len(header):
            raise InvalidInputError(f"row length {len(row)} != header {len(header)}")
        for v in row:
            if v is None:
                raise InvalidInputError("CSV rows must not contain None")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return repr(float(x))


def make_sensor_graph(spec: GraphSpec, seed: int) -> Graph:
    """Random sensor graph: uniform positions, per-node k in [k_min, k_max]."""
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, 1.0, size=(spec.n_nodes, 2))
    ks = rng.integers(spec.k_min, spec.k_max + 1, size=spec.n_nodes)
    return build_knn_graph(coords, ks)


# ---------------------------------------------------------------------------
# Static experiment
# ---------------------------------------------------------------------------

def run_static_experiment(cfg: ExperimentConfig) -> dict:
    """Partition-quality comparison on heat-diffusion and piecewise-smooth signals.

    Every method reconstructs with the true subspace (``ss`` rows); the
    ranking baselines additionally reconstruct with bandlimited bases of the
    configured cutoffs (``bl`` rows).  Returns the per-run rows and the dB
    averages, and writes both tables plus node-map artifacts to ``out_dir``.
    """
    if cfg.kind != "static":
        raise ConfigError("config kind must be 'static'")
    levels = int(round(math.log2(cfg.n_subsets)))
    if 2 ** levels != cfg.n_subsets:
        raise ConfigError("static experiment needs a power-of-two subset count")
    from .graphs import spectral_clustering  # local import to keep module load light

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    node_map_dumped = False
    for r, rseed in enumerate(run_seeds(cfg.seed, cfg.runs)):
        g = make_sensor_graph(cfg.graph, subseed(rseed, "graph"))
        basis = gft_basis(g)
        clusters = spectral_clustering(g, 3, seed=subseed(rseed, "clusters"))
        signals = {
            "hd": heat_diffusion(basis, cfg.heat_alpha, seed=subseed(rseed, "hd"),
                                 normalized=cfg.normalized_filters),
            "pws": piecewise_smooth(basis, clusters, seed=subseed(rseed, "pws"),
                                    n_smooth_cols=cfg.pws_smooth_cols),
        }
        U = basis.eigenvectors
        bl_bases = {b: SubspaceDictionary(U[:, :b]) for b in cfg.bandwidths}

        pd_cfg = replace(cfg.pdca, seed=subseed(rseed, "pdca"))
        partitions: dict[tuple[str, str], Partition] = {}
        for sig, (A_true, _) in signals.items():
            partitions[("proposed", sig)] = hierarchical_partition(A_true, levels, pd_cfg)
            partitions[("sfrob", sig)] = sfrob_partition(A_true, cfg.n_subsets)
        srel = srel_partition(g, cfg.n_subsets, seed=subseed(rseed, "srel"),
                              merge=cfg.srel_merge)
        for b in cfg.bandwidths:
            partitions[("sfrob", f"bl{b}")] = sfrob_partition(bl_bases[b], cfg.n_subsets)
        srel_rankings = {sig: srel for sig in signals}

        for sig, (A_true, x) in signals.items():
            for case in ("clean", "noisy"):
                sigma = 0.0 if case == "clean" else cfg.sigma
                for slot in range(cfg.n_subsets):
                    rng = np.random.default_rng(np.random.SeedSequence(
                        [rseed, zlib.crc32(f"{sig}-{case}".encode()), slot]))
                    x_obs = x + (rng.normal(scale=sigma, size=x.size) if sigma > 0 else 0.0)

                    def record(method, basis_name, partition, A_recon):
                        subset = partition.subsets[slot]
                        meas = Measurement(values=x_obs[subset.indices],
                                           sset=subset, sigma=sigma)
                        x_hat = minimax_reconstruct(A_recon, meas)
                        rank = -1
                        if basis_name == "ss":
                            rank = int(np.linalg.matrix_rank(
                                A_recon.matrix[subset.indices, :]))
                        rows.append([r, sig, case, method, basis_name, slot + 1,
                                     mse_db(x, x_hat), rank])
                        return x_hat

                    record("proposed", "ss", partitions[("proposed", sig)], A_true)
                    record("srel", "ss", srel_rankings[sig], A_true)
                    record("sfrob", "ss", partitions[("sfrob", sig)], A_true)
                    for b in cfg.bandwidths:
                        record("srel", f"bl{b}", srel_rankings[sig], bl_bases[b])
                        record("sfrob", f"bl{b}",
                               partitions[("sfrob", f"bl{b}")], bl_bases[b])

                    if (not node_map_dumped and r == 0 and sig == "pws"
                            and case == "noisy" and slot == 0):
                        part = partitions[("proposed", sig)]
                        subset = part.subsets[slot]
                        meas = Measurement(values=x_obs[subset.indices],
                                           sset=subset, sigma=sigma)
                        x_hat = minimax_reconstruct(A_true, meas)
                        _dump_node_map_artifacts(out, g, part, np.abs(x - x_hat))
                        node_map_dumped = True

    header = ["run", "signal", "case", "method", "basis", "subset", "mse_db", "ss_rank"]
    _write_csv(out / "static_runs.csv", header,
               [[a, b, c, d, e, f, _fmt(m), k] for a, b, c, d, e, f, m, k in rows])

    summary: dict[tuple[str, str, str, str], list[float]] = {}
    for r_, sig, case, method, basis_name, _slot, m, _rank in rows:
        summary.setdefault((sig, case, method, basis_name), []).append(m)
    summary_rows = [[sig, case, method, basis_name, _fmt(float(np.mean(v)))]
                    for (sig, case, method, basis_name), v in sorted(summary.items())]
    _write_csv(out / "static_summary.csv",
               ["signal", "case", "method", "basis", "mean_mse_db"], summary_rows)
    means = {key: float(np.mean(v)) for key, v in summary.items()}
    return {"rows": rows, "means": means}


def _dump_node_map_artifacts(out: Path, g: Graph, part: Partition,
                             abs_err: np.ndarray) -> None:
    if g.coords is not None:
        _write_csv(out / "coords.csv", ["node", "x", "y"],
                   [[i, _fmt(x), _fmt(y)] for i, (x, y) in enumerate(g.coords)])
    _write_csv(out / "node_errors.csv", ["node", "abs_error"],
               [[i, _fmt(e)] for i, e in enumerate(abs_err)])
    save_partition(part, out / "partition.csv")


# ---------------------------------------------------------------------------
# Online synthetic experiment
# ---------------------------------------------------------------------------

def run_online_experiment(cfg: ExperimentConfig) -> dict:
    """Adaptive versus frozen partitioning on drifting synthetic subspaces.

    The adaptive scheduler re-partitions every M steps with the current
    ground-truth subspace; the two benchmarks freeze its first partition and
    reconstruct with either the initial subspace or the current one.
    """
    if cfg.kind != "online":
        raise ConfigError("config kind must be 'online'")
    from .graphs import spectral_clustering

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    levels = int(round(math.log2(cfg.n_subsets)))
    per_run_rows = []
    per_t: dict[tuple[int, str], list[float]] = {}
    for r, rseed in enumerate(run_seeds(cfg.seed, cfg.runs)):
        g = make_sensor_graph(cfg.graph, subseed(rseed, "graph"))
        basis = gft_basis(g)
        clusters0 = spectral_clustering(g, 3, seed=subseed(rseed, "clusters"))
        trace = make_tv_trace(basis, g, clusters0, cfg.n_steps,
                              drift_p=cfg.drift_p, seed=subseed(rseed, "signal"),
                              normalized=cfg.normalized_filters)
        pd_cfg = replace(cfg.pdca, seed=subseed(rseed, "pdca"))
        sched = SchedulerConfig(n_subsets=cfg.n_subsets, sigma=cfg.sigma,
                                dictionary_mode="oracle", adapt_partition=True,
                                safeguard_repartition=False,
                                pdca=pd_cfg, seed=subseed(rseed, "noise"))
        proposed = run(trace, sched)
        part0 = hierarchical_partition(trace.subspaces[0], levels, pd_cfg)
        method2 = run_fixed(trace, part0, dictionaries=trace.subspaces, cfg=sched)
        method1 = run_fixed(trace, part0, dictionaries=trace.subspaces[0], cfg=sched)
        for name, recs in (("proposed", proposed), ("method2", method2),
                           ("method1", method1)):
            for rec in recs:
                per_run_rows.append([r, rec.t, name, rec.mse_db, rec.subset_id,
                                     rec.epoch])
                per_t.setdefault((rec.t, name), []).append(rec.mse_db)

    _write_csv(out / "online_per_run.csv",
               ["run", "t", "method", "mse_db", "subset_id", "epoch"],
               [[r_, t, name, _fmt(m), sid, ep]
                for r_, t, name, m, sid, ep in per_run_rows])
    metric_rows = [[t, name, _fmt(float(np.mean(v)))]
                   for (t, name), v in sorted(per_t.items())]
    _write_csv(out / "online_metrics.csv", ["t", "method", "mse_db"], metric_rows)

    averages = {}
    for name in ("proposed", "method2", "method1"):
        vals = [m for (_t, nm), v in per_t.items() for m in v if nm == name]
        averages[name] = float(np.mean(vals))
    _write_csv(out / "online_summary.csv", ["method", "avg_mse_db"],
               [[name, _fmt(avg)] for name, avg in sorted(averages.items())])
    return {"averages": averages, "per_t": per_t}


# ---------------------------------------------------------------------------
# Real-data and ablation experiments
# ---------------------------------------------------------------------------

def _real_graph_trace(cfg: ExperimentConfig, out: Path):
    data = cfg.data
    if data.synthetic_fallback:
        stations = out / "fallback_stations.csv"
        measurements = out / "fallback_measurements.csv"
        synthetic_fallback_dataset(stations, measurements,
                                   n_stations=data.fallback_stations,
                                   seed=subseed(cfg.seed, "fallback"),
                                   years=(data.year_start, data.year_end))
        logger.info("using synthetic fallback station data")
    else:
        stations, measurements = data.stations, data.measurements
    return ingest_real(stations, measurements, regions=data.regions,
                       n_sensors=data.n_sensors, k=data.k,
                       seed=subseed(cfg.seed, "ingest"),
                       years=(data.year_start, data.year_end))


def _scheduler_cfg(cfg: ExperimentConfig, seed: int, **overrides) -> SchedulerConfig:
    base = dict(n_subsets=cfg.n_subsets, buffer_width=cfg.buffer_width,
                sigma=cfg.sigma, dictionary_mode="learned",
                adapt_partition=True, pdca=replace(cfg.pdca, seed=subseed(seed, "pdca")),
                learn=cfg.learn, seed=seed)
    base.update(overrides)
    return SchedulerConfig(**base)


def run_real_experiment(cfg: ExperimentConfig) -> dict:
    """Online scheduling with learned subspaces on station data.

    All methods share the sampling/reconstruction/learning loop; only the
    partitioning differs (adaptive for the proposed method, frozen rankings
    for the baselines), isolating subset quality.
    """
    if cfg.kind != "real":
        raise ConfigError("config kind must be 'real'")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g, trace = _real_graph_trace(cfg, out)
    basis = gft_basis(g)
    bl = SubspaceDictionary(basis.eigenvectors[:, :cfg.sfrob_bandwidth])

    per_t: dict[tuple[int, str], list[float]] = {}
    rows = []
    for r, rseed in enumerate(run_seeds(cfg.seed, cfg.runs)):
        sched = _scheduler_cfg(cfg, subseed(rseed, "noise"))
        proposed = run(trace, sched)
        srel = run_fixed(trace, srel_partition(g, cfg.n_subsets,
                                               seed=subseed(rseed, "srel"),
                                               merge=cfg.srel_merge),
                         dictionaries=None, cfg=sched)
        sfrob = run_fixed(trace, sfrob_partition(bl, cfg.n_subsets),
                          dictionaries=None, cfg=sched)
        for name, recs in (("proposed", proposed), ("srel", srel), ("sfrob", sfrob)):
            for rec in recs:
                rows.append([r, rec.t, name, rec.mse_db])
                per_t.setdefault((rec.t, name), []).append(rec.mse_db)

    _write_csv(out / "real_per_run.csv", ["run", "t", "method", "mse_db"],
               [[r_, t, nm, _fmt(m)] for r_, t, nm, m in rows])
    _write_csv(out / "real_metrics.csv", ["t", "method", "mse_db"],
               [[t, nm, _fmt(float(np.mean(v)))] for (t, nm), v in sorted(per_t.items())])
    averages = {nm: float(np.mean([m for (_t, n2), v in per_t.items()
                                   for m in v if n2 == nm]))
                for nm in ("proposed", "srel", "sfrob")}
    _write_csv(out / "real_summary.csv", ["method", "avg_mse_db"],
               [[nm, _fmt(avg)] for nm, avg in sorted(averages.items())])
    return {"averages": averages, "graph": g, "trace": trace}


ABLATION_CONFIGS = ("config1", "config2", "config3")


def run_ablation(cfg: ExperimentConfig) -> dict:
    """Confidence-weighting ablation of the subspace learner.

    config1 trusts only sampled nodes, config2 trusts the whole reconstruction
    uniformly, config3 learns from zero-padded raw measurements (still
    confidence-weighted) while reporting errors of the subspace
    reconstruction.
    """
    if cfg.kind != "ablation":
        raise ConfigError("config kind must be 'ablation'")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _g, trace = _real_graph_trace(cfg, out)

    variants = {
        "config1": dict(),
        "config2": dict(conf_low=1.0),
        "config3": dict(buffer_source="zero_padded"),
    }
    per_t: dict[tuple[int, str], list[float]] = {}
    rows = []
    for r, rseed in enumerate(run_seeds(cfg.seed, cfg.runs)):
        for name in ABLATION_CONFIGS:
            sched = _scheduler_cfg(cfg, subseed(rseed, "noise"), **variants[name])
            recs = run(trace, sched)
            for rec in recs:
                rows.append([r, rec.t, name, rec.mse_db])
                per_t.setdefault((rec.t, name), []).append(rec.mse_db)

    _write_csv(out / "ablation_metrics.csv", ["t", "config", "mse_db"],
               [[t, nm, _fmt(float(np.mean(v)))] for (t, nm), v in sorted(per_t.items())])
    averages = {nm: float(np.mean([m for (_t, n2), v in per_t.items()
                                   for m in v if n2 == nm]))
                for nm in ABLATION_CONFIGS}
    _write_csv(out / "ablation_results.csv", ["config", "mse_db"],
               [[nm, _fmt(averages[nm])] for nm in ABLATION_CONFIGS])
    return {"averages": averages}
