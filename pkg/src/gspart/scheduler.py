"""Online sensor scheduling: cyclic subset activation with subspace tracking.

Every window of M steps activates each of the M partition subsets once; the
partition is recomputed from the current dictionary at each window boundary,
and the dictionary itself can be relearned after every step from a sliding
buffer of reconstructions.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .dictlearn import DictLearnConfig, learn
from .errors import DegenerateSubspaceError, InvalidInputError
from .partition import Partition, PdcaConfig, hierarchical_partition
from .sampling import (Measurement, aopt_objective, ls_reconstruct,
                       minimax_reconstruct, mse_db)
from .signals import SignalTrace, SubspaceDictionary


@dataclass
class SignalBuffer:
    """Sliding window of reconstructed signals and their confidence vectors."""

    width: int
    columns: list[np.ndarray] = field(default_factory=list)
    confidences: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.width < 1:
            raise InvalidInputError("buffer width must be positive")
        if len(self.columns) != len(self.confidences):
            raise InvalidInputError("columns and confidences must stay aligned")
        if len(self.columns) > self.width:
            raise InvalidInputError("buffer overfull")

    def append(self, x: np.ndarray, w: np.ndarray) -> None:
        self.columns.append(np.asarray(x, dtype=float))
        self.confidences.append(np.asarray(w, dtype=float))
        if len(self.columns) > self.width:
            self.columns.pop(0)
            self.confidences.pop(0)

    def __len__(self) -> int:
        return len(self.columns)

    def as_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.columns:
            raise InvalidInputError("buffer is empty")
        return np.column_stack(self.columns), np.column_stack(self.confidences)


@dataclass
class SchedulerConfig:
    """Configuration of the online scheduling loop."""

    n_subsets: int
    buffer_width: int = 20
    sigma: float = 0.0
    conf_high: float = 1.0
    conf_low: float = 0.0
    dictionary_mode: str = "learned"
    buffer_source: str = "reconstruction"
    adapt_partition: bool = True
    # keep the incumbent partition when it scores better than the refreshed
    # one under the current dictionary (the binarized surrogate can regress
    # on strongly smoothed subspaces)
    safeguard_repartition: bool = True
    pdca: PdcaConfig = field(default_factory=PdcaConfig)
    learn: DictLearnConfig = field(default_factory=DictLearnConfig)
    seed: int = 0

    def __post_init__(self):
        if self.n_subsets < 2:
            raise InvalidInputError("need at least two subsets")
        if self.adapt_partition and 2 ** int(round(math.log2(self.n_subsets))) != self.n_subsets:
            raise InvalidInputError("adaptive partitioning needs a power-of-two subset count")
        if self.sigma < 0:
            raise InvalidInputError("sigma must be nonnegative")
        if not (0 <= self.conf_low <= 1 and 0 <= self.conf_high <= 1):
            raise InvalidInputError("confidence values must lie in [0, 1]")
        if self.dictionary_mode not in ("learned", "oracle"):
            raise InvalidInputError(f"unknown dictionary mode {self.dictionary_mode!r}")
        if self.buffer_source not in ("reconstruction", "zero_padded"):
            raise InvalidInputError(f"unknown buffer source {self.buffer_source!r}")


@dataclass
class MetricsRecord:
    """One scheduling step: 1-indexed time, subset used, error, bookkeeping."""

    t: int
    subset_id: int
    mse_db: float
    epoch: int
    cond: float


@dataclass
class SchedulerState:
    """Mutable state of a single scheduling run."""

    cfg: SchedulerConfig
    n_nodes: int
    dictionary: SubspaceDictionary
    partition: Partition | None = None
    buffer: SignalBuffer = None  # type: ignore[assignment]
    n_done: int = 0
    epoch: int = -1

    def __post_init__(self):
        if self.buffer is None:
            self.buffer = SignalBuffer(width=self.cfg.buffer_width)


def init_state(cfg: SchedulerConfig, n_nodes: int,
               initial_dictionary: SubspaceDictionary | None = None,
               partition: Partition | None = None) -> SchedulerState:
    """Fresh scheduler state; the dictionary defaults to the identity."""
    if initial_dictionary is None:
        initial_dictionary = SubspaceDictionary(np.eye(n_nodes))
    if initial_dictionary.n_nodes != n_nodes:
        raise InvalidInputError("initial dictionary size mismatch")
    if partition is not None and partition.n_subsets != cfg.n_subsets:
        raise InvalidInputError("partition subset count mismatch")
    return SchedulerState(cfg=cfg, n_nodes=n_nodes,
                          dictionary=initial_dictionary, partition=partition)


def _pdca_levels(n_subsets: int) -> int:
    return int(round(math.log2(n_subsets)))


def partition_score(partition: Partition, dictionary: SubspaceDictionary) -> float:
    """Exact scheduling objective: summed inverse traces of the sampled blocks."""
    return float(sum(aopt_objective(dictionary, s) for s in partition.subsets))


def step(state: SchedulerState, x_t: np.ndarray,
         oracle_dict: SubspaceDictionary | None = None,
         noise_seed=0) -> tuple[np.ndarray, MetricsRecord]:
    """Advance the scheduler by one time instance.

    Re-partitions at window boundaries when adaptive, samples the scheduled
    subset with fresh noise, reconstructs, updates the buffer, and (in learned
    mode) relearns the dictionary from the buffer.  Mutates ``state`` and
    returns the reconstruction together with its metrics row.
    """
    cfg = state.cfg
    x_t = np.asarray(x_t, dtype=float)
    if x_t.shape != (state.n_nodes,):
        raise InvalidInputError("signal length mismatch")
    if cfg.dictionary_mode == "oracle":
        if oracle_dict is None:
            raise InvalidInputError("oracle mode needs a dictionary per step")
        state.dictionary = oracle_dict

    n = state.n_done
    if cfg.adapt_partition and n % cfg.n_subsets == 0:
        fresh = hierarchical_partition(
            state.dictionary, _pdca_levels(cfg.n_subsets), cfg.pdca)
        if cfg.safeguard_repartition and state.partition is not None:
            if partition_score(fresh, state.dictionary) > \
                    partition_score(state.partition, state.dictionary):
                fresh = state.partition
        state.partition = fresh
        state.epoch += 1
    elif state.partition is None:
        raise InvalidInputError("fixed-partition run needs an initial partition")
    elif state.epoch < 0:
        state.epoch = 0

    subset = state.partition.subsets[n % cfg.n_subsets]
    rng = np.random.default_rng(np.random.SeedSequence(noise_seed))
    noisy = x_t + (rng.normal(scale=cfg.sigma, size=state.n_nodes)
                   if cfg.sigma > 0 else 0.0)
    meas = Measurement(values=noisy[subset.indices], sset=subset, sigma=cfg.sigma)

    cond = float(np.linalg.cond(state.dictionary.matrix))
    try:
        x_hat = minimax_reconstruct(state.dictionary, meas)
    except DegenerateSubspaceError:
        warnings.warn("subspace degenerate on the scheduled subset; "
                      "falling back to zero-padding", RuntimeWarning)
        x_hat = ls_reconstruct(meas)

    buffered = x_hat if cfg.buffer_source == "reconstruction" else ls_reconstruct(meas)
    conf = np.full(state.n_nodes, cfg.conf_low)
    conf[subset.indices] = cfg.conf_high
    state.buffer.append(buffered, conf)

    if cfg.dictionary_mode == "learned":
        X, W = state.buffer.as_matrices()
        state.dictionary = learn(X, W, state.dictionary, cfg.learn)

    state.n_done += 1
    record = MetricsRecord(t=state.n_done, subset_id=(n % cfg.n_subsets) + 1,
                           mse_db=mse_db(x_t, x_hat), epoch=state.epoch, cond=cond)
    return x_hat, record


def run(trace: SignalTrace, cfg: SchedulerConfig,
        initial_dictionary: SubspaceDictionary | None = None,
        state_out: list | None = None, step_callback=None) -> list[MetricsRecord]:
    """Full adaptive scheduling over a signal trace.

    In oracle mode the trace must carry ground-truth subspaces; in learned
    mode the dictionary starts from the identity (or ``initial_dictionary``)
    and is relearned after every step.  Deterministic for a fixed config.
    ``step_callback(state, record)`` runs after every step, e.g. for dumps.
    """
    if cfg.dictionary_mode == "oracle" and trace.subspaces is None:
        raise InvalidInputError("oracle mode needs ground-truth subspaces in the trace")
    state = init_state(cfg, trace.n_nodes, initial_dictionary=initial_dictionary)
    records = []
    for t in range(trace.n_steps):
        oracle = trace.subspaces[t] if cfg.dictionary_mode == "oracle" else None
        _, rec = step(state, trace.signals[:, t], oracle_dict=oracle,
                      noise_seed=[cfg.seed, t])
        records.append(rec)
        if step_callback is not None:
            step_callback(state, rec)
    if state_out is not None:
        state_out.append(state)
    return records


def run_fixed(trace: SignalTrace, partition: Partition,
              dictionaries=None, cfg: SchedulerConfig | None = None) -> list[MetricsRecord]:
    """Scheduling with a frozen partition.

    ``dictionaries`` selects the reconstruction prior: a single dictionary
    (static subspace), a per-step list (oracle subspace), or ``None`` to
    relearn from the buffer like the adaptive loop does.
    """
    if cfg is None:
        raise InvalidInputError("run_fixed needs a scheduler config")
    cfg = replace(cfg, adapt_partition=False)
    if isinstance(dictionaries, SubspaceDictionary):
        dicts = [dictionaries] * trace.n_steps
        cfg = replace(cfg, dictionary_mode="oracle")
    elif dictionaries is not None:
        dicts = list(dictionaries)
        if len(dicts) != trace.n_steps:
            raise InvalidInputError("need one dictionary per step")
        cfg = replace(cfg, dictionary_mode="oracle")
    else:
        dicts = None
        cfg = replace(cfg, dictionary_mode="learned")
    state = init_state(cfg, trace.n_nodes, partition=partition)
    records = []
    for t in range(trace.n_steps):
        oracle = dicts[t] if dicts is not None else None
        _, rec = step(state, trace.signals[:, t], oracle_dict=oracle,
                      noise_seed=[cfg.seed, t])
        records.append(rec)
    return records


def save_metrics_csv(records: list[MetricsRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "subset_id", "mse_db", "epoch", "cond"])
        for r in records:
            writer.writerow([r.t, r.subset_id, repr(float(r.mse_db)),
                             r.epoch, repr(float(r.cond))])


def load_metrics_csv(path) -> list[MetricsRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["t", "subset_id", "mse_db", "epoch", "cond"]
        if reader.fieldnames != expected:
            raise InvalidInputError(f"unexpected metrics header: {reader.fieldnames}")
        for row in reader:
            records.append(MetricsRecord(
                t=int(row["t"]), subset_id=int(row["subset_id"]),
                mse_db=float(row["mse_db"]), epoch=int(row["epoch"]),
                cond=float(row["cond"])))
    return records
