#!/usr/bin/env python3
"""Online scheduling on a drifting subspace: adaptive vs frozen partitions.

Generates a time-varying piecewise-smooth trace, runs the adaptive scheduler
with ground-truth subspaces, and compares against the two frozen-partition
benchmarks.
"""

import numpy as np

import gspart as gp

rng = np.random.default_rng(2)
g = gp.build_knn_graph(rng.uniform(0, 1, (96, 2)), 4)
basis = gp.gft_basis(g)
clusters = gp.spectral_clustering(g, 3, seed=0)
trace = gp.make_tv_trace(basis, g, clusters, n_steps=24, seed=3, normalized=True)
print(f"trace: {trace.n_nodes} nodes x {trace.n_steps} steps, "
      f"subspaces drift with time")

cfg = gp.SchedulerConfig(n_subsets=8, sigma=np.sqrt(1e-3),
                         dictionary_mode="oracle", adapt_partition=True,
                         safeguard_repartition=False,
                         pdca=gp.PdcaConfig(seed=1, n_restarts=2), seed=7)
proposed = gp.run(trace, cfg)

part0 = gp.hierarchical_partition(trace.subspaces[0], 3, cfg.pdca)
method2 = gp.run_fixed(trace, part0, dictionaries=trace.subspaces, cfg=cfg)
method1 = gp.run_fixed(trace, part0, dictionaries=trace.subspaces[0], cfg=cfg)

for name, recs in [("adaptive partition + tracked subspace", proposed),
                   ("frozen partition + tracked subspace", method2),
                   ("frozen partition + frozen subspace", method1)]:
    avg = np.mean([r.mse_db for r in recs])
    print(f"{name:40s} avg MSE {avg:7.2f} dB")

print("\nper-step MSE (adaptive):",
      " ".join(f"{r.mse_db:.0f}" for r in proposed))
print("note: the first window is identical by construction; tracking the "
      "subspace is what matters most here, while re-partitioning adds "
      "little on this drift model (see the frozen-partition gap)")
