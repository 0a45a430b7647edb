"""Graph node partitioning, sensor scheduling, and subspace tracking."""

from .baselines import sfrob_greedy_ranking, sfrob_partition, srel_partition
from .dictlearn import (DictLearnConfig, coefficient_gradient, learn,
                        load_dictionary, prox_l1_budget, prox_l1_global,
                        save_dictionary,
                        update_coefficients, update_dictionary,
                        weighted_objective)
from .errors import DegenerateSubspaceError, InvalidInputError, NumericalFailureError
from .graphs import (GftBasis, Graph, build_knn_graph, eigenvector_centrality,
                     gft_basis, knn_graph_from_distances, laplacian, load_graph,
                     modularity, modularity_clustering, n_components,
                     save_graph, spectral_clustering)
from .partition import (Partition, PdcaConfig, binary_penalty_grad,
                        brute_force_bipartition, hierarchical_partition,
                        load_partition, neumann_trace_check,
                        partition_objective, partition_objective_grad,
                        pdca_bipartition, project_box_hyperplane,
                        project_box_hyperplane_admm, save_objective_trace,
                        save_partition)
from .realdata import (RealDataset, haversine_km, ingest_real,
                       load_real_dataset, synthetic_fallback_dataset,
                       write_station_csvs)
from .sampling import (Measurement, SamplingSet, aopt_objective, ls_reconstruct,
                       minimax_reconstruct, mse_db, sample)
from .scheduler import (MetricsRecord, SchedulerConfig, SchedulerState,
                        SignalBuffer, init_state, load_metrics_csv, run,
                        run_fixed, save_metrics_csv, step)
from .signals import (SignalTrace, SubspaceDictionary, add_noise,
                      boundary_nodes, drift_clusters, heat_diffusion,
                      indicator_matrix, load_trace_csv, make_tv_trace,
                      piecewise_smooth, save_trace_csv, time_varying_pws,
                      tv_smoothing_rate, two_hop_boundary)

__version__ = "0.1.0"
