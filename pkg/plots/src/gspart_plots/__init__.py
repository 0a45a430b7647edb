"""Figure rendering for sensor-scheduling metrics CSVs."""

from .figures import (PlotSpec, SchemaError, plot_node_map, plot_timeseries,
                      png_dimensions)

__version__ = "0.1.0"
