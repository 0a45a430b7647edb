"""Station-data ingestion: geodesic k-NN graphs and monthly signal traces.

The expected inputs are a station table (``id,lat,lon``) and a measurement
table (``station_id,year,month,value``).  A schema-compatible synthetic
generator is included so the pipeline never depends on an external download.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .graphs import Graph, knn_graph_from_distances
from .signals import SignalTrace

logger = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0088

# Rough bounding boxes (lat_min, lat_max, lon_min, lon_max) for the supported
# region filters.
REGIONS = {
    "mediterranean": (30.0, 46.0, -6.0, 37.0),
    "north_sea": (51.0, 62.0, -4.0, 9.0),
    "black_sea": (40.0, 48.0, 27.0, 42.0),
    "nw_atlantic": (34.0, 52.0, -80.0, -52.0),
}


@dataclass
class RealDataset:
    """Station table plus the monthly measurement matrix and missing mask."""

    station_ids: list[str]
    lat: np.ndarray
    lon: np.ndarray
    values: np.ndarray
    missing: np.ndarray

    def __post_init__(self):
        n = len(self.station_ids)
        if self.lat.shape != (n,) or self.lon.shape != (n,):
            raise InvalidInputError("station coordinate shapes inconsistent")
        if self.values.shape[0] != n or self.missing.shape != self.values.shape:
            raise InvalidInputError("measurement matrix shape inconsistent")
        if np.any(np.isnan(self.values)):
            raise InvalidInputError("ingested values must not contain NaN")


def haversine_km(lat1, lon1, lat2, lon2) -> np.ndarray:
    """Great-circle distance in kilometres; accepts scalars or arrays."""
    lat1, lon1, lat2, lon2 = (np.radians(np.asarray(a, dtype=float))
                              for a in (lat1, lon1, lat2, lon2))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = np.sin(dlat / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def haversine_matrix(lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    return haversine_km(lat[:, None], lon[:, None], lat[None, :], lon[None, :])


def _read_stations(path) -> tuple[list[str], np.ndarray, np.ndarray]:
    ids, lats, lons = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["id", "lat", "lon"]:
            raise InvalidInputError(f"unexpected station header: {reader.fieldnames}")
        for row in reader:
            ids.append(row["id"])
            lats.append(float(row["lat"]))
            lons.append(float(row["lon"]))
    if len(set(ids)) != len(ids):
        raise InvalidInputError("duplicate station ids")
    return ids, np.array(lats), np.array(lons)


def load_real_dataset(stations_path, measurements_path, regions=None,
                      n_sensors: int = 256, seed: int = 0,
                      years: tuple[int, int] = (2016, 2021)) -> RealDataset:
    """Read, filter, subsample, and gap-fill the station data.

    Stations are restricted to the requested region boxes, those with no
    usable observations are dropped, ``n_sensors`` of the remainder are picked
    at random, and gaps are filled by per-station temporal linear
    interpolation (logged).
    """
    ids, lat, lon = _read_stations(stations_path)
    if regions is not None:
        unknown = set(regions) - set(REGIONS)
        if unknown:
            raise InvalidInputError(f"unknown regions: {sorted(unknown)}")
        keep = np.zeros(len(ids), dtype=bool)
        for name in regions:
            lat_lo, lat_hi, lon_lo, lon_hi = REGIONS[name]
            keep |= ((lat >= lat_lo) & (lat <= lat_hi)
                     & (lon >= lon_lo) & (lon <= lon_hi))
        ids = [s for s, k in zip(ids, keep) if k]
        lat, lon = lat[keep], lon[keep]

    y0, y1 = years
    n_steps = (y1 - y0 + 1) * 12
    index = {s: i for i, s in enumerate(ids)}
    values = np.full((len(ids), n_steps), np.nan)
    with open(measurements_path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["station_id", "year", "month", "value"]
        if reader.fieldnames != expected:
            raise InvalidInputError(f"unexpected measurement header: {reader.fieldnames}")
        for row in reader:
            sid = row["station_id"]
            if sid not in index:
                continue
            year, month = int(row["year"]), int(row["month"])
            if not (y0 <= year <= y1 and 1 <= month <= 12):
                continue
            raw = row["value"].strip()
            if raw:
                values[index[sid], (year - y0) * 12 + month - 1] = float(raw)

    usable = ~np.all(np.isnan(values), axis=1)
    if np.count_nonzero(~usable):
        logger.info("dropping %d stations without observations",
                    int(np.count_nonzero(~usable)))
    ids = [s for s, u in zip(ids, usable) if u]
    lat, lon, values = lat[usable], lon[usable], values[usable]
    if len(ids) < n_sensors:
        raise InvalidInputError(
            f"only {len(ids)} usable stations after filtering, need {n_sensors}")

    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(len(ids), size=n_sensors, replace=False))
    ids = [ids[i] for i in pick]
    lat, lon, values = lat[pick], lon[pick], values[pick]

    missing = np.isnan(values)
    n_filled = int(missing.sum())
    if n_filled:
        steps = np.arange(n_steps)
        for i in range(values.shape[0]):
            bad = missing[i]
            if bad.any():
                values[i, bad] = np.interp(steps[bad], steps[~bad], values[i, ~bad])
        logger.info("interpolated %d missing cells (%.2f%%)", n_filled,
                    100.0 * n_filled / values.size)
    return RealDataset(station_ids=ids, lat=lat, lon=lon,
                       values=values, missing=missing)


def dataset_to_graph_trace(ds: RealDataset, k: int = 8,
                           standardize: bool = False) -> tuple[Graph, SignalTrace]:
    """Geodesic k-NN graph plus the monthly trace for a loaded dataset.

    Distances are rescaled by the median k-NN distance before the Gaussian
    weight kernel, so the weights stay informative at geographic scale.
    Measurements are kept in their native units by default;
    ``standardize=True`` applies a global z-score instead.
    """
    dist = haversine_matrix(ds.lat, ds.lon)
    n = dist.shape[0]
    if not 1 <= k < n:
        raise InvalidInputError("k out of range")
    knn_d = np.sort(dist, axis=1)[:, 1:k + 1]
    scale = float(np.median(knn_d))
    if scale <= 0:
        scale = 1.0
    coords = np.column_stack([ds.lon, ds.lat])
    g = knn_graph_from_distances(dist, k, coords=coords, weight_scale=scale)
    values = ds.values.copy()
    if standardize:
        spread = values.std()
        if spread <= 0:
            raise InvalidInputError("cannot standardize a constant dataset")
        values = (values - values.mean()) / spread
    trace = SignalTrace(signals=values)
    return g, trace


def ingest_real(stations_path, measurements_path, regions=None,
                n_sensors: int = 256, k: int = 8, seed: int = 0,
                years: tuple[int, int] = (2016, 2021),
                standardize: bool = False) -> tuple[Graph, SignalTrace]:
    """Station files to (graph, monthly trace) in one call."""
    ds = load_real_dataset(stations_path, measurements_path, regions=regions,
                           n_sensors=n_sensors, seed=seed, years=years)
    return dataset_to_graph_trace(ds, k=k, standardize=standardize)


def write_station_csvs(station_ids, lat, lon, values, stations_path,
                       measurements_path, years: tuple[int, int] = (2016, 2021),
                       missing=None) -> None:
    """Write arrays in the station/measurement CSV schema this package reads.

    Converter entry point for external downloads: parse the source into
    ``station_ids``, coordinates, and an N x T monthly value matrix (with an
    optional boolean missing mask), then call this to produce files that
    ``ingest_real`` accepts.
    """
    station_ids = list(station_ids)
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    values = np.asarray(values, dtype=float)
    n = len(station_ids)
    y0, y1 = years
    n_steps = (y1 - y0 + 1) * 12
    if lat.shape != (n,) or lon.shape != (n,) or values.shape != (n, n_steps):
        raise InvalidInputError("station arrays disagree with the year range")
    if missing is None:
        missing = np.zeros((n, n_steps), dtype=bool)
    missing = np.asarray(missing, dtype=bool)
    with open(stations_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "lat", "lon"])
        for i in range(n):
            writer.writerow([station_ids[i], repr(float(lat[i])), repr(float(lon[i]))])
    with open(measurements_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station_id", "year", "month", "value"])
        for i in range(n):
            for t in range(n_steps):
                val = "" if missing[i, t] else repr(float(values[i, t]))
                writer.writerow([station_ids[i], y0 + t // 12, t % 12 + 1, val])


def synthetic_fallback_dataset(stations_path, measurements_path,
                               n_stations: int = 320, seed: int = 0,
                               missing_rate: float = 0.02,
                               years: tuple[int, int] = (2016, 2021)) -> None:
    """Write schema-compatible synthetic sea-temperature station files.

    Monthly values combine a latitude gradient, a seasonal cycle, a few
    smoothly drifting spatial modes, and light observation noise; a small
    fraction of entries is blanked out except for station 0, which stays
    complete.
    """
    if n_stations < 8:
        raise InvalidInputError("need at least 8 stations")
    rng = np.random.default_rng(seed)
    names = list(REGIONS)
    lats, lons = [], []
    for i in range(n_stations):
        lat_lo, lat_hi, lon_lo, lon_hi = REGIONS[names[i % len(names)]]
        lats.append(rng.uniform(lat_lo, lat_hi))
        lons.append(rng.uniform(lon_lo, lon_hi))
    lat = np.array(lats)
    lon = np.array(lons)

    y0, y1 = years
    n_steps = (y1 - y0 + 1) * 12
    month = np.arange(n_steps) % 12
    # spatial gradient and seasonal swing of comparable energy, like coastal
    # sea-surface records
    base = 28.0 - 0.35 * (lat - 30.0)
    amp = 5.5 + 0.05 * (lat - 30.0)
    seasonal = amp[:, None] * np.cos(2 * np.pi * (month[None, :] - 7.0) / 12.0)

    lat_n = (lat - lat.mean()) / max(lat.std(), 1e-9)
    lon_n = (lon - lon.mean()) / max(lon.std(), 1e-9)
    modes = np.column_stack([
        np.sin(lat_n), np.cos(lon_n), np.sin(0.7 * lat_n + 0.9 * lon_n)])
    drift = np.cumsum(rng.normal(scale=0.08, size=(3, n_steps)), axis=1)
    values = (base[:, None] + seasonal + 0.6 * (modes @ drift)
              + rng.normal(scale=0.2, size=(n_stations, n_steps)))

    missing = rng.random((n_stations, n_steps)) < missing_rate
    missing[0] = False

    with open(stations_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "lat", "lon"])
        for i in range(n_stations):
            writer.writerow([f"S{i:04d}", repr(float(lat[i])), repr(float(lon[i]))])
    with open(measurements_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station_id", "year", "month", "value"])
        for i in range(n_stations):
            for t in range(n_steps):
                year, mon = y0 + t // 12, t % 12 + 1
                val = "" if missing[i, t] else repr(float(values[i, t]))
                writer.writerow([f"S{i:04d}", year, mon, val])
