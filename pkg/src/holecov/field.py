"""
Spatial data handling: CSV input/output, polynomial detrending and
directional empirical variograms.
"""

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, HolecovError
from .transforms import evaluate

__all__ = [
    "DataError",
    "SpatialDataset",
    "EmpiricalVariogram",
    "load_csv",
    "save_csv",
    "detrend_polynomial",
    "empirical_variogram",
    "model_variogram",
    "save_variogram_csv",
    "load_variogram_csv",
]

DEFAULT_ANGLE_TOL = math.radians(22.5)


class DataError(HolecovError, ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class SpatialDataset:
    """
    Observations ``values`` at ``locations`` (n x dim).

    ``residuals`` defaults to the values themselves when no trend has been
    removed, so the data can be used directly as a zero-mean field.
    """

    locations: np.ndarray
    values: np.ndarray
    trend: Optional[np.ndarray] = None
    residuals: Optional[np.ndarray] = None
    check_duplicates: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        loc = np.array(self.locations, dtype=float)
        if loc.ndim == 1:
            loc = loc[:, None]
        val = np.array(self.values, dtype=float).ravel()
        if len(val) < 1:
            raise DataError("dataset must contain at least one observation")
        if loc.shape[0] != len(val):
            raise DataError(f"{loc.shape[0]} locations but {len(val)} values")
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(val))):
            raise DataError("locations and values must be finite")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "values", val)
        for name in ("trend", "residuals"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=float).ravel()
                if len(arr) != len(val):
                    raise DataError(f"{name} has length {len(arr)}, expected {len(val)}")
                object.__setattr__(self, name, arr)
        if self.trend is not None and self.residuals is None:
            object.__setattr__(self, "residuals", val - self.trend)
        if self.trend is not None and not np.allclose(self.residuals, val - self.trend, rtol=0, atol=1e-12 * (1 + np.abs(val).max())):
            raise DataError("residuals must equal values - trend")
        for arr in (loc, val, self.trend, self.residuals):
            if arr is not None:
                arr.setflags(write=False)
        if self.check_duplicates and len(val) > 1:
            pairs = cKDTree(loc).query_pairs(1e-9)
            if pairs:
                i, j = sorted(min(pairs))
                raise DataError(f"duplicate locations at rows {i} and {j}")

    @property
    def n(self):
        return len(self.values)

    @property
    def dim(self):
        return self.locations.shape[1]

    @property
    def z(self):
        """Residuals if present, else values."""
        return self.values if self.residuals is None else self.residuals

    def subset(self, idx):
        idx = np.asarray(idx)
        take = lambda a: None if a is None else a[idx]  # noqa: E731
        return SpatialDataset(self.locations[idx], self.values[idx], take(self.trend),
                              take(self.residuals), check_duplicates=False)

    def with_values(self, values):
        """Same locations, new values; any trend is dropped."""
        return SpatialDataset(self.locations, values, check_duplicates=False)


def load_csv(path, x_col="x", y_col="y", value_col="value"):
    """
    Read a dataset from a CSV file with a header row.

    Raises
    ------
    OSError
        If the file cannot be read.
    DataError
        On a missing column, a non-numeric cell (the message names the
        line) or duplicate locations.
    """
    locs, vals = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        missing = [c for c in (x_col, y_col, value_col) if c not in reader.fieldnames]
        if missing:
            raise DataError(f"{path}: missing column(s) {missing}; header is {reader.fieldnames}")
        for row in reader:
            try:
                x, y, v = float(row[x_col]), float(row[y_col]), float(row[value_col])
            except (TypeError, ValueError):
                raise DataError(f"{path}, line {reader.line_num}: non-numeric value in {row}") from None
            if not all(map(math.isfinite, (x, y, v))):
                raise DataError(f"{path}, line {reader.line_num}: non-finite value")
            locs.append((x, y))
            vals.append(v)
    if not vals:
        raise DataError(f"{path}: no data rows")
    return SpatialDataset(np.array(locs), np.array(vals))


def save_csv(data, path, x_col="x", y_col="y", value_col="value"):
    """Write locations and values; floats use ``repr`` so they round-trip exactly."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = [x_col, y_col, value_col]
        if data.residuals is not None and data.trend is not None:
            header += ["trend", "residual"]
        w.writerow(header)
        for i in range(data.n):
            row = [repr(float(data.locations[i, 0])), repr(float(data.locations[i, 1])),
                   repr(float(data.values[i]))]
            if len(header) > 3:
                row += [repr(float(data.trend[i])), repr(float(data.residuals[i]))]
            w.writerow(row)


def detrend_polynomial(data, coordinate=1, degree=1):
    """
    Remove a least-squares polynomial trend in one coordinate.

    Parameters
    ----------
    data : SpatialDataset
    coordinate : int
        Axis index the trend depends on (e.g. 1 for depth in a vertical
        section).
    degree : int
        Polynomial degree, at most 5.

    Returns
    -------
    SpatialDataset
        Copy with ``trend`` and ``residuals`` filled in.
    """
    if not 0 <= degree <= 5:
        raise DomainError("degree must be between 0 and 5")
    if data.n <= degree + 1:
        raise DataError(f"need more than {degree + 1} observations for degree {degree}")
    x = data.locations[:, coordinate]
    # Centre and scale for conditioning.
    xs = (x - x.mean()) / (x.std() if x.std() > 0 else 1.0)
    design = np.vander(xs, degree + 1, increasing=True)
    coef, _, rank, _ = np.linalg.lstsq(design, data.values, rcond=None)
    if rank < degree + 1:
        raise DataError(f"design matrix is rank deficient (rank {rank} < {degree + 1})")
    trend = design @ coef
    resid = data.values - trend
    # Remove the rounding-level mean left by the solve.
    resid = resid - resid.mean()
    trend = data.values - resid
    return replace(data, trend=trend, residuals=resid, check_duplicates=False)


@dataclass(frozen=True)
class EmpiricalVariogram:
    """Directional Matheron semivariogram; bins with no pairs are dropped."""

    direction: tuple
    angle_tolerance: float
    lag_width: float
    lag_centers: np.ndarray
    semivariances: np.ndarray
    pair_counts: np.ndarray

    def __post_init__(self):
        for name in ("lag_centers", "semivariances"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "pair_counts", np.asarray(self.pair_counts, dtype=np.int64))
        if np.any(self.pair_counts < 0):
            raise DataError("pair counts must be nonnegative")
        if np.any(np.diff(self.lag_centers) <= 0):
            raise DataError("lag centers must be strictly increasing")

    def __eq__(self, other):
        return (isinstance(other, EmpiricalVariogram)
                and np.array_equal(self.lag_centers, other.lag_centers)
                and np.array_equal(self.semivariances, other.semivariances)
                and np.array_equal(self.pair_counts, other.pair_counts))

    @property
    def lag_vectors(self):
        """Bin centres as lag vectors along the direction."""
        return self.lag_centers[:, None] * np.asarray(self.direction)[None, :]


def _pairs_within(loc, max_lag):
    tree = cKDTree(loc)
    pairs = tree.query_pairs(max_lag, output_type="ndarray")
    if len(pairs) == 0:
        return pairs.reshape(0, 2)
    # Deterministic order.
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order]


def empirical_variogram(data, direction, angle_tol=DEFAULT_ANGLE_TOL, lag_width=1.0, max_lag=None):
    """
    Directional semivariogram ``(1/2N) sum (z_i - z_j)^2`` per lag bin.

    A pair enters when the angle between its separation and ``+-direction``
    is at most ``angle_tol``.  Bins are half-open ``[k w, (k+1) w)`` with
    the centre as lag; ``max_lag`` defaults to half the domain diameter.
    Zero-length separations are ignored.
    """
    if data.n == 0:
        raise DataError("empty dataset")
    if not lag_width > 0:
        raise DomainError("lag_width must be > 0")
    u = np.asarray(direction, dtype=float).ravel()
    if u.size != data.dim:
        raise DomainError("direction dimension does not match the data")
    u = u / np.linalg.norm(u)
    loc, z = data.locations, data.z
    if max_lag is None:
        max_lag = 0.5 * float(np.linalg.norm(loc.max(axis=0) - loc.min(axis=0)))
    nbins = max(int(math.ceil(max_lag / lag_width)), 1)
    pairs = _pairs_within(loc, max_lag)
    sums = np.zeros(nbins)
    counts = np.zeros(nbins, dtype=np.int64)
    if len(pairs):
        i, j = pairs[:, 0], pairs[:, 1]
        sep = loc[j] - loc[i]
        dist = np.linalg.norm(sep, axis=1)
        ok = dist > 0
        cosang = np.abs(sep[ok] @ u) / dist[ok]
        keep = np.zeros(len(dist), dtype=bool)
        keep[ok] = cosang >= math.cos(angle_tol) - 1e-12
        keep &= dist < nbins * lag_width
        k = (dist[keep] / lag_width).astype(np.int64)
        sq = (z[i[keep]] - z[j[keep]]) ** 2
        np.add.at(sums, k, sq)
        np.add.at(counts, k, 1)
    centers = (np.arange(nbins) + 0.5) * lag_width
    nz = counts > 0
    semiv = np.zeros(nbins)
    semiv[nz] = sums[nz] / (2.0 * counts[nz])
    sign = 1.0 if u[np.flatnonzero(np.abs(u) > 1e-12)[0]] > 0 else -1.0
    return EmpiricalVariogram(
        direction=tuple((sign * u).tolist()), angle_tolerance=float(angle_tol),
        lag_width=float(lag_width), lag_centers=centers[nz],
        semivariances=semiv[nz], pair_counts=counts[nz],
    )


def model_variogram(model, h):
    """``gamma(h) = C(0) - C(h)``; exceeds the sill where ``C(h) < 0``."""
    return float(evaluate(model, np.zeros(model.dim))) - evaluate(model, h)


def save_variogram_csv(vario, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lag_center", "semivariance", "count"])
        for c, s, n in zip(vario.lag_centers, vario.semivariances, vario.pair_counts):
            w.writerow([repr(float(c)), repr(float(s)), int(n)])


def load_variogram_csv(path, direction, angle_tolerance=DEFAULT_ANGLE_TOL, lag_width=None):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            try:
                rows.append((float(row["lag_center"]), float(row["semivariance"]), int(row["count"])))
            except (KeyError, TypeError, ValueError):
                raise DataError(f"{path}, line {reader.line_num}: malformed variogram row") from None
    if not rows:
        raise DataError(f"{path}: no variogram rows")
    c, s, n = map(np.array, zip(*rows))
    width = lag_width if lag_width is not None else (2 * c[0] if len(c) else 1.0)
    return EmpiricalVariogram(tuple(direction), angle_tolerance, width, c, s, n)
