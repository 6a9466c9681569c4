"""Multi-fidelity datasets on a shared grid, plus their CSV representation.

The on-disk format is a plain CSV with header ``x0,...,x{d-1},fidelity,y``
where ``fidelity`` is a 0-based integer column index. Rows may appear in any
order; on load the block design is validated (every fidelity observed at
every domain point). Floats are written with 17 significant digits so that
parse -> serialize round-trips are byte-identical.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DatasetError, ParseError, ShapeError

__all__ = ["FidelityDataset", "read_csv", "write_csv", "format_float"]


def format_float(value):
    """Canonical float formatting: 17 significant digits."""
    return f"{float(value):.17g}"


@dataclass(frozen=True)
class FidelityDataset:
    """Domain points plus one target column per fidelity.

    Parameters
    ----------
    x : ndarray, shape (n_x, n_d)
        Domain points, shared by all fidelities (block design).
    y : ndarray, shape (n_x, n_t)
        Column ``k`` holds the values of fidelity ``k`` at ``x``. By
        convention the last column is the ground truth.
    labels : tuple of str, optional
        Unique fidelity names; defaults to ``f0 .. f{n_t-1}``.
    provenance : dict, optional
        Free-form metadata (source file, generator name).
    """

    x: np.ndarray
    y: np.ndarray
    labels: tuple = ()
    provenance: dict | None = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if x.ndim != 2 or y.ndim != 2:
            raise ShapeError("x must be (n_x, n_d) and y must be (n_x, n_t)")
        if x.shape[0] != y.shape[0]:
            raise DatasetError(
                f"x has {x.shape[0]} rows but y has {y.shape[0]}"
            )
        if x.shape[0] < 2:
            raise DatasetError("a dataset needs at least 2 domain points")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise DatasetError("dataset contains NaN or Inf entries")
        labels = tuple(self.labels) if self.labels else tuple(
            f"f{k}" for k in range(y.shape[1])
        )
        if len(labels) != y.shape[1]:
            raise DatasetError(
                f"{len(labels)} labels given for {y.shape[1]} fidelities"
            )
        if len(set(labels)) != len(labels):
            raise DatasetError("fidelity labels must be unique")
        x = x.copy()
        y = y.copy()
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "labels", labels)

    @property
    def n_points(self):
        return self.x.shape[0]

    @property
    def n_dims(self):
        return self.x.shape[1]

    @property
    def n_fidelities(self):
        return self.y.shape[1]

    def column(self, k):
        """Values of fidelity ``k`` (negative indices allowed)."""
        return self.y[:, k]

    def with_column(self, values, label):
        """New dataset with an extra fidelity column appended."""
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size != self.n_points:
            raise ShapeError(
                f"new column has {values.size} values for {self.n_points} points"
            )
        return FidelityDataset(
            self.x,
            np.column_stack([self.y, values]),
            self.labels + (label,),
            self.provenance,
        )


def write_csv(dataset, path_or_file):
    """Write a dataset in the canonical CSV form (fidelity-major rows)."""
    if hasattr(path_or_file, "write"):
        _write(dataset, path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(dataset, fh)


def _write(dataset, fh):
    writer = csv.writer(fh, lineterminator="\n")
    header = [f"x{d}" for d in range(dataset.n_dims)] + ["fidelity", "y"]
    writer.writerow(header)
    for k in range(dataset.n_fidelities):
        for i in range(dataset.n_points):
            row = [format_float(v) for v in dataset.x[i]]
            row.append(str(k))
            row.append(format_float(dataset.y[i, k]))
            writer.writerow(row)


def read_csv(path_or_file, labels=None, provenance=None):
    """Parse a dataset CSV, validating the block design.

    Raises
    ------
    ParseError
        On malformed content, with the 1-based line number.
    DatasetError
        When the parsed content violates dataset invariants.
    """
    if hasattr(path_or_file, "read"):
        return _read(path_or_file, labels, provenance)
    with open(path_or_file, "r", newline="") as fh:
        prov = dict(provenance) if provenance else {"source": str(path_or_file)}
        return _read(fh, labels, prov)


def _read(fh, labels, provenance):
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", line=1) from None
    header = [h.strip() for h in header]
    if len(header) < 3 or header[-2:] != ["fidelity", "y"]:
        raise ParseError(
            "header must be x0,...,x{d-1},fidelity,y", line=1
        )
    n_d = len(header) - 2
    expected_x = [f"x{d}" for d in range(n_d)]
    if header[:n_d] != expected_x:
        raise ParseError(
            f"coordinate columns must be named {','.join(expected_x)}", line=1
        )

    order = []  # x keys in first-appearance order
    seen = set()
    per_fid = {}  # fidelity -> {x key: y}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != n_d + 2:
            raise ParseError(
                f"expected {n_d + 2} fields, found {len(row)}", line=lineno
            )
        try:
            xs = tuple(float(v) for v in row[:n_d])
            fid = int(row[n_d])
            yv = float(row[n_d + 1])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if fid < 0:
            raise ParseError(f"fidelity index {fid} is negative", line=lineno)
        bucket = per_fid.setdefault(fid, {})
        if xs in bucket:
            raise ParseError(
                f"duplicate point {xs} for fidelity {fid}", line=lineno
            )
        if xs not in seen:
            seen.add(xs)
            order.append(xs)
        bucket[xs] = yv

    if not per_fid:
        raise ParseError("no data rows", line=2)
    fids = sorted(per_fid)
    if fids != list(range(len(fids))):
        raise DatasetError(
            f"fidelity indices must be contiguous from 0; found {fids}"
        )
    keys = set(order)
    for fid in fids:
        missing = keys - set(per_fid[fid])
        extra = set(per_fid[fid]) - keys
        if missing or extra:
            raise DatasetError(
                f"block design violated: fidelity {fid} does not cover the "
                f"same points as the others ({len(missing)} missing, "
                f"{len(extra)} extra)"
            )

    x = np.array(order, dtype=float)
    y = np.column_stack([[per_fid[fid][k] for k in order] for fid in fids])
    return FidelityDataset(x, y, labels or (), provenance)
