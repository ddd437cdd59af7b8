"""Shared types: series containers, train/validation split, standardization, CSV I/O."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (ContractError, DegenerateInputError, EmptySeriesError,
                     InvalidSplitError, ParseError, SchemaError)


class NoiseKind(str, enum.Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"
    UNDETERMINED = "undetermined"


def as_series(values, name="series") -> np.ndarray:
    """Validate and return ``values`` as a read-only 1-d float array.

    A series needs at least two samples and every sample must be finite.
    """
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ContractError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 2:
        raise ContractError(f"{name} needs at least 2 samples, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite samples")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class LabeledSeries:
    observed: np.ndarray
    truth_signal: Optional[np.ndarray] = None
    truth_noise: Optional[np.ndarray] = None
    noise_kind_truth: Optional[NoiseKind] = None

    def __post_init__(self):
        object.__setattr__(self, "observed", as_series(self.observed, "observed"))
        for name in ("truth_signal", "truth_noise"):
            val = getattr(self, name)
            if val is not None:
                val = as_series(val, name)
                if val.shape != self.observed.shape:
                    raise ContractError(f"{name} length {val.size} != observed length {self.observed.size}")
                object.__setattr__(self, name, val)
        if self.noise_kind_truth is not None:
            object.__setattr__(self, "noise_kind_truth", NoiseKind(self.noise_kind_truth))
        if self.has_truth and self.noise_kind_truth in (NoiseKind.ADDITIVE, NoiseKind.MULTIPLICATIVE):
            q, xi = self.truth_signal, self.truth_noise
            model = q + xi if self.noise_kind_truth is NoiseKind.ADDITIVE else q * xi
            tol = 1e-12 * np.maximum(1.0, np.abs(self.observed))
            if np.any(np.abs(self.observed - model) > tol):
                raise ContractError(f"observed does not equal the {self.noise_kind_truth.value} mix of its truths")

    def __len__(self):
        return self.observed.size

    @property
    def has_truth(self) -> bool:
        return self.truth_signal is not None and self.truth_noise is not None


@dataclass(frozen=True)
class Split:
    """Training indices ``0..train_end``, validation ``train_end+1..total_end``."""

    train_end: int
    total_end: int

    def __post_init__(self):
        if not 0 < self.train_end < self.total_end:
            raise InvalidSplitError(f"need 0 < K < N, got K={self.train_end}, N={self.total_end}")

    @property
    def train(self) -> slice:
        return slice(0, self.train_end + 1)

    @property
    def validation(self) -> slice:
        return slice(self.train_end + 1, self.total_end + 1)

    @property
    def validation_len(self) -> int:
        return self.total_end - self.train_end


def split_series(x, validation_len: int) -> Split:
    n = len(x)
    if validation_len < 1 or validation_len >= n - 1:
        raise InvalidSplitError(
            f"validation_len={validation_len} leaves no training data for a series of length {n}")
    total_end = n - 1
    return Split(train_end=total_end - validation_len, total_end=total_end)


@dataclass(frozen=True)
class StandardizationParams:
    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise DegenerateInputError(f"std must be positive, got {self.std}")

    def apply(self, x):
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def invert(self, z):
        return np.asarray(z, dtype=float) * self.std + self.mean


def standardize(x):
    """Shift to zero mean and scale to unit sample standard deviation (ddof=1)."""
    x = as_series(x)
    mean = float(np.mean(x))
    std = float(np.std(x, ddof=1))
    if std <= 1e-15 * max(1.0, abs(mean)):
        raise DegenerateInputError("cannot standardize a constant series")
    params = StandardizationParams(mean, std)
    return params.apply(x), params


def destandardize(z, params: StandardizationParams):
    return params.invert(z)


# --- CSV -------------------------------------------------------------------------

_COLUMNS = {"x": "observed", "q": "truth_signal", "xi": "truth_noise"}


def write_csv(series: LabeledSeries, path, metadata: Optional[dict] = None):
    """Write ``i,x[,q,xi]`` rows with 17 significant digits.

    ``metadata`` entries (and the true noise kind, if known) are written as
    leading ``# key=value`` comment lines.
    """
    meta = dict(metadata or {})
    if series.noise_kind_truth is not None:
        meta.setdefault("kind", series.noise_kind_truth.value)
    cols = [series.observed]
    header = ["i", "x"]
    if series.truth_signal is not None:
        header.append("q")
        cols.append(series.truth_signal)
    if series.truth_noise is not None:
        header.append("xi")
        cols.append(series.truth_noise)
    lines = [f"# {k}={v}" for k, v in meta.items()]
    lines.append(",".join(header))
    stacked = np.column_stack(cols)
    for i, row in enumerate(stacked):
        lines.append(",".join([str(i)] + ["%.17g" % v for v in row]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_metadata(path) -> dict:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, val = line[1:].strip().partition("=")
            meta[key.strip()] = val.strip()
    return meta


def read_csv(path) -> LabeledSeries:
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"{path}: no such file")
    meta = read_metadata(path)
    with open(path, newline="") as fh:
        rows = [(n, r) for n, r in enumerate(csv.reader(fh), start=1)
                if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise EmptySeriesError(f"{path}: no header")
    header_line, header = rows[0]
    header = [h.strip() for h in header]
    if "x" not in header:
        raise SchemaError(f"{path}:{header_line}: missing observed column 'x' in header {header}")
    unknown = set(header) - {"i", *_COLUMNS}
    if unknown:
        raise SchemaError(f"{path}:{header_line}: unknown columns {sorted(unknown)}")
    data = {h: [] for h in header}
    for line_no, row in rows[1:]:
        if len(row) != len(header):
            raise ParseError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
        for h, field in zip(header, row):
            try:
                data[h].append(float(field))
            except ValueError:
                raise ParseError(f"{path}:{line_no}: cannot parse {field!r} in column {h!r}") from None
    if not data["x"]:
        raise EmptySeriesError(f"{path}: header only, no samples")
    if len(data["x"]) < 2:
        raise EmptySeriesError(f"{path}: need at least 2 samples")
    if not all(np.isfinite(data["x"])):
        raise ParseError(f"{path}: non-finite observed samples")
    kw = {_COLUMNS[h]: np.array(v) for h, v in data.items() if h in _COLUMNS}
    kind = meta.get("kind")
    if kind in {k.value for k in NoiseKind}:
        kw["noise_kind_truth"] = NoiseKind(kind)
    return LabeledSeries(**kw)
