"""RMSE, histograms and Jensen-Shannon divergence."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError

N_BINS = 50


def rmse(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.size < 1:
        raise ContractError(f"rmse needs equal non-empty lengths, got {a.shape} and {b.shape}")
    d = a - b
    return float(np.sqrt(np.mean(d * d)))


@dataclass(frozen=True)
class Histogram:
    """Equal-width histogram.

    ``masses`` are normalized over in-range samples; ``out_of_range_mass`` is the
    fraction of all samples that fell outside ``[edges[0], edges[-1]]``.
    """

    edges: np.ndarray
    masses: np.ndarray
    out_of_range_mass: float = 0.0

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def to_csv(self, path):
        rows = ["edge_lo,edge_hi,mass"]
        rows += ["%.17g,%.17g,%.17g" % (lo, hi, m)
                 for lo, hi, m in zip(self.edges[:-1], self.edges[1:], self.masses)]
        rows.append(f"# out_of_range_mass={self.out_of_range_mass!r}")
        with open(path, "w") as fh:
            fh.write("\n".join(rows) + "\n")


def histogram(samples, n_bins: int = N_BINS, range=None) -> Histogram:
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ContractError("cannot histogram an empty sample")
    if n_bins < 2:
        raise ContractError("n_bins must be >= 2")
    lo, hi = (samples.min(), samples.max()) if range is None else range
    if not hi > lo:
        # degenerate pooled range; widen symmetrically so edges are increasing
        pad = 0.5 if lo == 0 else 0.5 * abs(lo)
        lo, hi = lo - pad, hi + pad
    edges = np.linspace(lo, hi, n_bins + 1)
    inside = (samples >= lo) & (samples <= hi)
    counts, _ = np.histogram(samples[inside], bins=edges)
    n_in = counts.sum()
    masses = counts / n_in if n_in else np.zeros(n_bins)
    return Histogram(edges=edges, masses=masses, out_of_range_mass=float(1.0 - n_in / samples.size))


def shared_histograms(a, b, n_bins: int = N_BINS, range=None):
    """Histograms of two samples on one grid spanning their pooled range."""
    if range is None:
        pooled = np.concatenate([np.ravel(a), np.ravel(b)])
        range = (float(pooled.min()), float(pooled.max()))
    return histogram(a, n_bins, range), histogram(b, n_bins, range)


def _cells(h: Histogram):
    w = 1.0 - h.out_of_range_mass
    return np.append(h.masses * w, h.out_of_range_mass)


def _kl2(p, m):
    nz = p > 0
    return float(np.sum(p[nz] * np.log2(p[nz] / m[nz])))


def jsd(p: Histogram, q: Histogram) -> float:
    """Base-2 Jensen-Shannon divergence, in [0, 1].

    Out-of-range mass enters as one extra cell, so samples outside the grid
    still count against the match.
    """
    if p.edges.shape != q.edges.shape or not np.array_equal(p.edges, q.edges):
        raise ContractError("histograms must share identical bin edges")
    a, b = _cells(p), _cells(q)
    m = 0.5 * (a + b)
    d = 0.5 * _kl2(a, m) + 0.5 * _kl2(b, m)
    if p is q or np.array_equal(a, b):
        return 0.0
    return float(min(max(d, 0.0), 1.0))


def jsd_samples(a, b, n_bins: int = N_BINS, range=None) -> float:
    ha, hb = shared_histograms(a, b, n_bins, range)
    return jsd(ha, hb)


def count_modes(samples, n_bins: int = 40, min_prominence: float = 0.2) -> int:
    """Number of separated peaks in a lightly smoothed histogram.

    The histogram spans the 1st-99th percentile range and is smoothed with a
    5-bin binomial kernel. A local maximum counts as a mode when the dip to the
    next counted mode falls by at least ``min_prominence`` of the smaller peak.
    """
    samples = np.asarray(samples, dtype=float)
    lo, hi = np.percentile(samples, [1, 99])
    counts, _ = np.histogram(samples, bins=n_bins, range=(lo, hi))
    kernel = np.array([1, 4, 6, 4, 1], dtype=float) / 16
    sm = np.convolve(np.pad(counts.astype(float), 2, mode="edge"), kernel, mode="valid")
    peaks = [i for i in range(n_bins)
             if (i == 0 or sm[i] > sm[i - 1]) and (i == n_bins - 1 or sm[i] >= sm[i + 1])]
    modes = []
    for i in peaks:
        if not modes:
            modes.append(i)
            continue
        j = modes[-1]
        dip = sm[j:i + 1].min()
        smaller = min(sm[j], sm[i])
        if smaller > 0 and (smaller - dip) >= min_prominence * smaller:
            modes.append(i)
        elif sm[i] > sm[j]:
            modes[-1] = i
    return len(modes)
