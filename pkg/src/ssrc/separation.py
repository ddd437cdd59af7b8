"""Signal-noise separation with a reservoir predictor.

Given an observed series ``x``, a one-step ESN predictor is trained on the
training range, its predictions serve as the reconstruction ``q_hat``, and the
misfits ``psi = x - q_hat`` are used to decide whether the noise is additive or
multiplicative and to estimate noise samples. The validation-range RMSE between
``x`` and ``q_hat`` is the model-selection criterion.

Filters from :mod:`ssrc.baselines` share everything after the reconstruction
via :func:`complete_separation`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .core import NoiseKind, Split, as_series, standardize
from .errors import ContractError, InsufficientDataError, UndeterminedKindError
from .metrics import rmse
from .reservoir import EsnParams, fit_predict

N_BINS = 25
MIN_BIN_COUNT = 10
MIN_BINS = 5
KIND_THRESHOLD = 0.2
# misfits smaller than this fraction of mean |q_hat| are treated as no noise
NOISE_FLOOR = 1e-2
TRIM_FRACTION = 0.01


@dataclass(frozen=True)
class ConditionalCurve:
    bin_centers: np.ndarray
    bin_means: np.ndarray
    bin_counts: np.ndarray


@dataclass
class SeparationResult:
    """Outcome of one separation.

    ``q_hat`` has the length of the input; entries before ``q_start`` carry no
    prediction and are NaN. ``psi`` covers indices ``fit_start..K``;
    ``xi_hat`` holds noise estimates at indices ``xi_index``.
    """

    method: str
    q_hat: np.ndarray
    q_start: int
    fit_start: int
    psi: np.ndarray
    noise_kind: NoiseKind
    kind_statistic: float
    xi_hat: np.ndarray
    xi_index: np.ndarray
    validation_error: float
    split: Split
    params_used: Any = None
    curve: Optional[ConditionalCurve] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        params = self.params_used.to_dict() if hasattr(self.params_used, "to_dict") else self.params_used
        q = [None if not np.isfinite(v) else float(v) for v in self.q_hat]
        out = {
            "method": self.method,
            "noise_kind": self.noise_kind.value,
            "kind_statistic": self.kind_statistic,
            "validation_error": self.validation_error,
            "train_end": self.split.train_end,
            "total_end": self.split.total_end,
            "q_start": self.q_start,
            "fit_start": self.fit_start,
            "params": params,
            "q_hat": q,
            "psi": self.psi.tolist(),
            "xi_index": self.xi_index.tolist(),
            "xi_hat": self.xi_hat.tolist(),
        }
        if self.curve is not None:
            out["curve"] = {"bin_centers": self.curve.bin_centers.tolist(),
                            "bin_means": self.curve.bin_means.tolist(),
                            "bin_counts": self.curve.bin_counts.tolist()}
        out.update(self.extra)
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _as_range(rng, n):
    if isinstance(rng, slice):
        start, stop, step = rng.indices(n)
        if step != 1:
            raise ContractError("ranges must be contiguous")
        return start, stop
    start, stop = rng
    if not 0 <= start < stop <= n:
        raise ContractError(f"range {rng} outside 0..{n}")
    return start, stop


def misfits(x, q_hat, rng) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    q_hat = np.asarray(q_hat, dtype=float)
    if x.shape != q_hat.shape:
        raise ContractError(f"x {x.shape} and q_hat {q_hat.shape} are misaligned")
    a, b = _as_range(rng, x.size)
    psi = x[a:b] - q_hat[a:b]
    if not np.all(np.isfinite(psi)):
        raise ContractError("q_hat has no prediction inside the requested range")
    return psi


def conditional_mean_curve(psi, q_hat, n_bins: int = N_BINS) -> ConditionalCurve:
    """Mean of ``|psi|`` in equal-width bins of ``q_hat``; sparse bins dropped."""
    psi = np.asarray(psi, dtype=float)
    q_hat = np.asarray(q_hat, dtype=float)
    if psi.shape != q_hat.shape:
        raise ContractError("psi and q_hat must be paired")
    if n_bins < MIN_BINS:
        raise ContractError(f"n_bins must be >= {MIN_BINS}")
    if psi.size < MIN_BIN_COUNT * MIN_BINS:
        raise InsufficientDataError(f"{psi.size} samples cannot fill {MIN_BINS} bins")
    lo, hi = q_hat.min(), q_hat.max()
    if not hi > lo:
        raise InsufficientDataError("q_hat is constant")
    edges = np.linspace(lo, hi, n_bins + 1)
    which = np.clip(np.searchsorted(edges, q_hat, side="right") - 1, 0, n_bins - 1)
    counts = np.bincount(which, minlength=n_bins)
    sums = np.bincount(which, weights=np.abs(psi), minlength=n_bins)
    keep = counts >= MIN_BIN_COUNT
    if keep.sum() < MIN_BINS:
        raise InsufficientDataError(f"only {keep.sum()} bins hold >= {MIN_BIN_COUNT} samples")
    centers = 0.5 * (edges[1:] + edges[:-1])
    return ConditionalCurve(bin_centers=centers[keep], bin_means=sums[keep] / counts[keep],
                            bin_counts=counts[keep])


def _r2_pair(curve: ConditionalCurve):
    """Weighted R^2 of the flat and the through-origin |q_hat| models."""
    w = curve.bin_counts.astype(float)
    y = curve.bin_means
    a = np.abs(curve.bin_centers)
    scale = np.sum(w * y * y)
    ybar = np.sum(w * y) / w.sum()
    ss_tot = np.sum(w * (y - ybar) ** 2)
    denom_a = np.sum(w * a * a)
    C = np.sum(w * a * y) / denom_a if denom_a > 0 else 0.0
    ss_prop = np.sum(w * (y - C * a) ** 2)
    eps = 1e-12 * max(scale, 1e-300)
    if ss_tot <= eps:
        return (1.0 if ss_prop <= eps else -np.inf), 1.0
    return 1.0 - ss_prop / ss_tot, 0.0


def identify_noise_kind(curve: ConditionalCurve, threshold: float = KIND_THRESHOLD):
    """Flat curve -> additive, V through the origin -> multiplicative.

    The statistic is ``R2(proportional) - R2(flat)`` clipped to [-1, 1].
    Misfits below ``NOISE_FLOOR`` of the reconstruction scale give
    ``UNDETERMINED`` with statistic 0.
    """
    w = curve.bin_counts.astype(float)
    level = np.sum(w * curve.bin_means) / w.sum()
    scale = np.sum(w * np.abs(curve.bin_centers)) / w.sum()
    if level <= NOISE_FLOOR * scale:
        return NoiseKind.UNDETERMINED, 0.0
    r2_prop, r2_flat = _r2_pair(curve)
    stat = float(np.clip(r2_prop - r2_flat, -1.0, 1.0))
    if stat > threshold:
        return NoiseKind.MULTIPLICATIVE, stat
    if stat < -threshold:
        return NoiseKind.ADDITIVE, stat
    return NoiseKind.UNDETERMINED, stat


def estimate_noise(x, q_hat, kind: NoiseKind, rng, convention: str = "ratio",
                   trim_fraction: float = TRIM_FRACTION):
    """Noise samples and the indices they belong to.

    Additive: ``x - q_hat``. Multiplicative: ``x / q_hat`` (``convention="ratio"``)
    or ``(x - q_hat) / q_hat`` (``"misfit"``, an estimate of ``xi - 1``), after
    discarding the ``trim_fraction`` of indices with the smallest ``|q_hat|``.
    """
    kind = NoiseKind(kind)
    x = np.asarray(x, dtype=float)
    q_hat = np.asarray(q_hat, dtype=float)
    a, b = _as_range(rng, x.size)
    idx = np.arange(a, b)
    if kind is NoiseKind.UNDETERMINED:
        raise UndeterminedKindError("noise kind is undetermined; choose additive or multiplicative")
    if kind is NoiseKind.ADDITIVE:
        return misfits(x, q_hat, (a, b)), idx
    if convention not in ("ratio", "misfit"):
        raise ContractError(f"unknown convention {convention!r}")
    n_drop = int(np.ceil(trim_fraction * idx.size))
    order = np.argsort(np.abs(q_hat[idx]), kind="stable")
    kept = np.sort(idx[order[n_drop:]])
    if convention == "ratio":
        return x[kept] / q_hat[kept], kept
    return (x[kept] - q_hat[kept]) / q_hat[kept], kept


def validation_error(x, q_hat, split: Split) -> float:
    x = np.asarray(x, dtype=float)
    q_hat = np.asarray(q_hat, dtype=float)
    v = split.validation
    return rmse(x[v], q_hat[v])


def complete_separation(x, q_hat, split: Split, fit_start: int, params_used=None, method="ssrc",
                        q_start: Optional[int] = None, n_bins: int = N_BINS,
                        convention: str = "ratio",
                        undetermined_as: NoiseKind = NoiseKind.ADDITIVE) -> SeparationResult:
    """Misfits, kind identification, noise estimate and validation error for a
    given reconstruction."""
    x = np.asarray(x, dtype=float)
    q_hat = np.asarray(q_hat, dtype=float)
    rng = (fit_start, split.train_end + 1)
    psi = misfits(x, q_hat, rng)
    try:
        curve = conditional_mean_curve(psi, q_hat[rng[0]:rng[1]], n_bins)
        kind, stat = identify_noise_kind(curve)
    except InsufficientDataError:
        curve, kind, stat = None, NoiseKind.UNDETERMINED, 0.0
    est_kind = undetermined_as if kind is NoiseKind.UNDETERMINED else kind
    xi_hat, xi_index = estimate_noise(x, q_hat, est_kind, rng, convention=convention)
    return SeparationResult(
        method=method, q_hat=q_hat, q_start=fit_start if q_start is None else q_start,
        fit_start=fit_start, psi=psi, noise_kind=kind, kind_statistic=stat,
        xi_hat=xi_hat, xi_index=xi_index, validation_error=validation_error(x, q_hat, split),
        split=split, params_used=params_used, curve=curve,
        extra={"noise_estimate_kind": est_kind.value, "noise_convention": convention},
    )


def esn_reconstruction(x, params: EsnParams, split: Split) -> np.ndarray:
    """One-step ESN predictions on the scale of ``x`` (NaN at index 0).

    The reservoir is driven by a copy of ``x`` standardized with training-range
    statistics; predictions are mapped back, so the result is equivariant under
    affine rescaling of ``x`` and nothing after ``K`` influences the readout.
    """
    x = np.asarray(x, dtype=float)
    _, sp = standardize(x[split.train])
    fitted = fit_predict(sp.apply(x), params, split.train_end)
    return sp.invert(fitted.predictions)


def ssrc_separate(x, params: EsnParams, split: Split, **kwargs) -> SeparationResult:
    x = as_series(x, "x")
    if split.total_end != x.size - 1:
        raise ContractError(f"split covers 0..{split.total_end} but series has {x.size} samples")
    if not params.washout < split.train_end:
        raise ContractError("washout must be shorter than the training range")
    q_hat = esn_reconstruction(x, params, split)
    return complete_separation(x, q_hat, split, fit_start=params.washout + 1, params_used=params,
                               method="ssrc", q_start=1, **kwargs)
