"""Conventional denoising filters used as comparison baselines.

Every filter maps a series to a same-length estimate of its deterministic
part and uses no randomness.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import ContractError

# Daubechies wavelet with 4 vanishing moments (8 taps), orthonormal low-pass analysis filter.
DB4_LO = np.array([
    0.23037781330889650086, 0.71484657055291564709, 0.63088076792985890788,
    -0.027983769416859854211, -0.18703481171909308408, 0.030841381835560763627,
    0.032883011666885199735, -0.010597401785069032105,
])
DB4_HI = np.array([(-1) ** j * DB4_LO[len(DB4_LO) - 1 - j] for j in range(len(DB4_LO))])


def lowpass(x, fraction: float) -> np.ndarray:
    """Brick-wall FFT filter keeping bins ``k <= fraction * (n // 2)``."""
    if not 0 < fraction < 1:
        raise ContractError("fraction must lie in (0, 1)")
    x = np.asarray(x, dtype=float)
    X = np.fft.rfft(x)
    cutoff = int(np.floor(fraction * (x.size // 2)))
    X[cutoff + 1:] = 0.0
    return np.fft.irfft(X, n=x.size)


# --- wavelets ----------------------------------------------------------------------

def _dwt_step(a, lo=DB4_LO, hi=DB4_HI):
    n = a.size
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(lo.size)[None, :]) % n
    win = a[idx]
    return win @ lo, win @ hi


def _idwt_step(approx, detail, lo=DB4_LO, hi=DB4_HI):
    n = 2 * approx.size
    idx = (2 * np.arange(approx.size)[:, None] + np.arange(lo.size)[None, :]) % n
    out = np.zeros(n)
    np.add.at(out, idx.ravel(), (approx[:, None] * lo[None, :] + detail[:, None] * hi[None, :]).ravel())
    return out


def dwt(x, levels: int):
    """Periodized multilevel DWT; ``len(x)`` must be divisible by ``2**levels``.

    Returns ``(approx, [d_1, ..., d_levels])`` with ``d_1`` the finest scale.
    """
    a = np.asarray(x, dtype=float)
    if a.size % (2 ** levels):
        raise ContractError(f"length {a.size} not divisible by 2**{levels}")
    details = []
    for _ in range(levels):
        a, d = _dwt_step(a)
        details.append(d)
    return a, details


def idwt(approx, details):
    a = np.asarray(approx, dtype=float)
    for d in reversed(details):
        a = _idwt_step(a, d)
    return a


class WaveletVariant(str, enum.Enum):
    SOFT = "soft"
    HARD = "hard"


def _pad_length(n, levels):
    block = 2 ** levels
    return -n % block


def wavelet_denoise(x, variant=WaveletVariant.SOFT, levels: int = 4) -> np.ndarray:
    """db4 universal-threshold denoising.

    The series is extended by symmetric reflection to a multiple of
    ``2**levels``, transformed, thresholded at ``sigma * sqrt(2 ln n)`` with
    ``sigma = median(|d_1|) / 0.6745``, inverted and cropped.
    """
    variant = WaveletVariant(variant)
    x = np.asarray(x, dtype=float)
    n = x.size
    if levels < 1 or n < max(2 ** levels, DB4_LO.size * levels):
        raise ContractError(f"series of length {n} too short for a {levels}-level db4 decomposition")
    padded = np.pad(x, (0, _pad_length(n, levels)), mode="symmetric")
    approx, details = dwt(padded, levels)
    sigma = np.median(np.abs(details[0])) / 0.6745
    thr = sigma * np.sqrt(2 * np.log(n))
    if variant is WaveletVariant.SOFT:
        details = [np.sign(d) * np.maximum(np.abs(d) - thr, 0.0) for d in details]
    else:
        details = [np.where(np.abs(d) > thr, d, 0.0) for d in details]
    return idwt(approx, details)[:n]


def median_filter(x, window: int = 5) -> np.ndarray:
    if window < 3 or window % 2 == 0:
        raise ContractError(f"median window must be odd and >= 3, got {window}")
    x = np.asarray(x, dtype=float)
    padded = np.pad(x, window // 2, mode="edge")
    return _kernels.sliding_median(padded, window)


# --- nonlinear adaptive filter -------------------------------------------------------

def _projection(half_width, order, max_cond=1e10):
    """Least-squares hat matrix for a degree-``order`` fit on ``2n+1`` points.

    Drops the order until the (scaled) Vandermonde matrix is well conditioned.
    """
    t = np.arange(-half_width, half_width + 1) / max(half_width, 1)
    while True:
        V = np.vander(t, order + 1, increasing=True)
        if np.linalg.cond(V) <= max_cond or order == 0:
            Q, _ = np.linalg.qr(V)
            return Q @ Q.T, order
        order -= 1


def adaptive_filter(x, half_width: int = 10, order: int = 3, diagnostics: Optional[dict] = None) -> np.ndarray:
    """Overlapping-segment polynomial smoother.

    Segments of ``2n+1`` points start every ``n`` samples (neighbours overlap by
    ``n+1``). Each gets a least-squares polynomial of degree ``order``; in an
    overlap the fits blend as ``w*prev + (1-w)*next`` with ``w`` falling
    linearly from 1 to 0. A final segment is anchored at the series end when
    the regular grid does not reach it.
    """
    n, M = half_width, order
    if n < M + 1:
        raise ContractError(f"half_width {n} must be >= order + 1 = {M + 1}")
    x = np.asarray(x, dtype=float)
    seg_len = 2 * n + 1
    if x.size < seg_len:
        raise ContractError(f"series of length {x.size} shorter than one segment ({seg_len})")
    P, used = _projection(n, M)
    if diagnostics is not None:
        diagnostics["order_used"] = used
        diagnostics["order_fallback"] = used != M
    starts = list(range(0, x.size - seg_len + 1, n))
    if starts[-1] + seg_len < x.size:
        starts.append(x.size - seg_len)
    out = np.empty(x.size)
    prev_end = -1
    for s in starts:
        fit = P @ x[s:s + seg_len]
        ov = prev_end - s + 1
        if ov > 0:
            w = 1.0 - np.arange(ov) / (ov - 1) if ov > 1 else np.ones(1)
            out[s:s + ov] = w * out[s:s + ov] + (1.0 - w) * fit[:ov]
            out[s + ov:s + seg_len] = fit[ov:]
        else:
            out[s:s + seg_len] = fit
        prev_end = s + seg_len - 1
    return out


# --- specs -------------------------------------------------------------------------

class FilterKind(str, enum.Enum):
    LOWPASS = "lowpass"
    WAVELET = "wavelet"
    MEDIAN = "median"
    ADAPTIVE = "adaptive"
    IDENTITY = "identity"


@dataclass(frozen=True)
class FilterSpec:
    kind: FilterKind
    fraction: float = 0.25
    variant: WaveletVariant = WaveletVariant.SOFT
    levels: int = 4
    window: int = 5
    half_width: int = 10
    order: int = 3
    name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", FilterKind(self.kind))
        object.__setattr__(self, "variant", WaveletVariant(self.variant))
        if self.kind is FilterKind.LOWPASS and not 0 < self.fraction < 1:
            raise ContractError("lowpass fraction must lie in (0, 1)")
        if self.kind is FilterKind.MEDIAN and (self.window < 3 or self.window % 2 == 0):
            raise ContractError("median window must be odd and >= 3")
        if self.kind is FilterKind.ADAPTIVE and self.half_width < self.order + 1:
            raise ContractError("adaptive half_width must be >= order + 1")
        if self.name is None:
            object.__setattr__(self, "name", self.default_name())

    def default_name(self):
        if self.kind is FilterKind.LOWPASS:
            return f"lowpass{round(self.fraction * 100)}"
        if self.kind is FilterKind.WAVELET:
            return "wavelet1" if self.variant is WaveletVariant.SOFT else "wavelet2"
        return self.kind.value

    def apply(self, x) -> np.ndarray:
        if self.kind is FilterKind.LOWPASS:
            return lowpass(x, self.fraction)
        if self.kind is FilterKind.WAVELET:
            return wavelet_denoise(x, self.variant, self.levels)
        if self.kind is FilterKind.MEDIAN:
            return median_filter(x, self.window)
        if self.kind is FilterKind.ADAPTIVE:
            return adaptive_filter(x, self.half_width, self.order)
        return np.array(x, dtype=float)

    def to_dict(self):
        return {"kind": self.kind.value, "name": self.name, "fraction": self.fraction,
                "variant": self.variant.value, "levels": self.levels, "window": self.window,
                "half_width": self.half_width, "order": self.order}


DEFAULT_BASELINES = (
    FilterSpec(FilterKind.WAVELET, variant=WaveletVariant.SOFT),
    FilterSpec(FilterKind.WAVELET, variant=WaveletVariant.HARD),
    FilterSpec(FilterKind.LOWPASS, fraction=0.25),
    FilterSpec(FilterKind.LOWPASS, fraction=0.50),
    FilterSpec(FilterKind.LOWPASS, fraction=0.75),
    FilterSpec(FilterKind.MEDIAN, window=5),
    FilterSpec(FilterKind.ADAPTIVE, half_width=10, order=3),
)


def run_baseline(x, spec: FilterSpec, split, **kwargs):
    """Filter ``x`` and push the estimate through the shared separation steps."""
    from .separation import complete_separation

    q_hat = spec.apply(x)
    return complete_separation(x, q_hat, split, fit_start=0, params_used=spec,
                               method=spec.name, **kwargs)
