"""Test signals, noise samplers and SNR-controlled mixing.

Signals: Lorenz-63 (RK4), a fast sinusoid, and a logistic map with a one-step
memory term. Noises: zero-mean shifted lognormal and bimodal Gaussian mixture
(additive), and mean-one gamma (multiplicative).

Gamma variates are drawn by inverse CDF from a fixed uniform stream, so the
shape parameter can be solved by bisection against a target SNR with common
random numbers (the SNR is then a smooth function of the shape).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from . import _kernels
from .core import LabeledSeries, NoiseKind, as_series
from .errors import ContractError, DivergenceError, UnreachableSNRError


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    dt: float = 0.02
    initial_state: tuple = (1.0, 1.0, 1.0)
    observe: str = "x"
    transient_skip: int = 1000
    # RK4 steps per output sample; the integration step is dt / substeps
    substeps: int = 4

    def __post_init__(self):
        if not self.dt > 0:
            raise ContractError("dt must be positive")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ContractError("substeps must be a positive integer")
        if self.transient_skip < 0:
            raise ContractError("transient_skip must be >= 0")
        if self.observe not in ("x", "y", "z"):
            raise ContractError(f"observe must be one of x, y, z; got {self.observe!r}")
        if len(self.initial_state) != 3:
            raise ContractError("initial_state must have 3 components")


def lorenz_trajectory(params: LorenzParams, n_steps: int, dt: Optional[float] = None) -> np.ndarray:
    """RK4 trajectory sampled every ``dt``, shape ``(n_steps + 1, 3)``, starting at the initial state."""
    dt = params.dt if dt is None else dt
    k = int(params.substeps)
    state0 = np.asarray(params.initial_state, dtype=float)
    traj = _kernels.lorenz_rk4(state0, float(params.sigma), float(params.rho),
                               float(params.beta), float(dt) / k, int(n_steps) * k)
    return traj[::k]


def gen_lorenz(params: LorenzParams = LorenzParams(), n: int = 9000) -> np.ndarray:
    if n < 2:
        raise ContractError("n must be >= 2")
    traj = lorenz_trajectory(params, params.transient_skip + n - 1)
    if not np.all(np.isfinite(traj)):
        raise DivergenceError("Lorenz integration produced non-finite state; reduce dt")
    col = "xyz".index(params.observe)
    return traj[params.transient_skip:, col].copy()


def gen_highfreq_sin(amplitude: float = 1.0, period_samples: float = 5.5,
                     phase: float = 0.0, n: int = 9000) -> np.ndarray:
    if period_samples <= 2:
        raise ContractError(f"period {period_samples} samples aliases (must exceed 2)")
    if n < 2:
        raise ContractError("n must be >= 2")
    i = np.arange(n)
    return amplitude * np.sin(2 * np.pi * i / period_samples + phase)


MLOGISTIC_TRANSIENT = 100


def gen_mlogistic(r: float = 4.0, gamma_mem: float = 0.3, n: int = 9000,
                  q0: float = 0.3, q1: float = 0.6) -> np.ndarray:
    """Logistic map with memory: ``q[i+1] = (1-g) r q[i](1-q[i]) + g q[i-1]``.

    The first ``MLOGISTIC_TRANSIENT`` iterates after ``q0, q1`` are discarded.
    """
    if not 0 < r <= 4:
        raise ContractError("r must lie in (0, 4]")
    if not 0 <= gamma_mem < 1:
        raise ContractError("gamma_mem must lie in [0, 1)")
    if n < 2:
        raise ContractError("n must be >= 2")
    total = MLOGISTIC_TRANSIENT + n
    q = np.empty(total + 2)
    q[0], q[1] = q0, q1
    a = (1.0 - gamma_mem) * r
    for i in range(1, total + 1):
        q[i + 1] = a * q[i] * (1.0 - q[i]) + gamma_mem * q[i - 1]
        if abs(q[i + 1]) > 10:
            raise DivergenceError(f"mLogistic iterate escaped [-10, 10] at step {i + 1}")
    return q[2 + MLOGISTIC_TRANSIENT:2 + MLOGISTIC_TRANSIENT + n].copy()


# --- noise -------------------------------------------------------------------------

class NoiseFamily(str, enum.Enum):
    LOGNORMAL = "lognormal"
    BIMODAL = "bimodal"
    GAMMA = "gamma"


_DEFAULT_KIND = {
    NoiseFamily.LOGNORMAL: NoiseKind.ADDITIVE,
    NoiseFamily.BIMODAL: NoiseKind.ADDITIVE,
    NoiseFamily.GAMMA: NoiseKind.MULTIPLICATIVE,
}


@dataclass(frozen=True)
class NoiseSpec:
    family: NoiseFamily
    target_snr_db: float = 0.0
    sigma_ln: float = 0.5
    c: float = 1.0
    s: float = 0.25
    k: float = 1.0
    kind: Optional[NoiseKind] = None

    def __post_init__(self):
        object.__setattr__(self, "family", NoiseFamily(self.family))
        kind = _DEFAULT_KIND[self.family] if self.kind is None else NoiseKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is NoiseKind.UNDETERMINED:
            raise ContractError("noise kind must be additive or multiplicative")
        if self.family is NoiseFamily.LOGNORMAL and not self.sigma_ln > 0:
            raise ContractError("lognormal sigma_ln must be positive")
        if self.family is NoiseFamily.BIMODAL and not (self.c > 0 and self.s > 0):
            raise ContractError("bimodal c and s must be positive")
        if self.family is NoiseFamily.GAMMA and not self.k > 0:
            raise ContractError("gamma shape k must be positive")
        if not np.isfinite(self.target_snr_db):
            raise ContractError("target_snr_db must be finite")


def _rng(seed):
    return np.random.default_rng(seed)


def _gamma_from_uniform(u, k):
    # mean-one gamma: shape k, scale 1/k
    return special.gammaincinv(k, u) / k


def sample_noise(spec: NoiseSpec, n: int, seed) -> np.ndarray:
    """Draw ``n`` noise samples; zero mean for lognormal/bimodal, mean one for gamma."""
    rng = _rng(seed)
    if spec.family is NoiseFamily.LOGNORMAL:
        s2 = spec.sigma_ln ** 2
        return rng.lognormal(0.0, spec.sigma_ln, n) - np.exp(s2 / 2)
    if spec.family is NoiseFamily.BIMODAL:
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return signs * spec.c + rng.normal(0.0, spec.s, n)
    u = rng.random(n)
    return _gamma_from_uniform(u, spec.k)


def snr_db(q, noise_component) -> float:
    q = np.asarray(q, dtype=float)
    noise_component = np.asarray(noise_component, dtype=float)
    if q.shape != noise_component.shape:
        raise ContractError("signal and noise must have equal lengths")
    vn = np.var(noise_component, ddof=1)
    if vn <= 0:
        raise ContractError("noise component has zero variance: SNR is infinite")
    return float(10 * np.log10(np.var(q, ddof=1) / vn))


def _solve_gamma_shape(q, u, target_db, lo=1e-3, hi=1e7, tol_db=1e-6, max_iter=200):
    """Bisection on log(k) so that the multiplicative SNR hits ``target_db``."""
    def measured(k):
        return snr_db(q, q * (_gamma_from_uniform(u, k) - 1.0))

    lo_db, hi_db = measured(lo), measured(hi)
    if not lo_db <= target_db <= hi_db:
        raise UnreachableSNRError(
            f"target {target_db} dB outside bracket [{lo_db:.3f}, {hi_db:.3f}] dB")
    a, b = np.log(lo), np.log(hi)
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        m_db = measured(np.exp(mid))
        if abs(m_db - target_db) < tol_db:
            break
        if m_db < target_db:
            a = mid
        else:
            b = mid
    return float(np.exp(mid))


def mix(q, spec: NoiseSpec, seed) -> LabeledSeries:
    """Corrupt ``q`` with noise at the target SNR of the noise spec.

    Additive: the sampled noise is rescaled so the SNR matches exactly.
    Multiplicative: the gamma shape is solved by bisection; ``spec.k`` is ignored.
    """
    q = as_series(q, "q")
    n = q.size
    if spec.kind is NoiseKind.ADDITIVE:
        if spec.family is NoiseFamily.GAMMA:
            raw = sample_noise(spec, n, seed) - 1.0
        else:
            raw = sample_noise(spec, n, seed)
        scale = np.sqrt(np.var(q, ddof=1) / (np.var(raw, ddof=1) * 10 ** (spec.target_snr_db / 10)))
        xi = raw * scale
        x = q + xi
    else:
        if spec.family is not NoiseFamily.GAMMA:
            raise ContractError("multiplicative mixing is only defined for gamma noise")
        u = _rng(seed).random(n)
        k = _solve_gamma_shape(q, u, spec.target_snr_db)
        xi = _gamma_from_uniform(u, k)
        x = q * xi
    return LabeledSeries(observed=x, truth_signal=q, truth_noise=xi, noise_kind_truth=spec.kind)


def measured_snr_db(series: LabeledSeries) -> float:
    """SNR of a labeled mix from its stored truth components."""
    q, xi = series.truth_signal, series.truth_noise
    if series.noise_kind_truth is NoiseKind.MULTIPLICATIVE:
        return snr_db(q, q * (xi - 1.0))
    return snr_db(q, xi)
