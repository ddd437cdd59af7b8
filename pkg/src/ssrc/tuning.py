"""Hyperparameter search on the validation error and the capacity sweep.

Two strategies share one trial loop: i.i.d. random search, and a Gaussian
process surrogate with expected improvement after a random warm-up. Trial
``t`` of a search seeded with ``seed`` builds its reservoir from a seed derived
from ``(seed, t)``, so the whole trial log is a pure function of the inputs.
"""
from __future__ import annotations

import enum
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.stats import norm, spearmanr

from .core import Split, split_series
from .errors import OptimizationError, SSRCError
from .metrics import rmse
from .reservoir import EsnParams
from .separation import ssrc_separate

log = logging.getLogger(__name__)


class Strategy(str, enum.Enum):
    RANDOM = "random"
    BAYES = "bayes"


@dataclass(frozen=True)
class SearchSpace:
    """Bounds for the tuned ``EsnParams`` fields.

    ``size`` and ``ridge`` are searched on a log scale (size rounded to an
    integer), the rest uniformly. Fields of ``base`` not listed here are
    passed through unchanged.
    """

    size: tuple = (30, 400)
    spectral_radius: tuple = (0.1, 1.5)
    leak: tuple = (0.05, 1.0)
    input_scale: tuple = (0.05, 2.0)
    ridge: tuple = (1e-8, 10.0)
    base: EsnParams = field(default_factory=EsnParams)

    DIMS = ("size", "spectral_radius", "leak", "input_scale", "ridge")
    LOG_DIMS = ("size", "ridge")

    def __post_init__(self):
        for name in self.DIMS:
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"empty interval for {name}: {(lo, hi)}")
            if name in self.LOG_DIMS and not lo > 0:
                raise ValueError(f"{name} is log-scaled and needs a positive lower bound")

    def _bounds(self, name):
        lo, hi = getattr(self, name)
        if name in self.LOG_DIMS:
            return np.log(lo), np.log(hi)
        return float(lo), float(hi)

    def to_params(self, u, seed: int) -> EsnParams:
        """Map a point of the unit cube to parameters."""
        vals = {}
        for name, ui in zip(self.DIMS, u):
            lo, hi = self._bounds(name)
            v = lo + float(ui) * (hi - lo)
            if name in self.LOG_DIMS:
                v = float(np.exp(v))
            vals[name] = v
        lo, hi = self.size
        vals["size"] = int(min(max(round(vals["size"]), lo), hi))
        vals["ridge"] = float(min(max(vals["ridge"], self.ridge[0]), self.ridge[1]))
        return replace(self.base, seed=int(seed), **vals)

    def contains(self, p: EsnParams) -> bool:
        return all(getattr(self, n)[0] <= getattr(p, n) <= getattr(self, n)[1] for n in self.DIMS)

    def to_dict(self):
        d = {n: list(getattr(self, n)) for n in self.DIMS}
        d["base"] = self.base.to_dict()
        return d


@dataclass
class Trial:
    index: int
    params: EsnParams
    validation_error: float = float("nan")
    wall_time: float = 0.0
    error: Optional[str] = None
    u: Optional[np.ndarray] = None

    @property
    def ok(self):
        return self.error is None


def trial_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


class ValidationObjective:
    """SSRC validation error of a parameter set on a fixed series (picklable)."""

    def __init__(self, x, split: Split):
        self.x = np.asarray(x, dtype=float)
        self.split = split

    def __call__(self, params: EsnParams) -> float:
        return ssrc_separate(self.x, params, self.split).validation_error


def _evaluate(objective, index, params, u):
    t0 = time.perf_counter()
    trial = Trial(index=index, params=params, u=u)
    try:
        value = float(objective(params))
        if not np.isfinite(value) or value < 0:
            raise ValueError(f"objective returned {value!r}")
        trial.validation_error = value
    except (SSRCError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        trial.error = f"{type(exc).__name__}: {exc}"
    trial.wall_time = time.perf_counter() - t0
    return trial


# --- GP surrogate ------------------------------------------------------------------

LENGTH_SCALE = 0.2
GP_NOISE = 1e-6
N_WARMUP = 10
N_CANDIDATES = 1000


def _se_kernel(A, B, length=LENGTH_SCALE):
    d2 = np.sum(A * A, 1)[:, None] + np.sum(B * B, 1)[None, :] - 2 * A @ B.T
    return np.exp(-0.5 * np.maximum(d2, 0.0) / length ** 2)


def gp_posterior(X, y, Xs, length=LENGTH_SCALE, noise=GP_NOISE):
    """Zero-mean GP on standardized targets; returns mean and std at ``Xs``
    on the original target scale."""
    mu, sd = y.mean(), y.std()
    sd = sd if sd > 0 else 1.0
    z = (y - mu) / sd
    K = _se_kernel(X, X, length) + noise * np.eye(len(X))
    cf = linalg.cho_factor(K, lower=True)
    alpha = linalg.cho_solve(cf, z)
    Ks = _se_kernel(Xs, X, length)
    mean = Ks @ alpha
    v = linalg.solve_triangular(cf[0], Ks.T, lower=True)
    var = np.maximum(1.0 - np.sum(v * v, 0), 1e-12)
    return mu + sd * mean, sd * np.sqrt(var)


def expected_improvement(mean, std, best):
    """EI for minimization."""
    imp = best - mean
    z = imp / std
    return imp * norm.cdf(z) + std * norm.pdf(z)


def optimize(x=None, split: Optional[Split] = None, space: SearchSpace = SearchSpace(),
             budget: int = 40, strategy=Strategy.BAYES, seed: int = 0,
             objective: Optional[Callable[[EsnParams], float]] = None, jobs: int = 1):
    """Minimize the validation error over ``space``.

    Returns ``(best_params, trials)``; ``trials`` has exactly ``budget``
    entries, failed ones carrying their error message. ``objective`` replaces
    the SSRC validation error (used by tests). ``jobs > 1`` evaluates the
    pre-drawn random-search points (or the warm-up batch) in worker processes.
    """
    strategy = Strategy(strategy)
    if budget < 5:
        raise ValueError("budget must be >= 5")
    if objective is None:
        if x is None or split is None:
            raise ValueError("need either (x, split) or an objective")
        objective = ValidationObjective(x, split)
    rng = np.random.default_rng([int(seed), 0xB0])
    dim = len(SearchSpace.DIMS)

    def point(i, u):
        return space.to_params(u, trial_seed(seed, i)), u

    def run_batch(start, U):
        pts = [point(start + j, u) for j, u in enumerate(U)]
        if jobs > 1 and len(pts) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futs = [pool.submit(_evaluate, objective, start + j, p, u) for j, (p, u) in enumerate(pts)]
                return [f.result() for f in futs]
        return [_evaluate(objective, start + j, p, u) for j, (p, u) in enumerate(pts)]

    if strategy is Strategy.RANDOM:
        trials = run_batch(0, rng.random((budget, dim)))
    else:
        n_warm = min(N_WARMUP, budget)
        trials = run_batch(0, rng.random((n_warm, dim)))
        for i in range(n_warm, budget):
            cand = rng.random((N_CANDIDATES, dim))
            good = [t for t in trials if t.ok]
            if len(good) >= 2:
                X = np.array([t.u for t in good])
                y = np.log(np.array([t.validation_error for t in good]) + 1e-300)
                mean, std = gp_posterior(X, y, cand)
                u = cand[int(np.argmax(expected_improvement(mean, std, y.min())))]
            else:
                u = cand[0]
            trials.extend(run_batch(i, [u]))
    for t in trials:
        log.debug("trial %d: %s err=%s %.2fs", t.index, t.params, t.validation_error if t.ok else t.error, t.wall_time)
    good = [t for t in trials if t.ok]
    if not good:
        raise OptimizationError("all trials failed", causes=[t.error for t in trials])
    best = min(good, key=lambda t: (t.validation_error, t.index))
    return best.params, trials


def trials_to_csv(trials: Sequence[Trial], path, header_lines=()):
    cols = ["trial", *SearchSpace.DIMS, "seed", "validation_error", "error"]
    lines = [f"# {h}" for h in header_lines] + [",".join(cols)]
    for t in trials:
        p = t.params
        vals = [str(t.index), str(p.size), repr(p.spectral_radius), repr(p.leak), repr(p.input_scale),
                repr(p.ridge), str(p.seed), repr(t.validation_error) if t.ok else "",
                (t.error or "").replace(",", ";").replace("\n", " ")]
        lines.append(",".join(vals))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# --- capacity sweep ----------------------------------------------------------------

@dataclass
class SweepResult:
    noise_levels: np.ndarray
    sizes: np.ndarray
    validation_error: np.ndarray  # (levels, sizes), mean over trials
    truth_error: Optional[np.ndarray]

    @staticmethod
    def _row_normalize(grid):
        return grid - grid.min(axis=1, keepdims=True)

    @property
    def validation_normalized(self):
        return self._row_normalize(self.validation_error)

    @property
    def truth_normalized(self):
        return None if self.truth_error is None else self._row_normalize(self.truth_error)

    @property
    def validation_argmin(self):
        return self.sizes[np.argmin(self.validation_error, axis=1)]

    @property
    def truth_argmin(self):
        return None if self.truth_error is None else self.sizes[np.argmin(self.truth_error, axis=1)]

    def argmin_rank_correlation(self) -> float:
        """Spearman correlation between the two argmin columns across noise levels."""
        if self.truth_error is None:
            return float("nan")
        return float(spearmanr(self.truth_argmin, self.validation_argmin).correlation)


def _sweep_cell(make_series, level, size, trial, seed, base: EsnParams, validation_len):
    ts = trial_seed(seed, trial)
    q, x = make_series(level, ts)
    split = split_series(x, validation_len)
    res = ssrc_separate(x, replace(base, size=int(size), seed=ts), split)
    truth = None if q is None else rmse(res.q_hat[split.validation], q[split.validation])
    return res.validation_error, truth


def capacity_sweep(make_series: Callable, noise_levels: Sequence[float], sizes: Sequence[int],
                   trials: int = 3, seed: int = 0, base: EsnParams = EsnParams(),
                   validation_len: int = 1000, jobs: int = 1) -> SweepResult:
    """Mean validation and truth error on a (noise level x reservoir size) grid.

    ``make_series(level, seed) -> (q or None, x)`` produces one realization.
    Trial ``t`` uses the same derived seed in every cell, so cells differ only
    by level and size (common random numbers).
    """
    levels = np.asarray(noise_levels, dtype=float)
    sizes = np.asarray(sizes, dtype=int)
    if levels.size == 0 or sizes.size == 0 or trials < 1:
        raise ValueError("sweep grids must be non-empty")
    tasks = [(li, si, t) for li in range(levels.size) for si in range(sizes.size) for t in range(trials)]
    args = [(make_series, levels[li], sizes[si], t, seed, base, validation_len) for li, si, t in tasks]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_sweep_cell, *zip(*args)))
    else:
        out = [_sweep_cell(*a) for a in args]
    val = np.zeros((levels.size, sizes.size))
    tru = np.zeros((levels.size, sizes.size))
    have_truth = True
    for (li, si, _t), (v, tr) in zip(tasks, out):
        val[li, si] += v / trials
        if tr is None:
            have_truth = False
        else:
            tru[li, si] += tr / trials
    return SweepResult(levels, sizes, val, tru if have_truth else None)
