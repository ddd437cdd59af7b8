"""Benchmark runner: realizations, SSRC vs. baseline filters, and aggregation.

Realization ``i`` of signal column ``c`` is fully determined by
``base_seed + i`` and ``c``: separate child streams drive the signal's initial
condition, the noise, and the tuner. Tasks can therefore run in any order or
process and the aggregated tables do not depend on ``--jobs``.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import Optional

import numpy as np

from .baselines import run_baseline
from .config import ExperimentConfig, SignalSpec
from .core import LabeledSeries, NoiseKind, split_series, standardize
from .errors import SSRCError
from .generators import (LorenzParams, NoiseFamily, NoiseSpec, gen_highfreq_sin, gen_lorenz,
                         gen_mlogistic, mix, sample_noise)
from .metrics import jsd_samples, rmse
from .separation import SeparationResult, ssrc_separate
from .tuning import optimize

log = logging.getLogger(__name__)

STREAM_SIGNAL, STREAM_NOISE, STREAM_TUNER = 1, 2, 3
SSRC = "ssrc"


def realization_seed(base_seed: int, index: int) -> int:
    return int(base_seed) + int(index)


def stream(seed: int, column: int, purpose: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(column), int(purpose)])


def _int_seed(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1)[0])


# --- realizations ------------------------------------------------------------------

def clean_signal(family: str, params: dict, n: int, rng: Optional[np.random.Generator]) -> np.ndarray:
    """Standardized deterministic signal; ``rng`` (if given) randomizes the start."""
    if family == "lorenz":
        lp = LorenzParams(**params)
        if rng is not None:
            lp = replace(lp, initial_state=tuple(np.asarray(lp.initial_state) + rng.uniform(-1, 1, 3)))
        q = gen_lorenz(lp, n)
    elif family == "sinusoid":
        phase = 0.0 if rng is None else rng.uniform(0, 2 * np.pi)
        q = gen_highfreq_sin(n=n, phase=phase, **params)
    elif family == "mlogistic":
        kw = {} if rng is None else dict(zip(("q0", "q1"), rng.uniform(0.1, 0.9, 2)))
        q = gen_mlogistic(n=n, **params, **kw)
    else:
        raise ValueError(f"unknown signal family {family!r}")
    return standardize(q)[0]


def make_realization(signal: SignalSpec, length: int, seed: int, column: int = 0) -> LabeledSeries:
    rng = np.random.default_rng(stream(seed, column, STREAM_SIGNAL)) if signal.randomize else None
    q = clean_signal(signal.family, signal.params, length, rng)
    return mix(q, signal.noise, np.random.default_rng(stream(seed, column, STREAM_NOISE)))


# --- one realization ---------------------------------------------------------------

@dataclass
class TrialRecord:
    signal: str
    realization: int
    seed: int
    method: str
    rmse: float = math.nan
    jsd: float = math.nan
    kind: str = ""
    kind_correct: Optional[bool] = None
    validation_error: float = math.nan
    error: str = ""

    @property
    def ok(self):
        return not self.error

    FIELDS = ("signal", "realization", "seed", "method", "rmse", "jsd", "kind", "kind_correct",
              "validation_error", "error")

    def row(self):
        def fmt(v):
            if isinstance(v, float):
                return "" if math.isnan(v) else repr(v)
            if v is None:
                return ""
            if isinstance(v, bool):
                return str(int(v))
            return str(v).replace(",", ";").replace("\n", " ")
        return ",".join(fmt(getattr(self, f)) for f in self.FIELDS)


def truth_noise_for(series: LabeledSeries, convention: str) -> np.ndarray:
    xi = series.truth_noise
    if series.noise_kind_truth is NoiseKind.MULTIPLICATIVE and convention == "misfit":
        return xi - 1.0
    return xi


def score(series: LabeledSeries, res: SeparationResult, convention: str, rec: TrialRecord) -> TrialRecord:
    v = res.split.validation
    rec.rmse = rmse(res.q_hat[v], series.truth_signal[v])
    truth = truth_noise_for(series, convention)[res.xi_index]
    rec.jsd = jsd_samples(res.xi_hat, truth)
    rec.kind = res.noise_kind.value
    rec.kind_correct = res.noise_kind is series.noise_kind_truth
    rec.validation_error = res.validation_error
    return rec


def run_realization(cfg: ExperimentConfig, column: int, index: int):
    """SSRC plus every baseline on one realization; failures become records."""
    signal = cfg.signals[column]
    seed = realization_seed(cfg.base_seed, index)
    methods = [SSRC] + [b.name for b in cfg.baselines]
    base = dict(signal=signal.name, realization=index, seed=seed)
    try:
        series = make_realization(signal, cfg.length, seed, column)
        split = split_series(series.observed, cfg.validation_len)
    except SSRCError as exc:
        return [TrialRecord(method=m, error=f"{type(exc).__name__}: {exc}", **base) for m in methods], None
    x = series.observed
    records = []
    best = None
    rec = TrialRecord(method=SSRC, **base)
    try:
        best, _trials = optimize(x, split, cfg.space, cfg.budget, cfg.strategy,
                                 seed=_int_seed(stream(seed, column, STREAM_TUNER)))
        res = ssrc_separate(x, best, split, convention=cfg.noise_estimate)
        score(series, res, cfg.noise_estimate, rec)
    except (SSRCError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
    records.append(rec)
    for spec in cfg.baselines:
        rec = TrialRecord(method=spec.name, **base)
        try:
            score(series, run_baseline(x, spec, split, convention=cfg.noise_estimate), cfg.noise_estimate, rec)
        except (SSRCError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            rec.error = f"{type(exc).__name__}: {exc}"
        records.append(rec)
    return records, best


def run_bench(cfg: ExperimentConfig, jobs: int = 1, progress=None):
    """All (signal, realization) tasks; returns records sorted by task and the
    SSRC parameters chosen per task."""
    tasks = [(c, i) for c in range(len(cfg.signals)) for i in range(cfg.realizations)]
    fn = partial(run_realization, cfg)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(fn, *zip(*tasks)))
    else:
        results = []
        for c, i in tasks:
            results.append(fn(c, i))
            if progress:
                progress(c, i)
    records = [r for recs, _ in results for r in recs]
    chosen = {(cfg.signals[c].name, i): best for (c, i), (_, best) in zip(tasks, results)}
    return records, chosen


# --- aggregation -------------------------------------------------------------------

@dataclass
class TableCell:
    method: str
    signal: str
    n: int
    failures: int
    rmse_mean: float
    rmse_std: float
    jsd_mean: float
    id_accuracy: float

    @property
    def flag(self):
        return "n=1" if self.n == 1 else ""


def _mean(vals):
    return math.fsum(vals) / len(vals) if vals else math.nan


def aggregate(records, methods, signals):
    """Per (method, signal) means over successful records, in the given order."""
    cells = []
    for m in methods:
        for s in signals:
            rs = [r for r in records if r.method == m and r.signal == s]
            ok = [r for r in rs if r.ok]
            errs = [r.rmse for r in ok]
            mean = _mean(errs)
            std = math.sqrt(math.fsum((e - mean) ** 2 for e in errs) / (len(errs) - 1)) if len(errs) > 1 else math.nan
            cells.append(TableCell(
                method=m, signal=s, n=len(ok), failures=len(rs) - len(ok),
                rmse_mean=mean, rmse_std=std, jsd_mean=_mean([r.jsd for r in ok]),
                id_accuracy=_mean([1.0 if r.kind_correct else 0.0 for r in ok])))
    return cells


def failure_fraction(records) -> float:
    return sum(not r.ok for r in records) / len(records) if records else 0.0


# --- capacity sweep series -----------------------------------------------------------

def sweep_series(level: float, seed: int, family: str, params: dict, noise_family: str, length: int):
    """Additive noise scaled to sample std ``level`` on a standardized signal."""
    rng = np.random.default_rng(stream(seed, 0, STREAM_SIGNAL))
    q = clean_signal(family, params, length, rng)
    spec = NoiseSpec(NoiseFamily(noise_family), kind=NoiseKind.ADDITIVE)
    raw = sample_noise(spec, length, np.random.default_rng(stream(seed, 0, STREAM_NOISE)))
    if spec.family is NoiseFamily.GAMMA:
        raw = raw - 1.0
    if level == 0:
        return q, q.copy()
    return q, q + raw * (level / np.std(raw, ddof=1))
