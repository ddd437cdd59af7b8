"""Experiment configuration: a TOML file with nested sections.

Example::

    [experiment]
    name = "table1"
    length = 9000
    validation_len = 1000
    realizations = 100
    base_seed = 0
    out = "results/table1"
    noise_estimate = "ratio"        # or "misfit"

    [[signals]]                      # one table column per entry
    name = "lorenz"
    family = "lorenz"                # lorenz | sinusoid | mlogistic
    noise = { family = "lognormal", snr_db = 2.67 }

    [tuner]
    strategy = "bayes"               # or "random"
    budget = 40
    space = { size = [30, 400], ridge = [1e-8, 10.0] }

    [baselines]
    names = ["wavelet1", "wavelet2", "lowpass25", "lowpass50", "lowpass75", "median", "adaptive"]

    [sweep]
    signal = "lorenz"
    noise = { family = "lognormal" }
    noise_levels = [0.14, 0.38, 0.96]
    sizes = [50, 100, 150, 200, 250, 300]
    trials = 3

Signal entries accept the generator parameters as extra keys (``dt``,
``sigma``, ``rho``, ``beta``, ``observe``, ``transient_skip``, ``substeps``, ``amplitude``,
``period_samples``, ``r``, ``gamma_mem``) and ``randomize`` (default true),
which draws a fresh initial condition per realization.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import tomli

from .baselines import DEFAULT_BASELINES, FilterKind, FilterSpec, WaveletVariant
from .errors import ParseError, SchemaError
from .generators import NoiseSpec
from .tuning import SearchSpace, Strategy

SIGNAL_FAMILIES = ("lorenz", "sinusoid", "mlogistic")
SIGNAL_KEYS = {
    "lorenz": {"sigma", "rho", "beta", "dt", "observe", "transient_skip", "substeps"},
    "sinusoid": {"amplitude", "period_samples"},
    "mlogistic": {"r", "gamma_mem"},
}
NOISE_KEYS = {"family", "snr_db", "sigma_ln", "c", "s", "kind"}


@dataclass(frozen=True)
class SignalSpec:
    name: str
    family: str
    noise: NoiseSpec
    params: dict = field(default_factory=dict)
    randomize: bool = True

    def to_source(self):
        n = self.noise
        return {"name": self.name, "family": self.family, "randomize": self.randomize,
                **dict(sorted(self.params.items())),
                "noise": {"family": n.family.value, "snr_db": n.target_snr_db, "sigma_ln": n.sigma_ln,
                          "c": n.c, "s": n.s, "kind": n.kind.value}}


@dataclass(frozen=True)
class SweepSpec:
    signal: str = "lorenz"
    signal_params: dict = field(default_factory=dict)
    noise_family: str = "lognormal"
    noise_levels: tuple = (0.14, 0.38, 0.96)
    sizes: tuple = (50, 100, 150, 200, 250, 300)
    trials: int = 3


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    signals: tuple = ()
    length: int = 9000
    validation_len: int = 1000
    realizations: int = 100
    base_seed: int = 0
    out: str = "results"
    noise_estimate: str = "ratio"
    strategy: Strategy = Strategy.BAYES
    budget: int = 40
    space: SearchSpace = field(default_factory=SearchSpace)
    baselines: tuple = DEFAULT_BASELINES
    sweep: Optional[SweepSpec] = None

    def __post_init__(self):
        if self.realizations < 1:
            raise SchemaError("realizations must be >= 1")
        if self.length < 3 or not 1 <= self.validation_len < self.length - 1:
            raise SchemaError("need 1 <= validation_len < length - 1")
        if self.budget < 5:
            raise SchemaError("tuner budget must be >= 5")
        if self.noise_estimate not in ("ratio", "misfit"):
            raise SchemaError("noise_estimate must be 'ratio' or 'misfit'")
        names = [s.name for s in self.signals]
        if len(set(names)) != len(names):
            raise SchemaError("signal names must be unique")

    def to_source(self) -> dict:
        """The configuration in the input schema; ``config_from_dict`` inverts it."""
        d = {
            "experiment": {"name": self.name, "length": self.length, "validation_len": self.validation_len,
                           "realizations": self.realizations, "base_seed": self.base_seed,
                           "out": self.out, "noise_estimate": self.noise_estimate},
            "signals": [s.to_source() for s in self.signals],
            "tuner": {"strategy": Strategy(self.strategy).value, "budget": self.budget,
                      "space": {n: list(getattr(self.space, n)) for n in SearchSpace.DIMS}},
            "baselines": {"filters": [b.to_dict() for b in self.baselines]},
        }
        if self.sweep is not None:
            sw = self.sweep
            d["sweep"] = {"signal": sw.signal, "signal_params": dict(sw.signal_params),
                          "noise": {"family": sw.noise_family}, "noise_levels": list(sw.noise_levels),
                          "sizes": list(sw.sizes), "trials": sw.trials}
        return d

    def hash(self) -> str:
        """Digest of everything that affects results (the output path is excluded)."""
        src = self.to_source()
        del src["experiment"]["out"]
        blob = json.dumps(src, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --- parsing -----------------------------------------------------------------------

_BASELINE_NAMES = {
    "wavelet1": FilterSpec(FilterKind.WAVELET, variant=WaveletVariant.SOFT),
    "wavelet2": FilterSpec(FilterKind.WAVELET, variant=WaveletVariant.HARD),
    "median": FilterSpec(FilterKind.MEDIAN, window=5),
    "adaptive": FilterSpec(FilterKind.ADAPTIVE, half_width=10, order=3),
}


def baseline_from_name(name: str) -> FilterSpec:
    if name in _BASELINE_NAMES:
        return _BASELINE_NAMES[name]
    if name.startswith("lowpass") and name[7:].isdigit() and 0 < int(name[7:]) < 100:
        return FilterSpec(FilterKind.LOWPASS, fraction=int(name[7:]) / 100)
    raise SchemaError(f"unknown baseline {name!r}")


def _baseline(entry) -> FilterSpec:
    if isinstance(entry, str):
        return baseline_from_name(entry)
    try:
        return FilterSpec(**entry)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad baseline entry {entry!r}: {exc}") from None


def _noise(d, default_snr=None) -> NoiseSpec:
    unknown = set(d) - NOISE_KEYS
    if unknown:
        raise SchemaError(f"unknown noise keys {sorted(unknown)}")
    kw = dict(d)
    snr = kw.pop("snr_db", default_snr)
    if snr is None:
        raise SchemaError("noise needs snr_db")
    try:
        return NoiseSpec(target_snr_db=float(snr), **kw)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad noise spec {d!r}: {exc}") from None


def _signal(d) -> SignalSpec:
    d = dict(d)
    family = d.pop("family", None)
    if family not in SIGNAL_FAMILIES:
        raise SchemaError(f"signal family must be one of {SIGNAL_FAMILIES}, got {family!r}")
    name = d.pop("name", family)
    if "noise" not in d:
        raise SchemaError(f"signal {name!r} has no noise section")
    noise = _noise(d.pop("noise"))
    randomize = bool(d.pop("randomize", True))
    unknown = set(d) - SIGNAL_KEYS[family]
    if unknown:
        raise SchemaError(f"unknown keys for {family} signal: {sorted(unknown)}")
    return SignalSpec(name=name, family=family, noise=noise, params=d, randomize=randomize)


def _space(d) -> SearchSpace:
    kw = {}
    for key, val in d.items():
        if key not in SearchSpace.DIMS:
            raise SchemaError(f"unknown search-space key {key!r}")
        if not (isinstance(val, list) and len(val) == 2):
            raise SchemaError(f"search-space entry {key!r} must be [lo, hi]")
        kw[key] = tuple(val)
    try:
        return SearchSpace(**kw)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    known = {"experiment", "signals", "tuner", "baselines", "sweep"}
    unknown = set(raw) - known
    if unknown:
        raise SchemaError(f"unknown sections {sorted(unknown)}")
    exp = dict(raw.get("experiment", {}))
    kw = {}
    for key in ("name", "length", "validation_len", "realizations", "base_seed", "out", "noise_estimate"):
        if key in exp:
            kw[key] = exp.pop(key)
    if exp:
        raise SchemaError(f"unknown experiment keys {sorted(exp)}")
    kw["signals"] = tuple(_signal(s) for s in raw.get("signals", []))
    tuner = dict(raw.get("tuner", {}))
    if "strategy" in tuner:
        try:
            kw["strategy"] = Strategy(tuner.pop("strategy"))
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
    if "budget" in tuner:
        kw["budget"] = int(tuner.pop("budget"))
    if "space" in tuner:
        kw["space"] = _space(tuner.pop("space"))
    if tuner:
        raise SchemaError(f"unknown tuner keys {sorted(tuner)}")
    if "baselines" in raw:
        names = raw["baselines"].get("names", raw["baselines"].get("filters", []))
        kw["baselines"] = tuple(_baseline(b) for b in names)
    if "sweep" in raw:
        sw = dict(raw["sweep"])
        noise = sw.pop("noise", {})
        try:
            kw["sweep"] = SweepSpec(
                signal=sw.pop("signal", "lorenz"),
                signal_params=dict(sw.pop("signal_params", {})),
                noise_family=noise.get("family", "lognormal"),
                noise_levels=tuple(float(v) for v in sw.pop("noise_levels", SweepSpec.noise_levels)),
                sizes=tuple(int(v) for v in sw.pop("sizes", SweepSpec.sizes)),
                trials=int(sw.pop("trials", 3)))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"bad sweep section: {exc}") from None
        if sw:
            raise SchemaError(f"unknown sweep keys {sorted(sw)}")
        if kw["sweep"].signal not in SIGNAL_FAMILIES:
            raise SchemaError(f"unknown sweep signal {kw['sweep'].signal!r}")
    try:
        return ExperimentConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except FileNotFoundError:
        raise ParseError(f"config file not found: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return config_from_dict(raw)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    kw = {k: v for k, v in kw.items() if v is not None}
    return replace(cfg, **kw) if kw else cfg

