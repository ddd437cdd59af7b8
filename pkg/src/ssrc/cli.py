"""Command-line entry point: ``ssrc {generate,separate,bench,sweep}``.

Exit codes: 0 success, 1 other errors, 2 unreadable input or config,
3 degenerate input, 4 optimization failure, 5 more than 10% of bench trials
failed. Every output file records the config hash and base seed.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import replace
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .bench import SSRC, TrialRecord, aggregate, failure_fraction, make_realization, realization_seed, \
    run_bench, sweep_series
from .config import ExperimentConfig, load_config, config_from_dict
from .core import read_csv, split_series, write_csv
from .errors import ParseError, SSRCError
from .generators import measured_snr_db
from .metrics import jsd_samples, rmse
from .reservoir import EsnParams
from .separation import ssrc_separate
from .tuning import SearchSpace, Strategy, capacity_sweep, optimize, trials_to_csv

log = logging.getLogger("ssrc")

FAILURE_LIMIT = 0.10
EXIT_TOO_MANY_FAILURES = 5


# --- output helpers ----------------------------------------------------------------

def _header(cfg_hash, seed):
    return [f"config_hash={cfg_hash}", f"base_seed={seed}"]


def _write_csv(path, header_lines, columns, rows):
    lines = [f"# {h}" for h in header_lines] + [",".join(columns)]
    lines += rows
    Path(path).write_text("\n".join(lines) + "\n")


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _fmt(v):
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return ""
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _manifest(cfg: ExperimentConfig, command, extra=None):
    src = cfg.to_source()
    # the output location is not part of the experiment; keeps reruns elsewhere byte-identical
    del src["experiment"]["out"]
    m = {"command": command, "version": __version__, "config_hash": cfg.hash(),
         "base_seed": cfg.base_seed, "config": src}
    m.update(extra or {})
    return m


def _load(args) -> ExperimentConfig:
    if args.config is None:
        raise ParseError("--config is required for this command")
    path = Path(args.config)
    if path.suffix == ".json":
        try:
            cfg = config_from_dict(json.loads(path.read_text())["config"])
        except FileNotFoundError:
            raise ParseError(f"manifest not found: {path}") from None
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"{path}: not a manifest ({exc})") from None
    else:
        cfg = load_config(path)
    over = {}
    if args.seed is not None:
        over["base_seed"] = args.seed
    if args.out is not None:
        over["out"] = args.out
    if getattr(args, "noise_est", None) is not None:
        over["noise_estimate"] = args.noise_est
    return replace(cfg, **over) if over else cfg


def _outdir(cfg_out) -> Path:
    out = Path(cfg_out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- commands ----------------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg.out)
    h = cfg.hash()
    entries = []
    for c, sig in enumerate(cfg.signals):
        for i in range(cfg.realizations):
            seed = realization_seed(cfg.base_seed, i)
            series = make_realization(sig, cfg.length, seed, c)
            name = f"{sig.name}_{i:04d}.csv"
            write_csv(series, out / name, {"config_hash": h, "base_seed": cfg.base_seed, "seed": seed,
                                           "signal": sig.name})
            entries.append({"file": name, "signal": sig.name, "realization": i, "seed": seed,
                            "snr_db": measured_snr_db(series)})
    _write_json(out / "manifest.json", _manifest(cfg, "generate", {"datasets": entries}))
    print(f"wrote {len(entries)} series to {out}")
    return 0


def _esn_from_args(args) -> EsnParams:
    kw = {k: getattr(args, k) for k in ("size", "spectral_radius", "leak", "input_scale", "ridge",
                                        "connectivity", "washout") if getattr(args, k) is not None}
    kw["seed"] = args.seed if args.seed is not None else 0
    return EsnParams(**kw)


def cmd_separate(args) -> int:
    series = read_csv(args.input)
    x = series.observed
    vlen = args.validation_len if args.validation_len is not None else min(1000, x.size // 9)
    split = split_series(x, max(vlen, 1))
    seed = args.seed if args.seed is not None else 0
    out = _outdir(args.out or "separation")
    params = _esn_from_args(args)
    trials = None
    if args.tune:
        space = SearchSpace(base=params)
        params, trials = optimize(x, split, space, args.budget, Strategy(args.strategy), seed=seed,
                                  jobs=args.jobs)
    res = ssrc_separate(x, params, split, convention=args.noise_est)
    body = res.to_dict()
    if series.truth_signal is not None:
        v = split.validation
        body["rmse_truth"] = rmse(res.q_hat[v], series.truth_signal[v])
    if series.truth_noise is not None:
        truth = series.truth_noise
        if args.noise_est == "misfit" and series.noise_kind_truth is not None \
                and series.noise_kind_truth.value == "multiplicative":
            truth = truth - 1.0
        body["jsd"] = jsd_samples(res.xi_hat, truth[res.xi_index])
    settings = {"params": _esn_from_args(args).to_dict(), "tune": args.tune, "budget": args.budget,
                "strategy": args.strategy, "validation_len": split.validation_len,
                "noise_estimate": args.noise_est}
    cfg_hash = hashlib.sha256(json.dumps(settings, sort_keys=True).encode()).hexdigest()[:16]
    body.update(config_hash=cfg_hash, base_seed=seed, settings=settings, input=Path(args.input).name)
    _write_json(out / "result.json", body)
    hdr = [f"input={Path(args.input).name}"] + _header(cfg_hash, seed)
    _write_csv(out / "reconstruction.csv", hdr, ["i", "x", "q_hat"],
               [f"{i},{x[i]!r},{_fmt(res.q_hat[i])}" for i in range(x.size)])
    _write_csv(out / "noise.csv", hdr + [f"kind={res.extra['noise_estimate_kind']}",
                                         f"convention={args.noise_est}"],
               ["i", "xi_hat"], [f"{i},{v!r}" for i, v in zip(res.xi_index, res.xi_hat)])
    if trials is not None:
        trials_to_csv(trials, out / "trials.csv", hdr)
    print(f"{res.noise_kind.value} (statistic {res.kind_statistic:.3f}); "
          f"validation error {res.validation_error:.6g}; results in {out}")
    return 0


def cmd_bench(args) -> int:
    cfg = _load(args)
    if not cfg.signals:
        raise ParseError("bench config defines no [[signals]]")
    out = _outdir(cfg.out)
    h = cfg.hash()
    hdr = _header(h, cfg.base_seed)
    records, chosen = run_bench(cfg, jobs=args.jobs)
    methods = [SSRC] + [b.name for b in cfg.baselines]
    signals = [s.name for s in cfg.signals]
    cells = aggregate(records, methods, signals)

    _write_csv(out / "raw.csv", hdr, TrialRecord.FIELDS, [r.row() for r in records])
    _write_csv(out / "table.csv", hdr,
               ["method", "signal", "n", "failures", "rmse_mean", "rmse_std", "jsd_mean", "id_accuracy", "flag"],
               [f"{c.method},{c.signal},{c.n},{c.failures},{_fmt(c.rmse_mean)},{_fmt(c.rmse_std)},"
                f"{_fmt(c.jsd_mean)},{_fmt(c.id_accuracy)},{c.flag}" for c in cells])
    by = {(c.method, c.signal): c for c in cells}
    for metric in ("rmse_mean", "jsd_mean"):
        _write_csv(out / f"table_{metric.split('_')[0]}.csv", hdr, ["method", *signals],
                   [",".join([m] + [_fmt(getattr(by[m, s], metric)) for s in signals]) for m in methods])
    prm = ["signal", "realization", "size", "spectral_radius", "leak", "input_scale", "ridge", "seed"]
    rows = []
    for (s, i), p in chosen.items():
        rows.append(",".join([s, str(i)] + ([] if p is None else
                    [str(p.size), repr(p.spectral_radius), repr(p.leak), repr(p.input_scale),
                     repr(p.ridge), str(p.seed)])))
    _write_csv(out / "ssrc_params.csv", hdr, prm, rows)
    frac = failure_fraction(records)
    _write_json(out / "manifest.json", _manifest(cfg, "bench", {
        "seeds": [realization_seed(cfg.base_seed, i) for i in range(cfg.realizations)],
        "failure_fraction": frac,
        "files": ["raw.csv", "table.csv", "table_rmse.csv", "table_jsd.csv", "ssrc_params.csv"]}))
    for m in methods:
        print(f"{m:>10} " + " ".join(f"{s}={by[m, s].rmse_mean:.4f}" for s in signals))
    if frac > FAILURE_LIMIT:
        print(f"error: {frac:.1%} of trials failed (limit {FAILURE_LIMIT:.0%})", file=sys.stderr)
        return EXIT_TOO_MANY_FAILURES
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if cfg.sweep is None:
        raise ParseError("config has no [sweep] section")
    sw = cfg.sweep
    out = _outdir(cfg.out)
    hdr = _header(cfg.hash(), cfg.base_seed)
    make = partial(sweep_series, family=sw.signal, params=dict(sw.signal_params),
                   noise_family=sw.noise_family, length=cfg.length)
    res = capacity_sweep(make, sw.noise_levels, sw.sizes, trials=sw.trials, seed=cfg.base_seed,
                         validation_len=cfg.validation_len, jobs=args.jobs)
    cols = ["noise_level", *[f"L{s}" for s in res.sizes]]

    def grid_rows(g):
        return [",".join([_fmt(lv)] + [_fmt(v) for v in row]) for lv, row in zip(res.noise_levels, g)]
    _write_csv(out / "sweep_validation.csv", hdr, cols, grid_rows(res.validation_error))
    _write_csv(out / "sweep_validation_normalized.csv", hdr, cols, grid_rows(res.validation_normalized))
    files = ["sweep_validation.csv", "sweep_validation_normalized.csv", "sweep_argmin.csv"]
    if res.truth_error is not None:
        _write_csv(out / "sweep_truth.csv", hdr, cols, grid_rows(res.truth_error))
        _write_csv(out / "sweep_truth_normalized.csv", hdr, cols, grid_rows(res.truth_normalized))
        files += ["sweep_truth.csv", "sweep_truth_normalized.csv"]
    t_arg = res.truth_argmin
    _write_csv(out / "sweep_argmin.csv", hdr, ["noise_level", "truth_argmin", "validation_argmin"],
               [f"{_fmt(lv)},{'' if t_arg is None else t_arg[k]},{res.validation_argmin[k]}"
                for k, lv in enumerate(res.noise_levels)])
    _write_json(out / "manifest.json", _manifest(cfg, "sweep", {"files": files}))
    print(f"truth argmin {None if t_arg is None else t_arg.tolist()}; "
          f"validation argmin {res.validation_argmin.tolist()}")
    return 0


# --- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment TOML (or a manifest.json from a previous run)")
    common.add_argument("--seed", type=int, help="override the base seed")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    common.add_argument("--out", help="output directory")
    common.add_argument("--noise-est", choices=["ratio", "misfit"], default=None,
                        help="multiplicative noise estimate: x/q_hat or (x-q_hat)/q_hat")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ssrc", description="Signal-noise separation with reservoir computing")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write synthetic datasets")
    sp = sub.add_parser("separate", parents=[common], help="separate one CSV series")
    sp.add_argument("input", help="CSV with columns i,x[,q,xi]")
    sp.add_argument("--validation-len", type=int)
    sp.add_argument("--tune", action="store_true", help="search hyperparameters on the validation error")
    sp.add_argument("--budget", type=int, default=40)
    sp.add_argument("--strategy", choices=[s.value for s in Strategy], default=Strategy.BAYES.value)
    for name, typ in (("size", int), ("spectral-radius", float), ("leak", float), ("input-scale", float),
                      ("ridge", float), ("connectivity", float), ("washout", int)):
        sp.add_argument(f"--{name}", type=typ)
    sub.add_parser("bench", parents=[common], help="run the SSRC vs. baselines benchmark")
    sub.add_parser("sweep", parents=[common], help="reservoir size vs. noise level sweep")
    return p


COMMANDS = {"generate": cmd_generate, "separate": cmd_separate, "bench": cmd_bench, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "separate" and args.noise_est is None:
        args.noise_est = "ratio"
    try:
        return COMMANDS[args.command](args)
    except SSRCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
