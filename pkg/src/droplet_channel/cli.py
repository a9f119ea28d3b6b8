"""Command line front end: ``run``, ``ensemble``, ``sweep`` and ``curve``."""

from __future__ import annotations

import argparse
import math
import sys

from . import engine
from .errors import (
    ChannelError, ConfigError, EnsembleError, InvalidParameterError, InvalidStepError, NumericalFailure,
    OutOfRegimeError, SingularGeometryError,
)
from .params import load_config_file

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


def parse_grid(text, kind=float):
    """``start:stop:step`` (stop included) or a comma separated list."""
    text = text.strip()
    if kind is str:
        return [v.strip() for v in text.split(",") if v.strip()]
    if ":" in text:
        try:
            start, stop, step = (float(v) for v in text.split(":"))
        except ValueError:
            raise InvalidParameterError(f"bad grid {text!r}; expected start:stop:step") from None
        if step <= 0 or stop < start:
            raise InvalidParameterError(f"bad grid {text!r}; need step > 0 and stop >= start")
        n = int(math.floor((stop - start) / step + 1e-9))
        values = [round(start + i * step, 12) for i in range(n + 1)]
    else:
        try:
            values = [float(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise InvalidParameterError(f"bad grid {text!r}") from None
    if kind is int:
        if any(v != int(v) for v in values):
            raise InvalidParameterError(f"grid {text!r} must contain integers")
        values = [int(v) for v in values]
    if not values:
        raise InvalidParameterError("empty grid")
    return values


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", encoding="utf-8", newline="")


def cmd_run(args):
    cfg = load_config_file(args.config)
    ts = engine.run_simulation(cfg, args.seed)
    out = _open_out(args.out)
    try:
        engine.write_csv(ts, out)
    finally:
        if out is not sys.stdout:
            out.close()
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            fh.write(engine.dumps_json(ts.summary()))


def cmd_ensemble(args):
    cfg = load_config_file(args.config)
    stats = engine.run_ensemble(cfg, args.runs, args.base_seed, workers=args.workers)
    doc = {"config_hash": cfg.digest(), "base_seed": args.base_seed, **stats.to_dict()}
    out = _open_out(args.out)
    try:
        out.write(engine.dumps_json(doc))
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_sweep(args):
    cfg = load_config_file(args.config)
    kind = {"x_R": float, "gamma": int, "theta0": float, "sex": str}[args.param]
    grid = parse_grid(args.grid, kind)
    if args.param == "theta0":
        # degrees on the command line, like theta0_deg in the config file
        result = engine.sweep(cfg, "theta0", [math.radians(v) for v in grid])
        result.outcomes = [
            {"theta0_deg": deg, **{k: v for k, v in o.items() if k != "theta0"}}
            for o, deg in zip(result.outcomes, grid)
        ]
    else:
        result = engine.sweep(cfg, args.param, grid)
    out = _open_out(args.out)
    try:
        engine.write_rows_csv(result.to_rows(), out)
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_curve(args):
    cfg = load_config_file(args.config)
    result = engine.probability_curve(cfg, parse_grid(args.x_grid), parse_grid(args.times))
    out = _open_out(args.out)
    try:
        engine.write_rows_csv(result.to_rows(), out)
    finally:
        if out is not sys.stdout:
            out.close()


def build_parser():
    p = argparse.ArgumentParser(prog="droplet-channel", description="Cough droplet transmission channel simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="single run, per-step CSV")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int, default=None, help="overrides controls.seed")
    r.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    r.add_argument("--summary", default=None, help="JSON summary path")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("ensemble", help="many seeded runs, JSON statistics")
    e.add_argument("--config", required=True)
    e.add_argument("--runs", type=int, required=True)
    e.add_argument("--base-seed", type=int, default=0)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_ensemble)

    s = sub.add_parser("sweep", help="infection outcome over a parameter grid")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True, choices=engine.SWEEP_PARAMETERS)
    s.add_argument("--grid", required=True, help="start:stop:step or comma list (theta0 in degrees); write --grid=-40:10:1 for a negative start")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("curve", help="infection probability vs distance for several times")
    c.add_argument("--config", required=True)
    c.add_argument("--x-grid", required=True)
    c.add_argument("--times", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_curve)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (NumericalFailure, EnsembleError, OutOfRegimeError, SingularGeometryError, InvalidStepError) as exc:
        # the last three can only surface mid-run, once the dynamics leave the model's range
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, InvalidParameterError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ChannelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
