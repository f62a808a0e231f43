"""``occwalk`` command line: scaling tables, simulation dumps, experiment verdicts."""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import exact, oscillating
from . import walk as W
from .lab import EXPERIMENTS, ConfigError, ExperimentConfig, run_experiment
from .rng import resolve_seed
from .sequences import ScalingUndefinedError, parse_sequence, scaling_bundle

EXIT_PASS, EXIT_FAIL, EXIT_INFO = 0, 1, 2
VERDICT_EXIT = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "informational": EXIT_INFO}


class UsageError(Exception):
    pass


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if v is None:
        return ""
    return v


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _sequence(spec: str):
    try:
        return parse_sequence(spec)
    except (ValueError, OSError) as exc:
        raise UsageError(f"invalid --eps {spec!r}: {exc}") from None


def _horizon(n: int) -> int:
    if n < 1:
        raise UsageError(f"horizon must be a positive integer, got {n}")
    return n


# -- config files ----------------------------------------------------------

def load_config(path) -> dict:
    """Read ``key = value`` lines (an optional ``[run]`` header) or a JSON object."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return json.loads(text)
    cp = configparser.ConfigParser()
    cp.read_string(text if text.lstrip().startswith("[") else "[run]\n" + text)
    out = {}
    for section in cp.sections():
        for k, v in cp.items(section):
            out[k] = v
    return out


def _merge(args, cfg: dict, key: str, default=None, cast=lambda v: v):
    v = getattr(args, key, None)
    if v is not None:
        return v
    if key in cfg:
        return cast(cfg[key])
    return default


def _int_list(v):
    if isinstance(v, (list, tuple)):
        return [int(float(x)) for x in v]
    return [int(float(x)) for x in str(v).replace(",", " ").split()]


def _int_auto(v):
    return int(v, 0) if isinstance(v, str) else int(v)


def _parse_option(text: str):
    k, sep, v = text.partition("=")
    if not sep:
        raise UsageError(f"--option expects key=value, got {text!r}")
    try:
        return k, json.loads(v)
    except json.JSONDecodeError:
        return k, v


# -- subcommands -------------------------------------------------------------

def cmd_sequences(args) -> int:
    eps = _sequence(args.eps)
    rows = []
    for n in args.n:
        _horizon(n)
        try:
            b = scaling_bundle(eps, n)
        except ScalingUndefinedError as exc:
            raise UsageError(str(exc)) from None
        rows.append([n, eps(n), b.a_n, b.b_n, b.c_n, b.g_n, b.h_n])
    header = ["n", "eps_n", "a_n", "b_n", "c_n", "g_n", "h_n"]
    if args.format == "json":
        text = json.dumps({"schema": "occwalk/1", "eps": eps.spec(),
                           "rows": [dict(zip(header, r)) for r in rows]}, indent=2) + "\n"
    else:
        text = _csv_text(header, rows)
    _emit(text, args.output)
    return 0


def cmd_simulate(args) -> int:
    eps = _sequence(args.eps)
    n = _horizon(args.n)
    seed = resolve_seed(args.seed)
    W.set_workers(args.workers)
    if args.mode == "path":
        path = W.simulate_path(eps, n, seed, args.replicate, mode="path")
        rows = zip(range(n + 1), path.xs.tolist(), path.etas.tolist())
        _emit(_csv_text(["t", "x", "eta"], rows), args.output)
    elif args.mode == "excursions":
        recs = W.simulate_excursions(eps, budget=n, seed=seed, replicate=args.replicate)
        rows = [[r.k, r.sign, r.tau, r.max_abs, r.end_time] for r in recs]
        _emit(_csv_text(["k", "sign", "tau", "max_abs", "end_time"], rows), args.output)
    else:
        sb = W.summary_batch(eps, n, args.reps, seed, workers=args.workers)
        rows = zip(range(args.reps), sb.x.tolist(), sb.eta.tolist(), sb.max_x.tolist(),
                   sb.max_abs.tolist(), sb.last_zero.tolist())
        _emit(_csv_text(["replicate", "x", "eta", "max_x", "max_abs", "last_zero"], rows),
              args.output)
    return 0


def cmd_exact(args) -> int:
    d = args.delta
    try:
        if args.what == "stationary":
            mu = oscillating.stationary_measure(d)
            xs = range(-2 * (args.n // 2), 2 * (args.n // 2) + 1, 2)
            text = _csv_text(["x", "probability"], [[x, mu.pmf(x)] for x in xs])
        elif args.what == "tau":
            pmf = exact.tau_pmf(d)
            text = _pmf_csv(pmf)
        elif args.what == "max":
            text = _pmf_csv(exact.max_law(d, args.n))
        else:
            eps = _sequence(args.eps)
            text = _pmf_csv(exact.T_n_pmf(eps, _horizon(args.n)))
    except exact.CapacityError as exc:
        raise UsageError(str(exc)) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(text, args.output)
    return 0


def _pmf_csv(pmf) -> str:
    rows = [[int(v), p] for v, p in zip(pmf.values.tolist(), pmf.weights.tolist())]
    return _csv_text(["value", "probability"], rows) + f"# truncation_mass={pmf.truncation_mass:.17g}\n"


def cmd_verify(args) -> int:
    if args.experiment not in EXPERIMENTS:
        sys.stderr.write(f"unknown experiment {args.experiment!r}; known ids: "
                         f"{', '.join(EXPERIMENTS)}\n")
        return EXIT_INFO
    cfg = load_config(args.config) if args.config else {}
    options = dict(cfg.get("options", {})) if isinstance(cfg.get("options"), dict) else {}
    for text in args.option or []:
        k, v = _parse_option(text)
        options[k] = v
    horizons = _merge(args, cfg, "n", [], _int_list)
    for h in horizons:
        _horizon(h)
    ec = ExperimentConfig(
        eps=_merge(args, cfg, "eps", None, str),
        horizons=horizons,
        replicates=_merge(args, cfg, "reps", 0, lambda v: int(float(v))),
        seed=resolve_seed(_merge(args, cfg, "seed", None, _int_auto)),
        workers=_merge(args, cfg, "workers", None, int),
        options=options,
    )
    W.set_workers(ec.workers)
    try:
        rep = run_experiment(args.experiment, ec)
    except (ConfigError, ScalingUndefinedError) as exc:
        raise UsageError(str(exc)) from None
    _emit(rep.to_csv() if args.format == "csv" else rep.to_json() + "\n", args.output)
    return VERDICT_EXIT[rep.verdict]


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="occwalk",
                                description="Random walks whose drift toward 0 fades with visits to 0.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sequences", help="scaling table (eps_n, a_n, b_n, c_n, g_n, h_n)")
    s.add_argument("--eps", required=True, help="drift spec, e.g. power_law:0.5:1")
    s.add_argument("--n", type=int, nargs="+", required=True, help="horizons")
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--output", "-o")
    s.set_defaults(func=cmd_sequences)

    s = sub.add_parser("simulate", help="trajectory, excursion or summary dump")
    s.add_argument("--eps", required=True)
    s.add_argument("--n", type=int, required=True, help="time horizon")
    s.add_argument("--mode", choices=["path", "summary", "excursions"], default="summary")
    s.add_argument("--reps", type=int, default=1, help="replicates (summary mode)")
    s.add_argument("--replicate", type=int, default=0, help="replicate index (path/excursions)")
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--output", "-o")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("exact", help="exact laws as CSV")
    s.add_argument("what", choices=["stationary", "tau", "max", "T"])
    s.add_argument("--delta", type=float, default=0.5, help="constant drift (stationary/tau/max)")
    s.add_argument("--eps", default="power_law:0.5:1", help="drift spec (T)")
    s.add_argument("--n", type=int, default=20, help="radius / level / number of excursions")
    s.add_argument("--output", "-o")
    s.set_defaults(func=cmd_exact)

    s = sub.add_parser("verify", help="run a named experiment; exit 0 pass, 1 fail, 2 informational")
    s.add_argument("experiment", help=f"one of: {', '.join(EXPERIMENTS)}")
    s.add_argument("--config", help="key = value file or JSON object; flags override it")
    s.add_argument("--eps")
    s.add_argument("--n", type=int, nargs="+", help="horizons (or excursion counts)")
    s.add_argument("--reps", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--option", action="append", metavar="KEY=VALUE",
                   help="runner option, value parsed as JSON when possible")
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.add_argument("--output", "-o")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))     # exits with status 2


if __name__ == "__main__":
    sys.exit(main())
