"""Command line interface: ``quorum-staleness {pmf,staleness,simulate,tune}``.

Every command prints one record, JSON by default::

    {"schema_version": "1", "command": ..., "inputs": {...}, "results": {...}}

or, with ``--format csv``, a header row plus one row per table entry with the
inputs repeated on every row. Floats carry 12 significant digits in both.

Options can also come from ``--config FILE`` (a JSON object keyed by option
name, dashes or underscores). Precedence: command-line flag, then config
file, then built-in default. ``QUORUM_STALENESS_SEED`` sets the default seed
for ``simulate``.

Exit codes: 0 success, 2 invalid parameters, 3 method does not cover the
configuration, 4 numerical instability.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from .errors import NumericalInstabilityError, UnsupportedMethodError, ValidationError
from .model import DelayModel, QuorumSpec
from .quorum_pmf import mean_quorum_size, quorum_size_at_read_pmf, quorum_size_pmf
from .sim import SimConfig, default_seed, estimate_pt
from .staleness import exact_pt, staleness, worst_case_bound
from .tune import OBJECTIVES, TuningRequest, tune

SCHEMA_VERSION = "1"
EXIT_VALIDATION, EXIT_UNSUPPORTED, EXIT_NUMERICAL = 2, 3, 4

METHOD_CHOICES = ("auto", "exact", "closed", "general", "bound", "sim")


def fmt(x):
    """Round floats to 12 significant digits; leave other values alone."""
    if isinstance(x, float):
        if not math.isfinite(x):
            return x
        return float(f"{x:.12g}")
    return x


def _rounded(obj):
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return fmt(obj)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(f"{self.prog}: error: {message}") from None


def _sweep(text):
    try:
        start, stop, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected start:stop:step") from None
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError("need step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(count)]


def build_parser():
    parser = _Parser(prog="quorum-staleness", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="JSON file with option values")
        p.add_argument("--format", choices=("json", "csv"))
        p.add_argument("--n", type=int, help="replica count N")

    p = sub.add_parser("pmf", help="distribution of the write-quorum size S(t)")
    common(p)
    p.add_argument("--w", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--at-read-j", dest="at_read_j", type=int,
                   help="evaluate S(t + Z_(j)) at the j-th fastest read reply")
    p.add_argument("--xi", type=float, help="read rate (required with --at-read-j)")

    p = sub.add_parser("staleness", help="stale-read probability p_t")
    common(p)
    p.add_argument("--w", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--xi", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--method", choices=METHOD_CHOICES)
    p.add_argument("--t-sweep", dest="t_sweep", type=_sweep, help="start:stop:step")
    p.add_argument("--trials", type=int, help="trials for --method sim")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of p_t")
    common(p)
    p.add_argument("--w", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--xi", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--chunks", type=int)
    p.add_argument("--write-shift", dest="write_shift", type=float)
    p.add_argument("--read-shift", dest="read_shift", type=float)

    p = sub.add_parser("tune", help="Pareto set of (W, R, t) meeting a staleness target")
    common(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--xi", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--objective", choices=OBJECTIVES)
    p.add_argument("--evaluator", choices=("exact", "general"))
    return parser


DEFAULTS = {
    "format": "json",
    "t": 0.0,
    "lam": 1.0,
    "xi": 1.0,
    "r": 1,
    "method": "auto",
    "trials": 1_000_000,
    "chunks": 1,
    "write_shift": 0.0,
    "read_shift": 0.0,
    "t_max": math.inf,
    "objective": "min_read_latency",
    "evaluator": "exact",
}

_CONFIG_ALIASES = {"lambda": "lam", "at-read-j": "at_read_j"}


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError("config file must hold a JSON object")
    out = {}
    for key, value in data.items():
        key = _CONFIG_ALIASES.get(key, key).replace("-", "_")
        out[_CONFIG_ALIASES.get(key, key)] = value
    if "t_sweep" in out and isinstance(out["t_sweep"], str):
        out["t_sweep"] = _sweep(out["t_sweep"])
    return out


def resolve(args):
    """Merge flags over the config file over defaults."""
    values = dict(DEFAULTS)
    if args.command == "simulate":
        values["seed"] = default_seed()
    else:
        values["seed"] = 0
    if args.config:
        values.update(_load_config(args.config))
    for key, value in vars(args).items():
        if value is not None:
            values[key] = value
    return values


def _require(values, *names):
    for name in names:
        if values.get(name) is None:
            flag = "--lambda" if name == "lam" else "--" + name.replace("_", "-")
            raise ValidationError(f"missing required option {flag}")


# -- commands ---------------------------------------------------------------


def cmd_pmf(v):
    _require(v, "n", "w", "lam", "t")
    spec = QuorumSpec(v["n"], v["w"], max(1, v.get("at_read_j") or 1))
    inputs = {"n": spec.n, "w": spec.w, "lambda": float(v["lam"]), "t": float(v["t"])}
    if v.get("at_read_j") is not None:
        delays = DelayModel(v["lam"], v["xi"])
        inputs.update({"xi": delays.read_rate, "at_read_j": v["at_read_j"]})
        pmf = quorum_size_at_read_pmf(spec, delays, v["t"], v["at_read_j"])
    else:
        pmf = quorum_size_pmf(spec, v["lam"], v["t"])
    rows = [{"s": s, "probability": m} for s, m in pmf.items()]
    return inputs, {"rows": rows, "mean": mean_quorum_size(pmf)}


def _staleness_row(spec, delays, t, method, v):
    est = staleness(spec, delays, t, method, trials=v["trials"], seed=v["seed"])
    row = {"t": float(t), "p_t": est.probability, "method": est.method,
           "bound": worst_case_bound(spec).probability}
    if not delays.is_shifted:
        row["exact"] = exact_pt(spec, delays, t).probability
    if est.ci_halfwidth is not None:
        row["ci95_halfwidth"] = est.ci_halfwidth
    return row


def cmd_staleness(v):
    _require(v, "n", "w", "r", "lam", "xi")
    spec = QuorumSpec(v["n"], v["w"], v["r"])
    delays = DelayModel(v["lam"], v["xi"])
    inputs = {"n": spec.n, "w": spec.w, "r": spec.r, "lambda": delays.write_rate,
              "xi": delays.read_rate, "method": v["method"]}
    sweep = v.get("t_sweep")
    if sweep:
        inputs["t_sweep"] = [float(t) for t in sweep]
        rows = [_staleness_row(spec, delays, t, v["method"], v) for t in sweep]
    else:
        inputs["t"] = float(v["t"])
        rows = [_staleness_row(spec, delays, v["t"], v["method"], v)]
    return inputs, {"rows": rows}


def cmd_simulate(v):
    _require(v, "n", "w", "r", "lam", "xi", "t", "trials")
    spec = QuorumSpec(v["n"], v["w"], v["r"])
    delays = DelayModel(v["lam"], v["xi"], v["write_shift"], v["read_shift"])
    config = SimConfig(spec, delays, v["t"], v["trials"], v["seed"], v["chunks"])
    inputs = {"n": spec.n, "w": spec.w, "r": spec.r, "lambda": delays.write_rate,
              "xi": delays.read_rate, "t": config.t, "trials": config.trials,
              "seed": config.seed, "write_shift": delays.write_shift,
              "read_shift": delays.read_shift}
    result = estimate_pt(config).to_dict()
    return inputs, {"rows": [result]}


def cmd_tune(v):
    _require(v, "n", "lam", "xi", "epsilon")
    request = TuningRequest(
        n=v["n"], delays=DelayModel(v["lam"], v["xi"]), epsilon=float(v["epsilon"]),
        t_max=float(v["t_max"]), objective=v["objective"], evaluator=v["evaluator"],
    )
    result = tune(request)
    inputs = {"n": request.n, "lambda": request.delays.write_rate,
              "xi": request.delays.read_rate, "epsilon": request.epsilon,
              "t_max": request.t_max if math.isfinite(request.t_max) else None,
              "objective": request.objective, "evaluator": request.evaluator}
    rows = [vars(e).copy() for e in result.pareto]
    return inputs, {"rows": rows}


COMMANDS = {"pmf": cmd_pmf, "staleness": cmd_staleness, "simulate": cmd_simulate, "tune": cmd_tune}


def render(record, fmt_name):
    if fmt_name == "json":
        return json.dumps(_rounded(record), sort_keys=False) + "\n"
    inputs = _rounded(record["inputs"])
    inputs = {k: v for k, v in inputs.items() if not isinstance(v, list)}
    rows = _rounded(record["results"]["rows"])
    fields = list(inputs)
    for row in rows:
        fields += [k for k in row if k not in fields]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({**inputs, **{k: _csv_value(v) for k, v in row.items()}})
    return buf.getvalue()


def _csv_value(v):
    return repr(v) if isinstance(v, float) else v


def run(argv=None, out=None):
    """Entry point returning the exit code; output goes to ``out`` (stdout)."""
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return EXIT_VALIDATION
        return exc.code or 0
    try:
        values = resolve(args)
        if values["format"] not in ("json", "csv"):
            raise ValidationError("format must be json or csv")
        inputs, results = COMMANDS[args.command](values)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except UnsupportedMethodError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except NumericalInstabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    record = {"schema_version": SCHEMA_VERSION, "command": args.command,
              "inputs": inputs, "results": results}
    out.write(render(record, values["format"]))
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
