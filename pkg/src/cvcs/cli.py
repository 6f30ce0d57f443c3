"""Command-line pipeline: synth -> compress -> recover -> evaluate / sweep / analyze.

Every command that writes an output also writes ``<output>.manifest``, a flat
``key=value`` file with the command, its argv, the resolved parameters, the
tool version and the wall time. ``cvcs rerun <manifest>`` replays the argv.

Exit codes: 0 success, 1 usage error, 2 I/O or input-format error,
3 solver convergence failure (outputs are still written and flagged).
"""
import argparse
import io
import os
import shlex
import sys
import tempfile
import time

from . import __version__
from .errors import ConfigError, FormatError, InvalidArgumentError, UndefinedMetricError
from .ingestion import parse_bsm_csv, read_traces, segment_trips, write_traces
from .metrics import (bin_by_acceleration, bin_by_time_of_day, global_rmse, standard_grid,
                      rmse_normalized, run_sweep)
from .recovery import ALGORITHMS, SolverConfig, recover_traces
from .sampler import compress_trace, read_compressed, write_compressed
from .synthetic import SynthConfig, generate_day_scenario, generate_synthetic_traces

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_SOLVER = 0, 1, 2, 3
MANIFEST_SUFFIX = ".manifest"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# --- file helpers --------------------------------------------------------------

def _read_text(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return fh.read()


def _write_atomic(path, text):
    """Write via a temp file in the target directory so readers never see half a file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".cvcs-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _render(writer, *args):
    buf = io.StringIO()
    writer(*args, buf)
    return buf.getvalue()


def _load_traces(path):
    return read_traces(io.StringIO(_read_text(path)))


def write_manifest(path, command, argv, params, wall_time_s, extra=None):
    lines = [f"command={command}", f"argv={shlex.join(argv)}", f"version={__version__}"]
    lines += [f"{k}={_fmt_value(v)}" for k, v in params.items()]
    for k, v in (extra or {}).items():
        lines.append(f"{k}={_fmt_value(v)}")
    lines.append(f"wall_time_s={wall_time_s!r}")
    _write_atomic(path, "\n".join(lines) + "\n")


def read_manifest(path):
    out = {}
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"{path}:{lineno}: expected key=value")
        out[key] = value
    for key in ("command", "argv"):
        if key not in out:
            raise FormatError(f"{path}: missing {key!r}")
    return out


def _fmt_value(v):
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _solver_cfg(args):
    return SolverConfig(algorithm=args.solver, eq_tolerance=args.tol, gap_tolerance=args.gap_tol,
                        max_iterations=args.max_iter)


def _solver_params(cfg):
    return {"solver": cfg.algorithm, "eq_tolerance": cfg.eq_tolerance, "gap_tolerance": cfg.gap_tolerance,
            "max_iterations": cfg.max_iterations}


# --- commands --------------------------------------------------------------------
# Each returns (exit code, params dict, extra manifest fields); outputs are
# written by the command itself, the manifest by ``run``.

def cmd_synth(args):
    if args.scenario == "day":
        traces = generate_day_scenario(trips_per_period=args.trips, rng_seed=args.seed)
        params = {"scenario": "day", "trips_per_period": args.trips, "seed": args.seed}
    else:
        cfg = SynthConfig(num_trips=args.trips, duration_range_s=(args.min_duration, args.max_duration),
                          target_mean_mps=args.mean, target_std_mps=args.std,
                          max_accel_mps2=args.max_accel, smooth_fraction=args.smooth_fraction,
                          rng_seed=args.seed)
        traces = generate_synthetic_traces(cfg)
        params = {"scenario": "mixed", "num_trips": cfg.num_trips, "duration_range_s": cfg.duration_range_s,
                  "target_mean_mps": cfg.target_mean_mps, "target_std_mps": cfg.target_std_mps,
                  "max_accel_mps2": cfg.max_accel_mps2, "smooth_fraction": cfg.smooth_fraction,
                  "seed": cfg.rng_seed}
    _write_atomic(args.output, _render(write_traces, traces))
    return EXIT_OK, params, {"trips": len(traces), "samples": sum(len(t) for t in traces)}


def cmd_ingest(args):
    with open(args.input, "rb") as fh:
        records, issues = parse_bsm_csv(fh.read())
    for issue in issues:
        print(f"{args.input}:{issue.line}: skipped: {issue.message}", file=sys.stderr)
    traces = segment_trips(records, args.rate)
    _write_atomic(args.output, _render(write_traces, traces))
    return EXIT_OK, {"input": args.input, "rate_hz": args.rate}, {
        "records": len(records), "skipped_rows": len(issues), "trips": len(traces)}


def _resolve_ratio(args):
    if args.m is not None:
        if not 0 < args.m <= args.n:
            raise UsageError(f"--m must satisfy 0 < m <= n, got m={args.m}, n={args.n}")
        return args.m / args.n, args.m
    ratio = args.ratio if args.ratio is not None else 0.2
    return ratio, ratio * args.n


def cmd_compress(args):
    ratio, m = _resolve_ratio(args)
    traces = _load_traces(args.input)
    cts = [compress_trace(t, args.n, ratio, args.mode, args.seed) for t in traces]
    _write_atomic(args.output, _render(write_compressed, cts))
    kept = sum(b.m for ct in cts for b in ct.blocks)
    total = sum(b.n for ct in cts for b in ct.blocks)
    return EXIT_OK, {"input": args.input, "n": args.n, "ratio": ratio, "m": m, "mode": args.mode,
                     "seed": args.seed}, {"blocks": total // args.n, "retained_fraction": kept / total if total else ""}


def cmd_recover(args):
    cfg = _solver_cfg(args)
    cts = read_compressed(io.StringIO(_read_text(args.input)))
    outs = recover_traces(cts, cfg, jobs=args.jobs)
    _write_atomic(args.output, _render(write_traces, [o.trace for o in outs]))
    failed = [f"{o.trace.trip_id}:{r.block_index}" for o in outs for r in o.failures]
    empty = sum(len(o.empty_blocks) for o in outs)
    for name in failed:
        print(f"block {name} did not converge; best iterate written", file=sys.stderr)
    extra = {"status": "partial" if failed else "ok", "failed_blocks": failed, "empty_blocks": empty,
             "blocks": sum(len(o.blocks) for o in outs)}
    return (EXIT_SOLVER if failed else EXIT_OK), {"input": args.input, "jobs": args.jobs,
                                                 **_solver_params(cfg)}, extra


def _paired(args):
    originals = _load_traces(args.original)
    recovered = _load_traces(args.recovered)
    by_id = {t.trip_id: t for t in recovered}
    missing = [t.trip_id for t in originals if t.trip_id not in by_id]
    if missing:
        raise FormatError(f"{args.recovered}: missing trips {', '.join(missing[:5])}")
    return originals, [by_id[t.trip_id] for t in originals]


def cmd_evaluate(args):
    originals, recovered = _paired(args)
    n = args.n
    lines = ["trip_id,num_samples,rmse"]
    for t, r in zip(originals, recovered):
        x = t.speeds if n is None else t.speeds[:(len(t) // n) * n]
        xr = r.speeds if n is None else r.speeds[:(len(r) // n) * n]
        try:
            value = repr(rmse_normalized(x, xr)) if x.size else ""
        except UndefinedMetricError:
            value = ""
        lines.append(f"{t.trip_id},{x.size},{value}")
    total = global_rmse(originals, recovered, n)
    lines.append(f"ALL,{sum(len(t) if n is None else (len(t) // n) * n for t in originals)},{total!r}")
    _write_atomic(args.output, "\n".join(lines) + "\n")
    print(f"global_rmse={total!r}")
    return EXIT_OK, {"original": args.original, "recovered": args.recovered, "n": n}, {"global_rmse": total}


def cmd_sweep(args):
    traces = _load_traces(args.input)
    if args.grid == "standard":
        grid = standard_grid()
    else:
        if not args.n or not args.ratios:
            raise UsageError("--n and --ratios are required unless --grid standard")
        grid = [(n, int(round(r * n))) for n in args.n for r in args.ratios]
    cfg = _solver_cfg(args)
    result = run_sweep(traces, grid, seeds=args.seeds, cfg=cfg, mode=args.mode, jobs=args.jobs)
    _write_atomic(args.output, _render(result.to_csv))
    for err in result.errors:
        print(err, file=sys.stderr)
    params = {"input": args.input, "grid": [f"{n}:{m}" for n, m in grid], "seeds": args.seeds,
              "mode": args.mode, "jobs": args.jobs, **_solver_params(cfg)}
    extra = {"status": "partial" if result.errors else "ok", "failed_cells": len(result.errors)}
    return (EXIT_SOLVER if result.errors else EXIT_OK), params, extra


def cmd_analyze(args):
    originals, recovered = _paired(args)
    if args.by == "hour":
        report = bin_by_time_of_day(originals, recovered, args.bin_hours, args.offset_hour, args.utc_offset)
        params = {"by": "hour", "bin_hours": args.bin_hours, "offset_hour": args.offset_hour,
                  "utc_offset_hours": args.utc_offset}
    else:
        rng = None if args.accel_min is None else (args.accel_min, args.accel_max)
        report = bin_by_acceleration(originals, recovered, args.bin_width, rng)
        params = {"by": "acceleration", "bin_width": args.bin_width, "accel_range": rng}
    _write_atomic(args.output, _render(report.to_csv))
    return EXIT_OK, {"original": args.original, "recovered": args.recovered, **params}, {"bins": len(report.bins)}


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "compress": cmd_compress,
    "recover": cmd_recover,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
}


# --- parser -----------------------------------------------------------------------

def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_solver(p):
    p.add_argument("--solver", choices=ALGORITHMS, default="ipm_bp")
    p.add_argument("--tol", type=float, default=1e-6, help="equality-constraint tolerance")
    p.add_argument("--gap-tol", type=float, default=1e-6, help="relative duality-gap tolerance")
    p.add_argument("--max-iter", type=_positive_int, default=5000)


def build_parser():
    parser = _Parser(prog="cvcs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cvcs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate synthetic speed traces")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--scenario", choices=("mixed", "day"), default="mixed")
    p.add_argument("--trips", type=_positive_int, default=100,
                   help="number of trips (per period for --scenario day)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mean", type=float, default=17.23)
    p.add_argument("--std", type=float, default=10.83)
    p.add_argument("--max-accel", type=float, default=3.0)
    p.add_argument("--smooth-fraction", type=float, default=0.7)
    p.add_argument("--min-duration", type=float, default=200.0)
    p.add_argument("--max-duration", type=float, default=800.0)

    p = sub.add_parser("ingest", help="segment a BSM CSV log into trips")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--rate", type=float, default=10.0, help="nominal sample rate in Hz")

    p = sub.add_parser("compress", help="randomly subsample each block of every trip")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--n", type=_positive_int, default=200, help="block length")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--ratio", type=float, help="retained fraction m/n (default 0.2)")
    group.add_argument("--m", type=int, help="nominal retained samples per block")
    p.add_argument("--mode", choices=("bernoulli", "exact_m"), default="bernoulli")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("recover", help="reconstruct traces from a compressed file")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    _add_solver(p)
    p.add_argument("--jobs", type=_positive_int, default=1)

    p = sub.add_parser("evaluate", help="normalized RMSE per trip and overall")
    p.add_argument("original")
    p.add_argument("recovered")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--n", type=_positive_int, help="block length; restricts the error to full blocks")

    p = sub.add_parser("sweep", help="RMSE and timing over an (n, m) grid")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--grid", choices=("custom", "standard"), default="custom",
                   help="'standard' is n in {100,200,500,1000} by ratio in {0.1..0.6}")
    p.add_argument("--n", type=_positive_int, nargs="+")
    p.add_argument("--ratios", type=float, nargs="+")
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--mode", choices=("bernoulli", "exact_m"), default="bernoulli")
    _add_solver(p)
    p.add_argument("--jobs", type=_positive_int, default=1)

    p = sub.add_parser("analyze", help="RMSE binned by time of day or acceleration")
    p.add_argument("original")
    p.add_argument("recovered")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--by", choices=("hour", "acceleration"), required=True)
    p.add_argument("--bin-hours", type=_positive_int, default=3)
    p.add_argument("--offset-hour", type=int, default=1)
    p.add_argument("--utc-offset", type=float, default=0.0)
    p.add_argument("--bin-width", type=float, default=0.1)
    p.add_argument("--accel-min", type=float)
    p.add_argument("--accel-max", type=float)

    p = sub.add_parser("rerun", help="replay the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", help="write to this path instead of the recorded output")
    return parser


# --- driver -----------------------------------------------------------------------

def _replay_argv(args):
    manifest = read_manifest(args.manifest)
    argv = shlex.split(manifest["argv"])
    if not argv or argv[0] != manifest["command"]:
        raise FormatError(f"{args.manifest}: argv does not start with {manifest['command']!r}")
    if args.output:
        argv += ["--output", args.output]
    return argv


def run(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "rerun":
            return run(_replay_argv(args))
        if args.command == "analyze" and (args.accel_min is None) != (args.accel_max is None):
            raise UsageError("--accel-min and --accel-max go together")
        start = time.perf_counter()
        code, params, extra = COMMANDS[args.command](args)
        wall = time.perf_counter() - start
        params = {**params, "output": args.output}
        write_manifest(args.output + MANIFEST_SUFFIX, args.command, list(argv), params, wall, extra)
        return code
    except (UsageError, InvalidArgumentError, ConfigError) as exc:
        print(f"cvcs {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError, UndefinedMetricError) as exc:
        print(f"cvcs {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_IO


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        return run(list(argv))
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
