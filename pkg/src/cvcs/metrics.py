"""Recovery error metrics, (M, N) sweeps and binned error breakdowns.

The error metric everywhere is the l2-normalized RMSE
``||x - x_hat||_2 / ||x||_2``. Aggregates are computed on concatenated
samples (the "global" form). The per-block mean is reported separately,
never substituted for it.
"""
import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import List, Optional

import numpy as np

from .errors import InvalidArgumentError, UndefinedMetricError
from .recovery import SolverConfig, recover_traces
from .sampler import compress_trace


def rmse_normalized(x_original, x_recovered):
    x = np.asarray(x_original, dtype=float).reshape(-1)
    xr = np.asarray(x_recovered, dtype=float).reshape(-1)
    if x.size != xr.size:
        raise InvalidArgumentError(f"length mismatch: {x.size} vs {xr.size}")
    if x.size == 0:
        raise InvalidArgumentError("empty input")
    norm = np.linalg.norm(x)
    if norm == 0:
        raise UndefinedMetricError("original signal has zero norm")
    return float(np.linalg.norm(x - xr) / norm)


def acceleration_series(trace):
    """Per-sample acceleration (m/s^2): central differences, one-sided at the ends."""
    if len(trace) < 2:
        raise InvalidArgumentError("acceleration needs at least two samples")
    return np.gradient(trace.speeds, 1.0 / trace.sample_rate_hz, edge_order=1)


def block_samples(trace, n):
    """Speeds covered by full blocks of length ``n`` (the raw tail dropped)."""
    return trace.speeds[:(len(trace) // n) * n]


def global_rmse(originals, recovered, n=None):
    """Normalized RMSE over all traces concatenated.

    With ``n`` given, only samples inside full blocks count; tails are stored
    raw and would otherwise dilute the error.
    """
    if n is None:
        x = np.concatenate([t.speeds for t in originals])
        xr = np.concatenate([t.speeds for t in recovered])
    else:
        x = np.concatenate([block_samples(t, n) for t in originals])
        xr = np.concatenate([block_samples(t, n) for t in recovered])
    return rmse_normalized(x, xr)


# --- sweeps ----------------------------------------------------------------

@dataclass
class SweepRow:
    n: int
    m_nominal: int
    ratio: float
    mean_rmse: float
    global_rmse: float
    mean_recovery_time_s: float
    num_blocks: int
    failed_blocks: int
    empty_blocks: int
    retained_fraction: float


SWEEP_COLUMNS = [f.name for f in fields(SweepRow)]


@dataclass
class SweepResult:
    """One row per (n, m_nominal) grid cell.

    ``mean_rmse`` is the average of per-block normalized RMSEs (blocks whose
    original is all zeros are skipped); ``global_rmse`` is computed once on
    all block samples concatenated.
    """

    rows: List[SweepRow] = field(default_factory=list)
    errors: List[str] = field(default_factory=list)

    def to_csv(self, stream):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in self.rows:
            writer.writerow([_fmt_cell(getattr(row, c)) for c in SWEEP_COLUMNS])


def _fmt_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def evaluate_cell(traces, n, m_nominal, seeds, cfg, mode="bernoulli"):
    """Compress and recover every trace once per seed at ratio ``m_nominal / n``."""
    ratio = m_nominal / n
    block_errors = []
    times = []
    originals, recovered = [], []
    failed = empty = kept = total = 0
    for seed in seeds:
        cts = [compress_trace(t, n, ratio, mode, seed) for t in traces]
        outs = recover_traces(cts, cfg)
        for trace, ct, out in zip(traces, cts, outs):
            originals.append(trace)
            recovered.append(out.trace)
            for blk, res in zip(ct.blocks, out.blocks):
                kept += blk.m
                total += n
                if res.status == "failed":
                    failed += 1
                elif res.status == "empty":
                    empty += 1
                else:
                    times.append(res.wall_time_s)
                seg = trace.speeds[blk.block_index * n:(blk.block_index + 1) * n]
                if np.any(seg):
                    block_errors.append(rmse_normalized(
                        seg, out.trace.speeds[blk.block_index * n:(blk.block_index + 1) * n]))
    num_blocks = total // n
    if num_blocks == 0:
        raise InvalidArgumentError(f"no trace has a full block of length {n}")
    return SweepRow(
        n=n,
        m_nominal=m_nominal,
        ratio=ratio,
        mean_rmse=float(np.mean(block_errors)) if block_errors else float("nan"),
        global_rmse=global_rmse(originals, recovered, n),
        mean_recovery_time_s=float(np.mean(times)) if times else float("nan"),
        num_blocks=num_blocks,
        failed_blocks=failed,
        empty_blocks=empty,
        retained_fraction=kept / total,
    )


def _cell_job(args):
    traces, n, m, seeds, cfg, mode = args
    try:
        return evaluate_cell(traces, n, m, seeds, cfg, mode), None
    except Exception as exc:  # one bad cell must not sink the sweep
        return None, f"cell (n={n}, m={m}): {type(exc).__name__}: {exc}"


def run_sweep(traces, grid, seeds=(0,), cfg=None, mode="bernoulli", jobs=1):
    """Evaluate each ``(n, m_nominal)`` cell; failures are logged, not raised."""
    cfg = cfg or SolverConfig()
    grid = [(int(n), int(m)) for n, m in grid]
    if not grid:
        raise InvalidArgumentError("sweep grid is empty")
    for n, m in grid:
        if not 0 < m <= n:
            raise InvalidArgumentError(f"grid cell (n={n}, m={m}) needs 0 < m <= n")
    jobs_args = [(traces, n, m, list(seeds), cfg, mode) for n, m in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_cell_job, jobs_args))
    else:
        outcomes = [_cell_job(a) for a in jobs_args]
    result = SweepResult()
    for row, err in outcomes:
        if row is not None:
            result.rows.append(row)
        if err is not None:
            result.errors.append(err)
    return result


def standard_grid(block_lengths=(100, 200, 500, 1000), ratios=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6)):
    """(n, m) pairs for every block length and compression ratio."""
    return [(n, int(round(r * n))) for n in block_lengths for r in ratios]


# --- binned breakdowns -------------------------------------------------------

@dataclass
class ErrorBin:
    label: str
    lower: float
    upper: float
    mean_speed: Optional[float]
    std_speed: Optional[float]
    rmse: Optional[float]
    sample_count: int


BIN_COLUMNS = ["bin_label", "bin_lower", "bin_upper", "mean_speed", "std_speed", "rmse", "sample_count"]


@dataclass
class BinnedErrorReport:
    key: str
    bins: List[ErrorBin] = field(default_factory=list)

    def to_csv(self, stream):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(BIN_COLUMNS)
        for b in self.bins:
            writer.writerow([b.label, _fmt_cell(b.lower), _fmt_cell(b.upper), _fmt_cell(b.mean_speed),
                             _fmt_cell(b.std_speed), _fmt_cell(b.rmse), b.sample_count])

    def by_label(self):
        return {b.label: b for b in self.bins}


def _summarize(label, lower, upper, x, xr):
    if x.size == 0:
        return ErrorBin(label, lower, upper, None, None, None, 0)
    norm = np.linalg.norm(x)
    rmse = float(np.linalg.norm(x - xr) / norm) if norm > 0 else None
    return ErrorBin(label, lower, upper, float(x.mean()), float(x.std()), rmse, int(x.size))


def _aligned(traces, recovered):
    if len(traces) != len(recovered):
        raise InvalidArgumentError("original and recovered trace lists differ in length")
    for t, r in zip(traces, recovered):
        if len(t) != len(r):
            raise InvalidArgumentError(f"trace {t.trip_id!r}: recovered length {len(r)} != {len(t)}")


def bin_by_time_of_day(traces, recovered, bin_hours=3, offset_hour=1, utc_offset_hours=0.0):
    """Group samples by local clock hour.

    Bins are ``bin_hours`` wide starting at ``offset_hour``; with the defaults
    they are 1-3, 4-6, 7-9, ..., 22-0, labelled by first and last whole hour.
    Each sample is placed by its own timestamp, not the trip start.
    """
    if bin_hours < 1 or 24 % bin_hours:
        raise InvalidArgumentError(f"bin_hours must divide 24, got {bin_hours}")
    _aligned(traces, recovered)
    hours = np.concatenate([np.floor(((t.timestamps() / 3600.0) + utc_offset_hours) % 24.0)
                            for t in traces]).astype(int)
    x = np.concatenate([t.speeds for t in traces])
    xr = np.concatenate([r.speeds for r in recovered])
    slot = ((hours - offset_hour) % 24) // bin_hours
    report = BinnedErrorReport("hour")
    for k in range(24 // bin_hours):
        lo = (offset_hour + k * bin_hours) % 24
        hi = (lo + bin_hours - 1) % 24
        mask = slot == k
        report.bins.append(_summarize(f"{lo}-{hi}", float(lo), float(lo + bin_hours), x[mask], xr[mask]))
    return report


def bin_by_acceleration(traces, recovered, bin_width=0.1, accel_range=None):
    """Group samples by the original trace's acceleration.

    Bins are half-open ``[k w, (k+1) w)``. Without ``accel_range`` they span
    every observed acceleration; with it, samples outside the range are left
    out of the report (and out of the counts).
    """
    if bin_width <= 0:
        raise InvalidArgumentError("bin_width must be positive")
    _aligned(traces, recovered)
    acc = np.concatenate([acceleration_series(t) for t in traces])
    x = np.concatenate([t.speeds for t in traces])
    xr = np.concatenate([r.speeds for r in recovered])
    k = np.floor(acc / bin_width).astype(np.int64)
    if accel_range is None:
        k_lo, k_hi = int(k.min()), int(k.max())
    else:
        k_lo = int(math.floor(accel_range[0] / bin_width))
        k_hi = int(math.ceil(accel_range[1] / bin_width)) - 1
    report = BinnedErrorReport("acceleration")
    for j in range(k_lo, k_hi + 1):
        lo, hi = round(j * bin_width, 10), round((j + 1) * bin_width, 10)
        mask = k == j
        report.bins.append(_summarize(f"[{lo:g},{hi:g})", lo, hi, x[mask], xr[mask]))
    return report
