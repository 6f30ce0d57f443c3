"""BSM-style CSV logs in, speed traces out.

Input rows are ``device_id,timestamp,speed_mps`` (timestamps in epoch seconds).
Trace files add a leading ``trip_id`` column and carry one row per sample.
"""
import csv
import io
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import FormatError
from .sampler import SpeedTrace

BSM_HEADER = ["device_id", "timestamp", "speed_mps"]
TRACE_HEADER = ["trip_id", "device_id", "timestamp", "speed_mps"]
GAP_TOLERANCE = 0.25  # fraction of the nominal sample period


@dataclass(frozen=True)
class BsmRecord:
    device_id: str
    timestamp: float
    speed_mps: float


@dataclass(frozen=True)
class ParseIssue:
    line: int
    message: str


def _text(stream):
    if isinstance(stream, io.TextIOBase):
        return stream
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    return io.TextIOWrapper(stream, encoding="utf-8", newline="")


def parse_bsm_csv(stream):
    """Read BSM rows from a UTF-8 byte (or text) stream.

    Returns ``(records, issues)``. Rows that fail to parse or break a record
    invariant are skipped and reported with their 1-based line number;
    parsing continues past them. An empty input yields no records; a
    non-empty input without the expected header raises ``FormatError``.
    """
    reader = csv.reader(_text(stream))
    header = next(reader, None)
    if header is None:
        return [], []
    if [h.strip() for h in header] != BSM_HEADER:
        raise FormatError(f"expected header {','.join(BSM_HEADER)!r}, got {','.join(header)!r}")
    records, issues = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            issues.append(ParseIssue(lineno, f"expected 3 fields, got {len(row)}"))
            continue
        device, ts, speed = (v.strip() for v in row)
        try:
            ts, speed = float(ts), float(speed)
        except ValueError as exc:
            issues.append(ParseIssue(lineno, str(exc)))
            continue
        if not device:
            issues.append(ParseIssue(lineno, "empty device_id"))
        elif not math.isfinite(ts):
            issues.append(ParseIssue(lineno, "non-finite timestamp"))
        elif not math.isfinite(speed) or speed < 0:
            issues.append(ParseIssue(lineno, f"invalid speed {speed}"))
        else:
            records.append(BsmRecord(device, ts, speed))
    return records, issues


def segment_trips(records, rate_hz=10.0) -> List[SpeedTrace]:
    """Split each device's stream wherever the sample spacing breaks.

    A new trip starts when the gap to the previous record of the same device
    differs from ``1 / rate_hz`` by more than a quarter period. Records are
    taken in the given order within each device. Trips are named
    ``<device_id>#<k>`` with ``k`` counting from 0 in stream order.
    """
    period = 1.0 / rate_hz
    by_device = OrderedDict()
    for rec in records:
        by_device.setdefault(rec.device_id, []).append(rec)

    traces = []
    for device, recs in by_device.items():
        ts = np.array([r.timestamp for r in recs])
        speeds = np.array([r.speed_mps for r in recs])
        breaks = np.flatnonzero(np.abs(np.diff(ts) - period) > GAP_TOLERANCE * period) + 1
        bounds = np.concatenate([[0], breaks, [len(recs)]])
        for k, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
            traces.append(SpeedTrace(f"{device}#{k}", device, float(ts[a]), speeds[a:b], rate_hz))
    return traces


def write_traces(traces, stream):
    """One row per sample; floats use repr() so a reread is bit-exact."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for t in traces:
        for ts, v in zip(t.timestamps(), t.speeds):
            writer.writerow([t.trip_id, t.device_id, repr(float(ts)), repr(float(v))])


def read_traces(stream, default_rate_hz=10.0):
    """Inverse of ``write_traces``.

    The sample rate is inferred per trip from the mean spacing over the whole
    trip, rounded to 1e-3 Hz: epoch timestamps carry ~1e-7 s of float error,
    which would otherwise leak into the rate. Single-sample trips get
    ``default_rate_hz``.
    """
    reader = csv.reader(_text(stream))
    header = next(reader, None)
    if header != TRACE_HEADER:
        raise FormatError(f"expected header {','.join(TRACE_HEADER)!r}, got {header!r}")
    rows = OrderedDict()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            trip, device, ts, v = row
            entry = rows.setdefault(trip, (device, [], []))
            entry[1].append(float(ts))
            entry[2].append(float(v))
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
    traces = []
    for trip, (device, ts, speeds) in rows.items():
        rate = default_rate_hz
        if len(ts) > 1:
            if not ts[-1] > ts[0]:
                raise FormatError(f"trip {trip!r}: timestamps do not advance")
            rate = round((len(ts) - 1) / (ts[-1] - ts[0]), 3)
        traces.append(SpeedTrace(trip, device, ts[0], np.array(speeds), rate))
    return traces


def traces_to_records(traces):
    """Flatten traces back to BSM records (inverse of ``segment_trips``)."""
    return [BsmRecord(t.device_id, float(ts), float(v))
            for t in traces for ts, v in zip(t.timestamps(), t.speeds)]
