"""Real-time compressive sampling of speed streams.

A trace is cut into consecutive blocks of ``n`` samples. Within each block a
sample is either kept or dropped; the kept (index, value) pairs are all that
would leave the vehicle. Two selection rules are supported:

``bernoulli``
    Each sample is kept independently when a uniform draw on [0, 1) is
    ``<= ratio``. This is the rule an on-board unit can apply one sample at a
    time without buffering.
``exact_m``
    Exactly ``round(ratio * n)`` distinct positions per block, uniformly
    without replacement. This matches the row-selection model under which
    subsampled-unitary recovery guarantees are stated.

Randomness for a block is derived from ``(seed, trip_id, block_index)`` so
any block can be regenerated in isolation. Samples past the last full block
are kept raw in ``CompressedTrace.tail``.
"""
import csv
import hashlib
import io
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import FormatError, InvalidArgumentError, UndefinedMetricError

SAMPLING_MODES = ("bernoulli", "exact_m")
TAIL_BLOCK_INDEX = -1
_SEED_LIMIT = 2**64


@dataclass
class SpeedTrace:
    """One trip of uniformly spaced speed samples (m/s)."""

    trip_id: str
    device_id: str
    start_time: float
    speeds: np.ndarray
    sample_rate_hz: float = 10.0

    def __post_init__(self):
        self.speeds = np.asarray(self.speeds, dtype=float)
        if self.speeds.ndim != 1 or self.speeds.size == 0:
            raise InvalidArgumentError(f"trace {self.trip_id!r}: speeds must be a non-empty vector")
        if not np.all(np.isfinite(self.speeds)) or np.any(self.speeds < 0):
            raise InvalidArgumentError(f"trace {self.trip_id!r}: speeds must be finite and >= 0")
        if not self.sample_rate_hz > 0:
            raise InvalidArgumentError(f"trace {self.trip_id!r}: sample rate must be positive")

    def __len__(self):
        return self.speeds.size

    def timestamps(self):
        return self.start_time + np.arange(self.speeds.size) / self.sample_rate_hz


@dataclass
class CompressedBlock:
    block_index: int
    n: int
    retained_indices: np.ndarray
    retained_values: np.ndarray
    ratio: float
    sampling_mode: str
    rng_seed: int

    @property
    def m(self):
        return int(self.retained_indices.size)


@dataclass
class CompressedTrace:
    trip_id: str
    device_id: str
    start_time: float
    sample_rate_hz: float
    n: int
    blocks: List[CompressedBlock] = field(default_factory=list)
    tail: Optional[np.ndarray] = None

    @property
    def num_samples(self):
        tail = 0 if self.tail is None else self.tail.size
        return len(self.blocks) * self.n + tail


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed < _SEED_LIMIT:
        raise InvalidArgumentError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def block_rng(seed, trip_id, block_index):
    """Independent generator for one block, keyed on (seed, trip, block)."""
    digest = hashlib.sha256(trip_id.encode("utf-8")).digest()
    trip_key = int.from_bytes(digest[:8], "little")
    return np.random.default_rng(np.random.SeedSequence([_check_seed(seed), trip_key, int(block_index)]))


def select_indices(n, ratio, mode, rng):
    """Positions kept within one block of length ``n``, strictly increasing."""
    if mode == "bernoulli":
        return np.flatnonzero(rng.random(n) <= ratio)
    if mode == "exact_m":
        m = int(round(ratio * n))
        return np.sort(rng.choice(n, size=m, replace=False))
    raise InvalidArgumentError(f"unknown sampling mode {mode!r}; expected one of {SAMPLING_MODES}")


def compress_trace(trace, n, ratio, mode="bernoulli", seed=0):
    """Subsample ``trace`` block by block.

    Parameters
    ----------
    trace : SpeedTrace
    n : int
        Block length, at least 2.
    ratio : float
        Nominal compression ratio ``M/N`` in (0, 1].
    mode : {"bernoulli", "exact_m"}
    seed : int
        Unsigned 64-bit master seed.

    Returns
    -------
    CompressedTrace
        Full blocks with retained samples copied exactly, plus the raw tail.
    """
    n = int(n)
    ratio = float(ratio)
    if n < 2:
        raise InvalidArgumentError(f"block length must be >= 2, got {n}")
    if not 0.0 < ratio <= 1.0:
        raise InvalidArgumentError(f"ratio must lie in (0, 1], got {ratio}")
    if mode not in SAMPLING_MODES:
        raise InvalidArgumentError(f"unknown sampling mode {mode!r}; expected one of {SAMPLING_MODES}")
    if mode == "exact_m" and round(ratio * n) < 1:
        raise InvalidArgumentError(f"exact_m mode keeps round({ratio} * {n}) = 0 samples per block")
    seed = _check_seed(seed)

    speeds = trace.speeds
    num_blocks = speeds.size // n
    blocks = []
    for b in range(num_blocks):
        idx = select_indices(n, ratio, mode, block_rng(seed, trace.trip_id, b))
        values = speeds[b * n:(b + 1) * n][idx].copy()
        blocks.append(CompressedBlock(b, n, idx, values, ratio, mode, seed))
    tail = speeds[num_blocks * n:].copy() if speeds.size % n else None
    return CompressedTrace(trace.trip_id, trace.device_id, trace.start_time,
                           trace.sample_rate_hz, n, blocks, tail)


def retained_fraction(ct):
    """Empirical ``M/N`` over full blocks; the raw tail is not counted."""
    if not ct.blocks:
        raise UndefinedMetricError(f"trace {ct.trip_id!r} has no full blocks")
    kept = sum(block.m for block in ct.blocks)
    return kept / (len(ct.blocks) * ct.n)


# --- text format -----------------------------------------------------------
#
# One CSV record per line. A trip opens with a header record whose first
# field is "@trip"; block records follow, then an optional tail record with
# block_index -1 whose indices field is empty. Floats are written with repr(),
# the shortest string that parses back to the identical double.

TRIP_MARKER = "@trip"
FILE_HEADER = ["trip_id", "block_index", "n", "ratio", "mode", "seed", "indices", "values"]


def _fmt(x):
    return repr(float(x))


def _join(values, fmt):
    return ";".join(fmt(v) for v in values)


def _split(field_text, conv):
    return [conv(v) for v in field_text.split(";")] if field_text else []


def write_compressed(traces, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(FILE_HEADER)
    for ct in traces:
        writer.writerow([TRIP_MARKER, ct.trip_id, ct.device_id, _fmt(ct.start_time),
                         _fmt(ct.sample_rate_hz), ct.n])
        for blk in ct.blocks:
            writer.writerow([ct.trip_id, blk.block_index, blk.n, _fmt(blk.ratio), blk.sampling_mode,
                             blk.rng_seed, _join(blk.retained_indices, str),
                             _join(blk.retained_values, _fmt)])
        if ct.tail is not None:
            first = ct.blocks[0] if ct.blocks else None
            writer.writerow([ct.trip_id, TAIL_BLOCK_INDEX, ct.n,
                             _fmt(first.ratio) if first else "", first.sampling_mode if first else "",
                             first.rng_seed if first else "", "", _join(ct.tail, _fmt)])


def dumps_compressed(traces):
    buf = io.StringIO()
    write_compressed(traces, buf)
    return buf.getvalue()


def read_compressed(stream):
    """Parse the block text format back into a list of ``CompressedTrace``."""
    reader = csv.reader(stream)
    header = next(reader, None)
    if header != FILE_HEADER:
        raise FormatError(f"expected header {','.join(FILE_HEADER)!r}, got {header!r}")
    traces = []
    current = None
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            if row[0] == TRIP_MARKER:
                _, trip_id, device_id, start, rate, n = row
                current = CompressedTrace(trip_id, device_id, float(start), float(rate), int(n))
                traces.append(current)
                continue
            trip_id, bidx, n, ratio, mode, seed, indices, values = row
            if current is None or trip_id != current.trip_id:
                raise FormatError(f"record for {trip_id!r} outside its trip header")
            bidx, n = int(bidx), int(n)
            if n != current.n:
                raise FormatError(f"block length {n} differs from trip header {current.n}")
            vals = np.array(_split(values, float), dtype=float)
            if bidx == TAIL_BLOCK_INDEX:
                current.tail = vals
                continue
            if bidx != len(current.blocks):
                raise FormatError(f"block_index {bidx} out of sequence")
            idx = np.array(_split(indices, int), dtype=np.int64)
            if idx.size != vals.size:
                raise FormatError("indices and values differ in length")
            if idx.size and (idx[0] < 0 or idx[-1] >= n or np.any(np.diff(idx) <= 0)):
                raise FormatError("indices must be strictly increasing within [0, n)")
            current.blocks.append(CompressedBlock(bidx, n, idx, vals, float(ratio), mode, int(seed)))
        except FormatError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
    return traces


def loads_compressed(text):
    return read_compressed(io.StringIO(text))
