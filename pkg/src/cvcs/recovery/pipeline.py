from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List

import numpy as np

from ..errors import ConvergenceError
from ..sampler import SpeedTrace
from ..transform import dct_forward, dct_inverse
from .operator import build_measurement_operator
from .solvers import RecoveryResult, SolverConfig, solve_basis_pursuit


@dataclass
class TraceRecovery:
    """Recovered trace plus one ``RecoveryResult`` per full block."""

    trace: SpeedTrace
    blocks: List[RecoveryResult] = field(default_factory=list)

    @property
    def failures(self):
        return [r for r in self.blocks if r.status == "failed"]

    @property
    def empty_blocks(self):
        return [r for r in self.blocks if r.status == "empty"]


def recover_block(block, cfg):
    """Recover one ``CompressedBlock`` without raising on solver trouble.

    Convergence failures come back with ``status == "failed"`` and the best
    iterate as the estimate. Blocks that kept no samples come back with
    ``status == "empty"`` and NaN estimates; ``recover_trace`` fills them.
    """
    if block.m == 0:
        nan = np.full(block.n, np.nan)
        return RecoveryResult(nan, nan, 0.0, 0, 0.0, cfg.algorithm, "empty", block.block_index)
    op = build_measurement_operator(block.n, block.retained_indices, cfg.normalize_columns)
    try:
        result = solve_basis_pursuit(op, block.retained_values, cfg)
    except ConvergenceError as exc:
        alpha = exc.alpha if exc.alpha is not None else np.zeros(block.n)
        result = RecoveryResult(alpha, dct_inverse(alpha), exc.residual, exc.iterations, 0.0,
                                cfg.algorithm, "failed", message=str(exc))
    result.block_index = block.block_index
    return result


def _recover_many(blocks, cfg, jobs):
    if jobs <= 1 or len(blocks) <= 1:
        return [recover_block(b, cfg) for b in blocks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map() preserves input order, so the output is independent of scheduling.
        return list(pool.map(recover_block, blocks, [cfg] * len(blocks), chunksize=max(1, len(blocks) // (4 * jobs))))


def recover_trace(ct, cfg=None, jobs=1):
    """Rebuild a full ``SpeedTrace`` from a ``CompressedTrace``.

    Each block is solved independently and the estimates are concatenated in
    block order; the raw tail is appended unchanged. A block that kept no
    samples is filled with the mean of the nearest earlier recovered block
    (0 when there is none). Speeds are clipped at 0 in the assembled trace;
    the per-block results keep the unclipped estimates.

    Convergence failures do not abort the trace: the best iterate is used
    and the block is reported with ``status == "failed"``.
    """
    cfg = cfg or SolverConfig()
    return _assemble(ct, _recover_many(ct.blocks, cfg, jobs))


def recover_traces(cts, cfg=None, jobs=1):
    """Recover several trips; blocks from all trips share one worker pool."""
    cfg = cfg or SolverConfig()
    solved = _recover_many([b for ct in cts for b in ct.blocks], cfg, jobs)
    out = []
    pos = 0
    for ct in cts:
        k = len(ct.blocks)
        out.append(_assemble(ct, solved[pos:pos + k]))
        pos += k
    return out


def _assemble(ct, results):
    last_mean = 0.0
    for res in results:
        if res.status == "empty":
            fill = np.full(ct.n, last_mean)
            res.x_hat = fill
            res.alpha = dct_forward(fill)
        else:
            last_mean = float(np.mean(res.x_hat))
    pieces = [r.x_hat for r in results]
    if ct.tail is not None:
        pieces.append(ct.tail)
    speeds = np.maximum(np.concatenate(pieces), 0.0)
    trace = SpeedTrace(ct.trip_id, ct.device_id, ct.start_time, speeds, ct.sample_rate_hz)
    return TraceRecovery(trace, list(results))
