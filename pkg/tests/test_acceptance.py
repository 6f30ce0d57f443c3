"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary section
"acceptance criteria" lists every line. Criterion 4 dominates the runtime
(about 1.5 minutes on one core).
"""
import os

import numpy as np
import pytest
from scipy.stats import spearmanr

from cvcs.cli import main as cli_main
from cvcs.ingestion import write_traces
from cvcs.metrics import bin_by_acceleration, bin_by_time_of_day, run_sweep
from cvcs.recovery import SolverConfig, build_measurement_operator, l0_solutions, recover_traces, solve_basis_pursuit
from cvcs.sampler import compress_trace, retained_fraction, select_indices
from cvcs.synthetic import SynthConfig, generate_day_scenario, generate_synthetic_traces
from cvcs.transform import coherence, dct_basis, dct_forward, dct_inverse

from conftest import make_trace

RATIOS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
POPULATED = 50  # samples; a bin must hold this many to count in criterion 6


def test_c1_dct_correctness(acceptance):
    rng = np.random.default_rng(1)
    worst_orth = worst_trip = worst_coh = 0.0
    for n in (100, 200, 500, 1000):
        psi = dct_basis(n)
        worst_orth = max(worst_orth, np.max(np.abs(psi.T @ psi - np.eye(n))))
        for _ in range(100):
            x = rng.standard_normal(n)
            worst_trip = max(worst_trip, np.max(np.abs(dct_inverse(dct_forward(x)) - x)))
        worst_coh = max(worst_coh, abs(coherence(psi) - np.sqrt(2)))
    ok = worst_orth < 1e-10 and worst_trip < 1e-10 and worst_coh <= 1e-12
    acceptance(1, "DCT orthonormality, round trip, coherence", ok,
               f"max|PsiT Psi - I| = {worst_orth:.1e}, round trip {worst_trip:.1e}, |mu - sqrt2| = {worst_coh:.1e}")
    assert ok


def test_c2_exact_sparse_recovery(acceptance):
    n, m, k = 64, 32, 5
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng([2, seed])
        idx = select_indices(n, m / n, "exact_m", rng)
        alpha = np.zeros(n)
        alpha[rng.choice(n, k, replace=False)] = rng.choice([-1.0, 1.0], k)
        op = build_measurement_operator(n, idx)
        res = solve_basis_pursuit(op, op.theta @ alpha, SolverConfig())
        hits += np.max(np.abs(res.alpha - alpha)) < 1e-5
    ok = hits >= 95
    acceptance(2, "planted K=5 recovery at n=64, m=32", ok, f"{hits}/100 seeds within 1e-5")
    assert ok


def test_c3_l1_l0_equivalence(acceptance):
    agree = unique = 0
    for seed in range(200):
        rng = np.random.default_rng([3, seed])
        n = int(rng.integers(8, 13))
        k = int(rng.integers(1, 3))
        m = int(rng.integers(2 * k + 2, n))
        idx = select_indices(n, m / n, "exact_m", rng)
        alpha = np.zeros(n)
        alpha[rng.choice(n, k, replace=False)] = rng.uniform(0.5, 2.0, k) * rng.choice([-1.0, 1.0], k)
        op = build_measurement_operator(n, idx)
        y = op.theta @ alpha
        sols = l0_solutions(op, y, k_max=2)
        if len(sols) != 1:
            continue
        unique += 1
        support, values = sols[0]
        res = solve_basis_pursuit(op, y, SolverConfig())
        agree += list(res.support()) == list(support) and np.max(np.abs(res.alpha - values)) < 1e-6
    rate = agree / unique
    ok = unique > 0 and rate >= 0.95
    acceptance(3, "l1 matches l0 oracle", ok, f"{agree}/{unique} unique-oracle instances ({rate:.1%}) of 200")
    assert ok


@pytest.fixture(scope="module")
def hundred_trips():
    return generate_synthetic_traces(SynthConfig(num_trips=100, rng_seed=2024))


def test_c4_rmse_trend(acceptance, hundred_trips):
    samples = sum(len(t) for t in hundred_trips)
    result = run_sweep(hundred_trips, [(200, round(200 * r)) for r in RATIOS], seeds=(0,))
    assert not result.errors, result.errors
    errors = [row.global_rmse for row in result.rows]
    monotone = all(a >= b for a, b in zip(errors, errors[1:]))
    ok = monotone and errors[-1] < 0.01 and errors[1] <= 0.10
    trend = ", ".join(f"{r}:{e:.4f}" for r, e in zip(RATIOS, errors))
    acceptance(4, "global RMSE non-increasing in ratio at n=200", ok,
               f"{samples} samples; {trend}; failed blocks {sum(r.failed_blocks for r in result.rows)}")
    assert ok


def _mean_block_time(traces, n, ratio, max_blocks):
    cts = [compress_trace(t, n, ratio, "bernoulli", 7) for t in traces]
    blocks = [b for ct in cts for b in ct.blocks][:max_blocks]
    cfg = SolverConfig()
    times = []
    for blk in blocks:
        res = solve_basis_pursuit(build_measurement_operator(n, blk.retained_indices), blk.retained_values, cfg)
        times.append(res.wall_time_s)
    return float(np.mean(times)), len(times)


def test_c5_recovery_time(acceptance, hundred_trips):
    t1000, k1000 = _mean_block_time(hundred_trips, 1000, 0.6, 20)
    small = {}
    for n in (100, 200):
        for r in (0.2, 0.6):
            small[(n, r)] = _mean_block_time(hundred_trips, n, r, 60)[0]
    ok = t1000 < 1.5 and all(t < 0.05 for t in small.values())
    detail = f"n=1000 ratio 0.6: {t1000 * 1e3:.0f} ms/block over {k1000} blocks; " + ", ".join(
        f"n={n} ratio {r}: {t * 1e3:.1f} ms" for (n, r), t in small.items())
    acceptance(5, "recovery time per block", ok, detail + f" ({os.cpu_count()} CPU visible)")
    assert ok


def test_c6_acceleration_bins(acceptance):
    traces = generate_synthetic_traces(SynthConfig(num_trips=60, rng_seed=11))
    recovered = [o.trace for o in recover_traces([compress_trace(t, 200, 0.2, "bernoulli", 1) for t in traces])]
    by = bin_by_acceleration(traces, recovered).by_label()
    smooth = max(by["[-0.1,0)"].rmse, by["[0,0.1)"].rmse)
    sharp = [b for b in by.values()
             if b.sample_count >= POPULATED and (b.lower >= 0.3 - 1e-9 or b.upper <= -0.3 + 1e-9)]
    lowest = min(sharp, key=lambda b: b.rmse)
    ok = len(sharp) > 0 and lowest.rmse > smooth
    acceptance(6, "sharp-acceleration bins exceed smooth bins", ok,
               f"smooth [-0.1,0) {by['[-0.1,0)'].rmse:.5f}, [0,0.1) {by['[0,0.1)'].rmse:.5f}; "
               f"lowest of {len(sharp)} |a|>=0.3 bins with >= {POPULATED} samples: {lowest.label} {lowest.rmse:.5f}")
    assert ok


def test_c7_time_of_day(acceptance):
    traces = generate_day_scenario(trips_per_period=10, rng_seed=0)
    recovered = [o.trace for o in recover_traces([compress_trace(t, 200, 0.2, "bernoulli", 0) for t in traces])]
    bins = [b for b in bin_by_time_of_day(traces, recovered).bins if b.sample_count]
    rho = spearmanr([b.std_speed for b in bins], [b.rmse for b in bins]).statistic
    ok = rho > 0
    worst = max(bins, key=lambda b: b.rmse)
    acceptance(7, "time-of-day std vs RMSE rank correlation", ok,
               f"Spearman {rho:.3f} over {len(bins)} bins; largest RMSE {worst.label} ({worst.rmse:.4f}, std {worst.std_speed:.2f})")
    assert ok


def test_c8_sampler_statistics(acceptance):
    ct = compress_trace(make_trace(np.ones(1_000_000)), 1000, 0.2, "bernoulli", seed=42)
    frac = retained_fraction(ct)
    trip = make_trace(np.ones(4967), trip_id="anchor#0")
    counts = []
    for seed in range(1000):
        c = compress_trace(trip, 4967, 0.2, "bernoulli", seed)
        counts.append(c.blocks[0].m)
    mean = float(np.mean(counts))
    ok = abs(frac - 0.2) <= 0.003 and abs(mean - 993) <= 0.01 * 993
    acceptance(8, "Bernoulli retention statistics", ok,
               f"fraction over 1e6 samples {frac:.5f}; mean kept of 4967 over 1000 seeds {mean:.1f} (anchor 993)")
    assert ok


def test_c9_pipeline_determinism(acceptance, tmp_path):
    traces = generate_synthetic_traces(SynthConfig(num_trips=8, duration_range_s=(100.0, 300.0), rng_seed=9))
    src = tmp_path / "traces.csv"
    with open(src, "w", encoding="utf-8", newline="") as fh:
        write_traces(traces, fh)
    n, m, seed = 200, 40, 17
    c, r, e = tmp_path / "c.csv", tmp_path / "r.csv", tmp_path / "e.csv"
    codes = [cli_main([str(a) for a in args]) for args in (
        ("compress", src, "-o", c, "--n", n, "--m", m, "--seed", seed),
        ("recover", c, "-o", r),
        ("evaluate", src, r, "-o", e, "--n", n),
    )]
    cli_rmse = float(e.read_text().splitlines()[-1].split(",")[2])
    sweep_rmse = run_sweep(traces, [(n, m)], seeds=[seed]).rows[0].global_rmse
    diff = abs(cli_rmse - sweep_rmse)
    same = []
    for out in (c, r, e):
        replay = tmp_path / ("replay-" + out.name)
        codes.append(cli_main(["rerun", str(out) + ".manifest", "-o", str(replay)]))
        same.append(out.read_bytes() == replay.read_bytes())
    ok = codes == [0] * 6 and diff <= 1e-12 and all(same)
    acceptance(9, "CLI pipeline reproduces in-process sweep", ok,
               f"CLI {cli_rmse!r} vs sweep {sweep_rmse!r} (diff {diff:.1e}); reruns byte-identical: {all(same)}")
    assert ok
