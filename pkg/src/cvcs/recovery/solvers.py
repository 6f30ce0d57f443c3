"""Basis pursuit solvers: minimize ||alpha||_1 subject to theta @ alpha = y.

Three interchangeable back ends share one entry point:

``ipm_bp``
    Mehrotra predictor-corrector interior point on the split LP
    ``alpha = p - q``, ``p, q >= 0``. Each iteration factors an ``m x m``
    normal matrix, so the cost is O(m^2 n) per step and the step count is
    nearly independent of size. Default.
``admm_bp``
    ADMM splitting between the affine constraint set and the l1 norm, with
    over-relaxation and residual balancing. Stops on a certified duality gap
    or an exact optimality certificate on the current support.
``linprog_bp``
    The same split LP handed to HiGHS. Slow for large blocks, but an
    independent reference for the other two.

All solvers work on ``y`` rescaled to unit norm; the problem is positively
homogeneous, so the solution is scaled back at the end.
"""
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linprog

from ..errors import ConvergenceError, InvalidArgumentError, NoMeasurementsError
from ..transform import dct_inverse

ALGORITHMS = ("ipm_bp", "admm_bp", "linprog_bp")


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str = "ipm_bp"
    eq_tolerance: float = 1e-6
    gap_tolerance: float = 1e-6
    max_iterations: int = 5000
    admm_penalty: float = 1.0
    zero_threshold: float = 1e-8
    normalize_columns: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidArgumentError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        for name in ("eq_tolerance", "gap_tolerance", "admm_penalty", "zero_threshold"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be positive")
        if self.max_iterations < 1:
            raise InvalidArgumentError("max_iterations must be >= 1")


@dataclass
class RecoveryResult:
    alpha: np.ndarray
    x_hat: np.ndarray
    residual: float
    iterations: int
    wall_time_s: float
    algorithm: str = ""
    status: str = "ok"  # "ok", "empty" (no samples kept, filled), "failed"
    block_index: int = -1
    message: str = field(default="", repr=False)

    def support(self, zero_threshold=1e-8):
        scale = max(1.0, float(np.abs(self.alpha).max(initial=0.0)))
        return np.flatnonzero(np.abs(self.alpha) > zero_threshold * scale)


def relative_residual(theta, alpha, y):
    return float(np.linalg.norm(theta @ alpha - y) / max(1.0, np.linalg.norm(y)))


class _Affine:
    """Projection onto {a : A a = b} for a full-row-rank A."""

    def __init__(self, A, orthonormal):
        self.A = A
        self._gram = None if orthonormal else sla.cho_factor(A @ A.T)

    def solve_gram(self, r):
        return r if self._gram is None else sla.cho_solve(self._gram, r)

    def project(self, a, b):
        return a + self.A.T @ self.solve_gram(b - self.A @ a)


def _support_solve(A, b, support):
    AS = A[:, support]
    # Candidates are always verified by the caller, so conditioning warnings are noise here.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        if AS.shape[0] == AS.shape[1]:
            try:
                return sla.solve(AS, b, check_finite=False)
            except (sla.LinAlgError, ValueError):
                return None
        coef, *_ = sla.lstsq(AS, b, lapack_driver="gelsy", check_finite=False)
    return coef


def _polish(A, b, a):
    """Snap a near-optimal point onto its support.

    The candidate replaces ``a`` only if it is feasible to roundoff and its l1
    norm is no larger, so polishing can never make the answer worse.
    """
    m, n = A.shape
    mag = np.abs(a)
    top = mag.max(initial=0.0)
    if top == 0:
        return a
    base = np.abs(a).sum()
    for rel in (1e-7, 1e-9):
        support = np.flatnonzero(mag > rel * top)
        if support.size > m:
            continue
        coef = _support_solve(A, b, support)
        if coef is None:
            continue
        cand = np.zeros(n)
        cand[support] = coef
        if (np.linalg.norm(A @ cand - b) <= 1e-12 * max(1.0, np.linalg.norm(b))
                and np.abs(cand).sum() <= base * (1 + 1e-12)):
            return cand
    return a


def _step_length(v, dv):
    neg = dv < 0
    if not neg.any():
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def _ipm(A, b, cfg, affine):
    m, n = A.shape
    N = 2 * n

    def apply_a(u):
        return A @ (u[:n] - u[n:])

    def apply_at(v):
        g = A.T @ v
        return np.concatenate([g, -g])

    c = np.ones(N)
    # Mehrotra's starting point from the least-squares solutions with D = I.
    cf = sla.cho_factor(2.0 * (A @ A.T))
    x = apply_at(sla.cho_solve(cf, b))
    lam = sla.cho_solve(cf, apply_a(c))
    s = c - apply_at(lam)
    x += max(-1.5 * x.min(), 0.0)
    s += max(-1.5 * s.min(), 0.0)
    xs = x @ s
    x += 0.5 * xs / s.sum()
    s += 0.5 * xs / x.sum()

    target = min(cfg.gap_tolerance, 1e-9)
    best_merit, best_x = np.inf, x
    stall = 0
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        rb = b - apply_a(x)
        rc = c - apply_at(lam) - s
        pobj, dobj = c @ x, b @ lam
        merit = max(np.linalg.norm(rb), np.linalg.norm(rc) / np.sqrt(N),
                    abs(pobj - dobj) / (1.0 + abs(pobj)))
        if merit < best_merit:
            best_merit, best_x, stall = merit, x.copy(), 0
        else:
            stall += 1
        # Early merit is not monotone; near the roundoff floor (~1e-9) the
        # normal matrix is too ill-conditioned to keep improving.
        if merit <= target or stall >= (3 if best_merit < 1e-6 else 10):
            break

        d = x / s
        M = (A * (d[:n] + d[n:])) @ A.T
        reg = 1e-14 * np.trace(M) / m
        while True:
            try:
                chol = sla.cho_factor(M + reg * np.eye(m), check_finite=False)
                break
            except sla.LinAlgError:
                reg *= 100.0

        def newton(rxs):
            rhs = rb - apply_a(rxs / s) + apply_a(d * rc)
            dl = sla.cho_solve(chol, rhs, check_finite=False)
            ds = rc - apply_at(dl)
            return (rxs - x * ds) / s, dl, ds

        dxa, _, dsa = newton(-x * s)
        ap, ad = _step_length(x, dxa), _step_length(s, dsa)
        mu = (x @ s) / N
        mu_aff = ((x + ap * dxa) @ (s + ad * dsa)) / N
        sigma = (mu_aff / mu) ** 3
        dx, dl, ds = newton(-x * s - dxa * dsa + sigma * mu)
        ap = min(1.0, 0.995 * _step_length(x, dx))
        ad = min(1.0, 0.995 * _step_length(s, ds))
        x = x + ap * dx
        lam = lam + ad * dl
        s = s + ad * ds

    alpha = affine.project(best_x[:n] - best_x[n:], b)
    alpha = _polish(A, b, alpha)
    if best_merit > cfg.gap_tolerance:
        raise ConvergenceError(f"interior point stalled at merit {best_merit:.2e} after {it} iterations",
                               alpha=alpha, iterations=it)
    return alpha, it


def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _certify(A, b, z, u, rho, affine):
    """Exact KKT check on the support of ``z``; returns the vertex or None."""
    m, n = A.shape
    support = np.flatnonzero(z)
    if support.size == 0 or support.size > m:
        return None
    coef = _support_solve(A, b, support)
    if coef is None or np.any(np.sign(coef) != np.sign(z[support])):
        return None
    cand = np.zeros(n)
    cand[support] = coef
    if np.linalg.norm(A @ cand - b) > 1e-12 * max(1.0, np.linalg.norm(b)):
        return None
    # Dual candidate from the scaled ADMM multiplier, corrected so that
    # A_S^T w equals sign(coef) exactly.
    AS = A[:, support]
    w = affine.solve_gram(A @ (rho * u))
    fix, *_ = sla.lstsq(AS.T @ AS, np.sign(coef) - AS.T @ w, check_finite=False)
    w = w + AS @ fix
    if np.abs(A.T @ w).max() > 1.0 + 1e-9:
        return None
    return cand


def _admm(A, b, cfg, affine, relax=1.6, check_every=10):
    rho = cfg.admm_penalty
    z = affine.project(np.zeros(A.shape[1]), b)
    u = np.zeros_like(z)
    x = z
    for it in range(1, cfg.max_iterations + 1):
        x = affine.project(z - u, b)
        x_relaxed = relax * x + (1.0 - relax) * z
        z_old = z
        z = _soft(x_relaxed + u, 1.0 / rho)
        u = u + x_relaxed - z
        if it % check_every:
            continue
        cert = _certify(A, b, z, u, rho, affine)
        if cert is not None:
            return cert, it
        # rho * u is a subgradient of ||z||_1 lying (approximately) in range(A^T);
        # rescaled to the unit ball it is dual feasible and gives a lower bound.
        w = affine.solve_gram(A @ u)
        g = np.abs(A.T @ w).max()
        lower = (b @ w) / g if g > 0 else 0.0
        upper = np.abs(x).sum()
        if upper - lower <= cfg.gap_tolerance * upper:
            return _polish(A, b, x), it
        r = np.linalg.norm(x - z)
        d = rho * np.linalg.norm(z - z_old)
        if r > 10.0 * d:
            rho *= 2.0
            u /= 2.0
        elif d > 10.0 * r:
            rho /= 2.0
            u *= 2.0
    raise ConvergenceError(f"ADMM did not reach gap {cfg.gap_tolerance:g} in {cfg.max_iterations} iterations",
                           alpha=x, iterations=cfg.max_iterations)


def _linprog(A, b, cfg):
    m, n = A.shape
    res = linprog(np.ones(2 * n), A_eq=np.hstack([A, -A]), b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0 or res.x is None:
        raise ConvergenceError(f"HiGHS: {res.message}", iterations=int(getattr(res, "nit", 0)))
    return res.x[:n] - res.x[n:], int(res.nit)


def solve_basis_pursuit(op, y, cfg=None):
    """Minimum-l1 DCT coefficients consistent with the retained samples.

    Parameters
    ----------
    op : MeasurementOperator
    y : array_like
        Retained sample values, one per row of ``op.theta``.
    cfg : SolverConfig, optional

    Returns
    -------
    RecoveryResult

    Raises
    ------
    NoMeasurementsError
        If the block kept no samples.
    ConvergenceError
        If the solver stops short of tolerance; carries the best iterate
        (already mapped to DCT coefficients) and its residual.
    """
    cfg = cfg or SolverConfig()
    y = np.asarray(y, dtype=float).reshape(-1)
    if op.m == 0:
        raise NoMeasurementsError("no retained samples in block")
    if y.size != op.m:
        raise InvalidArgumentError(f"expected {op.m} measurements, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise InvalidArgumentError("measurements contain non-finite values")

    start = time.perf_counter()
    A = op.theta
    scale = float(np.linalg.norm(y))
    iterations = 0
    if scale == 0.0:
        beta = np.zeros(op.n)
    elif op.m == op.n and op.orthonormal_rows:
        # Square orthonormal system: the only feasible point.
        beta = A.T @ y
    else:
        b = y / scale
        try:
            if cfg.algorithm == "linprog_bp":
                beta, iterations = _linprog(A, b, cfg)
            else:
                affine = _Affine(A, op.orthonormal_rows)
                solver = _ipm if cfg.algorithm == "ipm_bp" else _admm
                beta, iterations = solver(A, b, cfg, affine)
        except ConvergenceError as exc:
            if exc.alpha is not None:
                best = exc.alpha * scale
                exc.residual = relative_residual(A, best, y)
                exc.alpha = op.to_coefficients(best)
            raise
        beta = beta * scale

    residual = relative_residual(A, beta, y)
    alpha = op.to_coefficients(beta)
    elapsed = time.perf_counter() - start
    if residual > cfg.eq_tolerance:
        raise ConvergenceError(f"equality residual {residual:.2e} exceeds {cfg.eq_tolerance:g}",
                               alpha=alpha, residual=residual, iterations=iterations)
    return RecoveryResult(alpha, dct_inverse(alpha), residual, iterations, elapsed, cfg.algorithm)
