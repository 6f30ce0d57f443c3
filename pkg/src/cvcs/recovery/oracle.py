"""Exhaustive smallest-support solver for tiny instances.

Enumerates every support of size 0, 1, ..., k_max, fits each by least
squares and keeps the feasible ones. Used only as ground truth when checking
the l1 solvers, so the size limits are hard.
"""
from itertools import combinations

import numpy as np

from ..errors import InfeasibleError, InvalidArgumentError

MAX_ORACLE_N = 24
MAX_ORACLE_K = 3


def l0_solutions(op, y, k_max=2, feas_tol=1e-8):
    """All minimum-size feasible supports, best first.

    Returns a list of ``(support, alpha)`` pairs sharing the smallest feasible
    support size, ordered by l1 norm and then lexicographically by support.
    A single entry means the sparsest solution is unique.
    """
    if op.n > MAX_ORACLE_N or not 0 <= k_max <= MAX_ORACLE_K:
        raise InvalidArgumentError(f"oracle limited to n <= {MAX_ORACLE_N}, k_max <= {MAX_ORACLE_K}")
    y = np.asarray(y, dtype=float).reshape(-1)
    theta = op.theta
    bound = feas_tol * max(1.0, np.linalg.norm(y))
    if np.linalg.norm(y) <= bound:
        return [((), np.zeros(op.n))]
    for k in range(1, k_max + 1):
        found = []
        for support in combinations(range(op.n), k):
            cols = theta[:, support]
            coef, *_ = np.linalg.lstsq(cols, y, rcond=None)
            if np.linalg.norm(cols @ coef - y) <= bound:
                alpha = np.zeros(op.n)
                alpha[list(support)] = coef
                found.append((support, op.to_coefficients(alpha)))
        if found:
            found.sort(key=lambda item: (np.abs(item[1]).sum(), item[0]))
            return found
    raise InfeasibleError(f"no support of size <= {k_max} reproduces the measurements")


def l0_oracle(op, y, k_max=2, feas_tol=1e-8):
    """Sparsest coefficient vector consistent with ``y`` (ties: l1, then support)."""
    return l0_solutions(op, y, k_max, feas_tol)[0][1]
