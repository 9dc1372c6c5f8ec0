"""Dense revised simplex for small equality-form LPs.

Solves min c.x subject to A x = b, x >= 0 starting from a caller-supplied
basic feasible basis.  Bland's smallest-index rule governs both the
entering and the leaving choice, which rules out cycling and makes every
run reproducible.  Problem sizes here are a few hundred columns, so the
basis is refactorized each iteration instead of updated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError


class UnboundedLp(NumericalError):
    """The LP is unbounded below (impossible on a bounded polytope)."""


@dataclass
class LpResult:
    x: np.ndarray
    fun: float
    basis: list
    iterations: int
    reduced_costs: np.ndarray
    duals: np.ndarray

    def primal_residual(self, a_eq: np.ndarray, b_eq: np.ndarray) -> float:
        return float(np.max(np.abs(a_eq @ self.x - b_eq), initial=0.0))

    def dual_residual(self) -> float:
        """Most negative reduced cost (0 when dual-feasible)."""
        return float(max(0.0, -self.reduced_costs.min(initial=0.0)))


def solve_lp(c: np.ndarray, a_eq: np.ndarray, b_eq: np.ndarray,
             basis: list, tol: float = 1e-9, max_iter: int | None = None) -> LpResult:
    """Run the revised simplex from a starting basis.

    ``basis`` must index a nonsingular basis matrix whose basic solution is
    feasible.  The caller is expected to scale rows and objective to O(1);
    ``tol`` is applied to reduced costs and pivot magnitudes directly.
    """
    c = np.asarray(c, dtype=float)
    a_eq = np.asarray(a_eq, dtype=float)
    b_eq = np.asarray(b_eq, dtype=float)
    m, n = a_eq.shape
    if len(basis) != m:
        raise ValueError("basis size must equal the row count")
    basis = list(basis)
    if max_iter is None:
        max_iter = 200 * (n + m)

    for iteration in range(max_iter):
        b_mat = a_eq[:, basis]
        try:
            x_basic = np.linalg.solve(b_mat, b_eq)
            duals = np.linalg.solve(b_mat.T, c[basis])
        except np.linalg.LinAlgError as exc:
            raise NumericalError("basis matrix became singular") from exc
        if np.any(x_basic < -1e-7):
            raise NumericalError("starting basis is infeasible or feasibility "
                                 f"was lost (min basic value {x_basic.min():.3e})")
        reduced = c - a_eq.T @ duals
        reduced[basis] = 0.0

        entering = -1
        for j in range(n):
            if reduced[j] < -tol and j not in basis:
                entering = j
                break
        if entering < 0:
            x = np.zeros(n)
            x[basis] = np.maximum(x_basic, 0.0)
            return LpResult(x=x, fun=float(c @ x), basis=basis,
                            iterations=iteration, reduced_costs=reduced, duals=duals)

        direction = np.linalg.solve(b_mat, a_eq[:, entering])
        candidates = direction > tol
        if not np.any(candidates):
            raise UnboundedLp(f"column {entering} yields an unbounded ray")
        ratios = np.where(candidates, x_basic / np.where(candidates, direction, 1.0), np.inf)
        theta = ratios.min()
        leaving_pos = -1
        leaving_var = n + 1
        for i in range(m):
            if candidates[i] and ratios[i] <= theta + tol and basis[i] < leaving_var:
                leaving_var = basis[i]
                leaving_pos = i
        basis[leaving_pos] = entering

    raise NumericalError(f"simplex did not converge within {max_iter} iterations")
