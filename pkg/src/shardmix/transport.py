"""Exact discrete optimal transport on small instances.

Two solvers over a nonnegative cost table:

* :func:`solve_ot` fixes both marginals and runs the transportation
  simplex (network simplex specialized to transportation problems) with
  Bland's rule for anti-cycling.  Instances here are at most a few
  thousand cells, so an exact pivoting method beats approximate schemes.
* :func:`relaxed_plan` fixes only the source marginal; the optimum is the
  row-wise argmin assignment and has a closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["CostMatrix", "TransportPlan", "solve_ot", "relaxed_plan"]

MARGINAL_TOL = 1e-9


@dataclass(frozen=True)
class CostMatrix:
    """Nonnegative finite cost table with optional component labels."""

    entries: np.ndarray
    row_labels: tuple = ()
    col_labels: tuple = ()

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2:
            raise ValueError("cost entries must form a matrix")
        if not np.all(np.isfinite(entries)):
            raise ValueError("cost entries must be finite")
        if np.any(entries < 0.0):
            raise ValueError("cost entries must be nonnegative")
        object.__setattr__(self, "entries", entries)
        if not self.row_labels:
            object.__setattr__(self, "row_labels", tuple(range(entries.shape[0])))
        if not self.col_labels:
            object.__setattr__(self, "col_labels", tuple(range(entries.shape[1])))

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True)
class TransportPlan:
    """Nonnegative coupling matrix and its transport cost."""

    matrix: np.ndarray
    objective: float
    basis: tuple = field(default=(), repr=False)

    def row_marginal(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def col_marginal(self) -> np.ndarray:
        return self.matrix.sum(axis=0)


def _as_cost_array(cost) -> np.ndarray:
    if isinstance(cost, CostMatrix):
        return cost.entries
    return CostMatrix(np.asarray(cost, dtype=float)).entries


def _check_simplex(w: np.ndarray, name: str):
    if w.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if np.any(w < 0.0):
        raise ValueError(f"{name} has negative entries")
    if abs(float(w.sum()) - 1.0) > MARGINAL_TOL:
        raise ValueError(f"{name} sums to {w.sum():.12g}, expected 1 within 1e-9")


def solve_ot(cost, w, v) -> TransportPlan:
    """Minimize sum(plan * cost) over couplings of the marginals w and v.

    Returns the exact optimum found by the transportation simplex.  Rows
    or columns carrying zero weight are dropped before the solve and
    reinserted as zero rows/columns of the plan.
    """
    c = _as_cost_array(cost)
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    n, m = c.shape
    if w.shape != (n,) or v.shape != (m,):
        raise ValueError("marginal sizes do not match the cost matrix")
    _check_simplex(w, "source marginal")
    _check_simplex(v, "target marginal")

    rows = np.flatnonzero(w > 0.0)
    cols = np.flatnonzero(v > 0.0)
    sub_w = w[rows]
    sub_v = v[cols]
    # Rebalance exactly; the marginals already agree within 1e-9.
    sub_v = sub_v * (sub_w.sum() / sub_v.sum())
    sub_plan, sub_basis = _transportation_simplex(c[np.ix_(rows, cols)], sub_w, sub_v)

    plan = np.zeros((n, m))
    plan[np.ix_(rows, cols)] = sub_plan
    objective = float(np.sum(plan * c))
    basis = tuple((int(rows[i]), int(cols[j])) for i, j in sub_basis)
    return TransportPlan(matrix=plan, objective=objective, basis=basis)


def relaxed_plan(cost, w) -> TransportPlan:
    """Optimal plan when only the source marginal is constrained.

    Each source atom ships all of its mass to the cheapest column, with
    ties broken towards the smallest column index.
    """
    c = _as_cost_array(cost)
    w = np.asarray(w, dtype=float)
    if w.shape != (c.shape[0],):
        raise ValueError("source marginal size does not match the cost matrix")
    _check_simplex(w, "source marginal")
    assignment = np.argmin(c, axis=1)
    plan = np.zeros_like(c)
    plan[np.arange(c.shape[0]), assignment] = w
    objective = float(w @ c[np.arange(c.shape[0]), assignment])
    return TransportPlan(matrix=plan, objective=objective)


# ---------------------------------------------------------------------------
# Transportation simplex internals.  The basis is kept as a spanning tree of
# the bipartite supply/demand graph; nodes 0..n-1 are rows, n..n+m-1 columns.


def _northwest_corner(w: np.ndarray, v: np.ndarray):
    n, m = w.shape[0], v.shape[0]
    plan = np.zeros((n, m))
    basis = []
    rem_w = w.copy()
    rem_v = v.copy()
    i = j = 0
    while True:
        q = min(rem_w[i], rem_v[j])
        plan[i, j] = q
        basis.append((i, j))
        rem_w[i] -= q
        rem_v[j] -= q
        if i == n - 1 and j == m - 1:
            break
        if i < n - 1 and rem_w[i] <= 0.0:
            i += 1
        elif j < m - 1:
            j += 1
        else:
            i += 1
    return plan, basis


def _tree_adjacency(basis, n, m):
    adj = [[] for _ in range(n + m)]
    for i, j in basis:
        adj[i].append(n + j)
        adj[n + j].append(i)
    return adj


def _compute_duals(basis, c, n, m):
    adj = _tree_adjacency(basis, n, m)
    u = np.full(n, np.nan)
    psi = np.full(m, np.nan)
    u[0] = 0.0
    stack = [0]
    seen = np.zeros(n + m, dtype=bool)
    seen[0] = True
    while stack:
        node = stack.pop()
        for nxt in adj[node]:
            if seen[nxt]:
                continue
            seen[nxt] = True
            if node < n:  # row -> col: u_i + psi_j = c_ij
                psi[nxt - n] = c[node, nxt - n] - u[node]
            else:
                u[nxt] = c[nxt, node - n] - psi[node - n]
            stack.append(nxt)
    if not seen.all():
        raise RuntimeError("transportation basis is not a spanning tree")
    return u, psi


def _find_cycle(basis, entering, n, m):
    """Cells of the unique cycle closed by the entering cell, signed +/-."""
    i0, j0 = entering
    adj = _tree_adjacency(basis, n, m)
    # Path from the entering cell's row node to its column node.
    parent = {i0: None}
    stack = [i0]
    target = n + j0
    while stack:
        node = stack.pop()
        if node == target:
            break
        for nxt in adj[node]:
            if nxt not in parent:
                parent[nxt] = node
                stack.append(nxt)
    path = [target]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    # path runs col(j0) -> ... -> row(i0); adjacent nodes give basic cells.
    cells = [entering]
    signs = [1]
    sign = -1
    for a, b in zip(path[:-1], path[1:]):
        if a < n:
            cells.append((a, b - n))
        else:
            cells.append((b, a - n))
        signs.append(sign)
        sign = -sign
    return cells, signs


def _transportation_simplex(c: np.ndarray, w: np.ndarray, v: np.ndarray):
    n, m = c.shape
    if n == 1 or m == 1:
        plan = np.outer(w, v) / w.sum() if n == 1 else np.outer(w, v) / v.sum()
        basis = [(i, j) for i in range(n) for j in range(m)]
        return plan, basis

    plan, basis = _northwest_corner(w, v)
    basis_set = set(basis)
    max_pivots = 50 * n * m + 1000
    for _ in range(max_pivots):
        u, psi = _compute_duals(basis, c, n, m)
        reduced = c - u[:, None] - psi[None, :]
        # Bland's rule: first cell in row-major order with negative
        # reduced cost enters the basis.
        entering = None
        flat = np.flatnonzero(reduced.ravel() < -1e-12)
        for idx in flat:
            cell = (int(idx // m), int(idx % m))
            if cell not in basis_set:
                entering = cell
                break
        if entering is None:
            return plan, basis
        cells, signs = _find_cycle(basis, entering, n, m)
        givers = [cell for cell, s in zip(cells, signs) if s < 0]
        theta = min(plan[cell] for cell in givers)
        leaving = min(cell for cell in givers if plan[cell] == theta)
        for cell, s in zip(cells, signs):
            plan[cell] += s * theta
        plan[leaving] = 0.0
        basis_set.remove(leaving)
        basis_set.add(entering)
        basis = [cell for cell in basis if cell != leaving]
        basis.append(entering)
    raise RuntimeError("transportation simplex exceeded its pivot budget")
