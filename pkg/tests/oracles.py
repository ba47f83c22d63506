"""Independent reference implementations used to pin expected test values.

Everything here deliberately avoids the code paths under test: transport
plans come from vertex enumeration, divergences from Monte Carlo or
naive formulas with explicit inverses, assignments from exhaustive
search.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def naive_gaussian_log_density(mean, cov, x):
    """Log normal density via explicit inverse and determinant."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = mean.shape[0]
    diff = x - mean
    inv = np.linalg.inv(cov)
    _, logdet = np.linalg.slogdet(2.0 * np.pi * cov)
    return -0.5 * (logdet + diff @ inv @ diff)


def monte_carlo_kl(p, q, n_samples, rng):
    """(estimate, standard error) of KL(p || q) from draws of p."""
    z = rng.standard_normal((n_samples, p.dim))
    x = p.mean + z @ p.chol.T
    values = p.log_density_many(x) - q.log_density_many(x)
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n_samples))


def numeric_kl_barycenter_1d(means, variances, lambdas):
    """Minimize sum lambda_m KL(N(mu_m, s_m) || N(mu, s)) numerically (1-d)."""
    from scipy.optimize import minimize

    means = np.asarray(means, dtype=float)
    variances = np.asarray(variances, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)

    def kl_1d(mu0, s0, mu1, s1):
        return 0.5 * (s0 / s1 + (mu1 - mu0) ** 2 / s1 - 1.0 + math.log(s1 / s0))

    def objective(params):
        mu, log_s = params
        s = math.exp(log_s)
        return float(
            sum(
                lam * kl_1d(m, v, mu, s)
                for lam, m, v in zip(lambdas, means, variances)
            )
        )

    start = np.array([means.mean(), math.log(variances.mean())])
    result = minimize(objective, start, method="Nelder-Mead",
                      options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20_000})
    mu, log_s = result.x
    return float(mu), float(math.exp(log_s))


def _tree_allocation(cells, w, v):
    """Unique allocation for a candidate transportation basis, or None."""
    n, m = w.shape[0], v.shape[0]
    rem = np.concatenate([w, v]).astype(float)
    alive = set(cells)
    alloc = {}
    degree = {}
    for i, j in alive:
        degree[i] = degree.get(i, 0) + 1
        degree[n + j] = degree.get(n + j, 0) + 1
    while alive:
        leaf_cell = None
        for i, j in alive:
            if degree[i] == 1:
                leaf_cell, node = (i, j), i
                break
            if degree[n + j] == 1:
                leaf_cell, node = (i, j), n + j
                break
        if leaf_cell is None:
            return None  # contains a cycle
        i, j = leaf_cell
        amount = rem[node]
        alloc[leaf_cell] = amount
        rem[i] -= amount
        rem[n + j] -= amount
        rem[node] = 0.0
        alive.remove(leaf_cell)
        degree[i] -= 1
        degree[n + j] -= 1
    return alloc


def brute_force_ot(cost, w, v):
    """Exact OT optimum by enumerating all basic feasible solutions.

    Every vertex of the transportation polytope is the allocation of a
    spanning-tree basis; feasible for n + m <= about 8.
    """
    cost = np.asarray(cost, dtype=float)
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    n, m = cost.shape
    cells = list(itertools.product(range(n), range(m)))
    best = math.inf
    for basis in itertools.combinations(cells, n + m - 1):
        alloc = _tree_allocation(basis, w, v)
        if alloc is None:
            continue
        values = np.array(list(alloc.values()))
        if np.any(values < -1e-12):
            continue
        objective = sum(q * cost[c] for c, q in alloc.items())
        best = min(best, objective)
    return best


def exhaustive_alignment(cost):
    """Minimum-cost perfect matching by checking all K! permutations."""
    cost = np.asarray(cost, dtype=float)
    K = cost.shape[0]
    best_perm, best_value = None, math.inf
    for perm in itertools.permutations(range(K)):
        value = sum(cost[k, perm[k]] for k in range(K))
        if value < best_value:
            best_perm, best_value = perm, value
    return np.array(best_perm), best_value


def ari_from_formula(labels_a, labels_b):
    """Adjusted Rand index evaluated directly from pair counts."""
    labels_a = np.asarray(labels_a)
    labels_b = np.asarray(labels_b)
    n = labels_a.size

    def comb2(x):
        return x * (x - 1) // 2

    cells = {}
    for a, b in zip(labels_a, labels_b):
        cells[(a, b)] = cells.get((a, b), 0) + 1
    rows = {}
    cols = {}
    for (a, b), c in cells.items():
        rows[a] = rows.get(a, 0) + c
        cols[b] = cols.get(b, 0) + c
    sum_cells = sum(comb2(c) for c in cells.values())
    sum_rows = sum(comb2(c) for c in rows.values())
    sum_cols = sum(comb2(c) for c in cols.values())
    expected = sum_rows * sum_cols / comb2(n)
    return (sum_cells - expected) / (0.5 * (sum_rows + sum_cols) - expected)
