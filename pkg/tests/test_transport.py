import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_ot
from shardmix import CostMatrix, relaxed_plan, solve_ot


def random_instance(rng, n, m, lattice=None):
    cost = rng.uniform(0.0, 5.0, size=(n, m))
    w = rng.dirichlet(np.ones(n))
    v = rng.dirichlet(np.ones(m))
    if lattice:
        w = np.round(w * lattice) / lattice
        w[-1] = 1.0 - w[:-1].sum()
        v = np.round(v * lattice) / lattice
        v[-1] = 1.0 - v[:-1].sum()
    return cost, w, v


class TestCostMatrix:
    def test_rejects_negative_entries(self):
        with pytest.raises(ValueError, match="nonnegative"):
            CostMatrix(np.array([[0.0, -1.0]]))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            CostMatrix(np.array([[np.inf]]))

    def test_default_labels(self):
        cm = CostMatrix(np.zeros((2, 3)))
        assert cm.row_labels == (0, 1)
        assert cm.col_labels == (0, 1, 2)


class TestSolveOt:
    def test_identity_transport(self):
        cost = np.array([[0.0, 1.0], [1.0, 0.0]])
        plan = solve_ot(cost, [0.3, 0.7], [0.3, 0.7])
        assert plan.objective == pytest.approx(0.0, abs=1e-15)
        assert plan.matrix == pytest.approx(np.diag([0.3, 0.7]))

    def test_worked_example_matched_marginals(self):
        # transporting between supports at -1, 1 and -1, 2/3 with squared
        # distance-plus-variance cost; the optimum keeps mass in place
        plan = solve_ot([[0.0, 25 / 9], [4.0, 1 / 9]], [0.4, 0.6], [0.4, 0.6])
        assert plan.matrix == pytest.approx(np.array([[0.4, 0.0], [0.0, 0.6]]), abs=1e-12)
        assert plan.objective == pytest.approx(0.6 / 9, abs=1e-12)

    def test_worked_example_shifted_marginals(self):
        plan = solve_ot([[0.0, 4.0], [4.0, 0.0]], [0.4, 0.6], [0.5, 0.5])
        assert plan.matrix == pytest.approx(np.array([[0.4, 0.0], [0.1, 0.5]]), abs=1e-12)
        assert plan.objective == pytest.approx(0.4, abs=1e-12)

    def test_rejects_bad_marginals(self):
        with pytest.raises(ValueError, match="sums to"):
            solve_ot(np.zeros((2, 2)), [0.5, 0.6], [0.5, 0.5])
        with pytest.raises(ValueError, match="sums to"):
            solve_ot(np.zeros((2, 2)), [0.5, 0.5], [0.5, 0.6])

    def test_zero_weight_rows_and_columns(self, rng):
        cost = rng.uniform(0.0, 1.0, size=(3, 3))
        w = np.array([0.5, 0.0, 0.5])
        v = np.array([0.0, 0.4, 0.6])
        plan = solve_ot(cost, w, v)
        assert np.all(plan.matrix[1, :] == 0.0)
        assert np.all(plan.matrix[:, 0] == 0.0)
        assert plan.row_marginal() == pytest.approx(w, abs=1e-9)
        assert plan.col_marginal() == pytest.approx(v, abs=1e-9)

    @settings(deadline=None, max_examples=150)
    @given(
        seed=st.integers(0, 2**32 - 1),
        n=st.integers(1, 3),
        m=st.integers(1, 3),
    )
    def test_matches_vertex_enumeration(self, seed, n, m):
        # oracle: enumerate every basic feasible plan and take the best
        rng = np.random.default_rng(seed)
        cost, w, v = random_instance(rng, n, m)
        plan = solve_ot(cost, w, v)
        assert plan.objective == pytest.approx(brute_force_ot(cost, w, v), abs=1e-10)
        assert plan.row_marginal() == pytest.approx(w, abs=1e-9)
        assert plan.col_marginal() == pytest.approx(v, abs=1e-9)
        assert np.all(plan.matrix >= -1e-15)

    def test_larger_instances_against_linprog(self, rng):
        # second oracle for sizes past the enumeration range
        from scipy.optimize import linprog

        for n, m in [(4, 6), (7, 5), (10, 10)]:
            cost, w, v = random_instance(rng, n, m)
            plan = solve_ot(cost, w, v)
            a_eq = []
            for i in range(n):
                row = np.zeros((n, m))
                row[i, :] = 1.0
                a_eq.append(row.ravel())
            for j in range(m):
                col = np.zeros((n, m))
                col[:, j] = 1.0
                a_eq.append(col.ravel())
            lp = linprog(cost.ravel(), A_eq=np.array(a_eq),
                         b_eq=np.concatenate([w, v]), method="highs")
            assert plan.objective == pytest.approx(lp.fun, abs=1e-9)


class TestRelaxedPlan:
    def test_row_argmins(self):
        plan = relaxed_plan([[0.0, 1.0], [2.0, 0.5]], [0.4, 0.6])
        assert plan.matrix == pytest.approx(np.array([[0.4, 0.0], [0.0, 0.6]]))
        assert plan.objective == pytest.approx(0.3)

    def test_ties_go_to_first_column(self):
        plan = relaxed_plan([[1.0, 1.0, 1.0]], [1.0])
        assert plan.matrix == pytest.approx(np.array([[1.0, 0.0, 0.0]]))

    def test_row_marginal_preserved(self, rng):
        cost = rng.uniform(0.0, 3.0, size=(5, 3))
        w = rng.dirichlet(np.ones(5))
        plan = relaxed_plan(cost, w)
        assert plan.row_marginal() == pytest.approx(w, abs=1e-12)

    @settings(deadline=None, max_examples=60)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_lower_bounds_any_fixed_target(self, seed):
        rng = np.random.default_rng(seed)
        cost, w, v = random_instance(rng, 2, 2)
        relaxed = relaxed_plan(cost, w)
        assert relaxed.objective <= solve_ot(cost, w, v).objective + 1e-12

    def test_equals_grid_minimum_over_targets(self):
        # marginal-relaxation identity on 2x2 instances: minimizing the
        # both-marginal objective over a lattice of targets lands exactly
        # on the relaxed objective (sources sit on the same lattice)
        rng = np.random.default_rng(7)
        grid = np.arange(0.0, 1.0 + 1e-12, 1e-3)
        for _ in range(5):
            cost, w, _ = random_instance(rng, 2, 2, lattice=1000)
            relaxed = relaxed_plan(cost, w)
            best = min(
                solve_ot(cost, w, np.array([t, 1.0 - t])).objective for t in grid
            )
            assert relaxed.objective == pytest.approx(best, abs=1e-6)
