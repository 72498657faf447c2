import numpy as np
import pytest

from gridot.lpsolver import (
    STATUS_FEASIBLE,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    CouplingSolution,
    SparsityPattern,
    TransportationProblem,
    check_feasible,
    product_feasible,
    solve_transportation,
)

import oracles


def random_instance(rng, m, n):
    p = rng.uniform(0.05, 1.0, m)
    p /= p.sum()
    q = rng.uniform(0.05, 1.0, n)
    q /= q.sum()
    q[-1] += p.sum() - q.sum()  # balance to the bit
    costs = rng.uniform(0.0, 10.0, (m, n))
    return p, q, costs


def dense_solve(p, q, costs):
    pattern = SparsityPattern.dense(p.size, q.size)
    problem = TransportationProblem(p, q, costs.ravel())
    return solve_transportation(problem, pattern), pattern


class TestProductFeasible:
    def test_two_to_one(self):
        sol = product_feasible([0.5, 0.5], [1.0])
        np.testing.assert_allclose(sol.values, [0.5, 0.5])
        assert sol.status == STATUS_FEASIBLE

    def test_half_half(self):
        sol = product_feasible([0.5, 0.5], [0.5, 0.5])
        np.testing.assert_allclose(sol.values, [0.25, 0.25, 0.25, 0.25])

    def test_singleton(self):
        sol = product_feasible([1.0], [1.0])
        np.testing.assert_allclose(sol.values, [1.0])

    def test_zero_mass_rejected(self):
        with pytest.raises(ValueError):
            product_feasible([0.0, 0.0], [0.0, 0.0])

    def test_marginals_satisfied(self, rng):
        for _ in range(10):
            p, q, _ = random_instance(rng, rng.integers(1, 6), rng.integers(1, 6))
            sol = product_feasible(p, q)
            np.testing.assert_allclose(sol.row_sums(), p, atol=1e-12)
            np.testing.assert_allclose(sol.col_sums(), q, atol=1e-12)


class TestSolve:
    def test_zero_cost_matching(self):
        sol, _ = dense_solve(
            np.array([0.5, 0.5]), np.array([0.5, 0.5]),
            np.array([[0.0, 1.0], [1.0, 0.0]]),
        )
        assert sol.status == STATUS_OPTIMAL
        assert sol.objective == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(sol.values, [0.5, 0.0, 0.0, 0.5], atol=1e-12)

    def test_known_optimum(self):
        # one-parameter feasible family; enumeration gives 1.6 at the vertex
        sol, _ = dense_solve(
            np.array([0.3, 0.7]), np.array([0.6, 0.4]),
            np.array([[1.0, 2.0], [3.0, 1.0]]),
        )
        assert sol.objective == pytest.approx(1.6, abs=1e-12)
        np.testing.assert_allclose(sol.values, [0.3, 0.0, 0.3, 0.4], atol=1e-12)

    def test_forced_pattern_unique_point(self):
        pattern = SparsityPattern.from_pairs(2, 2, [(0, 0), (1, 1)])
        problem = TransportationProblem(
            np.array([0.5, 0.5]), np.array([0.5, 0.5]), np.array([7.0, 3.0])
        )
        sol = solve_transportation(problem, pattern)
        assert sol.status == STATUS_OPTIMAL
        np.testing.assert_allclose(sol.values, [0.5, 0.5])

    def test_infeasible_pattern_detected(self):
        # positive-weight row 1 only reaches column 0, which row 0 saturates
        pattern = SparsityPattern.from_pairs(2, 2, [(0, 0), (0, 1), (1, 0)])
        problem = TransportationProblem(
            np.array([0.2, 0.8]), np.array([0.5, 0.5]), np.array([1.0, 1.0, 1.0])
        )
        sol = solve_transportation(problem, pattern)
        assert sol.status == STATUS_INFEASIBLE
        assert sol.objective is None

    def test_objective_equals_cost_dot_values(self, rng):
        for _ in range(20):
            p, q, costs = random_instance(rng, 4, 3)
            sol, _ = dense_solve(p, q, costs)
            assert sol.objective == pytest.approx(
                float(np.dot(costs.ravel(), sol.values)), abs=1e-12
            )

    def test_marginals_reverified_independently(self, rng):
        for _ in range(30):
            m, n = rng.integers(1, 7), rng.integers(1, 7)
            p, q, costs = random_instance(rng, m, n)
            sol, _ = dense_solve(p, q, costs)
            assert sol.status == STATUS_OPTIMAL
            np.testing.assert_allclose(sol.row_sums(), p, atol=1e-9)
            np.testing.assert_allclose(sol.col_sums(), q, atol=1e-9)
            assert sol.values.min() >= 0.0

    def test_matches_enumeration_on_small_instances(self, rng):
        for _ in range(40):
            m, n = rng.integers(2, 5), rng.integers(2, 5)
            p, q, costs = random_instance(rng, m, n)
            sol, _ = dense_solve(p, q, costs)
            want = oracles.enumerate_transportation_optimum(p, q, costs)
            assert sol.objective == pytest.approx(want, abs=1e-9)

    def test_degenerate_ties(self):
        # equal weights and tied costs force degenerate pivots
        p = np.full(4, 0.25)
        q = np.full(4, 0.25)
        costs = np.ones((4, 4))
        costs[0, 0] = 0.0
        sol, _ = dense_solve(p, q, costs)
        want = oracles.enumerate_transportation_optimum(p, q, costs)
        assert sol.objective == pytest.approx(want, abs=1e-12)

    def test_identity_pattern_large(self):
        # disconnected pattern at a size where naive global perturbation
        # balancing would report false infeasibility
        m = 600
        p = np.full(m, 1.0 / m)
        pattern = SparsityPattern.from_pairs(m, m, [(i, i) for i in range(m)])
        assert check_feasible(p, p, pattern)
        problem = TransportationProblem(p, p, np.zeros(m))
        sol = solve_transportation(problem, pattern)
        assert sol.status == STATUS_OPTIMAL
        np.testing.assert_allclose(sol.values, p, atol=1e-12)

    def test_monotone_under_pattern_growth(self, rng):
        for _ in range(15):
            m, n = 4, 4
            p, q, costs = random_instance(rng, m, n)
            small_pairs = [(i, i) for i in range(4)] + [(0, 1), (1, 0), (2, 3), (3, 2)]
            small = SparsityPattern.from_pairs(m, n, small_pairs)
            big_pairs = small_pairs + [(0, 2), (2, 0), (1, 3), (3, 1)]
            big = SparsityPattern.from_pairs(m, n, big_pairs)
            idx_small = [costs[i, j] for i, j in small.pairs]
            idx_big = [costs[i, j] for i, j in big.pairs]
            sol_small = solve_transportation(
                TransportationProblem(p, q, np.array(idx_small)), small
            )
            sol_big = solve_transportation(
                TransportationProblem(p, q, np.array(idx_big)), big
            )
            if sol_small.status == STATUS_OPTIMAL:
                assert sol_big.status == STATUS_OPTIMAL
                assert sol_big.objective <= sol_small.objective + 1e-9

    def test_deterministic_bitwise(self, rng):
        p, q, costs = random_instance(rng, 5, 6)
        first, _ = dense_solve(p, q, costs)
        second, _ = dense_solve(p, q, costs)
        assert first.objective == second.objective
        assert np.array_equal(first.values, second.values)

    def test_warm_start_agrees_with_cold(self, rng):
        for _ in range(10):
            p, q, costs = random_instance(rng, 5, 5)
            pattern = SparsityPattern.dense(5, 5)
            problem = TransportationProblem(p, q, costs.ravel())
            cold = solve_transportation(problem, pattern)
            warm = solve_transportation(
                problem, pattern, warm_start=product_feasible(p, q)
            )
            assert warm.status == STATUS_OPTIMAL
            assert warm.objective == pytest.approx(cold.objective, abs=1e-10)

    def test_misaligned_costs_rejected(self):
        pattern = SparsityPattern.dense(2, 2)
        with pytest.raises(ValueError):
            solve_transportation(
                TransportationProblem(
                    np.array([0.5, 0.5]), np.array([0.5, 0.5]), np.array([1.0])
                ),
                pattern,
            )

    def test_unbalanced_rejected(self):
        with pytest.raises(ValueError):
            TransportationProblem(
                np.array([0.6, 0.5]), np.array([0.5, 0.5]), np.zeros(4)
            )


class TestCheckFeasible:
    def test_dense_always_feasible(self, rng):
        for _ in range(10):
            p, q, _ = random_instance(rng, rng.integers(1, 6), rng.integers(1, 6))
            assert check_feasible(p, q, SparsityPattern.dense(p.size, q.size))

    def test_identity_pairs(self):
        p = np.array([0.25, 0.75])
        pattern = SparsityPattern.from_pairs(2, 2, [(0, 0), (1, 1)])
        assert check_feasible(p, p, pattern)

    def test_uncovered_positive_row(self):
        pattern = SparsityPattern.from_pairs(2, 2, [(0, 0), (0, 1)])
        assert not check_feasible(
            np.array([0.5, 0.5]), np.array([0.5, 0.5]), pattern
        )

    def test_tight_cut_still_feasible(self):
        # row 0 must send everything to col 0 exactly: feasible on the boundary
        pattern = SparsityPattern.from_pairs(2, 2, [(0, 0), (1, 0), (1, 1)])
        p = np.array([0.5, 0.5])
        q = np.array([0.5, 0.5])
        assert check_feasible(p, q, pattern)
        problem = TransportationProblem(p, q, np.array([1.0, 5.0, 1.0]))
        sol = solve_transportation(problem, pattern)
        assert sol.status == STATUS_OPTIMAL
        np.testing.assert_allclose(sol.values, [0.5, 0.0, 0.5], atol=1e-12)


class TestPattern:
    def test_from_pairs_dedupes_and_sorts(self):
        pattern = SparsityPattern.from_pairs(3, 3, [(2, 1), (0, 0), (2, 1)])
        assert pattern.pairs == [(0, 0), (2, 1)]

    def test_covers(self):
        pattern = SparsityPattern.from_pairs(2, 2, [(0, 0)])
        assert pattern.covers([1.0, 0.0], [1.0, 0.0])
        assert not pattern.covers([0.5, 0.5], [1.0, 0.0])

    def test_values_alignment_enforced(self):
        pattern = SparsityPattern.dense(2, 2)
        with pytest.raises(ValueError):
            CouplingSolution(pattern, np.zeros(3), None, STATUS_FEASIBLE)
