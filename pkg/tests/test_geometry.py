import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridot.errors import OutOfSupportError, ParseError
from gridot.geometry import (
    AxisPartition,
    Grid,
    SampleSet,
    assign_weights,
    cell_neighbors,
    initial_grid,
    load_samples,
    locate,
    refine_grid,
)


class TestLoadSamples:
    def test_two_points_2d(self):
        samples = load_samples("0,0\n1,2\n")
        assert len(samples) == 2
        assert samples.dim == 2

    def test_three_points_1d(self):
        samples = load_samples("1.5\n-2.0\n3.0\n")
        assert len(samples) == 3
        assert samples.dim == 1

    def test_arity_mismatch_names_row(self):
        with pytest.raises(ParseError, match="row 2"):
            load_samples("1,2\n3\n")

    def test_non_numeric_names_row(self):
        with pytest.raises(ParseError, match="row 3"):
            load_samples("1,2\n3,4\nfive,6\n")

    def test_empty_input(self):
        with pytest.raises(ParseError, match="empty"):
            load_samples("")

    def test_non_finite_rejected(self):
        with pytest.raises(ParseError, match="row 1"):
            load_samples("nan,1\n")

    def test_header_flag(self):
        samples = load_samples("x,y\n1,2\n3,4\n", header=True)
        assert len(samples) == 2

    def test_stream_input(self):
        samples = load_samples(io.BytesIO(b"1,2\n3,4\n"))
        assert len(samples) == 2


class TestInitialGrid:
    def test_bisection_of_span(self):
        samples = SampleSet(np.array([[0.0, 0.0], [4.0, 2.0], [1.0, 1.5]]))
        grid = initial_grid(samples)
        np.testing.assert_allclose(
            grid.partitions[0].breakpoints, [0, 2, 4], atol=1e-7
        )
        np.testing.assert_allclose(
            grid.partitions[1].breakpoints, [0, 1, 2], atol=1e-7
        )
        assert grid.n_cells == 4

    def test_initial_dense_pattern_cardinality(self):
        # with every cell occupied the candidate pair count is 2^(2d)
        rng = np.random.default_rng(3)
        samples = SampleSet(rng.uniform(-1, 1, size=(400, 2)))
        grid = initial_grid(samples)
        part = assign_weights(samples, grid)
        assert grid.n_cells == 4
        assert len(part.occupied) ** 2 == 2 ** (2 * samples.dim) == 16

    def test_all_samples_strictly_inside(self, rng):
        for _ in range(10):
            pts = rng.normal(size=(50, 3)) * rng.uniform(0.5, 20)
            samples = SampleSet(pts)
            grid = initial_grid(samples)
            cells = grid.locate_many(samples.points)  # raises if outside
            assert cells.shape == (50, 3)

    def test_degenerate_axis_flagged(self):
        samples = SampleSet(np.array([[5.0], [5.0], [5.0]]))
        grid = initial_grid(samples)
        part = grid.partitions[0]
        assert part.degenerate
        assert part.n_segments == 1
        assert part.breakpoints[0] < 5.0 < part.breakpoints[1]
        assert grid.degenerate_axes == (0,)


class TestAssignWeights:
    def test_counting(self):
        pts = np.concatenate([np.full(4, 0.5), np.full(6, 3.5)])[:, None]
        samples = SampleSet(pts)
        grid = Grid((AxisPartition(0, np.array([0.0, 2.0, 4.0])),))
        part = assign_weights(samples, grid)
        assert part.weights[(0,)] == pytest.approx(0.4)
        assert part.weights[(1,)] == pytest.approx(0.6)

    def test_single_occupied_cell(self):
        samples = SampleSet(np.full((7, 1), 0.5))
        grid = Grid((AxisPartition(0, np.array([0.0, 2.0, 4.0])),))
        part = assign_weights(samples, grid)
        assert part.weights == {(0,): 1.0}

    def test_boundary_point_goes_right(self):
        samples = SampleSet(np.array([[2.0]]))
        grid = Grid((AxisPartition(0, np.array([0.0, 2.0, 4.0])),))
        part = assign_weights(samples, grid)
        assert part.occupied == ((1,),)

    def test_out_of_support_names_point(self):
        samples = SampleSet(np.array([[1.0], [9.0]]))
        grid = Grid((AxisPartition(0, np.array([0.0, 2.0, 4.0])),))
        with pytest.raises(OutOfSupportError, match="point 1"):
            assign_weights(samples, grid)

    @given(st.integers(min_value=1, max_value=300), st.integers(min_value=1, max_value=3))
    def test_weights_sum_to_one(self, n, d):
        rng = np.random.default_rng(n * 7 + d)
        samples = SampleSet(rng.normal(size=(n, d)))
        grid = initial_grid(samples)
        for _ in range(2):
            part = assign_weights(samples, grid)
            assert abs(sum(part.weights.values()) - 1.0) <= 1e-12
            grid = refine_grid(grid, part, n_min=max(1, n // 8)).grid

    def test_membership_locates_back(self, rng):
        samples = SampleSet(rng.normal(size=(120, 2)))
        grid = initial_grid(samples)
        part = assign_weights(samples, grid)
        grid2 = refine_grid(grid, part, n_min=5).grid
        part2 = assign_weights(samples, grid2)
        for cell, members in part2.membership.items():
            for idx in members:
                assert locate(grid2, samples.points[idx]) == cell


class TestRefine:
    def test_threshold_rule_1d(self):
        pts = np.concatenate([np.linspace(0.01, 1.99, 100), [2.5, 3.0, 3.5]])[:, None]
        samples = SampleSet(pts)
        grid = Grid((AxisPartition(0, np.array([0.0, 2.0, 4.0])),))
        part = assign_weights(samples, grid)
        ref = refine_grid(grid, part, n_min=10)
        assert ref.changed
        assert ref.grid.partitions[0].n_segments == 3
        np.testing.assert_allclose(ref.grid.partitions[0].breakpoints, [0, 1, 2, 4])
        np.testing.assert_array_equal(ref.parents[0], [0, 0, 1])

    def test_longest_axis_tie_breaks_low(self, rng):
        samples = SampleSet(rng.uniform(0, 1, size=(200, 2)))
        grid = initial_grid(samples)
        part = assign_weights(samples, grid)
        ref = refine_grid(grid, part, policy="longest_axis", n_min=5)
        assert ref.grid.partitions[0].n_segments == 4
        assert ref.grid.partitions[1].n_segments == 2

    def test_repeated_refinement_doubles_segments(self, rng):
        samples = SampleSet(rng.uniform(0, 1, size=(3000, 2)))
        grid = initial_grid(samples)
        for level in range(3):
            part = assign_weights(samples, grid)
            ref = refine_grid(grid, part, n_min=10)
            grid = ref.grid
            assert all(p.n_segments == 2 ** (level + 2) for p in grid.partitions)

    def test_fixpoint_flag(self):
        samples = SampleSet(np.array([[0.0], [1.0]]))
        grid = initial_grid(samples)
        part = assign_weights(samples, grid)
        ref = refine_grid(grid, part, n_min=10)
        assert not ref.changed
        assert ref.grid is grid

    def test_counts_conserved_under_refinement(self, rng):
        samples = SampleSet(rng.normal(size=(500, 2)))
        grid = initial_grid(samples)
        part = assign_weights(samples, grid)
        ref = refine_grid(grid, part, n_min=20)
        child_part = assign_weights(samples, ref.grid)
        for axis in range(2):
            parent_counts = part.axis_counts(axis)
            child_counts = child_part.axis_counts(axis)
            summed = np.zeros_like(parent_counts)
            np.add.at(summed, ref.parents[axis], child_counts)
            np.testing.assert_array_equal(summed, parent_counts)

    def test_degenerate_axis_never_split(self):
        pts = np.column_stack([np.linspace(0, 1, 50), np.full(50, 2.0)])
        samples = SampleSet(pts)
        grid = initial_grid(samples)
        part = assign_weights(samples, grid)
        ref = refine_grid(grid, part, n_min=5)
        assert ref.grid.partitions[1].n_segments == 1


class TestNeighbors:
    def test_1d_interior(self):
        grid = Grid((AxisPartition(0, np.linspace(0, 4, 5)),))
        assert cell_neighbors(grid, (1,)) == {(0,), (2,)}

    def test_2d_interior_has_eight(self):
        grid = Grid(
            (
                AxisPartition(0, np.linspace(0, 4, 5)),
                AxisPartition(1, np.linspace(0, 4, 5)),
            )
        )
        assert len(cell_neighbors(grid, (2, 2))) == 8

    def test_2d_corner_has_three(self):
        grid = Grid(
            (
                AxisPartition(0, np.linspace(0, 4, 5)),
                AxisPartition(1, np.linspace(0, 4, 5)),
            )
        )
        assert len(cell_neighbors(grid, (0, 0))) == 3

    @given(st.integers(min_value=2, max_value=5), st.integers(min_value=1, max_value=3))
    def test_symmetry(self, size, d):
        grid = Grid(
            tuple(AxisPartition(l, np.linspace(0, 1, size + 1)) for l in range(d))
        )
        rng = np.random.default_rng(size * 10 + d)
        for _ in range(10):
            cell = tuple(rng.integers(0, size, size=d).tolist())
            for other in cell_neighbors(grid, cell):
                assert cell in cell_neighbors(grid, other)

    def test_invalid_cell(self):
        grid = Grid((AxisPartition(0, np.linspace(0, 4, 5)),))
        with pytest.raises(ValueError):
            cell_neighbors(grid, (7,))


class TestLocate:
    def test_basic(self):
        grid = Grid((AxisPartition(0, np.array([0.0, 2.0, 4.0])),))
        assert locate(grid, [1.0]) == (0,)

    def test_interior_breakpoint_goes_right(self):
        grid = Grid((AxisPartition(0, np.array([0.0, 2.0, 4.0])),))
        assert locate(grid, [2.0]) == (1,)

    def test_final_breakpoint_goes_last(self):
        grid = Grid((AxisPartition(0, np.array([0.0, 2.0, 4.0])),))
        assert locate(grid, [4.0]) == (1,)

    def test_outside_errors(self):
        grid = Grid((AxisPartition(0, np.array([0.0, 2.0, 4.0])),))
        with pytest.raises(OutOfSupportError):
            locate(grid, [5.0])
        with pytest.raises(OutOfSupportError):
            locate(grid, [-0.5])


class TestSampleSet:
    def test_requires_points(self):
        with pytest.raises(ValueError):
            SampleSet(np.empty((0, 2)))

    def test_immutable(self):
        samples = SampleSet(np.array([[1.0, 2.0]]))
        with pytest.raises(ValueError):
            samples.points[0, 0] = 9.0
