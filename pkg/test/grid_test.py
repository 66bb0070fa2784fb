import itertools
import math
import unittest

import numpy as np

from dyadic import grid, utils
from dyadic.grid import CellMask, Cube, DyadicCube, GridFunction
from dyadic.sp_exception import CompatibilityError, NonFiniteSampleError, ParameterError, ResolutionError


class CubeTest(unittest.TestCase):

    def setUp(self) -> None:
        self.unit = Cube((0.5, 0.5), 0.5)

    def test_geometry(self):
        self.assertEqual(self.unit.n, 2)
        self.assertEqual(self.unit.side, 1.0)
        self.assertEqual(self.unit.volume, 1.0)
        np.testing.assert_array_equal(self.unit.lower, [0.0, 0.0])
        np.testing.assert_array_equal(self.unit.upper, [1.0, 1.0])

    def test_bad_half_side(self):
        with self.assertRaises(ParameterError):
            Cube((0.0,), 0.0)
        with self.assertRaises(ParameterError):
            Cube((float('nan'),), 1.0)

    def test_cell_centers(self):
        centers = Cube((0.5,), 0.5).cell_centers(2)
        self.assertEqual(centers.shape, (4, 1))
        np.testing.assert_allclose(centers[:, 0], [0.125, 0.375, 0.625, 0.875])

    def test_contains_half_open(self):
        inside = self.unit.contains(np.array([[0.0, 0.0], [1.0, 0.5], [0.999, 0.999]]))
        self.assertEqual(list(inside), [True, False, True])


class DyadicCubeTest(unittest.TestCase):

    def setUp(self) -> None:
        self.root = Cube((0.5, 0.5), 0.5)

    def test_index_round_trip(self):
        cube = DyadicCube.from_index(self.root, 2, (1, 3))
        self.assertEqual(cube.path, (2, 3))
        self.assertEqual(cube.index, (1, 3))
        self.assertEqual(cube.depth, 2)
        self.assertEqual(cube.side, 0.25)
        np.testing.assert_allclose(cube.lower, [0.25, 0.75])

    def test_children_and_parent(self):
        cube = DyadicCube(self.root, (3,))
        children = cube.children()
        self.assertEqual(len(children), 4)
        self.assertTrue(all(child.parent() == cube for child in children))
        self.assertIsNone(DyadicCube(self.root).parent())

    def test_nested_or_disjoint(self):
        a = DyadicCube(self.root, (1,))
        b = DyadicCube(self.root, (1, 2))
        c = DyadicCube(self.root, (2,))
        self.assertTrue(a.contains(b))
        self.assertTrue(b.intersects(a))
        self.assertFalse(a.intersects(c))

    def test_nested_or_disjoint_all_pairs(self):
        for n, depth in ((1, 4), (2, 3)):
            root = Cube((0.5,) * n, 0.5)
            cubes = [DyadicCube.from_index(root, d, index) for d in range(depth + 1)
                     for index in itertools.product(range(1 << d), repeat=n)]
            bounds = [(tuple(cube.lower), tuple(cube.upper)) for cube in cubes]
            for a, (a_low, a_high) in zip(cubes, bounds):
                for b, (b_low, b_high) in zip(cubes, bounds):
                    overlap = all(a_low[k] < b_high[k] and b_low[k] < a_high[k] for k in range(n))
                    self.assertEqual(a.intersects(b), overlap, (str(a), str(b)))
                    if a.contains(b):
                        self.assertTrue(all(a_low[k] <= b_low[k] and b_high[k] <= a_high[k] for k in range(n)))

    def test_slices(self):
        cube = DyadicCube.from_index(self.root, 1, (1, 0))
        self.assertEqual(cube.slices(3), (slice(4, 8), slice(0, 4)))
        with self.assertRaises(ResolutionError):
            DyadicCube(self.root, (0, 0, 0)).slices(2)

    def test_bad_path(self):
        with self.assertRaises(ParameterError):
            DyadicCube(self.root, (4,))


class CellMaskTest(unittest.TestCase):

    def setUp(self) -> None:
        self.root = Cube((0.5,), 0.5)

    def test_set_algebra(self):
        left = CellMask(self.root, 2, [1, 1, 0, 0])
        right = CellMask(self.root, 2, [0, 1, 1, 0])
        self.assertEqual(left.union(right).count, 3)
        self.assertEqual(left.intersection(right).count, 1)
        self.assertEqual(left.difference(right).cells(), [(0,)])
        self.assertFalse(left.isdisjoint(right))
        self.assertTrue(left.difference(right).issubset(left))
        self.assertAlmostEqual(left.measure, 0.5)

    def test_from_cube(self):
        mask = CellMask.from_cube(DyadicCube(self.root, (1,)), 2)
        self.assertEqual(mask, CellMask(self.root, 2, [0, 0, 1, 1]))

    def test_incompatible(self):
        with self.assertRaises(CompatibilityError):
            CellMask.full(self.root, 2).union(CellMask.full(self.root, 3))


class GridFunctionTest(unittest.TestCase):

    def setUp(self) -> None:
        self.root = Cube((0.5,), 0.5)
        self.f = GridFunction(self.root, 1, [0.0, 4.0])

    def test_integrals(self):
        self.assertEqual(self.f.sums(0)[0], 2.0)
        self.assertEqual(grid.average(self.f, self.f.root_cube()), 2.0)
        self.assertEqual(self.f.integral(DyadicCube(self.root, (1,))), 2.0)

    def test_oscillation(self):
        self.assertEqual(grid.oscillation(self.f, self.f.root_cube()), 2.0)
        self.assertEqual(self.f.oscillations(0)[0], 2.0)
        np.testing.assert_array_equal(self.f.oscillations(1), [0.0, 0.0])

    def test_samples_read_only(self):
        with self.assertRaises(ValueError):
            self.f.samples[0] = 1.0

    def test_non_finite(self):
        with self.assertRaises(NonFiniteSampleError):
            GridFunction(self.root, 1, [0.0, np.inf])

    def test_shape(self):
        with self.assertRaises(ParameterError):
            GridFunction(self.root, 2, [1.0, 2.0])

    def test_level_limit(self):
        with self.assertRaises(ParameterError):
            GridFunction(self.root, 13, np.zeros(1 << 13))

    def test_restrict(self):
        g = GridFunction(Cube((0.5, 0.5), 0.5), 2, np.arange(16.0))
        cube = DyadicCube.from_index(g.root, 1, (1, 1))
        local = g.restrict(cube)
        self.assertEqual(local.level, 1)
        self.assertAlmostEqual(local.integral(local.root_cube()), g.integral(cube))

    def test_box_integral(self):
        ones = GridFunction(self.root, 2, np.ones(4))
        self.assertAlmostEqual(ones.box_integral([1], [3]), 0.5)
        self.assertAlmostEqual(ones.box_integral([0.5], [2.5]), 0.5)
        ramp = GridFunction(self.root, 2, [1.0, 2.0, 3.0, 4.0])
        self.assertAlmostEqual(ramp.box_integral([0.5], [1.5]), (0.5 * 1.0 + 0.5 * 2.0) * 0.25)

    def test_weighted_average(self):
        w = GridFunction(self.root, 1, [1.0, 3.0])
        self.assertAlmostEqual(grid.weighted_average(self.f, w, self.f.root_cube()), 3.0)

    def test_additive_over_children(self):
        rng = np.random.default_rng(11)
        g = GridFunction(Cube((0.5, 0.5), 0.5), 4, rng.random((16, 16)) + 0.1)
        for depth in range(4):
            for index in itertools.product(range(1 << depth), repeat=2):
                cube = DyadicCube.from_index(g.root, depth, index)
                total = g.integral(cube)
                parts = math.fsum(g.integral(child) for child in cube.children())
                self.assertLessEqual(abs(total - parts), 1e-12 * abs(total))

    def test_box_integral_matches_direct_sum(self):
        rng = np.random.default_rng(12)
        g = GridFunction(Cube((0.5, 0.5), 0.5), 4, rng.random((16, 16)) + 0.1)
        for depth in range(5):
            factor = 1 << (4 - depth)
            for index in itertools.product(range(1 << depth), repeat=2):
                cube = DyadicCube.from_index(g.root, depth, index)
                direct = math.fsum(g.samples[cube.slices(4)].ravel()) * g.cell_volume
                table = g.box_integral([i * factor for i in index], [(i + 1) * factor for i in index])
                self.assertLessEqual(abs(table - direct), 1e-12 * direct)
        tables = g.summed_volume_table()
        for _ in range(50):
            lower = rng.integers(0, 16, size=2)
            upper = [int(rng.integers(x + 1, 17)) for x in lower]
            direct = math.fsum(g.samples[lower[0]:upper[0], lower[1]:upper[1]].ravel())
            self.assertLessEqual(abs(utils.exact_box_sum(tables, lower, upper) - direct), 1e-12 * direct)

    def test_averages_by_hand(self):
        ramp = GridFunction(self.root, 2, [1.0, 2.0, 3.0, 4.0])
        self.assertAlmostEqual(grid.average(ramp, ramp.root_cube()), 2.5)
        self.assertAlmostEqual(grid.average(ramp, DyadicCube(self.root, (0,))), 1.5)
        w = GridFunction(self.root, 2, [1.0, 1.0, 1.0, 3.0])
        self.assertAlmostEqual(grid.weighted_average(ramp, w, ramp.root_cube()), 3.0)
        self.assertAlmostEqual(grid.oscillation(ramp, ramp.root_cube()), 1.0)

    def test_fingerprint(self):
        self.assertEqual(self.f.fingerprint(), GridFunction(self.root, 1, [0.0, 4.0]).fingerprint())
        self.assertNotEqual(self.f.fingerprint(), GridFunction(self.root, 1, [0.0, 4.5]).fingerprint())

    def test_build_grid_function(self):
        g = grid.build_grid_function(Cube((0.5, 0.5), 0.5), 1, lambda x: x[:, 0] + 10 * x[:, 1])
        np.testing.assert_allclose(g.samples, [[2.75, 7.75], [3.25, 8.25]])


class BoxOverlapTest(unittest.TestCase):

    def test_fractions(self):
        slices, tensor = grid.box_overlap(Cube((0.5,), 0.5), 2, [0.1], [0.6])
        self.assertEqual(slices, (slice(0, 3),))
        np.testing.assert_allclose(tensor, [0.6, 1.0, 0.4])

    def test_miss(self):
        self.assertIsNone(grid.box_overlap(Cube((0.5,), 0.5), 2, [2.0], [3.0]))
        self.assertEqual(grid.box_integral(np.ones(4), Cube((0.5,), 0.5), 2, [2.0], [3.0]), 0.0)

    def test_center_overlap(self):
        line = Cube((0.5,), 0.5)
        slices, tensor = grid.center_overlap(line, 2, [0.1], [0.6])
        self.assertEqual(slices, (slice(0, 2),))
        np.testing.assert_array_equal(tensor, [1.0, 1.0])
        self.assertEqual(grid.center_overlap(line, 2, [0.125], [0.625])[0], (slice(1, 2),))
        self.assertIsNone(grid.center_overlap(line, 2, [0.125], [0.375]))

    def test_integral_matches_overlap(self):
        values = np.arange(16.0).reshape(4, 4)
        root = Cube((0.5, 0.5), 0.5)
        integral = grid.box_integral(values, root, 2, [0.0, 0.0], [0.5, 0.25])
        self.assertAlmostEqual(integral, (0.0 + 4.0) * 0.0625)


class UtilsTest(unittest.TestCase):

    def test_block_sum(self):
        values = np.arange(16.0).reshape(4, 4)
        np.testing.assert_array_equal(utils.block_sum(values, 1), [[10.0, 18.0], [42.0, 50.0]])

    def test_pyramid_total(self):
        rng = np.random.default_rng(3)
        values = rng.random((8, 8))
        pyramid = utils.sum_pyramid(values)
        self.assertEqual(len(pyramid), 4)
        self.assertAlmostEqual(pyramid[0][0, 0], values.sum())

    def test_exact_box_sum(self):
        values = np.arange(16.0).reshape(4, 4)
        table = utils.summed_volume_table(values)
        self.assertEqual(utils.exact_box_sum(table, [1, 1], [3, 3]), 5.0 + 6.0 + 9.0 + 10.0)

    def test_relative_excess(self):
        self.assertLessEqual(utils.relative_excess(1.0 + 1e-14, 1.0, 1e-12), 0)
        self.assertGreater(utils.relative_excess(1.1, 1.0, 1e-12), 0)


if __name__ == '__main__':
    unittest.main()
