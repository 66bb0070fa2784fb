import unittest

import numpy as np

from dyadic.domain import DomainRaster
from dyadic.grid import Cube, DyadicCube, GridFunction, build_grid_function
from dyadic.maximal import (DyadicPolicy, GridAlignedPolicy, fractional_maximal, noncentered_maximal,
                            sharp_gradient_ratio, sharp_maximal, strong_type_check, weak_type_check,
                            weighted_maximal)
from dyadic.sp_exception import ParameterError

LINE = Cube((0.5,), 0.5)
UNIT = Cube((0.5, 0.5), 0.5)


class DyadicMaximalTest(unittest.TestCase):

    def setUp(self) -> None:
        self.f = GridFunction(LINE, 1, [0.0, 4.0])

    def test_fractional(self):
        np.testing.assert_allclose(fractional_maximal(self.f, 0.0).samples, [2.0, 4.0])
        np.testing.assert_allclose(fractional_maximal(self.f, 1.0).samples, [2.0, 2.0])
        with self.assertRaises(ParameterError):
            fractional_maximal(self.f, 1.5)

    def test_weighted_matches_unweighted(self):
        w = GridFunction(LINE, 1, [2.0, 2.0])
        np.testing.assert_allclose(weighted_maximal(self.f, w).samples, [2.0, 4.0])
        uneven = GridFunction(LINE, 1, [1.0, 3.0])
        np.testing.assert_allclose(weighted_maximal(self.f, uneven).samples, [3.0, 4.0])

    def test_sharp(self):
        np.testing.assert_allclose(sharp_maximal(self.f).samples, [2.0, 2.0])

    def test_local_cube(self):
        g = GridFunction(LINE, 2, [0.0, 4.0, 1.0, 1.0])
        local = sharp_maximal(g, DyadicCube(LINE, (1,)))
        self.assertEqual(local.field.level, 1)
        np.testing.assert_allclose(local.samples, [0.0, 0.0])

    def test_dominates_absolute_value(self):
        rng = np.random.default_rng(11)
        g = GridFunction(UNIT, 4, rng.standard_normal((16, 16)))
        w = GridFunction(UNIT, 4, np.exp(rng.standard_normal((16, 16))))
        self.assertTrue(np.all(weighted_maximal(g, w).samples >= np.abs(g.samples) * (1 - 1e-12)))
        self.assertTrue(np.all(fractional_maximal(g, 0.0).samples >= np.abs(g.samples) * (1 - 1e-12)))


class NormInequalityTest(unittest.TestCase):

    def setUp(self) -> None:
        rng = np.random.default_rng(2)
        self.f = GridFunction(UNIT, 5, rng.standard_normal((32, 32)))
        self.w = GridFunction(UNIT, 5, np.exp(2 * rng.standard_normal((32, 32))))

    def test_weak_type(self):
        for t in (0.1, 0.5, 1.0, 2.0):
            result = weak_type_check(self.f, self.w, t)
            self.assertTrue(result['passed'], result)
        with self.assertRaises(ParameterError):
            weak_type_check(self.f, self.w, 0.0)

    def test_strong_type(self):
        for p in (1.5, 2.0, 4.0):
            result = strong_type_check(self.f, self.w, p)
            self.assertTrue(result['passed'], result)
            self.assertAlmostEqual(result['constant'], p * 2 ** p / (p - 1))
        with self.assertRaises(ParameterError):
            strong_type_check(self.f, self.w, 1.0)


class NoncenteredMaximalTest(unittest.TestCase):

    def setUp(self) -> None:
        self.domain = DomainRaster.from_spec('box(0,0;1,1)', UNIT, 3)
        self.w = GridFunction(UNIT, 3, np.ones((8, 8)))

    def test_constant_function(self):
        f = GridFunction(UNIT, 3, np.full((8, 8), 2.0))
        for policy in (GridAlignedPolicy(max_boxes=10 ** 6), DyadicPolicy()):
            field = noncentered_maximal(f, self.w, self.domain, policy)
            np.testing.assert_allclose(field.samples, 2.0)
            self.assertTrue(field.provenance['lower_bound'])

    def test_dominates_absolute_value(self):
        rng = np.random.default_rng(4)
        f = GridFunction(UNIT, 3, rng.standard_normal((8, 8)))
        field = noncentered_maximal(f, self.w, self.domain, GridAlignedPolicy(max_boxes=10 ** 6))
        self.assertEqual(field.provenance['stride'], 1)
        self.assertTrue(np.all(field.samples >= np.abs(f.samples) * (1 - 1e-12)))

    def test_shifted_cube_line(self):
        # the side-one cube [0.25, 1.25) meets the domain in [0.25, 1) and covers the first cell center
        domain = DomainRaster.from_spec('box(0;1)', LINE, 1)
        f = GridFunction(LINE, 1, np.array([0.0, 4.0]))
        field = noncentered_maximal(f, GridFunction(LINE, 1, np.ones(2)), domain, GridAlignedPolicy(max_boxes=10 ** 6))
        np.testing.assert_allclose(field.samples, [8.0 / 3.0, 4.0], rtol=1e-12)

    def test_stride(self):
        f = GridFunction(UNIT, 3, np.ones((8, 8)))
        field = noncentered_maximal(f, self.w, self.domain, GridAlignedPolicy(max_boxes=16))
        self.assertGreater(field.provenance['stride'], 1)

    def test_grid_mismatch(self):
        f = GridFunction(UNIT, 2, np.ones((4, 4)))
        with self.assertRaises(ParameterError):
            noncentered_maximal(f, GridFunction(UNIT, 2, np.ones((4, 4))), self.domain)


class SharpGradientTest(unittest.TestCase):

    def test_affine(self):
        u = build_grid_function(LINE, 6, lambda x: x[:, 0])
        gradient = GridFunction(LINE, 6, np.ones(64))
        self.assertAlmostEqual(sharp_gradient_ratio(u, gradient), 0.25)

    def test_constant(self):
        u = GridFunction(LINE, 4, np.full(16, 5.0))
        self.assertEqual(sharp_gradient_ratio(u, GridFunction(LINE, 4, np.zeros(16))), 0.0)


if __name__ == '__main__':
    unittest.main()
