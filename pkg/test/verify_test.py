import math
import unittest
from pathlib import Path
from unittest import mock

import numpy as np

import config_util.logging as log
from dyadic.grid import Cube, GridFunction
from dyadic.sp_exception import ConfigError, ParameterError, SupportError
from dyadic.weights import Weight
from harness import verify
from harness.experiment import ExperimentConfig

SUITES = Path(__file__).resolve().parent.parent / 'suites'
LINE = Cube((0.5,), 0.5)
AFFINE_X = 'affine:slope=(1.0,0.0):offset=0.0'


def _config(**values) -> ExperimentConfig:
    return ExperimentConfig.from_dict({'schema': 1, **values})


class ConstantsTest(unittest.TestCase):

    def test_fefferman_stein(self):
        self.assertAlmostEqual(verify.fefferman_stein_constant(1, 2.0, 2.0, 0.5), 512.0)

    def test_two_weight_maximal(self):
        self.assertAlmostEqual(verify.two_weight_maximal_constant(4.0, 1.0, 0.5, 2.0), 64.0)

    def test_local_poincare(self):
        self.assertAlmostEqual(verify.local_poincare_constant(512.0, 0.5, 64.0, 2.0), math.sqrt(512.0) * 32.0)

    def test_sparse_parameters(self):
        w = Weight.constant(LINE, 4)
        _, rho, eta = verify.sparse_parameters(w, 'rho', 1)
        self.assertAlmostEqual(rho, 2.0)
        self.assertAlmostEqual(eta, 0.5)
        _, rho, eta = verify.sparse_parameters(w, 'rho', 1, 4.0)
        self.assertEqual(rho, 4.0)
        self.assertAlmostEqual(eta, 0.75)
        _, a, eta = verify.sparse_parameters(w, 'a', 1, 4.0)
        self.assertEqual(a, 4.0)
        self.assertAlmostEqual(eta, 0.5)

    def test_sparse_parameters_too_small(self):
        w = Weight(GridFunction(LINE, 1, [1.0, 1000.0]))
        with self.assertRaises(ParameterError):
            verify.sparse_parameters(w, 'rho', 1, 1.01)


class NumericsTest(unittest.TestCase):

    def test_optimal_constant_bounded_minimisation(self):
        # c^1.5 + 3 (1 - c)^1.5 is minimal where sqrt(c) = 3 sqrt(1 - c)
        c = verify.optimal_constant(np.array([0.0, 1.0]), np.array([1.0, 3.0]), 1.5)
        self.assertAlmostEqual(c, 0.9, places=6)
        symmetric = verify.optimal_constant(np.array([0.0, 1.0]), np.ones(2), 3.0)
        self.assertAlmostEqual(symmetric, 0.5, places=6)

    def test_optimal_constant(self):
        self.assertAlmostEqual(verify.optimal_constant(np.array([0.0, 1.0]), np.array([1.0, 3.0]), 2), 0.75)
        median = verify.optimal_constant(np.array([0.0, 1.0, 2.0]), np.ones(3), 1.0)
        self.assertAlmostEqual(median, 1.0, places=6)
        self.assertEqual(verify.optimal_constant(np.full(4, 2.5), np.ones(4), 3.0), 2.5)


class RunnerTest(unittest.TestCase):

    def setUp(self) -> None:
        log.quiet = True

    def test_fefferman_stein_hand_case(self):
        report = verify.run_experiment(ExperimentConfig.load(SUITES / 'fs_hand.json'), threads=1)
        self.assertTrue(report['passed'])
        instance = report['instances'][0]
        self.assertAlmostEqual(instance['lhs'], 4.0)
        self.assertAlmostEqual(instance['rhs'], 4.0)
        self.assertAlmostEqual(instance['measured'], 1.0)
        self.assertAlmostEqual(instance['constant'], 512.0)
        self.assertEqual(report['environment']['seed'], 0)

    def test_fefferman_stein_random(self):
        cfg = _config(theorem='FS', n=1, level=6, p=2.0, weights=['const:1.0', 'dist:point(0.0):gamma=-0.5'],
                      instances=6, seed=3)
        report = verify.run_experiment(cfg, threads=2)
        self.assertTrue(report['passed'], report)
        self.assertEqual(len(report['instances']), 6)

    def test_two_weight_maximal(self):
        cfg = ExperimentConfig.load(SUITES / 'twm.json').replace(level=5, instances=3)
        report = verify.run_experiment(cfg, threads=1)
        self.assertTrue(report['passed'], report)
        self.assertAlmostEqual(report['summary']['K'], 1.0)
        necessity = report['instances'][-1]
        self.assertEqual(necessity['label'], 'necessity')
        self.assertGreaterEqual(necessity['measured'], 1.0 - 1e-12)

    def test_local_poincare_affine(self):
        cfg = _config(theorem='LOCAL_P', n=1, level=6, p=2.0, q=2.0, w='const:1.0', v='const:1.0',
                      functions=['affine:slope=(1.0):offset=0.0'])
        report = verify.run_experiment(cfg, threads=1)
        self.assertTrue(report['passed'], report)
        instance = report['instances'][0]
        self.assertEqual(instance['status'], 'pass')
        self.assertAlmostEqual(instance['measured'], 12 ** -0.5, delta=1e-3)
        self.assertEqual([run['level'] for run in instance['details']['levels']], [6, 7])

    def test_sparse_runners(self):
        oscillation = _config(theorem='SPARSE1', n=1, level=6, rho=2.0, instances=5, seed=1)
        levelset = _config(theorem='SPARSE2', n=1, level=6, p=2.0, alpha=0.5, a=4.0, instances=5, seed=2)
        for cfg in (oscillation, levelset):
            report = verify.run_experiment(cfg, threads=1)
            self.assertTrue(report['passed'], report)
            self.assertEqual(len(report['instances']), 5)

    def test_global_affine(self):
        cfg = _config(theorem='GLOBAL_P', n=2, level=4, p=2.0, q=2.0, domain='box(0,0;1,1)', functions=[AFFINE_X])
        report = verify.run_experiment(cfg, threads=1)
        self.assertEqual(report['instances'][0]['label'], 'hypotheses')
        instance = report['instances'][1]
        self.assertTrue(instance['passed'])
        self.assertAlmostEqual(instance['details']['c'], 0.5)
        self.assertAlmostEqual(instance['measured'], 12 ** -0.5, delta=0.01)

    def test_distance_set(self):
        cfg = _config(theorem='DIST_E', n=2, level=4, p=1.5, q=1.5, w='dist:point(0.0,0.0):gamma=-1.0',
                      cubes=[[0.5, 0.5, 0.5]], functions=[AFFINE_X])
        report = verify.run_experiment(cfg, threads=1)
        self.assertTrue(report['passed'], report)
        self.assertAlmostEqual(report['summary']['gamma'], -1.5)
        self.assertEqual([i['label'] for i in report['instances']][0], 'aikawa')

    def test_distance_set_needs_distance_weight(self):
        cfg = _config(theorem='DIST_E', n=2, level=4, p=1.5, w='const:1.0', cubes=[[0.5, 0.5, 0.5]],
                      functions=[AFFINE_X])
        with self.assertRaises(ConfigError):
            verify.run_experiment(cfg, threads=1)

    def test_distance_boundary(self):
        cfg = _config(theorem='DIST_BDY', n=2, level=4, p=1.5, q=1.5, domain='box(0,0;1,1)', functions=[AFFINE_X])
        report = verify.run_experiment(cfg, threads=1)
        self.assertAlmostEqual(report['summary']['beta'], 1.5)
        self.assertEqual(report['summary']['w'], 'dist:boundary:gamma=-1.5')
        self.assertTrue(math.isfinite(report['instances'][1]['measured']))

    def test_plaplace(self):
        cfg = ExperimentConfig.load(SUITES / 'plaplace.json').replace(level=5)
        report = verify.run_experiment(cfg, threads=1)
        labels = [i['label'] for i in report['instances']]
        self.assertEqual(labels[0], 'hypotheses')
        self.assertTrue(labels[-1].startswith('uniformity'))
        for instance in report['instances'][1:3]:
            self.assertAlmostEqual(instance['measured'], 1 / 12, delta=0.005)
        self.assertEqual(report['instances'][-1]['status'], 'pass')

    def test_local_to_global(self):
        cfg = _config(theorem='L2G', n=2, level=4, p=2.0, domain='box(0,0;1,1)', functions=[AFFINE_X])
        report = verify.run_experiment(cfg, threads=1)
        instance = report['instances'][0]
        self.assertIn(instance['status'], ('pass', 'inconclusive'))
        self.assertEqual([run['level'] for run in instance['details']['levels']], [3, 4])
        self.assertGreaterEqual(instance['details']['noncentered_bound'], 1.0 - 1e-12)

    def test_runner_error_becomes_report(self):
        def failing(cfg, threads=None):
            raise SupportError('bump')

        cfg = _config(theorem='FS', instances=1)
        with mock.patch.dict(verify.RUNNERS, {'FS': failing}):
            report = verify.run_experiment(cfg)
        self.assertFalse(report['passed'])
        self.assertEqual(report['instances'][0]['status'], 'error')


if __name__ == '__main__':
    unittest.main()
