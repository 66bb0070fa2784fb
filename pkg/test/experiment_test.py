import unittest
from pathlib import Path

from dyadic.grid import Cube
from dyadic.sp_exception import ConfigError
from harness.experiment import THEOREMS, ExperimentConfig

SUITES = Path(__file__).resolve().parent.parent / 'suites'


def _config(**values) -> ExperimentConfig:
    return ExperimentConfig.from_dict({'schema': 1, **values})


class ExperimentConfigTest(unittest.TestCase):

    def test_defaults(self):
        cfg = _config(theorem='FS', instances=3)
        self.assertEqual(cfg.exponent_q, 2.0)
        self.assertEqual(cfg.v_spec, 'const:1')
        self.assertEqual(cfg.weight_specs, ('const:1',))
        self.assertEqual(cfg.root(), Cube((0.5,), 0.5))

    def test_lists_become_tuples(self):
        cfg = _config(theorem='DIST_E', n=2, p=1.5, q=1.5, w='dist:point(0.0,0.0):gamma=-1.5',
                      cubes=[[0.5, 0.5, 0.25]], functions=['affine:slope=(1.0,0.0):offset=0.0'])
        self.assertEqual(cfg.cubes, ((0.5, 0.5, 0.25),))
        self.assertEqual(cfg.trial_cubes(), [Cube((0.5, 0.5), 0.25)])
        self.assertAlmostEqual(cfg.distance_exponent, 1.5)

    def test_schema_and_keys(self):
        with self.assertRaises(ConfigError):
            ExperimentConfig.from_dict({'theorem': 'FS', 'instances': 1})
        with self.assertRaises(ConfigError):
            _config(theorem='FS', instances=1, colour='blue')
        with self.assertRaises(ConfigError):
            _config(instances=1)
        with self.assertRaises(ConfigError):
            _config(theorem='RIESZ', instances=1)

    def test_ranges(self):
        for values in ({'theorem': 'FS'},
                       {'theorem': 'FS', 'instances': 1, 'level': 13},
                       {'theorem': 'FS', 'instances': 1, 'seed': -1},
                       {'theorem': 'FS', 'instances': 1, 'p': 1.0},
                       {'theorem': 'FS', 'instances': 1, 'rho': 1.0},
                       {'theorem': 'TWM', 'instances': 1, 'p': 2.0, 'q': 1.5},
                       {'theorem': 'SPARSE2', 'instances': 1, 'a': 2.0},
                       {'theorem': 'SPARSE2', 'n': 1, 'instances': 1, 'alpha': 1.0},
                       {'theorem': 'DIST_E', 'n': 1, 'p': 1.5, 'cubes': [[0.5, 0.5]], 'functions': ['ramp:center=(0.5)']},
                       {'theorem': 'GLOBAL_P', 'n': 2, 'functions': ['sine:freq=(1.0,1.0)']},
                       {'theorem': 'GLOBAL_P', 'n': 2, 'domain': 'box(0;1)', 'functions': ['sine:freq=(1.0,1.0)']},
                       {'theorem': 'FS', 'instances': 1, 'w': 'gauss:1'},
                       {'theorem': 'FS', 'instances': 1, 'n': 4}):
            with self.assertRaises(ConfigError, msg=str(values)):
                _config(**values)

    def test_replace_validates(self):
        cfg = _config(theorem='FS', instances=1)
        self.assertEqual(cfg.replace(seed=5).seed, 5)
        with self.assertRaises(ConfigError):
            cfg.replace(level=99)

    def test_digest(self):
        cfg = _config(theorem='FS', instances=1)
        self.assertEqual(cfg.digest(), _config(theorem='FS', instances=1).digest())
        self.assertNotEqual(cfg.digest(), cfg.replace(seed=1).digest())
        self.assertEqual(len(cfg.digest()), 16)

    def test_refinement_levels(self):
        cfg = _config(theorem='FS', instances=1, level=6)
        self.assertEqual(cfg.refinement_levels(1), [6, 7])
        self.assertEqual(cfg.refinement_levels(-1), [5, 6])
        self.assertEqual(cfg.replace(level=12).refinement_levels(1), [12])
        self.assertEqual(cfg.replace(level=0).refinement_levels(-1), [0])
        self.assertEqual(cfg.replace(levels=(3, 4, 5)).refinement_levels(1), [3, 4, 5])

    def test_suites_load(self):
        paths = sorted(SUITES.glob('*.json'))
        self.assertTrue(paths)
        for path in paths:
            cfg = ExperimentConfig.load(path)
            self.assertIn(cfg.theorem, THEOREMS)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            ExperimentConfig.load(SUITES / 'missing.json')


if __name__ == '__main__':
    unittest.main()
