import math
import tempfile
import unittest
from pathlib import Path

import numpy as np

from dyadic import codec
from dyadic.domain import DomainRaster, build_chains, whitney_decompose
from dyadic.grid import Cube, DyadicCube, GridFunction
from dyadic.maximal import fractional_maximal
from dyadic.sp_exception import ConfigError
from dyadic.sparse import build_sparse_oscillation, carve_disjoint_sets
from dyadic.weight_spec import build_weight

UNIT = Cube((0.5, 0.5), 0.5)


class GridFunctionCodecTest(unittest.TestCase):

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / 'f.json'

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def test_exact_round_trip(self):
        rng = np.random.default_rng(1)
        f = GridFunction(UNIT, 4, rng.standard_normal((16, 16)) * 1e-7 + 1 / 3)
        codec.dump_grid_function(f, self.path)
        g = codec.load_grid_function(self.path)
        self.assertEqual(g.root, f.root)
        self.assertEqual(g.level, f.level)
        self.assertTrue(np.array_equal(g.samples, f.samples))
        self.assertEqual(g.fingerprint(), f.fingerprint())

    def test_wrong_format(self):
        record = codec.encode_grid_function(GridFunction(UNIT, 1, np.ones((2, 2))))
        record['format'] = 'weight'
        with self.assertRaises(ConfigError):
            codec.decode_grid_function(record)
        record.update(format='grid_function', version=99)
        with self.assertRaises(ConfigError):
            codec.decode_grid_function(record)

    def test_unreadable(self):
        self.path.write_text('{not json', encoding='utf-8')
        with self.assertRaises(ConfigError):
            codec.load_json(self.path)
        with self.assertRaises(ConfigError):
            codec.load_json(Path(self.tmp.name) / 'missing.json')

    def test_maximal_field(self):
        field = fractional_maximal(GridFunction(UNIT, 2, np.arange(16.0)), 1.0)
        decoded = codec.decode_maximal_field(codec.encode_maximal_field(field))
        self.assertEqual(decoded.kind, field.kind)
        self.assertEqual(decoded.parameters, {'alpha': 1.0})
        np.testing.assert_array_equal(decoded.samples, field.samples)


class SparseFamilyCodecTest(unittest.TestCase):

    def setUp(self) -> None:
        rng = np.random.default_rng(6)
        f = GridFunction(UNIT, 4, rng.standard_normal((16, 16)))
        self.family = carve_disjoint_sets(build_sparse_oscillation(f), GridFunction(UNIT, 4, np.ones((16, 16))))

    def test_round_trip(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'family.json'
            codec.dump_sparse_family(self.family, path)
            decoded = codec.load_sparse_family(path)
        self.assertEqual(decoded.cubes, self.family.cubes)
        self.assertEqual([m.parent for m in decoded.members], [m.parent for m in self.family.members])
        self.assertEqual(decoded.eta, self.family.eta)
        np.testing.assert_array_equal(decoded.carved_ratios, self.family.carved_ratios)

    def test_tampered_carved_set(self):
        record = codec.encode_sparse_family(self.family)
        record['members'][0]['carved'] = [[0, 1]]
        with self.assertRaises(ConfigError):
            codec.decode_sparse_family(record)

    def test_runs(self):
        bits = np.array([[1, 1, 0], [0, 1, 1]], dtype=bool)
        runs = codec.encode_runs(bits)
        self.assertEqual(runs, [[0, 2], [4, 2]])
        np.testing.assert_array_equal(codec.decode_runs(runs, (2, 3)), bits)


class JsonSafeTest(unittest.TestCase):

    def test_plain_types(self):
        record = codec.json_safe({'a': np.float64(1.5), 'b': np.int64(3), 'c': np.array([True, False]),
                                  'd': math.inf, 'e': (np.bool_(True), Path('x/y')),
                                  'f': DyadicCube(UNIT, (1,)), 'g': UNIT})
        self.assertEqual(record['a'], 1.5)
        self.assertIsInstance(record['b'], int)
        self.assertEqual(record['c'], [True, False])
        self.assertEqual(record['d'], 'inf')
        self.assertEqual(record['e'], [True, 'x/y'])
        self.assertEqual(record['f'], str(DyadicCube(UNIT, (1,))))
        self.assertEqual(record['g'], {'center': [0.5, 0.5], 'half_side': 0.5})


class DecompositionCodecTest(unittest.TestCase):

    def test_chains_record(self):
        domain = DomainRaster.from_spec('box(0,0;1,1)', UNIT, 5)
        chains = build_chains(whitney_decompose(domain))
        record = codec.json_safe(codec.encode_chains(chains))
        self.assertEqual(record['format'], 'chains')
        self.assertEqual(len(record['cubes']), len(chains.whitney))
        self.assertEqual(record['central'], chains.central)
        self.assertAlmostEqual(record['measure'], record['domain_measure'])

    def test_weight_record(self):
        record = codec.encode_weight(build_weight('const:2.0', UNIT, 2))
        self.assertEqual(record['label'], 'const:2.0')
        self.assertEqual(record['min'], 2.0)
        self.assertEqual(codec.decode_grid_function(record['function']).level, 2)


if __name__ == '__main__':
    unittest.main()
