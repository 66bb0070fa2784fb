"""
Experiment configuration read from versioned JSON records
"""
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import config_util.cio as cio
from dyadic.codec import load_json
from dyadic.domain import parse_domain_spec
from dyadic.grid import Cube
from dyadic.sp_exception import ConfigError, SPException
from dyadic.weight_spec import parse_weight_spec
from harness.families import parse_function_spec

SCHEMA = 1

THEOREMS = ('FS', 'TWM', 'LOCAL_P', 'GLOBAL_P', 'DIST_E', 'DIST_BDY', 'PLAPLACE', 'SPARSE1', 'SPARSE2', 'L2G')
DOMAIN_THEOREMS = ('GLOBAL_P', 'DIST_BDY', 'PLAPLACE', 'L2G')
TWO_WEIGHT_THEOREMS = ('TWM', 'LOCAL_P', 'GLOBAL_P', 'DIST_E', 'DIST_BDY')
GRADIENT_THEOREMS = ('LOCAL_P', 'GLOBAL_P', 'DIST_E', 'DIST_BDY', 'PLAPLACE', 'L2G')


@dataclass(frozen=True)
class ExperimentConfig:
    theorem: str
    schema: int = SCHEMA
    label: str = ''
    n: int = 1
    level: int = 6
    levels: tuple = ()
    p: float = 2.0
    q: Optional[float] = None
    alpha: float = 0.0
    rho: Optional[float] = None
    a: Optional[float] = None
    beta: Optional[float] = None
    w: str = 'const:1'
    v: Optional[str] = None
    weights: tuple = ()
    domain: Optional[str] = None
    root_center: Optional[tuple] = None
    root_half_side: float = 0.5
    functions: tuple = ()
    instances: int = 0
    seed: int = 0
    cubes: tuple = ()
    radii: tuple = ()
    stability: Optional[float] = None
    band: Optional[float] = None

    @classmethod
    def from_dict(cls, record: dict) -> 'ExperimentConfig':
        if not isinstance(record, dict):
            raise ConfigError('config', 'expected a JSON object')
        if record.get('schema') != SCHEMA:
            raise ConfigError('schema', f'expected {SCHEMA}, got {record.get("schema")!r}')
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(record) - known)
        if unknown:
            raise ConfigError(unknown[0], f'unknown key, expected one of {sorted(known)}')
        if 'theorem' not in record:
            raise ConfigError('theorem', 'missing theorem id')
        values = dict(record)
        for key in ('levels', 'weights', 'functions', 'radii'):
            if key in values:
                values[key] = tuple(values[key])
        if 'cubes' in values:
            values['cubes'] = tuple(tuple(cube) for cube in values['cubes'])
        if values.get('root_center') is not None:
            values['root_center'] = tuple(values['root_center'])
        try:
            config = cls(**values)
        except TypeError as e:
            raise ConfigError('config', str(e))
        config.validate()
        return config

    @classmethod
    def load(cls, path) -> 'ExperimentConfig':
        return cls.from_dict(load_json(path))

    def replace(self, **changes) -> 'ExperimentConfig':
        config = dataclasses.replace(self, **changes)
        config.validate()
        return config

    def to_dict(self) -> dict:
        return {key: list(value) if isinstance(value, tuple) else value
                for key, value in dataclasses.asdict(self).items()}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]

    # Derived values

    @property
    def exponent_q(self) -> float:
        return self.p if self.q is None else self.q

    @property
    def v_spec(self) -> str:
        return self.w if self.v is None else self.v

    @property
    def weight_specs(self) -> tuple:
        return self.weights or (self.w,)

    @property
    def distance_exponent(self) -> float:
        """
        beta = n - (q/p)(n - p), the weight being d(x, .)^-beta
        """
        if self.beta is not None:
            return self.beta
        return self.n - self.exponent_q / self.p * (self.n - self.p)

    def root(self) -> Cube:
        center = self.root_center if self.root_center is not None else (0.5,) * self.n
        return Cube(center, self.root_half_side)

    def trial_cubes(self) -> list[Cube]:
        return [Cube(cube[:-1], cube[-1]) for cube in self.cubes]

    def refinement_levels(self, default_offset: int) -> list[int]:
        """
        Levels of a refinement study, (L, L + 1) or (L - 1, L) unless given explicitly
        """
        if self.levels:
            return list(self.levels)
        pair = [self.level, self.level + default_offset]
        return sorted(level for level in pair if 0 <= level <= cio.get_max_level(self.n))

    # Validation

    def _fail(self, key: str, reason: str):
        raise ConfigError(key, f'{reason} (theorem {self.theorem})')

    def validate(self):
        if self.theorem not in THEOREMS:
            raise ConfigError('theorem', f'unknown theorem id {self.theorem!r}, expected one of {THEOREMS}')
        max_level = cio.get_max_level(self.n)
        for level in (self.level,) + tuple(self.levels):
            if not isinstance(level, int) or not 0 <= level <= max_level:
                self._fail('level', f'level {level!r} outside 0..{max_level} for n={self.n}')
        if not isinstance(self.seed, int) or self.seed < 0:
            self._fail('seed', 'a nonnegative integer seed is required')
        if not isinstance(self.instances, int) or self.instances < 0:
            self._fail('instances', 'a nonnegative instance count is required')
        if self.root_center is not None and len(self.root_center) != self.n:
            self._fail('root_center', f'a point of dimension {self.n} is required')
        if not self.root_half_side > 0:
            self._fail('root_half_side', 'a positive half side is required')
        self._validate_exponents()
        self._validate_specs()
        if self.theorem in DOMAIN_THEOREMS and self.domain is None:
            self._fail('domain', 'a domain spec is required')
        if self.theorem in ('PLAPLACE', 'DIST_E') and not self.cubes:
            self._fail('cubes', 'trial cubes [center.., half_side] are required')
        for cube in self.cubes:
            if len(cube) != self.n + 1 or not cube[-1] > 0:
                self._fail('cubes', f'cube {list(cube)} is not [center of dimension {self.n}, positive half_side]')
        if any(not radius > 0 for radius in self.radii):
            self._fail('radii', 'radii must be positive')
        if self.theorem in GRADIENT_THEOREMS and not self.functions:
            self._fail('functions', 'test functions with analytic gradients are required')
        if self.theorem not in GRADIENT_THEOREMS and not (self.functions or self.instances):
            self._fail('instances', 'test functions or a positive count of random instances are required')

    def _validate_exponents(self):
        p, q, n = self.p, self.exponent_q, self.n
        if not (isinstance(p, (int, float)) and math.isfinite(p)):
            self._fail('p', 'a finite exponent is required')
        if self.theorem in ('FS', 'PLAPLACE') or self.theorem in TWO_WEIGHT_THEOREMS or self.theorem == 'L2G':
            if not p > 1:
                self._fail('p', f'p={p} must exceed 1')
        if self.theorem in TWO_WEIGHT_THEOREMS:
            if not p <= q < math.inf:
                self._fail('q', f'1 < p <= q < inf violated by p={p}, q={q}')
            if not 0 <= self.alpha <= n:
                self._fail('alpha', f'0 <= alpha <= n violated by alpha={self.alpha}')
        if self.theorem in ('DIST_E', 'DIST_BDY'):
            if not p < n:
                self._fail('p', f'distance weights need p < n, got p={p}, n={n}')
            if not q <= n * p / (n - p):
                self._fail('q', f'q <= np/(n-p) = {n * p / (n - p)} violated by q={q}')
        if self.theorem == 'PLAPLACE' and not p > 2 * n / (n + 1):
            self._fail('p', f'p > 2n/(n+1) = {2 * n / (n + 1)} violated by p={p}')
        if self.theorem == 'SPARSE2':
            if not p >= 1:
                self._fail('p', f'p={p} must be at least 1')
            if not 0 <= self.alpha < n:
                self._fail('alpha', f'0 <= alpha < n violated by alpha={self.alpha}')
        if self.rho is not None and not self.rho > 1:
            self._fail('rho', f'rho={self.rho} must exceed 1')
        if self.a is not None and not self.a > 2 ** n:
            self._fail('a', f'a={self.a} must exceed 2^n = {2 ** n}')

    def _validate_specs(self):
        try:
            for spec in self.weight_specs + (self.v_spec,):
                parse_weight_spec(spec)
            for spec in self.functions:
                parse_function_spec(spec, self.n)
            if self.domain is not None:
                shape = parse_domain_spec(self.domain)
                if shape.n != self.n:
                    self._fail('domain', f'a shape of dimension {self.n} is required')
        except ConfigError:
            raise
        except SPException as e:
            raise ConfigError('spec', str(e))
