"""
Test functions with analytic gradients, addressed by spec strings:

    affine:slope=(a..):offset=<b>
    sine:freq=(k..)
    ramp:center=(x..)
    bump:center=(x..):radius=<r>
    samples:(v..)                 raw cell values, row-major, no gradient
"""
import math
import re
from typing import Callable, Optional

import numpy as np

from dyadic import grid
from dyadic.grid import Cube, GridFunction
from dyadic.sp_exception import ParameterError
from dyadic.weights import Bump

_NUMBER = r'[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?'
KINDS = ('affine', 'sine', 'ramp', 'bump', 'samples')


class LipschitzFunction:
    """
    Point function with its analytic gradient, sampled at cell centers on demand
    """

    def __init__(self, spec: str, n: int, values: Optional[Callable] = None, gradient: Optional[Callable] = None,
                 cells: Optional[tuple] = None):
        self.spec = spec
        self.n = n
        self.values = values
        self.gradient = gradient
        self.cells = cells

    @property
    def has_gradient(self) -> bool:
        return self.gradient is not None

    def sample(self, root: Cube, level: int) -> GridFunction:
        if self.cells is not None:
            if len(self.cells) != 1 << (root.n * level):
                raise ParameterError('samples', self.spec, f'{1 << (root.n * level)} values for level {level}')
            return GridFunction(root, level, np.array(self.cells))
        return grid.build_grid_function(root, level, self.values)

    def gradient_norm(self, root: Cube, level: int) -> GridFunction:
        if self.gradient is None:
            raise ParameterError('function', self.spec, 'an analytic gradient')
        points = root.cell_centers(level).reshape(-1, root.n)
        norms = np.linalg.norm(np.asarray(self.gradient(points), dtype=np.float64).reshape(-1, root.n), axis=1)
        return GridFunction(root, level, norms)

    def __str__(self) -> str:
        return self.spec


def _vector(text: str, spec: str) -> np.ndarray:
    if not (text.startswith('(') and text.endswith(')')):
        raise ParameterError('function', spec, f'a parenthesised tuple, got {text!r}')
    parts = text[1:-1].split(',')
    if not all(re.fullmatch(_NUMBER, part.strip()) for part in parts):
        raise ParameterError('function', spec, f'numbers in {text!r}')
    return np.array([float(part) for part in parts])


def _fields(tokens: list, spec: str, required: tuple) -> dict:
    fields = {}
    for token in tokens:
        key, sep, value = token.partition('=')
        if not sep or key not in required or key in fields:
            raise ParameterError('function', spec, f'fields {required}, got {token!r}')
        fields[key] = value
    if set(fields) != set(required):
        raise ParameterError('function', spec, f'fields {required}')
    return fields


def _sized(vector: np.ndarray, n: int, spec: str) -> np.ndarray:
    if vector.shape != (n,):
        raise ParameterError('function', spec, f'a tuple of {n} entries')
    return vector


def parse_function_spec(spec: str, n: int) -> LipschitzFunction:
    tokens = spec.strip().split(':')
    kind = tokens[0]
    if kind == 'samples':
        if len(tokens) != 2:
            raise ParameterError('function', spec, 'samples:(v..)')
        return LipschitzFunction(spec, n, cells=tuple(_vector(tokens[1], spec)))
    if kind == 'affine':
        fields = _fields(tokens[1:], spec, ('slope', 'offset'))
        slope = _sized(_vector(fields['slope'], spec), n, spec)
        if not re.fullmatch(_NUMBER, fields['offset']):
            raise ParameterError('function', spec, 'a numeric offset')
        offset = float(fields['offset'])
        return LipschitzFunction(spec, n, lambda x: x @ slope + offset, lambda x: np.broadcast_to(slope, x.shape).copy())
    if kind == 'sine':
        freq = _sized(_vector(_fields(tokens[1:], spec, ('freq',))['freq'], spec), n, spec)
        active = freq != 0

        def values(x):
            factors = np.where(active, np.sin(2 * math.pi * freq * x), 1.0)
            return np.prod(factors, axis=1)

        def gradient(x):
            factors = np.where(active, np.sin(2 * math.pi * freq * x), 1.0)
            derivative = np.where(active, 2 * math.pi * freq * np.cos(2 * math.pi * freq * x), 0.0)
            result = np.empty_like(x)
            for k in range(n):
                result[:, k] = derivative[:, k] * np.prod(np.delete(factors, k, axis=1), axis=1)
            return result

        return LipschitzFunction(spec, n, values, gradient)
    if kind == 'ramp':
        center = _sized(_vector(_fields(tokens[1:], spec, ('center',))['center'], spec), n, spec)

        def gradient(x):
            offset = x - center
            norm = np.linalg.norm(offset, axis=1)
            return np.divide(offset, norm[:, None], out=np.zeros_like(offset), where=norm[:, None] > 0)

        return LipschitzFunction(spec, n, lambda x: np.linalg.norm(x - center, axis=1), gradient)
    if kind == 'bump':
        fields = _fields(tokens[1:], spec, ('center', 'radius'))
        center = _sized(_vector(fields['center'], spec), n, spec)
        if not re.fullmatch(_NUMBER, fields['radius']):
            raise ParameterError('function', spec, 'a numeric radius')
        bump = Bump(tuple(center), float(fields['radius']))
        return LipschitzFunction(spec, n, bump.values, bump.gradient)
    raise ParameterError('function', spec, f'one of the kinds {KINDS}')


def random_function(rng: np.random.Generator, root: Cube, level: int, nonnegative: bool = False) -> GridFunction:
    """
    Seeded random grid function: standard normal samples, or uniform on [0, 1) when nonnegative
    """
    shape = (1 << level,) * root.n
    samples = rng.random(shape) if nonnegative else rng.standard_normal(shape)
    return GridFunction(root, level, samples)
