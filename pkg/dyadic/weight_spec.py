"""
Weight families addressed by spec strings:

    const:<c>
    dist:point(x..)[;point(x..)]:gamma=<g>
    dist:plane(axis=<k>,offset=<t>):gamma=<g>
    dist:boundary:gamma=<g>
    parabola:p=<p>:c=<C>[:center=(x..)]
    fundamental:p=<p>:c=<c>:cap=<M>[:center=(x..)]
    lognormal:sigma=<s>:seed=<k>
"""
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from dyadic.domain import DomainRaster
from dyadic.grid import Cube, GridFunction
from dyadic.sp_exception import ParameterError
from dyadic.weights import AxisHyperplane, PointSet, RasterBoundary, Weight, distance_weight

_NUMBER = r'[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?'
KINDS = ('const', 'dist', 'parabola', 'fundamental', 'lognormal')


@dataclass(frozen=True)
class WeightSpec:
    kind: str
    value: Optional[float] = None
    target: Optional[str] = None
    points: Optional[tuple] = None
    axis: Optional[int] = None
    offset: Optional[float] = None
    gamma: Optional[float] = None
    p: Optional[float] = None
    c: Optional[float] = None
    cap: Optional[float] = None
    center: Optional[tuple] = None
    sigma: Optional[float] = None
    seed: Optional[int] = None


def _number(text: str, spec: str) -> float:
    if not re.fullmatch(_NUMBER, text.strip()):
        raise ParameterError('weight', spec, f'a number, got {text!r}')
    return float(text)


def _tuple(text: str, spec: str) -> tuple:
    return tuple(_number(part, spec) for part in text.split(','))


def _fields(tokens: list, spec: str, required: tuple, optional: tuple = ()) -> dict:
    fields = {}
    for token in tokens:
        key, sep, value = token.partition('=')
        if not sep or key not in required + optional or key in fields:
            raise ParameterError('weight', spec, f'fields {required + optional}, got {token!r}')
        fields[key] = value
    missing = [key for key in required if key not in fields]
    if missing:
        raise ParameterError('weight', spec, f'missing fields {missing}')
    return fields


def parse_weight_spec(spec: str) -> WeightSpec:
    tokens = spec.strip().split(':')
    kind = tokens[0]
    if kind == 'const':
        if len(tokens) != 2:
            raise ParameterError('weight', spec, 'const:<c>')
        return WeightSpec('const', value=_number(tokens[1], spec))
    if kind == 'dist':
        if len(tokens) != 3:
            raise ParameterError('weight', spec, 'dist:<target>:gamma=<g>')
        gamma = _number(_fields(tokens[2:], spec, ('gamma',))['gamma'], spec)
        target = tokens[1]
        if target == 'boundary':
            return WeightSpec('dist', target='boundary', gamma=gamma)
        plane = re.fullmatch(r'plane\(axis=(\d+),offset=([^)]*)\)', target)
        if plane:
            return WeightSpec('dist', target='plane', axis=int(plane.group(1)),
                              offset=_number(plane.group(2), spec), gamma=gamma)
        points = re.findall(r'point\(([^)]*)\)', target)
        if not points or ';'.join(f'point({point})' for point in points) != target:
            raise ParameterError('weight', spec, 'point(..)[;point(..)], plane(axis=k,offset=t) or boundary')
        return WeightSpec('dist', target='point', points=tuple(_tuple(point, spec) for point in points), gamma=gamma)
    if kind == 'parabola':
        fields = _fields(tokens[1:], spec, ('p', 'c'), ('center',))
    elif kind == 'fundamental':
        fields = _fields(tokens[1:], spec, ('p', 'c', 'cap'), ('center',))
    elif kind == 'lognormal':
        fields = _fields(tokens[1:], spec, ('sigma', 'seed'))
        if not fields['seed'].isdigit():
            raise ParameterError('weight', spec, 'a nonnegative integer seed')
        return WeightSpec('lognormal', sigma=_number(fields['sigma'], spec), seed=int(fields['seed']))
    else:
        raise ParameterError('weight', spec, f'one of the kinds {KINDS}')
    center = fields.get('center')
    if center is not None:
        if not (center.startswith('(') and center.endswith(')')):
            raise ParameterError('weight', spec, 'center=(x..)')
        center = _tuple(center[1:-1], spec)
    return WeightSpec(kind, p=_number(fields['p'], spec), c=_number(fields['c'], spec),
                      cap=_number(fields['cap'], spec) if 'cap' in fields else None, center=center)


def _point(values) -> str:
    return ','.join(repr(float(v)) for v in values)


def format_weight_spec(spec: WeightSpec) -> str:
    if spec.kind == 'const':
        return f'const:{spec.value!r}'
    if spec.kind == 'dist':
        if spec.target == 'boundary':
            target = 'boundary'
        elif spec.target == 'plane':
            target = f'plane(axis={spec.axis},offset={spec.offset!r})'
        else:
            target = ';'.join(f'point({_point(point)})' for point in spec.points)
        return f'dist:{target}:gamma={spec.gamma!r}'
    if spec.kind == 'lognormal':
        return f'lognormal:sigma={spec.sigma!r}:seed={spec.seed}'
    text = f'{spec.kind}:p={spec.p!r}:c={spec.c!r}'
    if spec.kind == 'fundamental':
        text += f':cap={spec.cap!r}'
    if spec.center is not None:
        text += f':center=({_point(spec.center)})'
    return text


def _center(spec: WeightSpec, n: int) -> np.ndarray:
    center = np.zeros(n) if spec.center is None else np.array(spec.center)
    if center.shape != (n,):
        raise ParameterError('center', spec.center, f'a point of dimension {n}')
    return center


def build_weight(spec, root: Cube, level: int, domain: Optional[DomainRaster] = None) -> Weight:
    """
    Samples a weight family on the grid of a root cube
    @param spec: spec string or WeightSpec
    @param domain: raster domain, required by dist:boundary (the weight is 1 outside the domain)
    @return: Weight with point sampler and, where the family has one, analytic gradient
    """
    if isinstance(spec, str):
        spec = parse_weight_spec(spec)
    label = format_weight_spec(spec)
    n = root.n
    if spec.kind == 'const':
        value = spec.value
        return Weight.from_sampler(root, level, lambda x: np.full(len(x), value), lambda x: np.zeros_like(x), label)
    if spec.kind == 'dist':
        gamma = spec.gamma
        if spec.target == 'boundary':
            if domain is None:
                raise ParameterError('domain', None, 'a raster domain for dist:boundary')
            inner = distance_weight(RasterBoundary(domain), gamma)

            def sampler(x):
                x = np.asarray(x, dtype=np.float64).reshape(-1, n)
                values = np.ones(len(x))
                inside = domain.contains_points(x)
                if inside.any():
                    values[inside] = inner(x[inside])
                return values

            return Weight.from_sampler(root, level, sampler, None, label)
        if spec.target == 'plane':
            target = AxisHyperplane(n, spec.axis, spec.offset)

            def gradient(x):
                x = np.asarray(x, dtype=np.float64).reshape(-1, n)
                offset = x[:, spec.axis] - spec.offset
                result = np.zeros_like(x)
                result[:, spec.axis] = gamma * np.abs(offset) ** (gamma - 1) * np.sign(offset)
                return result
        else:
            target = PointSet(spec.points)
            if target.n != n:
                raise ParameterError('points', spec.points, f'points of dimension {n}')
            points = np.array(target.points)

            def gradient(x):
                x = np.asarray(x, dtype=np.float64).reshape(-1, n)
                offsets = x[:, None, :] - points[None]
                nearest = np.argmin(np.sum(offsets ** 2, axis=2), axis=1)
                offset = offsets[np.arange(len(x)), nearest]
                distance = np.linalg.norm(offset, axis=1)
                return (gamma * distance ** (gamma - 2))[:, None] * offset

        return Weight.from_sampler(root, level, distance_weight(target, gamma), gradient, label)
    if spec.kind == 'parabola':
        if spec.p != 2:
            raise ParameterError('p', spec.p, 'p = 2 for the parabola family')
        center, c = _center(spec, n), spec.c
        return Weight.from_sampler(root, level, lambda x: c - np.sum((x - center) ** 2, axis=1),
                                   lambda x: -2 * (x - center), label)
    if spec.kind == 'fundamental':
        p, c, cap = spec.p, spec.c, spec.cap
        if not 1 < p < n:
            raise ParameterError('p', p, f'1 < p < n = {n} for the fundamental family')
        if not (c > 0 and cap > 0):
            raise ParameterError('c, cap', (c, cap), 'positive scale and cap')
        center = _center(spec, n)
        exponent = (p - n) / (p - 1)

        def sampler(x):
            radius = np.linalg.norm(x - center, axis=1)
            with np.errstate(divide='ignore'):
                return np.minimum(c * radius ** exponent, cap)

        def gradient(x):
            offset = x - center
            radius = np.linalg.norm(offset, axis=1)
            with np.errstate(divide='ignore', invalid='ignore'):
                active = c * radius ** exponent < cap
                scale = np.where(active, c * exponent * radius ** (exponent - 2), 0.0)
            return scale[:, None] * offset

        return Weight.from_sampler(root, level, sampler, gradient, label)
    rng = np.random.default_rng(spec.seed)
    samples = np.exp(spec.sigma * rng.standard_normal((1 << level,) * n))
    return Weight(GridFunction(root, level, samples), None, None, label)
