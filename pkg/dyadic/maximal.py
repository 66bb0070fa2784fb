"""
Dyadic fractional, weighted and sharp maximal functions on a root cube, and the non-centered
weighted maximal function on a raster domain.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

import config_util.cio as cio
from dyadic import utils
from dyadic.domain import DomainRaster
from dyadic.grid import DyadicCube, GridFunction, as_grid
from dyadic.sp_exception import ParameterError
from dyadic.structs import InstanceResult, instance_result

logger = logging.getLogger(__name__)

FRACTIONAL = 'fractional'
WEIGHTED = 'weighted'
SHARP = 'sharp'
NONCENTERED = 'noncentered'


@dataclass(frozen=True)
class MaximalField:
    kind: str
    field: GridFunction
    parameters: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def samples(self) -> np.ndarray:
        return self.field.samples


def _running_max(terms: list[np.ndarray]) -> np.ndarray:
    """
    Per cell, the max over its ancestors of per-depth cube terms, one top-down pass
    """
    running = terms[0]
    for term in terms[1:]:
        running = np.maximum(utils.expand(running, 2), term)
    return running


def _local(f: GridFunction, q0: Optional[DyadicCube]) -> GridFunction:
    return f if q0 is None else f.restrict(q0)


def fractional_maximal(f: GridFunction, alpha: float, q0: Optional[DyadicCube] = None) -> MaximalField:
    """
    M_alpha f(x) = max over dyadic Q containing x of |Q|^(alpha/n - 1) int_Q |f|; the endpoint
    alpha = n is admitted and gives the plain integral
    """
    if not 0 <= alpha <= f.n:
        raise ParameterError('alpha', alpha, f'0 <= alpha <= n = {f.n}')
    local = _local(f, q0)
    magnitude = local.map(np.abs)
    terms = [magnitude.sums(depth) * magnitude.volume_at(depth) ** (alpha / f.n - 1) for depth in range(local.level + 1)]
    return MaximalField(FRACTIONAL, GridFunction(local.root, local.level, _running_max(terms)), {'alpha': alpha},
                        {'f': f.fingerprint()})


def weighted_maximal(f: GridFunction, w, q0: Optional[DyadicCube] = None) -> MaximalField:
    """
    M^w f(x) = max over dyadic Q containing x of (1/w(Q)) int_Q |f| w
    """
    weight = as_grid(w)
    f.require_compatible(weight)
    local, local_weight = _local(f, q0), _local(weight, q0)
    product = GridFunction(local.root, local.level, np.abs(local.samples) * local_weight.samples)
    terms = [product.sums(depth) / local_weight.sums(depth) for depth in range(local.level + 1)]
    return MaximalField(WEIGHTED, GridFunction(local.root, local.level, _running_max(terms)), {},
                        {'f': f.fingerprint(), 'w': weight.fingerprint()})


def sharp_maximal(f: GridFunction, q0: Optional[DyadicCube] = None) -> MaximalField:
    """
    M# f(x) = max over dyadic Q containing x of the mean oscillation of f on Q
    """
    local = _local(f, q0)
    terms = [local.oscillations(depth) for depth in range(local.level + 1)]
    return MaximalField(SHARP, GridFunction(local.root, local.level, _running_max(terms)), {}, {'f': f.fingerprint()})


# Non-centered maximal function

def _window_sum(values: np.ndarray, length: int, axis: int) -> np.ndarray:
    shape = list(values.shape)
    shape[axis] = 1
    sums = np.concatenate([np.zeros(shape), np.cumsum(values, axis=axis)], axis=axis)
    size = values.shape[axis] - length + 1
    return np.take(sums, range(length, length + size), axis=axis) - np.take(sums, range(size), axis=axis)


def _window_max(values: np.ndarray, length: int, axis: int) -> np.ndarray:
    """
    result[j] = max(values[j:j+length]) along one axis, length a power of two
    """
    width = 1
    while width < length:
        size = values.shape[axis] - width
        values = np.maximum(np.take(values, range(size), axis=axis), np.take(values, range(width, width + size), axis=axis))
        width *= 2
    return values


class GridAlignedPolicy:
    """
    Cubes with dyadic side lengths m cells whose corners lie on the half-cell lattice and whose
    midpoints lie in the domain. When one size has more cubes than the cap, lattice positions are
    thinned with a stride.
    """
    name = 'grid_aligned'

    def __init__(self, max_boxes: Optional[int] = None):
        self.max_boxes = cio.get_max_boxes_per_size() if max_boxes is None else max_boxes

    def evaluate(self, numerator: np.ndarray, denominator: np.ndarray, domain: DomainRaster) -> tuple[np.ndarray, dict]:
        n, level = domain.n, domain.level
        half = 1 << (level + 1)
        fine_num = utils.expand(numerator * domain.bits, 2)
        fine_den = utils.expand(denominator * domain.bits, 2)
        positions = np.arange(half)
        centers = np.stack(np.meshgrid(*[domain.root.lower[k] + positions * domain.cell_side / 2 for k in range(n)],
                                       indexing='ij'), axis=-1)
        inside = domain.contains_points(centers.reshape(-1, n)).reshape((half,) * n)
        stride = max(1, math.ceil((half ** n / self.max_boxes) ** (1 / n)))
        if stride > 1:
            keep = np.zeros((half,) * n, dtype=bool)
            keep[(slice(None, None, stride),) * n] = True
            inside &= keep
        result = np.full((half,) * n, -np.inf)
        enumerated = 0
        for size in (1 << k for k in range(level + 1)):
            pad = [(size, size)] * n
            num, den = np.pad(fine_num, pad), np.pad(fine_den, pad)
            for axis in range(n):
                num = _window_sum(num, 2 * size, axis)
                den = _window_sum(den, 2 * size, axis)
            num, den = num[(slice(0, half),) * n], den[(slice(0, half),) * n]
            valid = inside & (den > 0)
            enumerated += int(valid.sum())
            ratios = np.full(valid.shape, -np.inf)
            ratios[valid] = num[valid] / den[valid]
            covering = np.pad(ratios, [(size - 1, size)] * n, constant_values=-np.inf)
            for axis in range(n):
                covering = _window_max(covering, 2 * size, axis)
            result = np.maximum(result, covering)
        if enumerated == 0:
            raise ParameterError('policy', self.name, 'a nonempty enumeration of cubes')
        values = result[(slice(1, None, 2),) * n]
        return np.where(np.isfinite(values), values, 0.0), {'policy': self.name, 'stride': stride, 'cubes': enumerated}


class DyadicPolicy:
    """
    Dyadic subcubes of the ambient root whose midpoints lie in the domain
    """
    name = 'dyadic'

    def evaluate(self, numerator: np.ndarray, denominator: np.ndarray, domain: DomainRaster) -> tuple[np.ndarray, dict]:
        num = utils.sum_pyramid(numerator * domain.bits)
        den = utils.sum_pyramid(denominator * domain.bits)
        terms, enumerated = [], 0
        for depth in range(domain.level + 1):
            count = 1 << depth
            side = domain.root.side / count
            axes = [domain.root.lower[k] + (np.arange(count) + 0.5) * side for k in range(domain.n)]
            centers = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, domain.n)
            valid = domain.contains_points(centers).reshape((count,) * domain.n) & (den[depth] > 0)
            enumerated += int(valid.sum())
            term = np.full(valid.shape, -np.inf)
            term[valid] = num[depth][valid] / den[depth][valid]
            terms.append(term)
        if enumerated == 0:
            raise ParameterError('policy', self.name, 'a nonempty enumeration of cubes')
        values = _running_max(terms)
        return np.where(np.isfinite(values), values, 0.0), {'policy': self.name, 'cubes': enumerated}


def noncentered_maximal(f: GridFunction, w, domain: DomainRaster, policy=None) -> MaximalField:
    """
    Lower bound of sup over cubes Q containing x with midpoint in Omega of
    (1/w(Omega cap Q)) int_{Omega cap Q} |f| w, the sup taken over the cubes of the policy
    """
    weight = as_grid(w)
    f.require_compatible(weight)
    if domain.root != f.root or domain.level != f.level:
        raise ParameterError('domain', str(domain), 'the grid of the function')
    policy = policy or GridAlignedPolicy()
    values, provenance = policy.evaluate(np.abs(f.samples) * weight.samples, weight.samples, domain)
    logger.debug(f'Non-centered maximal function over {provenance["cubes"]} cubes')
    provenance.update({'f': f.fingerprint(), 'w': weight.fingerprint(), 'domain': str(domain), 'lower_bound': True})
    return MaximalField(NONCENTERED, GridFunction(f.root, f.level, values), {}, provenance)


# Norm inequalities

def weak_type_check(f: GridFunction, w, t: float) -> InstanceResult:
    """
    w({M^w f > t}) <= (1/t) int |f| w
    """
    if not t > 0:
        raise ParameterError('t', t, 't > 0')
    weight = as_grid(w)
    maximal = weighted_maximal(f, weight).samples
    lhs = math.fsum(weight.samples[maximal > t]) * f.cell_volume
    rhs = math.fsum((np.abs(f.samples) * weight.samples).ravel()) * f.cell_volume / t
    excess = utils.relative_excess(lhs, rhs, cio.get_exact_tolerance())
    return instance_result(f'weak(t={t!r})', excess <= 0, lhs, rhs, constant=1.0,
                           measured=lhs / rhs if rhs > 0 else 0.0, details={'t': t})


def strong_type_check(f: GridFunction, w, p: float) -> InstanceResult:
    """
    ||M^w f||^p_{L^p(w)} <= (p 2^p / (p - 1)) ||f||^p_{L^p(w)}
    """
    if not p > 1:
        raise ParameterError('p', p, 'p > 1')
    weight = as_grid(w)
    maximal = weighted_maximal(f, weight).samples
    lhs = math.fsum((maximal ** p * weight.samples).ravel()) * f.cell_volume
    norm = math.fsum((np.abs(f.samples) ** p * weight.samples).ravel()) * f.cell_volume
    constant = p * 2 ** p / (p - 1)
    excess = utils.relative_excess(lhs, constant * norm, cio.get_exact_tolerance())
    return instance_result(f'strong(p={p!r})', excess <= 0, lhs, norm, constant=constant,
                           measured=lhs / norm if norm > 0 else 0.0, details={'p': p})


def sharp_gradient_ratio(u: GridFunction, gradient_norm: GridFunction, q0: Optional[DyadicCube] = None) -> float:
    """
    max over cells of M# u / M_1 |grad u|
    """
    sharp = sharp_maximal(u, q0).samples
    fractional = fractional_maximal(gradient_norm, 1.0, q0).samples
    tolerance = cio.get_exact_tolerance()
    zero = sharp <= tolerance * max(1.0, float(np.abs(u.samples).max()))
    with np.errstate(divide='ignore', invalid='ignore'):
        ratios = np.where(zero, 0.0, sharp / fractional)
    return float(ratios.max())
