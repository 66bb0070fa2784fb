"""
Weights and the conditions checked on them: dyadic A-infinity constants, two-weight constants,
doubling in a domain, Aikawa, reverse Hoelder, half-Harnack and p-supersolution tests.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

import config_util.cio as cio
from dyadic import grid, utils
from dyadic.domain import DomainRaster
from dyadic.grid import CellMask, Cube, DyadicCube, GridFunction, Sampler, as_grid
from dyadic.sp_exception import (AdmissibilityError, DegenerateWeightError, ParameterError,
                                 SingularSampleError, SupportError)
from dyadic.structs import AInftyEstimate, ConditionReport, TwoWeightReport

logger = logging.getLogger(__name__)

Gradient = Callable[[np.ndarray], np.ndarray]


class Weight:
    """
    Strictly positive grid function, optionally with the point sampler and analytic gradient it
    was built from
    """

    def __init__(self, function: GridFunction, sampler: Optional[Sampler] = None,
                 gradient: Optional[Gradient] = None, label: str = ''):
        nonpositive = function.samples <= 0
        if nonpositive.any():
            cell = tuple(int(i) for i in np.argwhere(nonpositive)[0])
            raise DegenerateWeightError(f'cell {cell}', float(function.samples[cell]))
        self.function = function
        self.sampler = sampler
        self.gradient = gradient
        self.label = label

    @classmethod
    def from_sampler(cls, root: Cube, level: int, sampler: Sampler, gradient: Optional[Gradient] = None,
                     label: str = '') -> 'Weight':
        return cls(grid.build_grid_function(root, level, sampler), sampler, gradient, label)

    @classmethod
    def constant(cls, root: Cube, level: int, value: float = 1.0) -> 'Weight':
        return cls.from_sampler(root, level, lambda x: np.full(len(x), value),
                                lambda x: np.zeros_like(x), f'const:{value!r}')

    @property
    def samples(self) -> np.ndarray:
        return self.function.samples

    @property
    def root(self) -> Cube:
        return self.function.root

    @property
    def level(self) -> int:
        return self.function.level

    @property
    def n(self) -> int:
        return self.function.n

    def integral(self, cube: DyadicCube) -> float:
        return self.function.integral(cube)

    def resample(self, root: Cube, level: int) -> 'Weight':
        if self.sampler is None:
            raise ParameterError('weight', self.label or repr(self), 'a point sampler for resampling')
        return Weight.from_sampler(root, level, self.sampler, self.gradient, self.label)

    def restrict(self, cube: DyadicCube) -> 'Weight':
        return Weight(self.function.restrict(cube), self.sampler, self.gradient, self.label)

    def scaled(self, factor: float) -> 'Weight':
        sampler = None if self.sampler is None else (lambda x: factor * np.asarray(self.sampler(x)))
        gradient = None if self.gradient is None else (lambda x: factor * np.asarray(self.gradient(x)))
        return Weight(self.function.map(lambda values: factor * values), sampler, gradient, self.label)

    def dual(self, p: float) -> 'Weight':
        """
        sigma = v^(-1/(p-1))
        """
        if not p > 1:
            raise ParameterError('p', p, 'p > 1')
        exponent = -1 / (p - 1)
        sampler = None if self.sampler is None else (lambda x: np.asarray(self.sampler(x), dtype=np.float64) ** exponent)
        return Weight(self.function.map(lambda values: values ** exponent), sampler, None,
                      f'dual({self.label},p={p!r})')

    def __repr__(self) -> str:
        return f'Weight({self.label or "grid"}, {self.function!r})'


# A-infinity

def _prefix_ratios(samples: np.ndarray, depth: int, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """
    (w(E_k)/w(Q)) / (|E_k|/|Q|)^delta for the k heaviest cells E_k of every depth-d cube
    """
    rows = utils.block_view(samples, depth)
    order = np.argsort(-rows, axis=1, kind='stable')
    prefix = np.cumsum(np.take_along_axis(rows, order, axis=1), axis=1)
    size = rows.shape[1]
    fractions = (np.arange(1, size + 1) / size) ** delta
    return prefix / prefix[:, -1:] / fractions, order


def estimate_ainfty(w, q0: Optional[DyadicCube] = None, delta: float = 1.0) -> AInftyEstimate:
    """
    Least C with w(E)/w(Q) <= C (|E|/|Q|)^delta over all dyadic Q in Q0 and all cell sets E in Q.
    For a fixed |E| the heaviest cells maximise w(E), so sorted prefixes per cube are exhaustive.
    @param w: Weight or positive GridFunction
    @param q0: dyadic root of the scan, the grid root by default
    @param delta: exponent in (0, 1]
    @return: AInftyEstimate with the attaining cube and cell set
    """
    if not 0 < delta <= 1:
        raise ParameterError('delta', delta, '0 < delta <= 1')
    function = as_grid(w)
    q0 = q0 or function.root_cube()
    local = function.restrict(q0)
    maxima = [float(_prefix_ratios(local.samples, depth, delta)[0].max()) for depth in range(local.level + 1)]
    constant = max(maxima)
    threshold = constant * (1 - cio.get_exact_tolerance())
    depth = next(d for d, value in enumerate(maxima) if value >= threshold)
    ratios, order = _prefix_ratios(local.samples, depth, delta)
    size = ratios.shape[1]
    row, k = divmod(int(np.flatnonzero(ratios.ravel() >= threshold)[0]), size)

    n = function.n
    factor = 1 << (local.level - depth)
    cube_index = np.unravel_index(row, (1 << depth,) * n)
    inner = np.unravel_index(order[row, :k + 1], (factor,) * n)
    offset = np.array(q0.index) * (1 << local.level)
    bits = np.zeros(function.samples.shape, dtype=bool)
    bits[tuple(offset[axis] + cube_index[axis] * factor + inner[axis] for axis in range(n))] = True
    local_cube = DyadicCube.from_index(local.root, depth, cube_index)
    return AInftyEstimate(constant=constant, delta=delta,
                          witness_cube=DyadicCube(function.root, q0.path + local_cube.path),
                          witness_mask=CellMask(function.root, function.level, bits))


def ainfty_sweep(w, q0: Optional[DyadicCube] = None, deltas: Optional[Sequence[float]] = None) -> list[AInftyEstimate]:
    deltas = cio.get_delta_sweep() if deltas is None else deltas
    return [estimate_ainfty(w, q0, delta) for delta in deltas]


def admissible_parameter(estimates: Sequence[AInftyEstimate], kind: str = 'rho', n: int = 1) -> tuple[AInftyEstimate, float, float]:
    """
    Picks (C, delta) from a sweep and the smallest stopping parameter with C rho^-delta <= 1/2
    @param estimates: A-infinity estimates of one weight
    @param kind: 'rho' for the oscillation construction, 'a' for the level-set construction (rho = a 2^-n)
    @param n: dimension
    @return: (estimate, rho or a, eta)
    """
    if kind not in ('rho', 'a'):
        raise ParameterError('kind', kind, "'rho' or 'a'")
    best = None
    for estimate in estimates:
        rho = (2 * estimate['constant']) ** (1 / estimate['delta'])
        parameter = rho if kind == 'rho' else rho * 2 ** n
        if best is None or parameter < best[1]:
            eta = 1 - estimate['constant'] * rho ** (-estimate['delta'])
            best = (estimate, parameter, eta)
    if best is None:
        raise ParameterError('estimates', estimates, 'at least one A-infinity estimate')
    return best


# Two-weight constant

def check_exponents(p: float, q: float, alpha: float, n: int):
    if not 1 < p <= q < math.inf:
        raise ParameterError('p, q', (p, q), '1 < p <= q < inf')
    if not 0 <= alpha <= n:
        raise ParameterError('alpha', alpha, f'0 <= alpha <= n = {n}')


def two_weight_constant(w, sigma, p: float, q: float, alpha: float, q0: Optional[DyadicCube] = None,
                        cubes: Optional[Iterable[DyadicCube]] = None) -> TwoWeightReport:
    """
    K = max over dyadic Q of |Q|^(-(1-alpha/n)p) w(Q)^(p/q) sigma(Q)^(p-1)
    @param cubes: optional explicit scan family; all dyadic subcubes of q0 by default
    """
    w, sigma = as_grid(w), as_grid(sigma)
    w.require_compatible(sigma)
    n = w.n
    check_exponents(p, q, alpha, n)
    power = -(1 - alpha / n) * p
    best, best_cube = -math.inf, None
    if cubes is not None:
        for cube in cubes:
            value = cube.volume ** power * w.integral(cube) ** (p / q) * sigma.integral(cube) ** (p - 1)
            if value > best:
                best, best_cube = value, cube
    else:
        q0 = q0 or w.root_cube()
        w_local, sigma_local = w.restrict(q0), sigma.restrict(q0)
        for depth in range(w_local.level + 1):
            values = (w_local.volume_at(depth) ** power * w_local.sums(depth) ** (p / q)
                      * sigma_local.sums(depth) ** (p - 1))
            i = int(np.argmax(values))
            if values.flat[i] > best:
                index = np.unravel_index(i, values.shape)
                local_cube = DyadicCube.from_index(w_local.root, depth, index)
                best, best_cube = float(values.flat[i]), DyadicCube(w.root, q0.path + local_cube.path)
    if best_cube is None:
        raise ParameterError('cubes', cubes, 'a nonempty scan family')
    return TwoWeightReport(K=float(best), p=p, q=q, alpha=alpha, cube=best_cube)


# Doubling

def _condition(kind: str, constant: float, parameters: dict, witness: dict, flagged: list) -> ConditionReport:
    return ConditionReport(kind=kind, constant=float(constant), parameters=parameters, witness=witness, flagged=flagged)


def _cube_witness(cube: Cube) -> dict:
    return {'center': list(cube.center), 'half_side': cube.half_side}


def _require_center(domain: DomainRaster, cube: Cube):
    if not domain.contains_points(np.array([cube.center]))[0]:
        raise AdmissibilityError(str(cube), 'midpoint in the domain')


def doubling_constant(w, domain: DomainRaster, trial_cubes: Sequence[Cube]) -> ConditionReport:
    """
    D = max over trial cubes of w(Omega cap 2Q) / w(Omega cap Q); cubes with w(Omega cap Q) = 0
    are skipped and flagged
    """
    samples = as_grid(w).samples
    best, witness, flagged = 0.0, {}, []
    for cube in trial_cubes:
        _require_center(domain, cube)
        inner = domain.measure_in(samples, cube.lower, cube.upper)
        if inner <= 0:
            flagged.append(_cube_witness(cube))
            continue
        double = cube.dilate(2)
        ratio = domain.measure_in(samples, double.lower, double.upper) / inner
        if ratio > best:
            best, witness = ratio, _cube_witness(cube)
    return _condition('doubling', best, {'trials': len(trial_cubes)}, witness, flagged)


def inner_cube_lambda(domain: DomainRaster, cube: Cube) -> float:
    """
    lambda = r_Q / r_R for the largest concentric cube R inside Q cap Omega
    """
    _require_center(domain, cube)
    reach = float(domain.boundary_distance(np.array([cube.center]), 'chebyshev')[0])
    radius = min(cube.half_side, reach)
    return cube.half_side / radius if radius > 0 else math.inf


def doubling_transfer_check(w, domain: DomainRaster, trial_cubes: Sequence[Cube]) -> ConditionReport:
    """
    Checks w(Omega cap 2Q) / w(Omega cap Q) <= prod_{j<k} D_j with R the inner cube of Q,
    k = ceil(log2(2 lambda)) and D_j = w(2^(j+1) R) / w(2^j R) measured in the ambient root
    """
    function = as_grid(w)
    samples = function.samples
    tolerance = cio.get_exact_tolerance()
    domain_best, ambient_best, lambda_best = 0.0, 0.0, 1.0
    witness, flagged, violations = {}, [], 0
    for cube in trial_cubes:
        lam = inner_cube_lambda(domain, cube)
        inner = domain.measure_in(samples, cube.lower, cube.upper)
        if not math.isfinite(lam) or inner <= 0:
            flagged.append(_cube_witness(cube))
            continue
        double = cube.dilate(2)
        ratio = domain.measure_in(samples, double.lower, double.upper) / inner
        steps = max(0, math.ceil(math.log2(2 * lam) - 1e-12))
        inner_cube = Cube(cube.center, cube.half_side / lam)
        masses = [grid.box_integral(samples, function.root, function.level, big.lower, big.upper)
                  for big in (inner_cube.dilate(2 ** j) for j in range(steps + 1))]
        factors = [masses[j + 1] / masses[j] for j in range(steps)]
        bound = math.prod(factors)
        if ratio > bound * (1 + tolerance):
            violations += 1
            flagged.append({**_cube_witness(cube), 'ratio': ratio, 'bound': bound})
        if ratio > domain_best:
            domain_best, witness = ratio, {**_cube_witness(cube), 'lambda': lam, 'steps': steps, 'bound': bound}
        ambient_best = max([ambient_best] + factors)
        lambda_best = max(lambda_best, lam)
    return _condition('doubling_transfer', domain_best,
                      {'ambient': ambient_best, 'lambda': lambda_best, 'violations': violations,
                       'trials': len(trial_cubes)}, witness, flagged)


# Distance weights

@dataclass(frozen=True)
class PointSet:
    points: tuple

    def __post_init__(self):
        points = tuple(tuple(float(c) for c in np.atleast_1d(point)) for point in self.points)
        if not points or len({len(point) for point in points}) != 1:
            raise ParameterError('points', self.points, 'a nonempty set of points of one dimension')
        object.__setattr__(self, 'points', points)

    @property
    def n(self) -> int:
        return len(self.points[0])

    def distance(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1, self.n)
        offsets = x[:, None, :] - np.array(self.points)[None]
        return np.sqrt(np.sum(offsets ** 2, axis=2)).min(axis=1)

    def __str__(self) -> str:
        return ';'.join(f'point({",".join(repr(c) for c in point)})' for point in self.points)


@dataclass(frozen=True)
class AxisHyperplane:
    n: int
    axis: int
    offset: float = 0.0

    def __post_init__(self):
        if not 0 <= self.axis < self.n:
            raise ParameterError('axis', self.axis, f'0 <= axis < {self.n}')

    def distance(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1, self.n)
        return np.abs(x[:, self.axis] - self.offset)

    def __str__(self) -> str:
        return f'plane(axis={self.axis},offset={self.offset!r})'


@dataclass(frozen=True)
class RasterBoundary:
    domain: DomainRaster

    @property
    def n(self) -> int:
        return self.domain.n

    def distance(self, x: np.ndarray) -> np.ndarray:
        return self.domain.boundary_distance(x)

    def __str__(self) -> str:
        return 'boundary'


def distance_weight(E, gamma: float) -> Sampler:
    """
    Point sampler x -> d(x, E)^gamma
    """
    def sampler(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64).reshape(-1, E.n)
        if gamma == 0:
            return np.ones(len(points))
        distance = E.distance(points)
        if gamma < 0 and np.any(distance == 0):
            raise SingularSampleError(tuple(points[int(np.argmin(distance))]), gamma)
        return distance ** gamma

    return sampler


def aikawa_check(E, gamma: float, radii: Sequence[float], base_points=None, level: Optional[int] = None) -> ConditionReport:
    """
    C1 = max over base points x of E and radii r of (avg over R(x, r) of d(., E)^gamma) / r^gamma,
    averages by midpoint quadrature on 2^(nL) cells of each cube
    """
    if gamma <= -E.n:
        raise ParameterError('gamma', gamma, f'gamma > -n = {-E.n} (integrability)')
    if gamma > 0:
        raise ParameterError('gamma', gamma, 'gamma <= 0')
    if base_points is None:
        if not isinstance(E, PointSet):
            raise ParameterError('base_points', None, 'explicit base points for this set')
        base_points = E.points
    level = cio.get_max_level(E.n) if level is None else level
    grid.check_level(E.n, level)
    sampler = distance_weight(E, gamma)
    best, witness = -math.inf, {}
    for point in base_points:
        for radius in radii:
            cube = Cube(point, radius)
            mean = float(np.mean(sampler(cube.cell_centers(level).reshape(-1, E.n))))
            ratio = mean / radius ** gamma
            if ratio > best:
                best, witness = ratio, _cube_witness(cube)
    return _condition('aikawa', best, {'gamma': gamma, 'level': level, 'set': str(E)}, witness, [])


# Reverse Hoelder, half-Harnack, supersolutions

def reverse_holder_check(w, cube: DyadicCube, beta: float) -> ConditionReport:
    """
    (avg_Q w^beta)^(1/beta) / min over the cells of Q
    """
    if beta < 1:
        raise ParameterError('beta', beta, 'beta >= 1')
    function = as_grid(w)
    function.require_cube(cube)
    values = function.samples[cube.slices(function.level)]
    ratio = float(np.mean(values ** beta) ** (1 / beta) / values.min())
    return _condition('reverse_holder', ratio, {'beta': beta}, {'cube': str(cube)}, [])


def half_harnack_check(w, domain: DomainRaster, beta: float, cubes: Sequence[Cube],
                       p: Optional[float] = None) -> ConditionReport:
    function = as_grid(w)
    n = function.n
    if beta <= 0:
        raise ParameterError('beta', beta, 'beta > 0')
    if p is not None and not beta * (n - p) < n * (p - 1):
        raise ParameterError('beta', beta, f'beta (n - p) < n (p - 1) for p={p}')
    best, witness = 0.0, {}
    for cube in cubes:
        big = cube.dilate(4)
        if not domain.contains_box(big.lower, big.upper):
            raise AdmissibilityError(str(cube), '4Q inside the domain')
        slices, tensor = grid.box_overlap(function.root, function.level, cube.lower, cube.upper)
        values = function.samples[slices]
        mean = np.sum(values ** beta * tensor) / np.sum(tensor)
        ratio = float(mean ** (1 / beta) / values[tensor > 1e-9].min())
        if ratio > best:
            best, witness = ratio, _cube_witness(cube)
    return _condition('half_harnack', best, {'beta': beta, 'p': p}, witness, [])


@dataclass(frozen=True)
class Bump:
    """
    Smooth tensor bump prod_k phi((x_k - c_k) / r) with phi(t) = exp(-1 / (1 - t^2)) on |t| < 1
    """
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, 'center', tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.radius > 0:
            raise ParameterError('radius', self.radius, 'a positive bump radius')

    def support(self) -> Cube:
        return Cube(self.center, self.radius)

    def _terms(self, points: np.ndarray):
        t = (np.asarray(points, dtype=np.float64).reshape(-1, len(self.center)) - np.array(self.center)) / self.radius
        inside = np.abs(t) < 1
        safe = np.where(inside, t, 0.0)
        phi = np.where(inside, np.exp(-1 / (1 - safe ** 2)), 0.0)
        return safe, phi

    def values(self, points: np.ndarray) -> np.ndarray:
        return np.prod(self._terms(points)[1], axis=1)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        safe, phi = self._terms(points)
        value = np.prod(phi, axis=1)
        return value[:, None] * (-2 * safe / (1 - safe ** 2) ** 2) / self.radius

    def __str__(self) -> str:
        return f'bump({",".join(repr(c) for c in self.center)};{self.radius!r})'


def supersolution_check(w: Weight, p: float, domain: DomainRaster, bumps: Sequence[Bump]) -> ConditionReport:
    """
    min over bumps of int |grad w|^(p-2) grad w . grad eta by midpoint quadrature; values above
    -slack corroborate the supersolution property for the tested bumps
    """
    if w.gradient is None:
        raise ParameterError('w', w.label or repr(w), 'an analytic gradient')
    if not p > 1:
        raise ParameterError('p', p, 'p > 1')
    function = w.function
    points = function.root.cell_centers(function.level).reshape(-1, function.n)
    gradient = np.asarray(w.gradient(points), dtype=np.float64).reshape(-1, function.n)
    norm = np.linalg.norm(gradient, axis=1)
    factor = np.power(norm, p - 2, out=np.zeros_like(norm), where=norm > 0)
    flux = gradient * factor[:, None]
    best, witness, values = math.inf, {}, []
    for bump in bumps:
        support = bump.support()
        if not domain.contains_box(support.lower, support.upper):
            raise SupportError(str(bump))
        value = float(np.sum(flux * bump.gradient(points))) * function.cell_volume
        values.append(value)
        if value < best:
            best, witness = value, {'bump': str(bump)}
    slack = cio.get_supersolution_slack()
    return _condition('supersolution', best, {'p': p, 'slack': slack, 'values': values}, witness,
                      [{'bump': str(b), 'value': v} for b, v in zip(bumps, values) if v < -slack])
