"""
Cubes, dyadic trees and piecewise-constant grid functions.

A GridFunction over a root cube at level L holds one sample per finest dyadic cell and is read as
the piecewise-constant function with that value on the cell. Integrals over dyadic cubes of depth
at most L are finite sums, served from a dyadic sum pyramid built at construction time.
"""
import hashlib
import logging
import math
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

import config_util.cio as cio
from dyadic import utils
from dyadic.sp_exception import (CompatibilityError, DegenerateWeightError, NonFiniteSampleError,
                                 ParameterError, ResolutionError)

logger = logging.getLogger(__name__)

Sampler = Callable[[np.ndarray], np.ndarray]


def check_level(n: int, level: int):
    if not 0 <= level <= cio.get_max_level(n):
        raise ParameterError('level', level, f'0 <= L <= {cio.get_max_level(n)} for n={n}')


@dataclass(frozen=True)
class Cube:
    """
    Half-open cube with the given center and half side length
    """
    center: tuple
    half_side: float

    def __post_init__(self):
        center = tuple(float(c) for c in np.atleast_1d(np.asarray(self.center, dtype=np.float64)))
        if not center or not all(math.isfinite(c) for c in center):
            raise ParameterError('center', self.center, 'a finite point')
        half_side = float(self.half_side)
        if not (math.isfinite(half_side) and half_side > 0):
            raise ParameterError('half_side', self.half_side, 'a positive finite real')
        object.__setattr__(self, 'center', center)
        object.__setattr__(self, 'half_side', half_side)

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def side(self) -> float:
        return 2 * self.half_side

    @property
    def volume(self) -> float:
        return self.side ** self.n

    @property
    def lower(self) -> np.ndarray:
        return np.array(self.center) - self.half_side

    @property
    def upper(self) -> np.ndarray:
        return np.array(self.center) + self.half_side

    def dilate(self, factor: float) -> 'Cube':
        return Cube(self.center, self.half_side * factor)

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return np.all((points >= self.lower) & (points < self.upper), axis=-1)

    def cell_side(self, level: int) -> float:
        return self.side / (1 << level)

    def cell_centers(self, level: int) -> np.ndarray:
        """
        Centers of the finest cells
        @param level: grid level L
        @return: array of shape (2^L,)*n + (n,)
        """
        count = 1 << level
        h = self.cell_side(level)
        axes = [low + (np.arange(count) + 0.5) * h for low in self.lower]
        return np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1)

    def __str__(self) -> str:
        return f'Q({", ".join(repr(c) for c in self.center)}; {self.half_side!r})'


@dataclass(frozen=True)
class DyadicCube:
    """
    Dyadic subcube of a root cube addressed by its path of child indices. Bit k of a child index
    selects the upper half along axis k.
    """
    root: Cube
    path: tuple = ()

    def __post_init__(self):
        path = tuple(int(child) for child in self.path)
        limit = 1 << self.root.n
        if any(child < 0 or child >= limit for child in path):
            raise ParameterError('path', self.path, f'child indices in 0..{limit - 1}')
        object.__setattr__(self, 'path', path)

    @classmethod
    def from_index(cls, root: Cube, depth: int, index) -> 'DyadicCube':
        path = []
        for bit in range(depth - 1, -1, -1):
            child = 0
            for axis, i in enumerate(index):
                child |= ((int(i) >> bit) & 1) << axis
            path.append(child)
        return cls(root, tuple(path))

    @property
    def n(self) -> int:
        return self.root.n

    @property
    def depth(self) -> int:
        return len(self.path)

    @cached_property
    def index(self) -> tuple:
        index = [0] * self.n
        for child in self.path:
            for axis in range(self.n):
                index[axis] = 2 * index[axis] + ((child >> axis) & 1)
        return tuple(index)

    @property
    def side(self) -> float:
        return self.root.side / (1 << self.depth)

    @property
    def volume(self) -> float:
        return self.side ** self.n

    @property
    def lower(self) -> np.ndarray:
        return self.root.lower + np.array(self.index) * self.side

    @property
    def upper(self) -> np.ndarray:
        return self.lower + self.side

    def cube(self) -> Cube:
        return Cube(self.lower + self.side / 2, self.side / 2)

    def children(self) -> list['DyadicCube']:
        return [DyadicCube(self.root, self.path + (child,)) for child in range(1 << self.n)]

    def parent(self) -> Optional['DyadicCube']:
        return DyadicCube(self.root, self.path[:-1]) if self.path else None

    def contains(self, other: 'DyadicCube') -> bool:
        return other.root == self.root and other.path[:self.depth] == self.path

    def intersects(self, other: 'DyadicCube') -> bool:
        return self.contains(other) or other.contains(self)

    def slices(self, level: int) -> tuple:
        if self.depth > level:
            raise ResolutionError(self.depth, level)
        factor = 1 << (level - self.depth)
        return tuple(slice(i * factor, (i + 1) * factor) for i in self.index)

    def sort_key(self) -> tuple:
        return self.depth, self.index

    def __str__(self) -> str:
        return 'D[' + '.'.join(str(child) for child in self.path) + ']'


class CellMask:
    """
    Set of finest cells of a root cube at a grid level
    """

    def __init__(self, root: Cube, level: int, bits):
        check_level(root.n, level)
        bits = np.array(bits, dtype=bool)
        shape = (1 << level,) * root.n
        if bits.shape != shape:
            if bits.size != math.prod(shape):
                raise ParameterError('bits', bits.shape, f'shape {shape}')
            bits = bits.reshape(shape)
        bits.setflags(write=False)
        self._root = root
        self._level = level
        self._bits = bits

    @classmethod
    def empty(cls, root: Cube, level: int) -> 'CellMask':
        return cls(root, level, np.zeros((1 << level,) * root.n, dtype=bool))

    @classmethod
    def full(cls, root: Cube, level: int) -> 'CellMask':
        return cls(root, level, np.ones((1 << level,) * root.n, dtype=bool))

    @classmethod
    def from_cube(cls, cube: DyadicCube, level: int) -> 'CellMask':
        bits = np.zeros((1 << level,) * cube.n, dtype=bool)
        bits[cube.slices(level)] = True
        return cls(cube.root, level, bits)

    @property
    def root(self) -> Cube:
        return self._root

    @property
    def level(self) -> int:
        return self._level

    @property
    def n(self) -> int:
        return self._root.n

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self._bits))

    @property
    def cell_volume(self) -> float:
        return self._root.cell_side(self._level) ** self.n

    @property
    def measure(self) -> float:
        return self.cell_volume * self.count

    def cells(self) -> list[tuple]:
        return [tuple(int(i) for i in cell) for cell in np.argwhere(self._bits)]

    def _require(self, other: 'CellMask'):
        if other.root != self._root or other.level != self._level:
            raise CompatibilityError(repr(self), repr(other))

    def union(self, other: 'CellMask') -> 'CellMask':
        self._require(other)
        return CellMask(self._root, self._level, self._bits | other.bits)

    def intersection(self, other: 'CellMask') -> 'CellMask':
        self._require(other)
        return CellMask(self._root, self._level, self._bits & other.bits)

    def difference(self, other: 'CellMask') -> 'CellMask':
        self._require(other)
        return CellMask(self._root, self._level, self._bits & ~other.bits)

    def isdisjoint(self, other: 'CellMask') -> bool:
        self._require(other)
        return not np.any(self._bits & other.bits)

    def issubset(self, other: 'CellMask') -> bool:
        self._require(other)
        return not np.any(self._bits & ~other.bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CellMask):
            return NotImplemented
        return other.root == self._root and other.level == self._level and np.array_equal(other.bits, self._bits)

    __hash__ = None

    def __repr__(self) -> str:
        return f'CellMask({self._root}, L={self._level}, cells={self.count})'


class GridFunction:
    """
    Piecewise-constant function on the 2^(nL) finest cells of a root cube
    """

    def __init__(self, root: Cube, level: int, samples):
        check_level(root.n, level)
        samples = np.array(samples, dtype=np.float64)
        shape = (1 << level,) * root.n
        if samples.shape != shape:
            if samples.size != math.prod(shape):
                raise ParameterError('samples', samples.shape, f'{math.prod(shape)} values in shape {shape}')
            samples = samples.reshape(shape)
        bad = ~np.isfinite(samples)
        if bad.any():
            cell = tuple(int(i) for i in np.argwhere(bad)[0])
            raise NonFiniteSampleError(cell, float(samples[cell]))
        samples.setflags(write=False)
        self._root = root
        self._level = level
        self._samples = samples
        self._pyramid = utils.sum_pyramid(samples * self.cell_volume)
        for sums in self._pyramid:
            sums.setflags(write=False)
        self._table = None
        self._lock = threading.Lock()

    @property
    def root(self) -> Cube:
        return self._root

    @property
    def level(self) -> int:
        return self._level

    @property
    def n(self) -> int:
        return self._root.n

    @property
    def samples(self) -> np.ndarray:
        return self._samples

    @property
    def cells_per_axis(self) -> int:
        return 1 << self._level

    @property
    def cell_side(self) -> float:
        return self._root.cell_side(self._level)

    @property
    def cell_volume(self) -> float:
        return self.cell_side ** self.n

    def root_cube(self) -> DyadicCube:
        return DyadicCube(self._root)

    def volume_at(self, depth: int) -> float:
        return (self._root.side / (1 << depth)) ** self.n

    def sums(self, depth: int) -> np.ndarray:
        """
        Integrals over all dyadic cubes of one depth
        @param depth: 0 <= depth <= L
        @return: array of shape (2^depth,)*n indexed like DyadicCube.index
        """
        if depth > self._level:
            raise ResolutionError(depth, self._level)
        return self._pyramid[depth]

    def averages(self, depth: int) -> np.ndarray:
        return self.sums(depth) / self.volume_at(depth)

    def oscillations(self, depth: int) -> np.ndarray:
        """
        Mean oscillations of all dyadic cubes of one depth
        """
        means = utils.expand(self.averages(depth), 1 << (self._level - depth))
        deviation = np.abs(self._samples - means) * self.cell_volume
        return utils.block_sum(deviation, depth) / self.volume_at(depth)

    def is_compatible(self, other) -> bool:
        other = as_grid(other)
        return other.root == self._root and other.level == self._level

    def require_compatible(self, other):
        if not self.is_compatible(other):
            raise CompatibilityError(repr(self), repr(as_grid(other)))

    def require_cube(self, cube: DyadicCube):
        if cube.root != self._root:
            raise CompatibilityError(repr(self), str(cube.root))
        if cube.depth > self._level:
            raise ResolutionError(cube.depth, self._level)

    def integral(self, cube: DyadicCube) -> float:
        self.require_cube(cube)
        return float(self._pyramid[cube.depth][cube.index])

    def restrict(self, cube: DyadicCube) -> 'GridFunction':
        """
        The same function seen as a grid function on one of its dyadic cubes
        """
        self.require_cube(cube)
        if cube.depth == 0:
            return self
        return GridFunction(cube.cube(), self._level - cube.depth, self._samples[cube.slices(self._level)])

    def map(self, func: Callable[[np.ndarray], np.ndarray]) -> 'GridFunction':
        return GridFunction(self._root, self._level, func(self._samples))

    def multiply(self, other) -> 'GridFunction':
        other = as_grid(other)
        self.require_compatible(other)
        return GridFunction(self._root, self._level, self._samples * other.samples)

    def summed_volume_table(self) -> tuple[np.ndarray, np.ndarray]:
        with self._lock:
            if self._table is None:
                logger.debug(f'Building summed volume table for {self!r}')
                self._table = utils.summed_volume_table(self._samples)
                for table in self._table:
                    table.setflags(write=False)
            return self._table

    def box_integral(self, lower, upper) -> float:
        """
        Integral over the grid-aligned box [lower, upper) given in cell units relative to the
        root's lower corner; boxes are clipped to the root
        """
        table = self.summed_volume_table()
        if all(float(x).is_integer() for x in list(lower) + list(upper)):
            return utils.exact_box_sum(table, lower, upper) * self.cell_volume
        lowers = [np.array([float(x)]) for x in lower]
        uppers = [np.array([float(x)]) for x in upper]
        return float(utils.box_grid_sums(table, lowers, uppers).item()) * self.cell_volume

    def fingerprint(self) -> str:
        digest = hashlib.sha1()
        digest.update(repr((self.n, self._level, self._root.center, self._root.half_side)).encode())
        digest.update(self._samples.astype('<f8').tobytes())
        return digest.hexdigest()[:16]

    def __repr__(self) -> str:
        return f'GridFunction({self._root}, L={self._level})'


def as_grid(value) -> GridFunction:
    return getattr(value, 'function', value)


def build_grid_function(root: Cube, level: int, sampler: Sampler) -> GridFunction:
    """
    Samples a function at the centers of the finest cells
    @param root: root cube
    @param level: grid level L
    @param sampler: callable receiving an (m, n) array of points and returning m values (or a scalar)
    @return: GridFunction with samples[i] = sampler(center of cell i)
    """
    check_level(root.n, level)
    centers = root.cell_centers(level)
    shape = centers.shape[:-1]
    values = np.asarray(sampler(centers.reshape(-1, root.n)), dtype=np.float64)
    values = np.broadcast_to(values, (math.prod(shape),)).reshape(shape)
    return GridFunction(root, level, values)


def average(f: GridFunction, cube: DyadicCube) -> float:
    return f.integral(cube) / cube.volume


def weighted_average(f: GridFunction, w, cube: DyadicCube) -> float:
    w = as_grid(w)
    f.require_compatible(w)
    mass = w.integral(cube)
    if mass <= 0:
        raise DegenerateWeightError(str(cube), mass)
    return f.multiply(w).integral(cube) / mass


def oscillation(f: GridFunction, cube: DyadicCube) -> float:
    f.require_cube(cube)
    values = f.samples[cube.slices(f.level)]
    return float(np.mean(np.abs(values - average(f, cube))))


def weighted_measure(w, mask: CellMask) -> float:
    w = as_grid(w)
    if mask.root != w.root or mask.level != w.level:
        raise CompatibilityError(repr(w), repr(mask))
    return math.fsum(w.samples[mask.bits]) * w.cell_volume


def box_overlap(root: Cube, level: int, lower, upper) -> Optional[tuple[tuple, np.ndarray]]:
    """
    Overlap fractions of the finest cells with an arbitrary axis-parallel box
    @return: (slices into the cell array, fraction tensor) or None when the box misses the root
    """
    count = 1 << level
    h = root.cell_side(level)
    slices, fractions = [], []
    for axis in range(root.n):
        start = max((float(lower[axis]) - root.lower[axis]) / h, 0.0)
        stop = min((float(upper[axis]) - root.lower[axis]) / h, float(count))
        if stop <= start:
            return None
        first, last = int(math.floor(start)), int(math.ceil(stop))
        cells = np.arange(first, last)
        fractions.append(np.minimum(cells + 1, stop) - np.maximum(cells, start))
        slices.append(slice(first, last))
    tensor = fractions[0]
    for fraction in fractions[1:]:
        tensor = np.multiply.outer(tensor, fraction)
    return tuple(slices), tensor


def center_overlap(root: Cube, level: int, lower, upper) -> Optional[tuple[tuple, np.ndarray]]:
    """
    Finest cells whose centers lie in the open box (lower, upper)
    @return: (slices into the cell array, 0/1 tensor) or None when no center qualifies
    """
    count = 1 << level
    h = root.cell_side(level)
    slices = []
    for axis in range(root.n):
        first = max(int(math.floor((float(lower[axis]) - root.lower[axis]) / h - 0.5)) + 1, 0)
        last = min(int(math.ceil((float(upper[axis]) - root.lower[axis]) / h - 0.5)), count)
        if last <= first:
            return None
        slices.append(slice(first, last))
    return tuple(slices), np.ones(tuple(s.stop - s.start for s in slices))


def box_integral(values: np.ndarray, root: Cube, level: int, lower, upper) -> float:
    """
    Exact integral of piecewise-constant cell values over an arbitrary box
    """
    overlap = box_overlap(root, level, lower, upper)
    if overlap is None:
        return 0.0
    slices, tensor = overlap
    return float(np.sum(values[slices] * tensor)) * root.cell_side(level) ** root.n


