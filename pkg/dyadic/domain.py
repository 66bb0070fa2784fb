"""
Rasterized domains, Whitney decompositions and chain decompositions.

A DomainRaster is the interior of a union of finest cells of an ambient root cube. Every geometric
quantity below (boundary distances, Whitney cubes, dilated-cube integrals, chains) is computed for
that raster domain exactly.
"""
import logging
import math
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

import config_util.cio as cio
from dyadic import grid, utils
from dyadic.grid import CellMask, Cube, DyadicCube, GridFunction, as_grid
from dyadic.sp_exception import (ChainConstructionError, CoverageError, DegenerateWeightError,
                                 ParameterError)
from dyadic.structs import EdgeFactor, InstanceResult, instance_result

logger = logging.getLogger(__name__)

_CHUNK_ELEMENTS = 1 << 22
CENTER, FRACTION = 'center', 'fraction'
_NUMBER = r'[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?'


# Shapes

class Shape:
    """
    Open set of the ambient space described by a spec string
    """
    n = 0

    def inside(self, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
        """
        @return: per box, whether the open box lies in the shape
        """
        raise NotImplementedError

    def meets(self, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
        """
        @return: per box, whether the open box intersects the shape
        """
        raise NotImplementedError


@dataclass(frozen=True)
class Box(Shape):
    lower: tuple
    upper: tuple

    @property
    def n(self) -> int:
        return len(self.lower)

    def inside(self, lower, upper):
        return np.all((lower >= np.array(self.lower)) & (upper <= np.array(self.upper)), axis=-1)

    def meets(self, lower, upper):
        return np.all((lower < np.array(self.upper)) & (upper > np.array(self.lower)), axis=-1)

    def __str__(self) -> str:
        return f'box({_format_point(self.lower)};{_format_point(self.upper)})'


@dataclass(frozen=True)
class Disk(Shape):
    center: tuple
    radius: float

    @property
    def n(self) -> int:
        return len(self.center)

    def inside(self, lower, upper):
        center = np.array(self.center)
        far = np.maximum(np.abs(lower - center), np.abs(upper - center))
        return np.sum(far ** 2, axis=-1) <= self.radius ** 2

    def meets(self, lower, upper):
        center = np.array(self.center)
        gap = np.maximum(np.maximum(lower - center, center - upper), 0.0)
        return np.sum(gap ** 2, axis=-1) < self.radius ** 2

    def __str__(self) -> str:
        return f'disk({_format_point(self.center)};{self.radius!r})'


@dataclass(frozen=True)
class Difference(Shape):
    left: Shape
    right: Shape

    @property
    def n(self) -> int:
        return self.left.n

    def inside(self, lower, upper):
        return self.left.inside(lower, upper) & ~self.right.meets(lower, upper)

    def meets(self, lower, upper):
        return self.left.meets(lower, upper) & ~self.right.inside(lower, upper)

    def __str__(self) -> str:
        return f'{self.left} minus {self.right}'


@dataclass(frozen=True)
class Union(Shape):
    left: Shape
    right: Shape

    @property
    def n(self) -> int:
        return self.left.n

    def inside(self, lower, upper):
        return self.left.inside(lower, upper) | self.right.inside(lower, upper)

    def meets(self, lower, upper):
        return self.left.meets(lower, upper) | self.right.meets(lower, upper)

    def __str__(self) -> str:
        return f'{self.left} union {self.right}'


def _format_point(values) -> str:
    return ','.join(repr(float(v)) for v in values)


def _parse_point(text: str, spec: str) -> tuple:
    parts = [part.strip() for part in text.split(',')]
    if not parts or not all(re.fullmatch(_NUMBER, part) for part in parts):
        raise ParameterError('domain', spec, f'numeric coordinates, got {text!r}')
    return tuple(float(part) for part in parts)


def _parse_primitive(text: str, spec: str) -> Shape:
    match = re.fullmatch(r'\s*(box|disk)\(([^;()]*);([^;()]*)\)\s*', text)
    if match is None:
        raise ParameterError('domain', spec, 'box(a..;b..) or disk(c..;r) operands')
    kind, first, second = match.groups()
    if kind == 'box':
        lower, upper = _parse_point(first, spec), _parse_point(second, spec)
        if len(lower) != len(upper) or any(b <= a for a, b in zip(lower, upper)):
            raise ParameterError('domain', spec, 'box corners with lower < upper in every coordinate')
        return Box(lower, upper)
    radius = _parse_point(second, spec)
    if len(radius) != 1 or radius[0] <= 0:
        raise ParameterError('domain', spec, 'a positive disk radius')
    return Disk(_parse_point(first, spec), radius[0])


def parse_domain_spec(spec: str) -> Shape:
    """
    Parses `box(a..;b..)`, `disk(c..;r)` combined left to right by `minus` and `union`
    """
    tokens = re.split(r'\s+(minus|union)\s+', spec.strip())
    shape = _parse_primitive(tokens[0], spec)
    for operator, operand in zip(tokens[1::2], tokens[2::2]):
        right = _parse_primitive(operand, spec)
        if right.n != shape.n:
            raise ParameterError('domain', spec, 'operands of one dimension')
        shape = Difference(shape, right) if operator == 'minus' else Union(shape, right)
    return shape


# Raster

class DomainRaster:
    """
    Open domain given as the interior of a union of finest cells of an ambient root cube
    """

    def __init__(self, root: Cube, level: int, bits, spec: Optional[str] = None):
        self._mask = CellMask(root, level, bits)
        if self._mask.count == 0:
            raise ParameterError('domain', spec or 'raster', 'a nonempty raster')
        self._spec = spec

    @classmethod
    def from_spec(cls, spec: str, root: Cube, level: int) -> 'DomainRaster':
        shape = parse_domain_spec(spec)
        if shape.n != root.n:
            raise ParameterError('domain', spec, f'a shape of dimension {root.n}')
        grid.check_level(root.n, level)
        h = root.cell_side(level)
        lower = np.stack(np.meshgrid(*[root.lower[k] + np.arange(1 << level) * h for k in range(root.n)],
                                     indexing='ij'), axis=-1)
        bits = shape.inside(lower, lower + h)
        return cls(root, level, bits, spec)

    @classmethod
    def from_pgm(cls, path: str, root: Cube) -> 'DomainRaster':
        """
        Reads a square P2/P5 PGM image with power-of-two size; nonzero pixels are inside. Columns
        run along axis 0 and rows, bottom to top, along axis 1.
        """
        with open(path, 'rb') as pgm:
            data = pgm.read()
        tokens, position = [], 0
        while len(tokens) < 4:
            match = re.compile(rb'\s*(#[^\n]*\n\s*)*(\S+)').match(data, position)
            if match is None:
                raise ParameterError('pgm', path, 'a complete P2/P5 header')
            tokens.append(match.group(2))
            position = match.end()
        magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
        if width != height or width & (width - 1) or root.n != 2:
            raise ParameterError('pgm', path, 'a square power-of-two image for a 2-dimensional root')
        if magic == b'P5':
            dtype = np.uint8 if maxval < 256 else np.dtype('>u2')
            pixels = np.frombuffer(data[position + 1:], dtype=dtype, count=width * height)
        elif magic == b'P2':
            pixels = np.array([int(token) for token in data[position:].split()[:width * height]], dtype=np.int64)
        else:
            raise ParameterError('pgm', path, 'magic number P2 or P5')
        image = pixels.reshape(height, width)
        return cls(root, width.bit_length() - 1, (image != 0).T[:, ::-1], path)

    @property
    def root(self) -> Cube:
        return self._mask.root

    @property
    def level(self) -> int:
        return self._mask.level

    @property
    def n(self) -> int:
        return self._mask.n

    @property
    def mask(self) -> CellMask:
        return self._mask

    @property
    def bits(self) -> np.ndarray:
        return self._mask.bits

    @property
    def spec(self) -> Optional[str]:
        return self._spec

    @property
    def measure(self) -> float:
        return self._mask.measure

    @property
    def cell_side(self) -> float:
        return self.root.cell_side(self.level)

    @cached_property
    def connected(self) -> bool:
        return len(self.components()) == 1

    def components(self) -> list[list[tuple]]:
        """
        Face-connected components of the raster cells
        """
        seen = np.zeros(self.bits.shape, dtype=bool)
        count = 1 << self.level
        components = []
        for start in self._mask.cells():
            if seen[start]:
                continue
            seen[start] = True
            component, pending = [], deque([start])
            while pending:
                cell = pending.popleft()
                component.append(cell)
                for axis in range(self.n):
                    for step in (-1, 1):
                        nxt = list(cell)
                        nxt[axis] += step
                        nxt = tuple(nxt)
                        if 0 <= nxt[axis] < count and self.bits[nxt] and not seen[nxt]:
                            seen[nxt] = True
                            pending.append(nxt)
            components.append(component)
        return components

    @cached_property
    def boundary_cells(self) -> np.ndarray:
        """
        Complement cells touching a raster cell, diagonal contact included
        @return: int array of shape (K, n)
        """
        padded = np.pad(self.bits, 1)
        grown = np.zeros_like(padded)
        for shift in np.ndindex(*(3,) * self.n):
            grown |= np.roll(padded, tuple(s - 1 for s in shift), axis=tuple(range(self.n)))
        touching = grown[(slice(1, -1),) * self.n] & ~self.bits
        cells = np.argwhere(touching).astype(np.int64)
        logger.debug(f'{len(cells)} boundary cells for {self}')
        return cells

    def _chunks(self, total: int):
        step = max(1, _CHUNK_ELEMENTS // max(1, len(self.boundary_cells) * self.n))
        for start in range(0, total, step):
            yield slice(start, min(start + step, total))

    def box_distance_squared(self, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
        """
        Squared distances, in cell units, from integer boxes [lower, upper) to the complement of
        the domain (boundary cells and the outside of the root)
        """
        lower = np.asarray(lower, dtype=np.int64).reshape(-1, self.n)
        upper = np.asarray(upper, dtype=np.int64).reshape(-1, self.n)
        count = 1 << self.level
        faces = np.minimum(lower, count - upper).min(axis=1)
        result = faces.astype(np.int64) ** 2
        cells = self.boundary_cells
        if len(cells):
            for chunk in self._chunks(len(lower)):
                gaps = np.maximum(np.maximum(cells[None] - upper[chunk, None], lower[chunk, None] - cells[None] - 1), 0)
                result[chunk] = np.minimum(result[chunk], np.sum(gaps ** 2, axis=2).min(axis=1))
        return result

    def boundary_distance(self, points, metric: str = 'euclidean') -> np.ndarray:
        """
        Distance from points of the domain to its boundary
        @param points: array of shape (m, n)
        @param metric: euclidean or chebyshev
        @return: array of shape (m,)
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, self.n)
        h = self.cell_side
        count = 1 << self.level
        relative = (points - self.root.lower) / h
        result = np.minimum(relative, count - relative).min(axis=1)
        cells = self.boundary_cells
        if len(cells):
            for chunk in self._chunks(len(points)):
                gaps = np.maximum(np.maximum(cells[None] - relative[chunk, None],
                                             relative[chunk, None] - cells[None] - 1), 0.0)
                if metric == 'chebyshev':
                    nearest = gaps.max(axis=2).min(axis=1)
                else:
                    nearest = np.sqrt(np.sum(gaps ** 2, axis=2).min(axis=1))
                result[chunk] = np.minimum(result[chunk], nearest)
        return np.maximum(result, 0.0) * h

    def contains_points(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64).reshape(-1, self.n)
        cells = np.floor((points - self.root.lower) / self.cell_side).astype(np.int64)
        count = 1 << self.level
        valid = np.all((cells >= 0) & (cells < count), axis=1)
        result = np.zeros(len(points), dtype=bool)
        result[valid] = self.bits[tuple(cells[valid].T)]
        return result

    def contains_box(self, lower, upper) -> bool:
        """
        Whether the closed box [lower, upper] lies in the domain
        """
        h = self.cell_side
        count = 1 << self.level
        start = (np.asarray(lower, dtype=np.float64) - self.root.lower) / h
        stop = (np.asarray(upper, dtype=np.float64) - self.root.lower) / h
        if np.any(start <= 0) or np.any(stop >= count):
            return False
        first = np.ceil(start).astype(np.int64) - 1
        last = np.floor(stop).astype(np.int64)
        region = self.bits[tuple(slice(a, b + 1) for a, b in zip(first, last))]
        return bool(region.all())

    def measure_in(self, values: np.ndarray, lower, upper) -> float:
        """
        Exact integral of piecewise-constant cell values over the part of a box inside the domain
        """
        overlap = grid.box_overlap(self.root, self.level, lower, upper)
        if overlap is None:
            return 0.0
        slices, tensor = overlap
        return float(np.sum(values[slices] * self.bits[slices] * tensor)) * self._mask.cell_volume

    def __str__(self) -> str:
        return self._spec or repr(self._mask)


# Whitney decomposition

@dataclass
class WhitneyDecomposition:
    """
    Disjoint dyadic cubes covering a raster domain, with boundary distances d(Q, boundary)
    """
    domain: DomainRaster
    cubes: list
    distances: np.ndarray
    layer: np.ndarray
    dilation: float = field(default_factory=cio.get_dilation)
    membership: str = field(default_factory=cio.get_dilated_membership)

    def __len__(self) -> int:
        return len(self.cubes)

    def dilated(self, i: int) -> Cube:
        return self.cubes[i].cube().dilate(self.dilation)

    def sides(self) -> np.ndarray:
        return np.array([cube.side for cube in self.cubes])

    def measure(self) -> float:
        return math.fsum(cube.volume for cube in self.cubes)

    def comparability(self) -> tuple[float, float]:
        """
        Extremes of d(Q, boundary) / (sqrt(n) l(Q)) over the non-layer cubes
        """
        inner = ~self.layer
        if not inner.any():
            return math.nan, math.nan
        ratios = self.distances[inner] / (math.sqrt(self.domain.n) * self.sides()[inner])
        return float(ratios.min()), float(ratios.max())

    def cell_labels(self) -> np.ndarray:
        labels = np.full(self.domain.bits.shape, -1, dtype=np.int64)
        for i, cube in enumerate(self.cubes):
            labels[cube.slices(self.domain.level)] = i
        return labels

    @cached_property
    def dilated_overlaps(self) -> list:
        """
        Per cube, (slices, weights of the cells in Omega and in Q*). With center membership a cell
        counts fully when its center lies in the open Q*, with fraction membership by its overlap.
        """
        if self.membership not in (CENTER, FRACTION):
            raise ParameterError('membership', self.membership, f"'{CENTER}' or '{FRACTION}'")
        overlap = grid.center_overlap if self.membership == CENTER else grid.box_overlap
        overlaps = []
        for i in range(len(self.cubes)):
            dilated = self.dilated(i)
            slices, tensor = overlap(self.domain.root, self.domain.level, dilated.lower, dilated.upper)
            overlaps.append((slices, tensor * self.domain.bits[slices]))
        return overlaps

    def overlap_count(self) -> int:
        """
        Max over cells of the number of dilated cubes the cell belongs to
        """
        counts = np.zeros(self.domain.bits.shape, dtype=np.int64)
        for slices, tensor in self.dilated_overlaps:
            counts[slices] += tensor > 1e-12
        return int(counts.max())

    def dilated_integral(self, values: np.ndarray, i: int) -> float:
        slices, tensor = self.dilated_overlaps[i]
        return float(np.sum(values[slices] * tensor)) * self.domain.mask.cell_volume


def whitney_decompose(domain: DomainRaster, strict: bool = False, membership: Optional[str] = None) -> WhitneyDecomposition:
    """
    Maximal dyadic cubes Q of the ambient root with sqrt(n) l(Q) <= d(Q, boundary). Finest cells
    that never qualify form a flagged boundary layer so the cover stays exact.
    @param domain: raster domain
    @param strict: raise CoverageError instead of keeping a boundary layer
    @param membership: 'center' or 'fraction' rule for cells of Q*, DILATED_MEMBERSHIP by default
    @return: WhitneyDecomposition sorted by (depth, index)
    """
    n, level = domain.n, domain.level
    bits = domain.bits.astype(np.int64)
    offsets = np.array(list(np.ndindex(*(2,) * n)), dtype=np.int64)
    h = domain.cell_side
    selected = []
    candidates = np.zeros((1, n), dtype=np.int64)
    for depth in range(level + 1):
        factor = 1 << (level - depth)
        occupancy = utils.block_sum(bits, depth)[tuple(candidates.T)]
        candidates = candidates[occupancy > 0]
        full = occupancy[occupancy > 0] == factor ** n
        distance2 = np.zeros(len(candidates), dtype=np.int64)
        if full.any():
            lower = candidates[full] * factor
            distance2[full] = domain.box_distance_squared(lower, lower + factor)
        admissible = full & (n * factor * factor <= distance2)
        selected += [(depth, index, d2, False) for index, d2 in zip(candidates[admissible], distance2[admissible])]
        rest = candidates[~admissible]
        if depth == level:
            selected += [(depth, index, d2, True) for index, d2 in zip(rest, distance2[~admissible])]
        else:
            candidates = (2 * rest[:, None, :] + offsets[None]).reshape(-1, n)
        logger.debug(f'Whitney depth {depth}: {int(admissible.sum())} cubes selected')
    layer_cells = [tuple(int(i) for i in index) for depth, index, _, flag in selected if flag]
    if layer_cells and strict:
        raise CoverageError(layer_cells)
    records = sorted(((depth, tuple(int(i) for i in index), d2, flag) for depth, index, d2, flag in selected))
    cubes = [DyadicCube.from_index(domain.root, depth, index) for depth, index, _, _ in records]
    distances = np.array([math.sqrt(d2) * h for _, _, d2, _ in records])
    layer = np.array([flag for _, _, _, flag in records], dtype=bool)
    if membership is None:
        return WhitneyDecomposition(domain, cubes, distances, layer)
    return WhitneyDecomposition(domain, cubes, distances, layer, membership=membership)


# Chains

@dataclass
class ChainDecomposition:
    """
    Breadth-first chains from a central Whitney cube together with shadows and Boman ratios
    """
    whitney: WhitneyDecomposition
    c_adj: float
    central: int
    parents: np.ndarray
    order: list
    neighbours: list
    edges: list
    shadow_boxes: np.ndarray
    boman_ratios: np.ndarray

    @cached_property
    def children(self) -> list[list[int]]:
        children = [[] for _ in self.parents]
        for i in self.order:
            if self.parents[i] >= 0:
                children[self.parents[i]].append(i)
        return children

    def chain(self, i: int) -> list[int]:
        """
        Chain (Q_0, ..., Q_k = Q) of cube indices
        """
        chain = [i]
        while self.parents[chain[-1]] >= 0:
            chain.append(int(self.parents[chain[-1]]))
        return chain[::-1]

    def shadow(self, i: int) -> set[int]:
        shadow, pending = set(), [i]
        while pending:
            cube = pending.pop()
            shadow.add(cube)
            pending += self.children[cube]
        return shadow

    @property
    def boman(self) -> int:
        return boman_constant(self)

    def chain_lengths(self) -> np.ndarray:
        lengths = np.zeros(len(self.parents), dtype=np.int64)
        for i in self.order:
            if self.parents[i] >= 0:
                lengths[i] = lengths[self.parents[i]] + 1
        return lengths

    def lambdas(self) -> np.ndarray:
        return np.array([edge['lam'] for edge in self.edges]) if self.edges else np.ones(1)


def _intersection_sides(lower: np.ndarray, upper: np.ndarray, rows: slice) -> np.ndarray:
    extent = np.minimum(upper[rows, None], upper[None]) - np.maximum(lower[rows, None], lower[None])
    return extent.min(axis=2)


def build_chains(whitney: WhitneyDecomposition, c_adj: Optional[float] = None) -> ChainDecomposition:
    """
    Adjacency graph of dilated Whitney cubes and breadth-first chains from the central cube
    @param whitney: Whitney decomposition
    @param c_adj: adjacency constant in (0, 1), defaults to sp.config
    @return: ChainDecomposition
    """
    c_adj = cio.get_c_adj() if c_adj is None else c_adj
    if not 0 < c_adj < 1:
        raise ParameterError('c_adj', c_adj, '0 < c_adj < 1')
    total = len(whitney)
    dilated = [whitney.dilated(i) for i in range(total)]
    lower = np.array([cube.lower for cube in dilated])
    upper = np.array([cube.upper for cube in dilated])
    sides = np.array([cube.side for cube in dilated])
    neighbours, overlap = [], []
    step = max(1, _CHUNK_ELEMENTS // max(1, total * whitney.domain.n))
    for start in range(0, total, step):
        rows = slice(start, min(start + step, total))
        inner = _intersection_sides(lower, upper, rows)
        threshold = c_adj * np.maximum(sides[rows, None], sides[None])
        adjacent = (inner > 0) & (inner >= threshold * (1 - 1e-12))
        for offset, row in enumerate(range(rows.start, rows.stop)):
            adjacent[offset, row] = False
            neighbours.append(np.flatnonzero(adjacent[offset]))
            overlap.append(inner[offset])

    central = min(range(total), key=lambda i: (-whitney.cubes[i].volume, whitney.cubes[i].cube().center))
    parents = np.full(total, -1, dtype=np.int64)
    seen = np.zeros(total, dtype=bool)
    seen[central] = True
    order, pending = [], deque([central])
    while pending:
        cube = pending.popleft()
        order.append(cube)
        for nxt in neighbours[cube]:
            if not seen[nxt]:
                seen[nxt] = True
                parents[nxt] = cube
                pending.append(int(nxt))
    if not seen.all():
        raise ChainConstructionError(_components(neighbours, total))

    edges = []
    for i in order[1:]:
        parent = int(parents[i])
        side = float(overlap[i][parent])
        edges.append(EdgeFactor(cube=int(i), parent=parent, lam=float(max(sides[i], sides[parent]) / side),
                                overlap_side=side))

    boxes = np.stack([np.array([cube.lower for cube in whitney.cubes]),
                      np.array([cube.upper for cube in whitney.cubes])], axis=1)
    for i in reversed(order[1:]):
        parent = parents[i]
        boxes[parent, 0] = np.minimum(boxes[parent, 0], boxes[i, 0])
        boxes[parent, 1] = np.maximum(boxes[parent, 1], boxes[i, 1])
    centers = np.array([cube.cube().center for cube in whitney.cubes])
    halves = np.array([cube.side / 2 for cube in whitney.cubes])
    reach = np.maximum(centers - boxes[:, 0], boxes[:, 1] - centers).max(axis=1)
    ratios = reach / halves
    logger.debug(f'Chains over {total} Whitney cubes, central {whitney.cubes[central]}')
    return ChainDecomposition(whitney, c_adj, central, parents, order, neighbours, edges, boxes, ratios)


def _components(neighbours: list, total: int) -> list[list[int]]:
    seen = np.zeros(total, dtype=bool)
    components = []
    for start in range(total):
        if seen[start]:
            continue
        seen[start] = True
        component, pending = [], [start]
        while pending:
            cube = pending.pop()
            component.append(cube)
            for nxt in neighbours[cube]:
                if not seen[nxt]:
                    seen[nxt] = True
                    pending.append(int(nxt))
        components.append(sorted(component))
    return components


def boman_constant(chains: ChainDecomposition) -> int:
    """
    Least integer N >= 1 with the union of every shadow S(R) inside NR
    """
    return max(1, int(np.ceil(chains.boman_ratios - 1e-9).max()))


def chain_shadow_duality(chains: ChainDecomposition) -> bool:
    """
    R in C(Q) if and only if Q in S(R), checked as set equality
    """
    on_chain = {(r, q) for q in range(len(chains.parents)) for r in chains.chain(q)}
    in_shadow = {(r, q) for r in range(len(chains.parents)) for q in chains.shadow(r)}
    return on_chain == in_shadow


# Estimates along chains

def _dilated_averages(u: GridFunction, w: GridFunction, whitney: WhitneyDecomposition) -> tuple[np.ndarray, np.ndarray]:
    uw = u.samples * w.samples
    masses = np.array([whitney.dilated_integral(w.samples, i) for i in range(len(whitney))])
    if np.any(masses <= 0):
        raise DegenerateWeightError(f'dilated Whitney cube {whitney.cubes[int(np.argmin(masses))]}', float(masses.min()))
    return np.array([whitney.dilated_integral(uw, i) for i in range(len(whitney))]) / masses, masses


def chain_estimate_check(u: GridFunction, w, chains: ChainDecomposition) -> InstanceResult:
    """
    Compares |u_{w;Q*} - u_{w;Q0*}| with the chain sum of normalized weighted oscillations
    sum over R in C(Q) of (1/w(R*)) int_{R*} |u - u_{w;R*}| w, over every Whitney cube Q
    """
    w = as_grid(w)
    u.require_compatible(w)
    whitney = chains.whitney
    averages, masses = _dilated_averages(u, w, whitney)
    oscillations = np.array([
        whitney.dilated_integral(np.abs(u.samples - averages[i]) * w.samples, i) / masses[i]
        for i in range(len(whitney))])
    for edge in chains.edges:
        lower = np.maximum(whitney.dilated(edge['cube']).lower, whitney.dilated(edge['parent']).lower)
        upper = np.minimum(whitney.dilated(edge['cube']).upper, whitney.dilated(edge['parent']).upper)
        if whitney.domain.measure_in(w.samples, lower, upper) <= 0:
            raise DegenerateWeightError(f'overlap of {whitney.cubes[edge["cube"]]} and {whitney.cubes[edge["parent"]]}')
    chain_sums = np.zeros(len(whitney))
    for i in chains.order:
        parent = chains.parents[i]
        chain_sums[i] = oscillations[i] + (chain_sums[parent] if parent >= 0 else 0.0)
    lhs = np.abs(averages - averages[chains.central])
    tolerance = cio.get_exact_tolerance()
    ratios = np.where(lhs <= tolerance * np.maximum(np.abs(averages), 1.0), 0.0,
                      lhs / np.where(chain_sums > 0, chain_sums, np.nan))
    ratios = np.where(np.isnan(ratios), np.inf, ratios)
    worst = int(np.argmax(ratios))
    measured = float(ratios[worst])
    return instance_result(
        label='chain_estimate', passed=bool(math.isfinite(measured)), lhs=float(lhs[worst]),
        rhs=float(chain_sums[worst]), constant=None, measured=measured,
        witness={'cube': str(whitney.cubes[worst]), 'chain_length': len(chains.chain(worst))},
        details={'max_lambda': float(chains.lambdas().max()), 'cubes': len(whitney)})


def local_to_global(u: GridFunction, w, p: float, chains: ChainDecomposition) -> InstanceResult:
    """
    int_Omega |u - u_{w;Q0*}|^p w against the sum over Whitney cubes of int_{Q*} |u - u_{w;Q*}|^p w
    """
    if not 1 <= p < math.inf:
        raise ParameterError('p', p, '1 <= p < inf')
    w = as_grid(w)
    u.require_compatible(w)
    whitney = chains.whitney
    domain = whitney.domain
    averages, _ = _dilated_averages(u, w, whitney)
    deviation = np.abs(u.samples - averages[chains.central]) ** p * w.samples * domain.bits
    lhs = math.fsum(deviation.ravel()) * u.cell_volume
    terms = [whitney.dilated_integral(np.abs(u.samples - averages[i]) ** p * w.samples, i) for i in range(len(whitney))]
    rhs = math.fsum(terms)
    if rhs > 0:
        measured = lhs / rhs
    else:
        measured = 0.0 if lhs <= cio.get_exact_tolerance() else math.inf
    return instance_result(
        label='local_to_global', passed=bool(math.isfinite(measured)), lhs=lhs, rhs=rhs, constant=None,
        measured=measured, witness={'central': str(whitney.cubes[chains.central])},
        details={'p': p, 'boman': chains.boman, 'cubes': len(whitney)})


def dilation_sum_check(chains: ChainDecomposition, w, p: float, coefficients=None,
                       dilation: Optional[float] = None) -> float:
    """
    Measured ratio ||sum a_Q chi_{Omega cap NQ}||_{L^p(w)} / ||sum a_Q chi_Q||_{L^p(w)}; membership in
    NQ is decided by cell centers in the open dilated cube
    @param coefficients: nonnegative a_Q per Whitney cube, ones by default
    @param dilation: N, the Boman constant by default
    """
    w = as_grid(w)
    whitney = chains.whitney
    domain = whitney.domain
    coefficients = np.ones(len(whitney)) if coefficients is None else np.asarray(coefficients, dtype=np.float64)
    dilation = float(chains.boman if dilation is None else dilation)
    dilated_sum = np.zeros(domain.bits.shape)
    plain_sum = np.zeros(domain.bits.shape)
    for a, cube in zip(coefficients, whitney.cubes):
        plain_sum[cube.slices(domain.level)] += a
        big = cube.cube().dilate(dilation)
        overlap = grid.center_overlap(domain.root, domain.level, big.lower, big.upper)
        if overlap is not None:
            dilated_sum[overlap[0]] += a
    dilated_sum *= domain.bits
    numerator = math.fsum((dilated_sum ** p * w.samples).ravel())
    denominator = math.fsum((plain_sum ** p * w.samples).ravel())
    if denominator <= 0:
        raise DegenerateWeightError('Whitney cover', denominator)
    return (numerator / denominator) ** (1 / p)
