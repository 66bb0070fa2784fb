import itertools
import math

import numpy as np


def level_of(values: np.ndarray) -> int:
    return int(values.shape[0]).bit_length() - 1


def block_sum(values: np.ndarray, depth: int) -> np.ndarray:
    """
    Sums a (2^L,)*n cell array over the dyadic cubes of the given depth
    @param values: cell array with equal power-of-two extent along every axis
    @param depth: target depth, 0 <= depth <= L
    @return: array of shape (2^depth,)*n
    """
    n = values.ndim
    count = 1 << depth
    factor = values.shape[0] // count
    if factor == 1:
        return values.copy()
    shape = []
    for _ in range(n):
        shape += [count, factor]
    return values.reshape(shape).sum(axis=tuple(range(1, 2 * n, 2)))


def block_view(values: np.ndarray, depth: int) -> np.ndarray:
    """
    Rearranges a cell array into one row per dyadic cube of the given depth
    @return: array of shape (2^(n*depth), 2^(n*(L-depth))), rows in C order of the cube index
    """
    n = values.ndim
    count = 1 << depth
    factor = values.shape[0] // count
    shape = []
    for _ in range(n):
        shape += [count, factor]
    order = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    return values.reshape(shape).transpose(order).reshape(count ** n, factor ** n)


def expand(values: np.ndarray, factor: int) -> np.ndarray:
    for axis in range(values.ndim):
        values = np.repeat(values, factor, axis=axis)
    return values


def sum_pyramid(values: np.ndarray) -> list[np.ndarray]:
    """
    Dyadic sum pyramid, entry d holds the sums over all depth-d cubes
    """
    level = level_of(values)
    pyramid = [values]
    for _ in range(level):
        pyramid.append(block_sum(pyramid[-1], level_of(pyramid[-1]) - 1))
    return pyramid[::-1]


def two_sum(a, b):
    total = a + b
    shifted = total - a
    error = (a - (total - shifted)) + (b - shifted)
    return total, error


def compensated_cumsum(high: np.ndarray, low: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Running sum of a double-word array (high + low) along one axis
    """
    high = np.moveaxis(high, axis, 0).copy()
    low = np.moveaxis(low, axis, 0).copy()
    run_high = np.zeros(high.shape[1:])
    run_low = np.zeros(high.shape[1:])
    for i in range(high.shape[0]):
        total, error = two_sum(run_high, high[i])
        run_high, run_low = two_sum(total, run_low + low[i] + error)
        high[i] = run_high
        low[i] = run_low
    return np.moveaxis(high, 0, axis), np.moveaxis(low, 0, axis)


def summed_volume_table(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Compensated n-dimensional prefix sums padded with a leading zero plane on every axis
    @param values: cell array
    @return: (high, low) tables of shape (2^L + 1,)*n, prefix = high + low
    """
    high = np.asarray(values, dtype=np.float64)
    low = np.zeros_like(high)
    for axis in range(values.ndim):
        high, low = compensated_cumsum(high, low, axis)
    pad = [(1, 0)] * values.ndim
    return np.pad(high, pad), np.pad(low, pad)


def _interpolation_terms(coords: np.ndarray, size: int):
    coords = np.clip(np.asarray(coords, dtype=np.float64), 0, size - 1)
    below = np.floor(coords).astype(np.int64)
    above = np.minimum(below + 1, size - 1)
    fraction = coords - below
    return (below, 1.0 - fraction), (above, fraction)


def table_at(table: np.ndarray, coords: list[np.ndarray]) -> np.ndarray:
    """
    Evaluates a prefix table on the product grid of per-axis coordinates (cell units). The
    cumulative integral of a piecewise-constant function is multilinear inside each cell, so
    multilinear interpolation of the table is exact.
    """
    n = table.ndim
    terms = [_interpolation_terms(axis_coords, table.shape[axis]) for axis, axis_coords in enumerate(coords)]
    result = 0.0
    for choice in itertools.product((0, 1), repeat=n):
        indices = [terms[axis][choice[axis]][0] for axis in range(n)]
        factor = np.ones([len(c) for c in coords])
        for axis in range(n):
            shape = [1] * n
            shape[axis] = -1
            factor = factor * terms[axis][choice[axis]][1].reshape(shape)
        result = result + factor * table[np.ix_(*indices)]
    return result


def box_grid_sums(tables: tuple[np.ndarray, np.ndarray], lowers: list[np.ndarray],
                  uppers: list[np.ndarray]) -> np.ndarray:
    """
    Sums over the product family of boxes [lowers[0][i], uppers[0][i]) x ... in cell units
    @return: array of shape (len(lowers[0]), ..., len(lowers[n-1]))
    """
    n = len(lowers)
    result = 0.0
    for corner in itertools.product((0, 1), repeat=n):
        coords = [uppers[axis] if corner[axis] else lowers[axis] for axis in range(n)]
        sign = -1.0 if (n - sum(corner)) % 2 else 1.0
        for table in tables:
            result = result + sign * table_at(table, coords)
    return result


def exact_box_sum(tables: tuple[np.ndarray, np.ndarray], lower, upper) -> float:
    """
    Sum over one box with integer corners, rounded once
    """
    high, low = tables
    size = high.shape[0] - 1
    lower = [min(max(int(x), 0), size) for x in lower]
    upper = [min(max(int(x), 0), size) for x in upper]
    parts = []
    for corner in itertools.product((0, 1), repeat=len(lower)):
        index = tuple(upper[axis] if corner[axis] else lower[axis] for axis in range(len(lower)))
        sign = -1.0 if (len(lower) - sum(corner)) % 2 else 1.0
        parts += [sign * high[index], sign * low[index]]
    return math.fsum(parts)


def relative_excess(lhs, rhs, tolerance: float):
    """
    Amount by which lhs exceeds rhs beyond a mixed relative/absolute tolerance (<= 0 means ok)
    """
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    return lhs - rhs - tolerance * np.maximum(scale, 1.0)
