"""
Stopping-time sparse families and the pointwise domination checks built on them.

The oscillation construction stops at the maximal dyadic Q inside a stopping cube S with
avg_Q |f - f_S| > rho avg_S |f - f_S|. The level-set construction collects, for every k above k0,
the maximal dyadic Q with |Q|^(alpha/n - 1) int_Q |f| > a^k.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

import config_util.cio as cio
from dyadic import grid, utils
from dyadic.grid import CellMask, Cube, DyadicCube, GridFunction, as_grid
from dyadic.maximal import fractional_maximal
from dyadic.sp_exception import ParameterError, SparsityError
from dyadic.structs import InstanceResult, VerificationReport, instance_result, verification_report

logger = logging.getLogger(__name__)

OSCILLATION = 'oscillation'
LEVELSET = 'levelset'


@dataclass
class SparseMember:
    cube: DyadicCube
    parent: int
    kappa: float = 0.0
    level: Optional[int] = None
    value: Optional[float] = None


@dataclass
class SparseFamily:
    variant: str
    root: Cube
    level: int
    q0: DyadicCube
    members: list
    parameters: dict = field(default_factory=dict)
    eta: Optional[float] = None
    carved_ratios: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.members)

    @property
    def cubes(self) -> list[DyadicCube]:
        return [member.cube for member in self.members]

    @property
    def carved(self) -> bool:
        return self.carved_ratios is not None

    def stopping_parameter(self) -> float:
        """
        rho, for the level-set variant rho = a 2^-n
        """
        if self.variant == OSCILLATION:
            return self.parameters['rho']
        return self.parameters['a'] * 2.0 ** -self.root.n

    def children(self, i: int) -> list[int]:
        return [j for j, member in enumerate(self.members) if member.parent == i]

    @cached_property
    def owner_labels(self) -> np.ndarray:
        """
        Per cell, the index of the smallest member containing it (-1 outside q0)
        """
        labels = np.full((1 << self.level,) * self.root.n, -1, dtype=np.int64)
        for i in sorted(range(len(self.members)), key=lambda j: self.members[j].cube.depth):
            labels[self.members[i].cube.slices(self.level)] = i
        return labels

    def carved_mask(self, i: int) -> CellMask:
        """
        E_S = S minus the union of the children of S in the family
        """
        return CellMask(self.root, self.level, self.owner_labels == i)


def _canonical(variant: str, f: GridFunction, q0: DyadicCube, members: list, parameters: dict) -> SparseFamily:
    order = sorted(range(len(members)), key=lambda i: members[i].cube.sort_key())
    position = {old: new for new, old in enumerate(order)}
    canonical = []
    for old in order:
        member = members[old]
        member.parent = position[member.parent] if member.parent >= 0 else -1
        canonical.append(member)
    return SparseFamily(variant, f.root, f.level, q0, canonical, parameters)


def _maximal_exceeding(values: list[np.ndarray], threshold: float, cube: DyadicCube) -> list[DyadicCube]:
    """
    Maximal strict dyadic subcubes of cube whose per-depth value exceeds the threshold
    @param values: values[r] holds one entry per dyadic subcube of relative depth r
    """
    n = cube.n
    covered = np.zeros((1,) * n, dtype=bool)
    found = []
    for depth in range(1, len(values)):
        covered = utils.expand(covered, 2)
        hits = (values[depth] > threshold) & ~covered
        for index in np.argwhere(hits):
            local = DyadicCube.from_index(cube.root, depth, index)
            found.append(DyadicCube(cube.root, cube.path + local.path))
        covered |= hits
    return found


def build_sparse_oscillation(f: GridFunction, q0: Optional[DyadicCube] = None, rho: float = 2.0) -> SparseFamily:
    """
    Stopping-time family of the oscillation construction
    @param f: grid function
    @param q0: top cube, the grid root by default
    @param rho: stopping parameter, rho > 1
    @return: SparseFamily with kappa(S) = avg_S |f - f_S| per member
    """
    if not rho > 1:
        raise ParameterError('rho', rho, 'rho > 1')
    q0 = q0 or f.root_cube()
    f.require_cube(q0)
    members, pending = [], deque([(q0, -1)])
    while pending:
        cube, parent = pending.popleft()
        deviation = np.abs(f.samples[cube.slices(f.level)] - grid.average(f, cube))
        kappa = float(deviation.mean())
        index = len(members)
        members.append(SparseMember(cube, parent, kappa=kappa))
        if kappa == 0:
            continue
        local_level = f.level - cube.depth
        means = [utils.block_sum(deviation, r) / (1 << (f.n * (local_level - r))) for r in range(local_level + 1)]
        for child in _maximal_exceeding(means, rho * kappa, cube):
            pending.append((child, index))
    logger.debug(f'Oscillation family with {len(members)} cubes for rho={rho}')
    return _canonical(OSCILLATION, f, q0, members, {'rho': rho})


def _normalized_integrals(f: GridFunction, alpha: float) -> list[np.ndarray]:
    magnitude = f.map(np.abs)
    return [magnitude.sums(depth) * magnitude.volume_at(depth) ** (alpha / f.n - 1) for depth in range(f.level + 1)]


def smallest_level(value: float, a: float) -> int:
    """
    Smallest integer k with value <= a^k
    """
    k = math.ceil(math.log(value) / math.log(a))
    while a ** k < value:
        k += 1
    while a ** (k - 1) >= value:
        k -= 1
    return k


def build_sparse_levelset(f: GridFunction, alpha: float, q0: Optional[DyadicCube] = None, a: Optional[float] = None) -> SparseFamily:
    """
    Level-set family: S_k0 = {Q0}, S_k the maximal dyadic Q with |Q|^(alpha/n - 1) int_Q |f| > a^k
    @param f: grid function, taken in absolute value
    @param alpha: 0 <= alpha < n
    @param a: level base, a > 2^n; 2^(n+1) by default
    """
    n = f.n
    a = 2.0 ** (n + 1) if a is None else a
    if not a > 2 ** n:
        raise ParameterError('a', a, f'a > 2^n = {2 ** n}')
    if not 0 <= alpha < n:
        raise ParameterError('alpha', alpha, f'0 <= alpha < n = {n}')
    q0 = q0 or f.root_cube()
    local = f.restrict(q0)
    values = _normalized_integrals(local, alpha)
    top = float(values[0].item())
    if top == 0:
        family = [SparseMember(q0, -1, level=None, value=0.0)]
        return _canonical(LEVELSET, f, q0, family, {'a': a, 'alpha': alpha, 'k0': None})
    k0 = smallest_level(top, a)
    members = [SparseMember(q0, -1, level=k0, value=top)]
    owner = np.zeros((1 << local.level,) * n, dtype=np.int64)
    k = k0 + 1
    while True:
        found = _maximal_exceeding(values, a ** k, local.root_cube())
        if not found:
            break
        updates = []
        for cube in found:
            slices = cube.slices(local.level)
            parent = int(owner[tuple(s.start for s in slices)])
            updates.append((slices, len(members)))
            members.append(SparseMember(DyadicCube(f.root, q0.path + cube.path), parent, level=k,
                                        value=float(values[cube.depth][cube.index])))
        for slices, index in updates:
            owner[slices] = index
        k += 1
    logger.debug(f'Level-set family with {len(members)} cubes over levels {k0}..{k - 1}')
    return _canonical(LEVELSET, f, q0, members, {'a': a, 'alpha': alpha, 'k0': k0})


def carve_disjoint_sets(family: SparseFamily, w, constant: float = 1.0, delta: float = 1.0) -> SparseFamily:
    """
    Installs E_S and checks w(E_S) >= eta w(S) with eta = 1 - C rho^-delta, the children mass
    bound sum w(S') <= C rho^-delta w(S) and that the E_S partition q0
    @param w: weight with A-infinity pair (constant, delta)
    @return: the same family with eta and carved ratios set
    """
    weight = as_grid(w)
    if weight.root != family.root or weight.level != family.level:
        raise ParameterError('w', repr(weight), 'the grid of the family')
    rho = family.stopping_parameter()
    bound = constant * rho ** (-delta)
    eta = 1 - bound
    if not eta > 0:
        raise ParameterError('rho', rho, f'C rho^-delta < 1 for C={constant!r}, delta={delta!r}')
    labels = family.owner_labels
    if np.any(labels[family.q0.slices(family.level)] < 0):
        raise SparsityError(str(family.q0), 0.0, 1.0, 'carved sets covering the top cube')
    inside = labels >= 0
    masses = weight.samples * weight.cell_volume
    carved = np.bincount(labels[inside], weights=masses[inside], minlength=len(family))
    totals = np.array([weight.integral(member.cube) for member in family.members])
    children = np.zeros(len(family))
    for i, member in enumerate(family.members):
        if member.parent >= 0:
            children[member.parent] += totals[i]
    tolerance = cio.get_exact_tolerance()
    for i, member in enumerate(family.members):
        if utils.relative_excess(eta * totals[i], carved[i], tolerance) > 0:
            raise SparsityError(str(member.cube), carved[i] / totals[i], eta, 'w(E_S) >= eta w(S)')
        if utils.relative_excess(children[i], bound * totals[i], tolerance) > 0:
            raise SparsityError(str(member.cube), children[i] / totals[i], bound, 'children mass bound')
    family.eta = eta
    family.carved_ratios = carved / totals
    family.parameters.update({'C': constant, 'delta': delta})
    return family


def sparse_operator(family: SparseFamily, f: GridFunction) -> GridFunction:
    """
    A(x) = sum over family cubes S containing x of avg_S |f - f_S|
    """
    values = np.zeros(f.samples.shape)
    for member in family.members:
        values[member.cube.slices(f.level)] += grid.oscillation(f, member.cube)
    return GridFunction(f.root, f.level, values)


def levelset_operator(family: SparseFamily, p: float) -> GridFunction:
    """
    sum over family cubes Q containing x of (|Q|^(alpha/n - 1) int_Q |f|)^p
    """
    values = np.zeros((1 << family.level,) * family.root.n)
    for member in family.members:
        values[member.cube.slices(family.level)] += member.value ** p
    return GridFunction(family.root, family.level, values)


def check_stopping_property(family: SparseFamily, f: GridFunction) -> tuple[bool, float]:
    """
    Exhaustive scan of avg_Q |f - f_S| <= rho kappa(S) over all dyadic Q in q0, S the smallest
    family cube containing Q
    @return: (holds, worst ratio avg_Q |f - f_S| / (rho kappa(S)))
    """
    rho = family.parameters['rho']
    local = f.restrict(family.q0)
    n, offset = f.n, family.q0.depth
    owner = np.zeros((1,) * n, dtype=np.int64)
    means = np.array([grid.average(f, member.cube) for member in family.members])
    kappas = np.array([member.kappa for member in family.members])
    by_depth = {}
    for i, member in enumerate(family.members):
        by_depth.setdefault(member.cube.depth - offset, []).append(i)
    tolerance = cio.get_exact_tolerance()
    worst, holds = 0.0, True
    for depth in range(local.level + 1):
        if depth:
            owner = utils.expand(owner, 2)
        for i in by_depth.get(depth, []):
            index = np.array(family.members[i].cube.index) - np.array(family.q0.index) * (1 << depth)
            owner[tuple(index)] = i
        reference = utils.expand(means[owner], 1 << (local.level - depth))
        deviation = utils.block_sum(np.abs(local.samples - reference), depth) / (1 << (n * (local.level - depth)))
        limit = rho * kappas[owner]
        excess = utils.relative_excess(deviation, limit, tolerance)
        holds = holds and bool(np.all(excess <= 0))
        with np.errstate(divide='ignore', invalid='ignore'):
            ratios = np.where(limit > 0, deviation / limit, 0.0)
        worst = max(worst, float(ratios.max()))
    return holds, worst


def verify_level_mass(family: SparseFamily) -> tuple[bool, float]:
    """
    sum of |R| over the children R of Q is at most (2^n/a)|Q|, and at most |Q0|/a for Q0
    @return: (holds, worst ratio of children volume to the bound)
    """
    a = family.parameters['a']
    n = family.root.n
    volumes = np.zeros(len(family))
    for member in family.members:
        if member.parent >= 0:
            volumes[member.parent] += member.cube.volume
    worst = 0.0
    for i, member in enumerate(family.members):
        bound = member.cube.volume * (1 / a if member.parent < 0 else 2 ** n / a)
        worst = max(worst, volumes[i] / bound)
    return worst <= 1 + cio.get_exact_tolerance(), worst


def _domination(label: str, lhs: np.ndarray, rhs: np.ndarray, constant: float, details: dict) -> InstanceResult:
    excess = utils.relative_excess(lhs, rhs, cio.get_exact_tolerance())
    worst = np.unravel_index(int(np.argmax(excess)), excess.shape)
    slack = float((rhs - lhs).min())
    return instance_result(label, bool(excess.max() <= 0), float(lhs[worst]), float(rhs[worst]), constant=constant,
                           measured=float(lhs[worst] / rhs[worst]) if rhs[worst] > 0 else 0.0,
                           witness={'cell': [int(i) for i in worst]}, details={**details, 'slack': slack})


def verify_pointwise_domination(f: GridFunction, w=None, rho: float = 2.0, q0: Optional[DyadicCube] = None,
                                constant: float = 1.0, delta: float = 1.0) -> VerificationReport:
    """
    |f(x) - f_Q0| <= rho 2^n A(x) at every cell of q0, A the sparse operator of the oscillation family
    """
    family = build_sparse_oscillation(f, q0, rho)
    carve_disjoint_sets(family, w if w is not None else GridFunction(f.root, f.level, np.ones(f.samples.shape)),
                        constant, delta)
    holds, worst = check_stopping_property(family, f)
    slices = family.q0.slices(f.level)
    lhs = np.abs(f.samples[slices] - grid.average(f, family.q0))
    scale = rho * 2 ** f.n
    rhs = scale * sparse_operator(family, f).samples[slices]
    result = _domination('pointwise_domination', lhs, rhs, scale,
                         {'cubes': len(family), 'eta': family.eta, 'stopping_ratio': worst})
    if not holds:
        result.update(passed=False, status='fail')
    return verification_report('SPARSE1', [result], {'cubes': len(family), 'eta': family.eta})


def verify_maximal_domination(f: GridFunction, alpha: float, p: float, a: Optional[float] = None, sigma=None,
                              q0: Optional[DyadicCube] = None, constant: float = 1.0,
                              delta: float = 1.0) -> VerificationReport:
    """
    (M_alpha f)^p <= a^(2p) sum over family cubes Q containing x of (|Q|^(alpha/n - 1) int_Q |f|)^p
    """
    if not 1 <= p < math.inf:
        raise ParameterError('p', p, '1 <= p < inf')
    family = build_sparse_levelset(f, alpha, q0, a)
    a = family.parameters['a']
    carve_disjoint_sets(family, sigma if sigma is not None else GridFunction(f.root, f.level, np.ones(f.samples.shape)),
                        constant, delta)
    mass_holds, mass_ratio = verify_level_mass(family)
    slices = family.q0.slices(f.level)
    lhs = fractional_maximal(f, alpha, family.q0).samples ** p
    scale = a ** (2 * p)
    rhs = scale * levelset_operator(family, p).samples[slices]
    result = _domination('maximal_domination', lhs, rhs, scale,
                         {'cubes': len(family), 'eta': family.eta, 'k0': family.parameters['k0'],
                          'level_mass_ratio': mass_ratio})
    if not mass_holds:
        result.update(passed=False, status='fail')
    return verification_report('SPARSE2', [result], {'cubes': len(family), 'eta': family.eta})
