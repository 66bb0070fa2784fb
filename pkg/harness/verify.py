"""
End-to-end runners, one per theorem id. Every runner builds pure instance tasks, runs them on the
experiment queue and reduces the results in instance order into a VerificationReport.
"""
import dataclasses
import logging
import math
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

import config_util.cio as cio
import config_util.logging as log
from dyadic import grid, utils
from dyadic.domain import (DomainRaster, boman_constant, build_chains, chain_estimate_check, chain_shadow_duality,
                           dilation_sum_check, local_to_global, whitney_decompose)
from dyadic.grid import Cube, DyadicCube, GridFunction
from dyadic.maximal import fractional_maximal, noncentered_maximal, sharp_gradient_ratio, sharp_maximal, strong_type_check
from dyadic.sp_exception import AdmissibilityError, ConfigError, ParameterError, SPException
from dyadic.sparse import verify_maximal_domination, verify_pointwise_domination
from dyadic.structs import InstanceResult, VerificationReport, instance_result, verification_report
from dyadic.weight_spec import build_weight, format_weight_spec, parse_weight_spec
from dyadic.weights import (AxisHyperplane, Bump, PointSet, Weight, admissible_parameter, ainfty_sweep, aikawa_check,
                            doubling_constant, doubling_transfer_check, half_harnack_check, reverse_holder_check,
                            supersolution_check, two_weight_constant)
from harness.experiment import ExperimentConfig
from harness.experiment_queue import ExperimentQueue
from harness.families import parse_function_spec, random_function
from harness.report import environment

logger = logging.getLogger(__name__)

Task = Callable[[], InstanceResult]


# Proof constants

def fefferman_stein_constant(n: int, p: float, rho: float, eta: float) -> float:
    """
    (rho 2^n)^p eta^-p (p' 2^p' / (p' - 1))^(p/p')
    """
    dual = p / (p - 1)
    return (rho * 2 ** n) ** p * eta ** (-p) * (dual * 2 ** dual / (dual - 1)) ** (p / dual)


def two_weight_maximal_constant(a: float, k: float, eta: float, p: float) -> float:
    """
    (a^(2p) K / eta * p 2^p / (p - 1))^(1/p)
    """
    return (a ** (2 * p) * k / eta * p * 2 ** p / (p - 1)) ** (1 / p)


def local_poincare_constant(fefferman_stein: float, cube_poincare: float, two_weight: float, q: float) -> float:
    return fefferman_stein ** (1 / q) * cube_poincare * two_weight


def sparse_parameters(w, kind: str, n: int, override: Optional[float] = None) -> tuple[dict, float, float]:
    """
    A-infinity pair and stopping parameter for a sparse construction under w
    @param kind: 'rho' or 'a'
    @param override: fixed rho or a; the sweep entry with the smallest C rho^-delta is used
    @return: (estimate, rho or a, eta)
    """
    sweep = ainfty_sweep(w)
    if override is None:
        return admissible_parameter(sweep, kind, n)
    rho = override if kind == 'rho' else override * 2.0 ** -n
    best = min(sweep, key=lambda estimate: estimate['constant'] * rho ** -estimate['delta'])
    eta = 1 - best['constant'] * rho ** -best['delta']
    if not eta > 0:
        raise ParameterError(kind, override, f'C rho^-delta < 1 for C={best["constant"]}, delta={best["delta"]}')
    return best, override, eta


# Numerics

def _integral(values: np.ndarray, cell_volume: float) -> float:
    return math.fsum(np.ravel(values)) * cell_volume


def _norm(values: np.ndarray, weights, exponent: float, cell_volume: float) -> float:
    return _integral(np.abs(values) ** exponent * weights, cell_volume) ** (1 / exponent)


def _ratio(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs <= cio.get_exact_tolerance() else math.inf


def optimal_constant(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    """
    argmin over c of int |u - c|^q w; the weighted mean for q = 2, a bounded scalar minimisation otherwise
    """
    if q == 2:
        return math.fsum((values * weights).ravel()) / math.fsum(weights.ravel())
    low, high = float(values.min()), float(values.max())
    if low == high:
        return low
    xatol = cio.get_constant_xatol() * max(1.0, abs(low) + abs(high))
    result = minimize_scalar(lambda c: float(np.sum(np.abs(values - c) ** q * weights)), bounds=(low, high),
                             method='bounded', options={'xatol': xatol})
    return float(result.x)


def _spread(values: list[float]) -> float:
    finite = [value for value in values if math.isfinite(value)]
    if len(finite) < len(values):
        return math.inf
    top = max(finite, default=0.0)
    return (top - min(finite)) / top if top > 0 else 0.0


# Runner plumbing

def _run(cfg: ExperimentConfig, tasks: list[tuple[str, Task]], threads: Optional[int]) -> list[InstanceResult]:
    queue = ExperimentQueue(threads)
    for index, (label, task) in enumerate(tasks):
        queue.put(index, label, task)
    log.print_and_log(f'{cfg.theorem}: running {len(tasks)} instances', log.INFO)
    return queue.process(f'{cfg.theorem} instances')


def _report(cfg: ExperimentConfig, instances: list[InstanceResult], summary: dict) -> VerificationReport:
    report = verification_report(cfg.theorem, instances, summary, environment(cfg.seed, cfg.level, cfg.digest()))
    log.print_and_log(f'{cfg.theorem}: {"passed" if report["passed"] else "FAILED"} '
                      f'({sum(i["passed"] for i in instances)}/{len(instances)} instances)', log.INFO)
    return report


def _rng(cfg: ExperimentConfig, index: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, index])


def _grid_functions(cfg: ExperimentConfig, root: Cube, level: int, nonnegative: bool = False) -> list[tuple[str, GridFunction]]:
    """
    Sampled spec functions followed by seeded random instances
    """
    functions = []
    for spec in cfg.functions:
        f = parse_function_spec(spec, cfg.n).sample(root, level)
        functions.append((spec, f.map(np.abs) if nonnegative else f))
    for i in range(cfg.instances):
        functions.append((f'random[{i}]', random_function(_rng(cfg, i), root, level, nonnegative)))
    return functions


def _error_result(label: str, e: SPException) -> InstanceResult:
    return instance_result(label, False, 0.0, 0.0, witness={'error': str(e)}, status='error')


# Sparse domination

def run_sparse_oscillation(cfg: ExperimentConfig, threads: Optional[int] = None) -> VerificationReport:
    root, n = cfg.root(), cfg.n
    weights = [build_weight(spec, root, cfg.level) for spec in cfg.weight_specs]

    def task(label: str, f: GridFunction, w: Weight) -> Task:
        def run() -> InstanceResult:
            estimate, rho, _ = sparse_parameters(w, 'rho', n, cfg.rho)
            report = verify_pointwise_domination(f, w, rho, constant=estimate['constant'], delta=estimate['delta'])
            result = report['instances'][0]
            result['label'] = label
            result['witness']['weight'] = w.label
            result['details'].update({'rho': rho, 'C_w': estimate['constant'], 'delta_w': estimate['delta']})
            return result
        return run

    functions = _grid_functions(cfg, root, cfg.level)
    tasks = [(label, task(label, f, weights[i % len(weights)])) for i, (label, f) in enumerate(functions)]
    instances = _run(cfg, tasks, threads)
    slack = min((i['details'].get('slack', math.inf) for i in instances if i['status'] != 'error'), default=math.inf)
    return _report(cfg, instances, {'min_slack': slack, 'rho': cfg.rho})


def run_sparse_levelset(cfg: ExperimentConfig, threads: Optional[int] = None) -> VerificationReport:
    root, n = cfg.root(), cfg.n
    sigma = build_weight(cfg.w, root, cfg.level)

    def task(label: str, f: GridFunction) -> Task:
        def run() -> InstanceResult:
            estimate, a, _ = sparse_parameters(sigma, 'a', n, cfg.a)
            report = verify_maximal_domination(f, cfg.alpha, cfg.p, a, sigma, constant=estimate['constant'],
                                               delta=estimate['delta'])
            result = report['instances'][0]
            result['label'] = label
            result['details'].update({'a': a, 'alpha': cfg.alpha, 'p': cfg.p})
            return result
        return run

    tasks = [(label, task(label, f)) for label, f in _grid_functions(cfg, root, cfg.level, nonnegative=True)]
    instances = _run(cfg, tasks, threads)
    return _report(cfg, instances, {'alpha': cfg.alpha, 'p': cfg.p, 'sigma': sigma.label})


# Fefferman-Stein

def run_fefferman_stein(cfg: ExperimentConfig, threads: Optional[int] = None) -> VerificationReport:
    """
    int |f - f_Q0|^p w <= C int (M# f)^p w with the sparse proof constant, plus the strong-type
    bound of M^w at p' on the dual extremal |f - f_Q0|^(p-1)
    """
    root, n, p = cfg.root(), cfg.n, cfg.p
    weights = [build_weight(spec, root, cfg.level) for spec in cfg.weight_specs]
    tolerance = cio.get_exact_tolerance()

    def task(label: str, f: GridFunction, w: Weight) -> Task:
        def run() -> InstanceResult:
            estimate, rho, eta = sparse_parameters(w, 'rho', n, cfg.rho)
            constant = fefferman_stein_constant(n, p, rho, eta)
            deviation = np.abs(f.samples - grid.average(f, f.root_cube()))
            lhs = _integral(deviation ** p * w.samples, f.cell_volume)
            rhs = _integral(sharp_maximal(f).samples ** p * w.samples, f.cell_volume)
            dual = strong_type_check(GridFunction(f.root, f.level, deviation ** (p - 1)), w, p / (p - 1))
            holds = utils.relative_excess(lhs, constant * rhs, tolerance) <= 0
            return instance_result(label, bool(holds and dual['passed']), lhs, rhs, constant=constant,
                                   measured=_ratio(lhs, rhs), witness={'weight': w.label},
                                   details={'rho': rho, 'eta': eta, 'C_w': estimate['constant'],
                                            'delta_w': estimate['delta'], 'dual_strong_type': dual['measured'],
                                            'dual_constant': dual['constant']})
        return run

    functions = _grid_functions(cfg, root, cfg.level)
    tasks = [(label, task(label, f, weights[i % len(weights)])) for i, (label, f) in enumerate(functions)]
    instances = _run(cfg, tasks, threads)
    ratios = [i['measured'] for i in instances if i['measured'] is not None]
    return _report(cfg, instances, {'p': p, 'max_ratio': max(ratios, default=0.0)})


# Two-weight maximal

def _extremal_cubes(root: Cube, level: int, k_cube: DyadicCube, depth: int = 2) -> list[DyadicCube]:
    cubes = [k_cube]
    for d in range(min(depth, level) + 1):
        for index in np.ndindex(*(1 << d,) * root.n):
            cube = DyadicCube.from_index(root, d, index)
            if cube != k_cube:
                cubes.append(cube)
    return cubes


def run_two_weight_maximal(cfg: ExperimentConfig, threads: Optional[int] = None) -> VerificationReport:
    """
    Sufficiency: ||M_alpha f||_{L^q(w)} <= C ||f||_{L^p(v)} with C assembled from K, a and eta.
    Necessity: the extremal functions sigma chi_Q give K <= (measured C)^p.
    """
    root, n, p, q, alpha = cfg.root(), cfg.n, cfg.p, cfg.exponent_q, cfg.alpha
    w = build_weight(cfg.w, root, cfg.level)
    v = build_weight(cfg.v_spec, root, cfg.level)
    sigma = v.dual(p)
    estimate, a, eta = sparse_parameters(sigma, 'a', n, cfg.a)
    k_report = two_weight_constant(w, sigma, p, q, alpha)
    constant = two_weight_maximal_constant(a, k_report['K'], eta, p)
    tolerance = cio.get_exact_tolerance()
    volume = w.function.cell_volume

    def forward(label: str, f: GridFunction) -> Task:
        def run() -> InstanceResult:
            lhs = _norm(fractional_maximal(f, alpha).samples, w.samples, q, volume)
            rhs = _norm(f.samples, v.samples, p, volume)
            return instance_result(label, utils.relative_excess(lhs, constant * rhs, tolerance) <= 0, lhs, rhs,
                                   constant=constant, measured=_ratio(lhs, rhs), details={'direction': 'sufficiency'})
        return run

    def extremal(cube: DyadicCube) -> Task:
        def run() -> InstanceResult:
            samples = np.zeros(sigma.samples.shape)
            samples[cube.slices(cfg.level)] = sigma.samples[cube.slices(cfg.level)]
            f = GridFunction(root, cfg.level, samples)
            lhs = _norm(fractional_maximal(f, alpha).samples, w.samples, q, volume)
            rhs = _norm(samples, v.samples, p, volume)
            return instance_result(f'extremal {cube}', True, lhs, rhs, measured=_ratio(lhs, rhs),
                                   details={'direction': 'extremal'})
        return run

    tasks = [(label, forward(label, f)) for label, f in _grid_functions(cfg, root, cfg.level)]
    tasks += [(f'extremal {cube}', extremal(cube)) for cube in _extremal_cubes(root, cfg.level, k_report['cube'])]
    instances = _run(cfg, tasks, threads)
    measured = max((i['measured'] for i in instances if i['measured'] is not None and i['status'] != 'error'),
                   default=0.0)
    necessity = utils.relative_excess(k_report['K'], measured ** p, tolerance) <= 0
    instances.append(instance_result('necessity', necessity, k_report['K'], measured ** p, measured=measured,
                                     witness={'cube': str(k_report['cube'])}, details={'direction': 'necessity'}))
    return _report(cfg, instances, {'K': k_report['K'], 'K_cube': str(k_report['cube']), 'a': a, 'eta': eta,
                                    'C_sigma': estimate['constant'], 'delta_sigma': estimate['delta'],
                                    'constant': constant, 'measured': measured})


# Local two-weight Poincare

def _local_poincare_level(cfg: ExperimentConfig, u, root: Cube, level: int, w_spec: str, v_spec: str) -> dict:
    p, q = cfg.p, cfg.exponent_q
    w = build_weight(w_spec, root, level)
    v = build_weight(v_spec, root, level)
    samples = u.sample(root, level)
    gradient = u.gradient_norm(root, level)
    deviation = samples.samples - grid.average(samples, samples.root_cube())
    lhs = _norm(deviation, w.samples, q, samples.cell_volume)
    rhs = _norm(gradient.samples, v.samples, p, samples.cell_volume)
    return {'level': level, 'lhs': lhs, 'rhs': rhs, 'measured': _ratio(lhs, rhs), 'w': w, 'v': v,
            'u': samples, 'gradient': gradient}


def local_poincare_theory(cfg: ExperimentConfig, w: Weight, v: Weight) -> dict:
    """
    Composite constant: Fefferman-Stein at exponent q, the cube Poincare constant and the
    two-weight fractional maximal bound at alpha = 1
    """
    n, p, q = cfg.n, cfg.p, cfg.exponent_q
    estimate_w, rho, eta_w = sparse_parameters(w, 'rho', n)
    sigma = v.dual(p)
    estimate_s, a, eta_s = sparse_parameters(sigma, 'a', n)
    k_report = two_weight_constant(w, sigma, p, q, 1.0)
    c_fs = fefferman_stein_constant(n, q, rho, eta_w)
    c_twm = two_weight_maximal_constant(a, k_report['K'], eta_s, p)
    c_cube = cio.get_cube_poincare_constant(n)
    return {'constant': local_poincare_constant(c_fs, c_cube, c_twm, q), 'K': k_report['K'],
            'C_w': estimate_w['constant'], 'C_sigma': estimate_s['constant'], 'fefferman_stein': c_fs,
            'two_weight': c_twm, 'cube_poincare': c_cube}


def _refined_result(label: str, runs: list[dict], constant: Optional[float], stability: float,
                    details: dict) -> InstanceResult:
    finest = runs[-1]
    spread = _spread([run['measured'] for run in runs])
    holds = math.isfinite(finest['measured'])
    if constant is not None:
        holds = holds and utils.relative_excess(finest['lhs'], constant * finest['rhs'], cio.get_exact_tolerance()) <= 0
    status = 'fail' if not holds else ('inconclusive' if spread > stability else 'pass')
    details = {**details, 'spread': spread,
               'levels': [{key: run[key] for key in ('level', 'lhs', 'rhs', 'measured')} for run in runs]}
    return instance_result(label, status == 'pass', finest['lhs'], finest['rhs'], constant=constant,
                           measured=finest['measured'], details=details, status=status)


def run_local_poincare(cfg: ExperimentConfig, threads: Optional[int] = None) -> VerificationReport:
    root = cfg.root()
    levels = cfg.refinement_levels(1)
    stability = cfg.stability if cfg.stability is not None else cio.get_poincare_stability()

    def task(spec: str) -> Task:
        def run() -> InstanceResult:
            u = parse_function_spec(spec, cfg.n)
            runs = [_local_poincare_level(cfg, u, root, level, cfg.w, cfg.v_spec) for level in levels]
            finest = runs[-1]
            theory = local_poincare_theory(cfg, finest['w'], finest['v'])
            ratio = sharp_gradient_ratio(finest['u'], finest['gradient'])
            return _refined_result(spec, runs, theory['constant'], stability, {**theory, 'sharp_gradient_ratio': ratio})
        return run

    instances = _run(cfg, [(spec, task(spec)) for spec in cfg.functions], threads)
    return _report(cfg, instances, {'levels': levels, 'stability': stability, 'w': cfg.w, 'v': cfg.v_spec})


# Global two-weight Poincare

def whitney_hypotheses(whitney, w: Weight, v: Weight, p: float, q: float) -> dict:
    """
    A-infinity of w and the two-weight constant K(w, v^(-1/(p-1))) on the dyadic tree of every dilated
    Whitney cube, resampled at the hypothesis level
    """
    level = cio.get_hypothesis_level()
    flagged, ainfty, constants = [], [], []
    for i, cube in enumerate(whitney.cubes):
        if whitney.layer[i]:
            continue
        star = whitney.dilated(i)
        try:
            local_w = w.resample(star, level)
            local_sigma = v.resample(star, level).dual(p)
            ainfty.append(admissible_parameter(ainfty_sweep(local_w))[0]['constant'])
            constants.append(two_weight_constant(local_w, local_sigma, p, q, 1.0)['K'])
        except SPException as e:
            flagged.append({'cube': str(cube), 'condition': type(e).__name__, 'error': str(e)})
    return {'cubes_checked': len(ainfty), 'ainfty_max': max(ainfty, default=math.nan),
            'K_max': max(constants, default=math.nan), 'flagged': flagged}


def _global_study(cfg: ExperimentConfig, w_spec: str, v_spec: str, threads: Optional[int], extra: dict) -> VerificationReport:
    root, level, p, q = cfg.root(), cfg.level, cfg.p, cfg.exponent_q
    domain = DomainRaster.from_spec(cfg.domain, root, level)
    whitney = whitney_decompose(domain)
    chains = build_chains(whitney)
    w = build_weight(w_spec, root, level, domain)
    v = build_weight(v_spec, root, level, domain)
    inside = domain.bits
    trials = [cube.cube() for cube, layer in zip(whitney.cubes, whitney.layer) if not layer]

    def hypotheses() -> InstanceResult:
        checks = whitney_hypotheses(whitney, w, v, p, q)
        doubling = doubling_constant(w, domain, trials)
        transfer = doubling_transfer_check(w, domain, trials)
        duality = chain_shadow_duality(chains)
        passed = not checks['flagged'] and transfer['parameters']['violations'] == 0 and duality
        return instance_result('hypotheses', passed, transfer['constant'], transfer['parameters']['ambient'],
                               witness={'flagged': checks['flagged'] + transfer['flagged']},
                               details={**checks, 'doubling': doubling['constant'], 'doubling_transfer': transfer,
                                        'boman': boman_constant(chains), 'overlap': whitney.overlap_count(),
                                        'chain_shadow_duality': duality})

    def task(spec: str) -> Task:
        def run() -> InstanceResult:
            u = parse_function_spec(spec, cfg.n)
            samples = u.sample(root, level).samples[inside]
            gradient = u.gradient_norm(root, level).samples[inside]
            weights = w.samples[inside]
            c = optimal_constant(samples, weights, q)
            lhs = _norm(samples - c, weights, q, domain.mask.cell_volume)
            rhs = _norm(gradient, v.samples[inside], p, domain.mask.cell_volume)
            measured = _ratio(lhs, rhs)
            return instance_result(spec, math.isfinite(measured), lhs, rhs, measured=measured,
                                   details={'c': c, 'weighted_mean': optimal_constant(samples, weights, 2)})
        return run

    tasks = [('hypotheses', hypotheses)] + [(spec, task(spec)) for spec in cfg.functions]
    instances = _run(cfg, tasks, threads)
    low, high = whitney.comparability()
    return _report(cfg, instances, {**extra, 'w': w.label, 'v': v.label, 'whitney_cubes': len(whitney),
                                    'boundary_layer': int(whitney.layer.sum()), 'comparability': [low, high],
                                    'boman': boman_constant(chains), 'overlap': whitney.overlap_count()})


def run_global(cfg: ExperimentConfig, threads: Optional[int] = None) -> VerificationReport:
    return _global_study(cfg, cfg.w, cfg.v_spec, threads, {})


def run_distance_boundary(cfg: ExperimentConfig, threads: Optional[int] = None) -> VerificationReport:
    """
    Global inequality for w = d(x, boundary)^-beta, v = 1, beta = n - (q/p)(n - p)
    """
    beta = cfg.distance_exponent
    return _global_study(cfg, f'dist:boundary:gamma={-beta!r}', 'const:1.0', threads, {'beta': beta})


# Distance to a set

def run_distance_set(cfg: ExperimentConfig, threads: Optional[int] = None) -> VerificationReport:
    """
    Aikawa constant of E for gamma = -n + (q/p)(n - p) and the local inequality for d(x, E)^gamma on
    every trial cube
    """
    spec = parse_weight_spec(cfg.w)
    if spec.kind != 'dist' or spec.target not in ('point', 'plane'):
        raise ConfigError('w', f'dist:point(..) or dist:plane(..) is required for DIST_E, got {cfg.w!r}')
    n, p, q = cfg.n, cfg.p, cfg.exponent_q
    gamma = -cfg.distance_exponent
    weight_spec = format_weight_spec(dataclasses.replace(spec, gamma=gamma))
    root = cfg.root()
    if spec.target == 'point':
        target = PointSet(spec.points)
        base_points = target.points
    else:
        target = AxisHyperplane(n, spec.axis, spec.offset)
        base_point = list(root.center)
        base_point[spec.axis] = spec.offset
        base_points = [tuple(base_point)]
    radii = list(cfg.radii) or [root.half_side / 2 ** j for j in range(4)]

    def aikawa() -> InstanceResult:
        report = aikawa_check(target, gamma, radii, base_points, cfg.level)
        return instance_result('aikawa', math.isfinite(report['constant']), report['constant'], 1.0,
                               measured=report['constant'], witness=report['witness'], details=report['parameters'])

    def task(spec_u: str, cube: Cube) -> Task:
        def run() -> InstanceResult:
            u = parse_function_spec(spec_u, n)
            run_level = _local_poincare_level(cfg, u, cube, cfg.level, weight_spec, 'const:1.0')
            w = run_level['w']
            k_report = two_weight_constant(w, Weight.constant(cube, cfg.level), p, q, 1.0)
            estimate = admissible_parameter(ainfty_sweep(w))[0]
            return instance_result(f'{spec_u} on {cube}', math.isfinite(run_level['measured']), run_level['lhs'],
                                   run_level['rhs'], measured=run_level['measured'],
                                   details={'K': k_report['K'], 'C_w': estimate['constant'],
                                            'delta_w': estimate['delta']})
        return run

    tasks = [('aikawa', aikawa)]
    tasks += [(f'{spec_u} on {cube}', task(spec_u, cube)) for cube in cfg.trial_cubes() for spec_u in cfg.functions]
    instances = _run(cfg, tasks, threads)
    return _report(cfg, instances, {'gamma': gamma, 'weight': weight_spec, 'set': str(target)})


# p-Laplace supersolution weights

def run_plaplace(cfg: ExperimentConfig, threads: Optional[int] = None) -> VerificationReport:
    """
    Hypotheses (supersolution pairing, half-Harnack, reverse Hoelder) and the single-weight inequality
    int_Q |u - u_Q|^p w <= C l(Q)^p int_Q |grad u|^p w with C uniform across cube sizes
    """
    root, n, p, level = cfg.root(), cfg.n, cfg.p, cfg.level
    domain = DomainRaster.from_spec(cfg.domain, root, level)
    w = build_weight(cfg.w, root, level, domain)
    cubes = cfg.trial_cubes()
    beta = cfg.beta if cfg.beta is not None else (0.5 * n * (p - 1) / (n - p) if p < n else 1.0)
    band = cfg.band if cfg.band is not None else cio.get_uniformity_band()

    def hypotheses() -> InstanceResult:
        bumps = [Bump(cube.center, 2 * cube.half_side) for cube in cubes]
        pairing = supersolution_check(w, p, domain, bumps)
        harnack = half_harnack_check(w, domain, beta, cubes, p)
        holder = [reverse_holder_check(local, local.function.root_cube(), beta + 1)['constant']
                  for local in (w.resample(cube, level) for cube in cubes)]
        passed = not pairing['flagged'] and math.isfinite(harnack['constant']) and all(map(math.isfinite, holder))
        return instance_result('hypotheses', passed, pairing['constant'], -pairing['parameters']['slack'],
                               witness={'flagged': pairing['flagged']},
                               details={'supersolution': pairing['constant'], 'half_harnack': harnack['constant'],
                                        'reverse_holder': holder, 'beta': beta})

    def task(spec: str, cube: Cube) -> Task:
        def run() -> InstanceResult:
            big = cube.dilate(4)
            if not domain.contains_box(big.lower, big.upper):
                raise AdmissibilityError(str(cube), '4Q inside the domain')
            u = parse_function_spec(spec, n)
            local = w.resample(cube, level)
            samples = u.sample(cube, level)
            deviation = samples.samples - grid.average(samples, samples.root_cube())
            lhs = _integral(np.abs(deviation) ** p * local.samples, samples.cell_volume)
            gradient = u.gradient_norm(cube, level).samples
            rhs = cube.side ** p * _integral(gradient ** p * local.samples, samples.cell_volume)
            measured = _ratio(lhs, rhs)
            return instance_result(f'{spec} on {cube}', math.isfinite(measured), lhs, rhs, measured=measured,
                                   details={'side': cube.side})
        return run

    tasks = [('hypotheses', hypotheses)]
    tasks += [(f'{spec} on {cube}', task(spec, cube)) for spec in cfg.functions for cube in cubes]
    instances = _run(cfg, tasks, threads)
    for k, spec in enumerate(cfg.functions):
        measured = [i['measured'] for i in instances[1 + k * len(cubes):1 + (k + 1) * len(cubes)]
                    if i['status'] != 'error']
        spread = _spread(measured)
        status = 'pass' if spread <= band else 'inconclusive'
        instances.append(instance_result(f'uniformity {spec}', status == 'pass', max(measured, default=0.0),
                                         min(measured, default=0.0), measured=spread,
                                         details={'band': band, 'constants': measured}, status=status))
    return _report(cfg, instances, {'beta': beta, 'band': band, 'w': w.label})


# Local-to-global

def run_local_to_global(cfg: ExperimentConfig, threads: Optional[int] = None) -> VerificationReport:
    """
    Chain estimate, local-to-global ratio with its refinement stability, the dilated-sum ratio and
    the measured non-centered maximal bound at p'
    """
    root, p = cfg.root(), cfg.p
    dual = p / (p - 1)
    levels = cfg.refinement_levels(-1)
    stability = cfg.stability if cfg.stability is not None else cio.get_chain_stability()

    def study(u, level: int) -> dict:
        domain = DomainRaster.from_spec(cfg.domain, root, level)
        chains = build_chains(whitney_decompose(domain))
        w = build_weight(cfg.w, root, level, domain)
        samples = u.sample(root, level)
        chain = chain_estimate_check(samples, w, chains)
        result = local_to_global(samples, w, p, chains)
        g = GridFunction(root, level, np.abs(samples.samples - grid.weighted_average(samples, w, samples.root_cube())))
        maximal = noncentered_maximal(g, w, domain)
        inside = domain.bits
        bound = _ratio(_norm(maximal.samples[inside], w.samples[inside], dual, g.cell_volume),
                       _norm(g.samples[inside], w.samples[inside], dual, g.cell_volume))
        return {'level': level, 'lhs': result['lhs'], 'rhs': result['rhs'], 'measured': result['measured'],
                'chain': chain, 'dilated_sum': dilation_sum_check(chains, w, p), 'noncentered': bound,
                'boman': boman_constant(chains), 'provenance': maximal.provenance}

    def task(spec: str) -> Task:
        def run() -> InstanceResult:
            u = parse_function_spec(spec, cfg.n)
            runs = [study(u, level) for level in levels]
            finest = runs[-1]
            return _refined_result(spec, runs, None, stability,
                                   {'chain_estimate': finest['chain']['measured'], 'dilated_sum': finest['dilated_sum'],
                                    'noncentered_bound': finest['noncentered'], 'boman': finest['boman'],
                                    'stride': finest['provenance'].get('stride')})
        return run

    instances = _run(cfg, [(spec, task(spec)) for spec in cfg.functions], threads)
    return _report(cfg, instances, {'levels': levels, 'stability': stability, 'p': p})


RUNNERS = {
    'FS': run_fefferman_stein,
    'TWM': run_two_weight_maximal,
    'LOCAL_P': run_local_poincare,
    'GLOBAL_P': run_global,
    'DIST_E': run_distance_set,
    'DIST_BDY': run_distance_boundary,
    'PLAPLACE': run_plaplace,
    'SPARSE1': run_sparse_oscillation,
    'SPARSE2': run_sparse_levelset,
    'L2G': run_local_to_global,
}


def run_experiment(cfg: ExperimentConfig, threads: Optional[int] = None) -> VerificationReport:
    logger.info(f'Running {cfg.theorem} with config digest {cfg.digest()}')
    try:
        return RUNNERS[cfg.theorem](cfg, threads)
    except ConfigError:
        raise
    except SPException as e:
        log.print_and_log(f'{cfg.theorem}: {e}', log.ERROR)
        return verification_report(cfg.theorem, [_error_result(cfg.theorem, e)], {},
                                   environment(cfg.seed, cfg.level, cfg.digest()))
