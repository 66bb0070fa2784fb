import configparser
import os

from dyadic.sp_exception import ConfigError

config = configparser.ConfigParser()
path_current_directory = os.path.dirname(__file__)
path_config_file = os.path.join(path_current_directory, 'sp.config')
config.read(path_config_file)

THREADS_ENV = 'SPARSE_POINCARE_THREADS'
JSON = '.json'
CSV = '.csv'
LOG = '.log'


# Basic params
def get_output_dir() -> str:
    """
    Gets field from sp.config
    @return: path for reports and dumps produced by the harness
    """
    return config['BASIC_PARAMS']['OUTPUT_DIR']


def get_log_dir() -> str:
    """
    Gets field from sp.config
    @return: path for log files
    """
    return config['BASIC_PARAMS']['LOG_DIR']


def get_max_threads() -> int:
    """
    Gets field from sp.config
    @return: upper bound for the worker count of the experiment queue
    """
    return int(config['BASIC_PARAMS']['MAX_THREADS'])


def get_threads() -> int:
    """
    Gets the worker count, SPARSE_POINCARE_THREADS overrides sp.config
    @return: number of worker threads as int
    """
    raw = os.environ.get(THREADS_ENV, config['BASIC_PARAMS']['THREADS'])
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(THREADS_ENV, f'expected a positive integer, got {raw!r}')
    if not get_max_threads() >= threads >= 1:
        raise ConfigError(THREADS_ENV, f'worker count {threads} not in range (1, {get_max_threads()})')
    return threads


def get_report_format() -> str:
    """
    Gets field from sp.config
    @return: default report format, json or csv
    """
    return config['BASIC_PARAMS']['REPORT_FORMAT']


# Grid params

def get_max_level(n: int) -> int:
    """
    Gets the finest admissible grid level for dimension n
    @param n: dimension, one of 1, 2, 3
    @return: max level as int
    """
    key = {1: 'MAX_LEVEL_1D', 2: 'MAX_LEVEL_2D', 3: 'MAX_LEVEL_3D'}.get(n)
    if key is None:
        raise ConfigError('n', f'dimension {n} is not supported, use 1, 2 or 3')
    return int(config['GRID_PARAMS'][key])


def get_exact_tolerance() -> float:
    """
    Gets field from sp.config
    @return: relative tolerance of exact piecewise-constant identities
    """
    return float(config['GRID_PARAMS']['EXACT_TOLERANCE'])


# Weight params

def get_delta_sweep() -> list[float]:
    """
    Gets field from sp.config
    @return: exponents delta for which A-infinity constants are estimated
    """
    return [float(delta) for delta in config['WEIGHT_PARAMS']['DELTA_SWEEP'].split(',')]


def get_hypothesis_level() -> int:
    """
    Gets field from sp.config
    @return: grid level used on every dilated Whitney cube for hypothesis checks
    """
    return int(config['WEIGHT_PARAMS']['HYPOTHESIS_LEVEL'])


def get_supersolution_slack() -> float:
    """
    Gets field from sp.config
    @return: quadrature slack below zero still accepted by the supersolution check
    """
    return float(config['WEIGHT_PARAMS']['SUPERSOLUTION_SLACK'])


# Maximal params

def get_max_boxes_per_size() -> int:
    """
    Gets field from sp.config
    @return: cap on enumerated cubes per side length for the non-centered maximal function
    """
    return int(config['MAXIMAL_PARAMS']['MAX_BOXES_PER_SIZE'])


# Domain params

def get_c_adj() -> float:
    """
    Gets field from sp.config
    @return: adjacency overlap constant of the chain graph
    """
    return float(config['DOMAIN_PARAMS']['C_ADJ'])


def get_dilation() -> float:
    """
    Gets field from sp.config
    @return: dilation factor of Whitney cubes
    """
    return float(config['DOMAIN_PARAMS']['DILATION'])


def get_dilated_membership() -> str:
    """
    Gets field from sp.config
    @return: 'center' counts the cells whose centers lie in the open Q*, 'fraction' their overlap
    """
    return config['DOMAIN_PARAMS']['DILATED_MEMBERSHIP'].strip()


# Verify params

def get_poincare_stability() -> float:
    """
    Gets field from sp.config
    @return: accepted relative change of a measured Poincare constant under refinement
    """
    return float(config['VERIFY_PARAMS']['POINCARE_STABILITY'])


def get_chain_stability() -> float:
    """
    Gets field from sp.config
    @return: accepted relative change of the local-to-global constant under refinement
    """
    return float(config['VERIFY_PARAMS']['CHAIN_STABILITY'])


def get_uniformity_band() -> float:
    """
    Gets field from sp.config
    @return: accepted relative spread of measured constants across cube sizes
    """
    return float(config['VERIFY_PARAMS']['UNIFORMITY_BAND'])


def get_constant_xatol() -> float:
    """
    Gets field from sp.config
    @return: relative xatol of the bounded minimisation over constants c
    """
    return float(config['VERIFY_PARAMS']['CONSTANT_XATOL'])


def get_cube_poincare_constant(n: int) -> float:
    """
    Gets the (1,1)-Poincare constant on cubes, 'auto' resolves to sqrt(n)/2
    @param n: dimension
    @return: constant as float
    """
    raw = config['VERIFY_PARAMS']['CUBE_POINCARE_CONSTANT'].strip()
    if raw == 'auto':
        return n ** 0.5 / 2
    return float(raw)
