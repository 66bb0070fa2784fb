"""
JSON records for grid functions, maximal fields, sparse families, weights and Whitney/chain
decompositions. Sample arrays travel as base64 of little-endian float64 in row-major order, so grid
functions round-trip exactly.
"""
import base64
import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from dyadic.grid import Cube, DyadicCube, GridFunction
from dyadic.maximal import MaximalField
from dyadic.sp_exception import ConfigError
from dyadic.sparse import SparseFamily, SparseMember

FORMAT_VERSION = 1


def json_safe(obj):
    """
    Converts dataclasses, numpy scalars and arrays, cubes and paths into plain JSON types;
    non-finite floats become strings
    """
    if isinstance(obj, DyadicCube):
        return str(obj)
    if isinstance(obj, Cube):
        return encode_cube(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = dataclasses.asdict(obj)
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else repr(value)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dump_json(record: dict, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8') as handle:
        json.dump(json_safe(record), handle, indent=2, sort_keys=True)
        handle.write('\n')


def load_json(path) -> dict:
    try:
        with Path(path).open('r', encoding='utf-8') as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(str(path), f'unreadable JSON record ({e})')


def _require(record: dict, kind: str):
    if not isinstance(record, dict) or record.get('format') != kind:
        raise ConfigError('format', f'expected a {kind} record, got {record.get("format") if isinstance(record, dict) else record!r}')
    if record.get('version') != FORMAT_VERSION:
        raise ConfigError('version', f'unsupported {kind} record version {record.get("version")!r}')


# Cubes

def encode_cube(cube: Cube) -> dict:
    return {'center': list(cube.center), 'half_side': cube.half_side}


def decode_cube(record: dict) -> Cube:
    return Cube(tuple(record['center']), record['half_side'])


# Grid functions

def encode_grid_function(f: GridFunction) -> dict:
    payload = np.ascontiguousarray(f.samples, dtype='<f8').tobytes()
    return {'format': 'grid_function', 'version': FORMAT_VERSION, 'n': f.n, 'level': f.level,
            'root': encode_cube(f.root), 'dtype': '<f8', 'order': 'C',
            'samples': base64.b64encode(payload).decode('ascii')}


def decode_grid_function(record: dict) -> GridFunction:
    _require(record, 'grid_function')
    root = decode_cube(record['root'])
    if root.n != record['n']:
        raise ConfigError('n', f'root of dimension {root.n} in a record for n={record["n"]}')
    samples = np.frombuffer(base64.b64decode(record['samples']), dtype='<f8').astype(np.float64)
    return GridFunction(root, record['level'], samples)


def dump_grid_function(f: GridFunction, path):
    dump_json(encode_grid_function(f), path)


def load_grid_function(path) -> GridFunction:
    return decode_grid_function(load_json(path))


# Maximal fields

def encode_maximal_field(field: MaximalField) -> dict:
    return {'format': 'maximal_field', 'version': FORMAT_VERSION, 'kind': field.kind,
            'parameters': json_safe(field.parameters), 'provenance': json_safe(field.provenance),
            'field': encode_grid_function(field.field)}


def decode_maximal_field(record: dict) -> MaximalField:
    _require(record, 'maximal_field')
    return MaximalField(record['kind'], decode_grid_function(record['field']), dict(record['parameters']),
                        dict(record['provenance']))


# Run-length encoded cell sets

def encode_runs(bits: np.ndarray) -> list[list[int]]:
    """
    [start, length] runs of set cells in row-major order
    """
    flat = np.concatenate([[False], np.asarray(bits, dtype=bool).ravel(), [False]])
    edges = np.flatnonzero(flat[1:] != flat[:-1])
    return [[int(start), int(stop - start)] for start, stop in zip(edges[::2], edges[1::2])]


def decode_runs(runs: list, shape: tuple) -> np.ndarray:
    flat = np.zeros(math.prod(shape), dtype=bool)
    for start, length in runs:
        flat[start:start + length] = True
    return flat.reshape(shape)


# Sparse families

def encode_sparse_family(family: SparseFamily) -> dict:
    members = []
    for i, member in enumerate(family.members):
        members.append({'path': list(member.cube.path), 'parent': member.parent, 'kappa': member.kappa,
                        'level': member.level, 'value': member.value,
                        'carved': encode_runs(family.carved_mask(i).bits)})
    return {'format': 'sparse_family', 'version': FORMAT_VERSION, 'variant': family.variant,
            'root': encode_cube(family.root), 'level': family.level, 'q0': list(family.q0.path),
            'parameters': json_safe(family.parameters), 'eta': family.eta,
            'carved_ratios': None if family.carved_ratios is None else family.carved_ratios.tolist(),
            'members': members}


def decode_sparse_family(record: dict) -> SparseFamily:
    """
    Rebuilds a family and checks every stored carved set against the one implied by the cubes
    """
    _require(record, 'sparse_family')
    root = decode_cube(record['root'])
    level = record['level']
    members = [SparseMember(DyadicCube(root, tuple(entry['path'])), entry['parent'], entry['kappa'],
                            entry['level'], entry['value']) for entry in record['members']]
    ratios = record.get('carved_ratios')
    family = SparseFamily(record['variant'], root, level, DyadicCube(root, tuple(record['q0'])), members,
                          dict(record['parameters']), record.get('eta'),
                          None if ratios is None else np.array(ratios, dtype=np.float64))
    shape = (1 << level,) * root.n
    for i, entry in enumerate(record['members']):
        if not np.array_equal(decode_runs(entry['carved'], shape), family.carved_mask(i).bits):
            raise ConfigError('carved', f'stored carved set of {members[i].cube} does not match the family')
    return family


def dump_sparse_family(family: SparseFamily, path):
    dump_json(encode_sparse_family(family), path)


def load_sparse_family(path) -> SparseFamily:
    return decode_sparse_family(load_json(path))


# Weights and decompositions, dump only

def encode_weight(weight) -> dict:
    return {'format': 'weight', 'version': FORMAT_VERSION, 'label': weight.label,
            'min': float(weight.samples.min()), 'max': float(weight.samples.max()),
            'function': encode_grid_function(weight.function)}


def encode_whitney(whitney) -> dict:
    low, high = whitney.comparability()
    cubes = [{'path': list(cube.path), 'lower': cube.lower, 'side': cube.side, 'distance': distance, 'layer': layer}
             for cube, distance, layer in zip(whitney.cubes, whitney.distances, whitney.layer)]
    return {'format': 'whitney', 'version': FORMAT_VERSION, 'domain': str(whitney.domain),
            'root': encode_cube(whitney.domain.root), 'level': whitney.domain.level,
            'dilation': whitney.dilation, 'membership': whitney.membership, 'measure': whitney.measure(),
            'domain_measure': whitney.domain.measure,
            'comparability': [low, high], 'overlap_count': whitney.overlap_count(), 'cubes': cubes}


def encode_chains(chains) -> dict:
    record = encode_whitney(chains.whitney)
    record.update({'format': 'chains', 'c_adj': chains.c_adj, 'central': chains.central,
                   'parents': chains.parents, 'order': chains.order, 'edges': chains.edges,
                   'boman': chains.boman, 'boman_ratios': chains.boman_ratios,
                   'chain_lengths': chains.chain_lengths()})
    return record
