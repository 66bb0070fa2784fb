"""
Report assembly and the JSON/CSV writers
"""
import csv
import io
import json
import platform
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

import dyadic
from dyadic.codec import dump_json, json_safe, load_json
from dyadic.sp_exception import ConfigError
from dyadic.structs import VerificationReport

PACKAGE = 'sparse-poincare'
CSV_COLUMNS = ('theorem', 'label', 'status', 'passed', 'lhs', 'rhs', 'constant', 'measured', 'witness')


def environment(seed: int, level: int, config_digest: str) -> dict:
    return {'package': PACKAGE, 'version': dyadic.__version__, 'python': platform.python_version(),
            'numpy': np.__version__, 'seed': seed, 'level': level, 'config_digest': config_digest}


def overall_passed(reports: Sequence[VerificationReport]) -> bool:
    return all(report['passed'] for report in reports)


def failures(reports: Sequence[VerificationReport]) -> list[str]:
    """
    One line per failed instance naming the theorem id and the witness
    """
    lines = []
    for report in reports:
        for instance in report['instances']:
            if not instance['passed']:
                witness = json.dumps(json_safe(instance['witness']), sort_keys=True)
                lines.append(f'{report["theorem"]} {instance["label"]}: {instance["status"]}, witness {witness}')
    return lines


def write_json(reports: Sequence[VerificationReport], path):
    dump_json({'reports': list(reports), 'passed': overall_passed(reports)}, path)


def load_reports(path) -> list[VerificationReport]:
    record = load_json(path)
    if isinstance(record, dict) and 'reports' in record:
        return record['reports']
    if isinstance(record, dict) and 'theorem' in record:
        return [record]
    raise ConfigError(str(path), 'not a verification report')


def csv_rows(reports: Sequence[VerificationReport]) -> list[list]:
    rows = []
    for report in reports:
        for instance in json_safe(report['instances']):
            rows.append([report['theorem'], instance['label'], instance['status'], instance['passed'],
                         instance['lhs'], instance['rhs'], instance['constant'], instance['measured'],
                         json.dumps(instance['witness'], sort_keys=True)])
    return rows


def format_csv(reports: Sequence[VerificationReport]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    writer.writerows(csv_rows(reports))
    return buffer.getvalue()


def write_csv(reports: Sequence[VerificationReport], path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_csv(reports), encoding='utf-8')


def write_report(reports: Sequence[VerificationReport], path, report_format: Optional[str] = None):
    report_format = report_format or ('csv' if str(path).endswith('.csv') else 'json')
    if report_format == 'csv':
        write_csv(reports, path)
    elif report_format == 'json':
        write_json(reports, path)
    else:
        raise ConfigError('format', f'expected json or csv, got {report_format!r}')
