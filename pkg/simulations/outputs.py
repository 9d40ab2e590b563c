"""輸出：探針 CSV、粒子快照 CSV 與執行 manifest"""

import csv
import json
import logging
import platform
from pathlib import Path

import django
import numpy as np

from .exceptions import OutputError

logger = logging.getLogger(__name__)

SNAPSHOT_HEADER = ('id', 'body', 'x', 'y', 'vx', 'vy', 'rho', 'p', 'vonmises')


def format_value(value):
    """9 位有效數字"""
    return f'{float(value):.9g}'


def ensure_directory(directory):
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as error:
        raise OutputError(f'無法建立輸出目錄 {directory}：{error}')
    return directory


def _write_rows(path, header, rows):
    try:
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as error:
        raise OutputError(f'無法寫入 {path}：{error}')
    return path


def probe_filename(probe_id):
    return f'probe_{probe_id}.csv'


def write_probe_csv(series, directory):
    """time,<欄位...>，每個探針一個檔案"""
    directory = ensure_directory(directory)
    rows = (
        [format_value(t)] + [format_value(value) for value in row]
        for t, row in zip(series.times, series.values)
    )
    return _write_rows(directory / probe_filename(series.probe_id), ('time',) + tuple(series.columns), rows)


def snapshot_filename(step):
    return f'snap_{step:08d}.csv'


def _solid_pressure(body):
    """-½ tr(σ)，σ = P Fᵀ / J"""
    F = body.state.F
    J = F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]
    cauchy = np.einsum('nab,ncb->nac', body.state.P, F) / J[:, None, None]
    return -0.5 * (cauchy[:, 0, 0] + cauchy[:, 1, 1])


def snapshot_rows(state):
    fluid = state.fluid
    for k in range(fluid.n):
        yield [
            str(int(fluid.ids[k])), fluid.name,
            format_value(fluid.position[k, 0]), format_value(fluid.position[k, 1]),
            format_value(fluid.velocity[k, 0]), format_value(fluid.velocity[k, 1]),
            format_value(fluid.density[k]), format_value(fluid.pressure[k]), '',
        ]
    for body in state.solids:
        system = body.system
        if body.elastic:
            pressure = _solid_pressure(body)
            density = body.state.density
        else:
            pressure = np.zeros(system.n)
            density = system.density
        for k in range(system.n):
            yield [
                str(int(system.ids[k])), system.name,
                format_value(system.position[k, 0]), format_value(system.position[k, 1]),
                format_value(system.velocity[k, 0]), format_value(system.velocity[k, 1]),
                format_value(density[k]), format_value(pressure[k]),
                format_value(body.state.von_mises[k]) if body.elastic else '',
            ]


def write_snapshot(state, directory):
    directory = ensure_directory(directory)
    path = directory / snapshot_filename(state.clock.advection_index)
    _write_rows(path, SNAPSHOT_HEADER, snapshot_rows(state))
    logger.debug('快照 %s（t=%.6g）', path.name, state.clock.t)
    return path


def manifest_lines(config, state, status, extra=None):
    """key=value 行，順序固定"""
    clock = state.clock
    lines = [
        ('case', config.name),
        ('layout', config.layout),
        ('status', status),
        ('resolution', config.resolution),
        ('dp_solid', format_value(config.dp_solid)),
        ('dp_fluid', format_value(config.dp_fluid)),
        ('h_solid', format_value(config.solid_h)),
        ('h_fluid', format_value(config.fluid_h)),
        ('correction', config.correction),
        ('wkgc_alpha', format_value(config.wkgc_alpha)),
        ('smoothness_indicator', config.smoothness_indicator),
        ('transport_velocity', 'on' if config.regularization_enabled else 'off'),
        ('transport_eta', format_value(config.transport_eta)),
        ('damping', format_value(config.damping)),
        ('dt_policy', 'fixed' if config.fixed_dt is not None else 'cfl'),
        ('fixed_dt', format_value(config.fixed_dt) if config.fixed_dt is not None else ''),
        ('cfl_advection', format_value(config.cfl_advection)),
        ('cfl_acoustic', format_value(config.cfl_acoustic)),
        ('end_time', format_value(config.end_time)),
        ('time', format_value(clock.t)),
        ('advection_steps', clock.advection_index),
        ('acoustic_steps', clock.acoustic_index),
        ('solid_substeps', clock.solid_substeps),
        ('particles', state.particle_count),
        ('total_mass', format_value(state.total_mass)),
    ]
    lines += [(f'counter.{name}', value) for name, value in state.counters.as_dict().items()]
    lines += list((extra or {}).items())
    lines += [
        ('wall_time', f'{clock.wall_seconds:.3f}'),
        ('python', platform.python_version()),
        ('numpy', np.__version__),
        ('django', django.get_version()),
        ('config', json.dumps(config.as_dict(), sort_keys=True, ensure_ascii=False)),
    ]
    return [f'{key}={value}' for key, value in lines]


def write_manifest(config, state, directory, status='completed', extra=None):
    directory = ensure_directory(directory)
    path = directory / 'manifest.txt'
    try:
        path.write_text('\n'.join(manifest_lines(config, state, status, extra)) + '\n', encoding='utf-8')
    except OSError as error:
        raise OutputError(f'無法寫入 {path}：{error}')
    return path


def write_outputs(config, state, series, directory, status='completed', extra=None):
    """寫出所有探針序列與 manifest；寫入失敗時在 manifest 標記未完成的檔案"""
    directory = ensure_directory(directory)
    written, partial = [], []
    for probe in series:
        try:
            written.append(write_probe_csv(probe, directory))
        except OutputError as error:
            logger.error('%s', error)
            partial.append(probe_filename(probe.probe_id))
    extra = dict(extra or {})
    extra['partial_files'] = ','.join(partial)
    write_manifest(config, state, directory, status='failed' if partial else status, extra=extra)
    if partial:
        raise OutputError(f'部分探針檔寫入失敗：{", ".join(partial)}')
    return written
