"""探針：追蹤粒子位移與軌跡、固定點壓力、系統能量"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, SimulationAbort
from .kernels import kernel_eval
from .solid import strain_energy

logger = logging.getLogger(__name__)

PROBE_COLUMNS = {
    'displacement': ('ux', 'uy'),
    'trajectory': ('x', 'y'),
    'pressure': ('p',),
    'energy': ('kinetic', 'potential', 'strain', 'total', 'normalized'),
}


@dataclass
class ProbeSeries:
    """單一探針的時間序列；取樣時間嚴格遞增"""

    probe_id: str
    kind: str
    body: str = None
    particle_id: int = None
    point: tuple = None
    times: list = field(default_factory=list)
    values: list = field(default_factory=list)
    reference: dict = None

    @property
    def columns(self):
        return PROBE_COLUMNS[self.kind]

    def append(self, t, row):
        if self.times and not t > self.times[-1]:
            raise ValueError(f'探針 {self.probe_id} 的取樣時間必須嚴格遞增：{t} <= {self.times[-1]}')
        if len(row) != len(self.columns):
            raise ValueError(f'探針 {self.probe_id} 需要 {len(self.columns)} 個數值')
        self.times.append(float(t))
        self.values.append(tuple(float(value) for value in row))

    def as_arrays(self):
        return np.asarray(self.times, dtype=float), np.asarray(self.values, dtype=float).reshape(-1, len(self.columns))

    def __len__(self):
        return len(self.times)


def bind_probes(state, probes):
    """建立案例時把位移與軌跡探針綁定到離指定位置最近的粒子"""
    series = []
    for probe in probes:
        kind = probe['kind']
        if kind not in PROBE_COLUMNS:
            raise ConfigurationError(f'未知的探針種類：{kind}', errors={'probes': [kind]})
        item = ProbeSeries(probe_id=str(probe['id']), kind=kind)
        if kind in ('displacement', 'trajectory'):
            try:
                body = state.body(probe['body'])
            except KeyError:
                raise ConfigurationError(f'探針 {item.probe_id} 指定的物體不存在：{probe["body"]}', errors={'probes': [probe['body']]})
            system = getattr(body, 'system', body)
            distance = np.linalg.norm(system.position - np.asarray(probe['point'], dtype=float), axis=1)
            k = int(np.argmin(distance))
            item.body = system.name
            item.particle_id = int(system.ids[k])
            logger.debug('探針 %s 綁定 %s 粒子 %d（距離 %.3g m）', item.probe_id, item.body, item.particle_id, distance[k])
        elif kind == 'pressure':
            item.point = tuple(float(value) for value in probe['point'])
        series.append(item)
    return series


def _tracked_index(state, probe, t):
    body = state.body(probe.body)
    system = getattr(body, 'system', body)
    index = system.id_to_index.get(probe.particle_id)
    if index is None:
        raise SimulationAbort(
            f'探針 {probe.probe_id} 追蹤的粒子 {probe.particle_id} 不存在', step=state.clock.advection_index, time=t,
        )
    return body, system, index


def sample_displacement(state, probe, t):
    body, system, k = _tracked_index(state, probe, t)
    if hasattr(body, 'state'):
        return tuple(body.state.displacement[k])
    return tuple(system.position[k] - state.initial_positions[system.name][k])


def sample_trajectory(state, probe, t):
    _, system, k = _tracked_index(state, probe, t)
    return tuple(system.position[k])


def interpolate_pressure(fluid, point, spec, domain=None):
    """Shepard 正規化的核函數插值 Σ p_j W_j V_j / Σ W_j V_j；支撐域內沒有流體時回傳 0"""
    offset = np.asarray(point, dtype=float) - fluid.position
    if domain is not None:
        offset = domain.minimum_image(offset)
    r = np.linalg.norm(offset, axis=1)
    inside = r < spec.cutoff
    if not inside.any():
        return 0.0
    w, _ = kernel_eval(r[inside], spec)
    weights = w * fluid.current_volume()[inside]
    total = weights.sum()
    if total <= 0.0:
        return 0.0
    return float(np.dot(weights, fluid.pressure[inside]) / total)


def energy_components(state):
    """動能、相對初始位置的位能變化與應變能；剛性牆不計入"""
    fluid = state.fluid
    kinetic = 0.5 * float(np.sum(fluid.mass * np.einsum('na,na->n', fluid.velocity, fluid.velocity)))
    potential = -float(np.sum(fluid.mass * ((fluid.position - state.initial_positions[fluid.name]) @ state.gravity)))
    strain = 0.0
    for body in state.solids:
        if not body.elastic:
            continue
        mass = body.system.mass
        velocity = body.state.velocity
        kinetic += 0.5 * float(np.sum(mass * np.einsum('na,na->n', velocity, velocity)))
        potential -= float(np.sum(mass * (body.state.displacement @ state.structure_gravity)))
        strain += strain_energy(body.state, body.reference)
    return kinetic, potential, strain


def absolute_potential(state):
    """以 y = 0 為基準的重力位能，作為正規化尺度"""
    value = -float(np.sum(state.fluid.mass * (state.fluid.position @ state.gravity)))
    for body in state.solids:
        if body.elastic:
            value -= float(np.sum(body.system.mass * (body.system.position @ state.structure_gravity)))
    return value


def sample_energy(state, probe, t):
    """(E - E_ref) / |E_pot,ref|，E_ref 取第一次取樣"""
    kinetic, potential, strain = energy_components(state)
    total = kinetic + potential + strain
    if probe.reference is None:
        scale = abs(absolute_potential(state)) or abs(total)
        probe.reference = {'total': total, 'scale': scale}
    scale = probe.reference['scale']
    normalized = (total - probe.reference['total']) / scale if scale > 0.0 else 0.0
    return kinetic, potential, strain, total, normalized


SAMPLERS = {
    'displacement': sample_displacement,
    'trajectory': sample_trajectory,
    'energy': sample_energy,
}


def record_probes(state, series, t):
    """每個探針在時間 t 取樣一次並附加到序列"""
    for probe in series:
        if probe.kind == 'pressure':
            row = (interpolate_pressure(state.fluid, probe.point, state.fluid_spec, state.domain),)
        else:
            row = SAMPLERS[probe.kind](state, probe, t)
        probe.append(t, row)
    return series
