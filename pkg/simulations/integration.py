"""雙準則時間積分：advection 步包覆流體 acoustic 步，固體在其中再細分子步"""

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from .correction import compute_correction_matrices, position_regularization
from .coupling import (
    CouplingForces, InterfaceState, check_interface_normals, pressure_coupling, time_average_solid_kinematics,
)
from .diagnostics import DegeneracyCounters
from .exceptions import ConfigurationError, TimeStepError
from .fluid import continuity_rate, eos_pressure, momentum_rate, riemann_pairs
from .kernels import build_cross_pairs, build_neighbor_lists
from .solid import (
    KinematicsHistory, apply_constraints_and_damping, solid_momentum_rate, surface_normals, update_stress,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepSizes:
    dt_adv: float
    dt_ac: float
    dt_s: float
    fixed_dt: float = None

    def __post_init__(self):
        for name in ('dt_adv', 'dt_ac', 'dt_s'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise TimeStepError(f'{name} 必須為正的有限值：{value}')

    @property
    def acoustic_steps(self):
        return max(1, math.ceil(self.dt_adv / self.dt_ac - 1e-9))


@dataclass
class SimClock:
    t: float = 0.0
    advection_index: int = 0
    acoustic_index: int = 0
    solid_substeps: int = 0
    wall_seconds: float = 0.0

    def advance(self, dt):
        if dt < 0.0:
            raise TimeStepError(f'時間不可倒退：dt={dt}', step=self.advection_index, time=self.t)
        self.t += dt


@dataclass(frozen=True)
class StepPolicy:
    cfl_advection: float = 0.25
    cfl_acoustic: float = 0.6
    fixed_dt: float = None


@dataclass
class SolidBody:
    """彈性結構或剛性牆（全部固定端、無參考構形）"""

    system: object
    state: object
    positions0: np.ndarray
    reference: object = None
    material: object = None
    damping: object = None
    motion: object = None
    history: KinematicsHistory = field(default_factory=KinematicsHistory)
    averaged_velocity: np.ndarray = None
    averaged_acceleration: np.ndarray = None
    coupling_accel: np.ndarray = None
    normals0: np.ndarray = None

    def __post_init__(self):
        n = self.system.n
        if self.normals0 is None:
            self.normals0 = np.array(self.state.normals)
        if self.coupling_accel is None:
            self.coupling_accel = np.zeros((n, 2))
        if self.state.acceleration is None:
            self.state.acceleration = np.zeros((n, 2))

    @property
    def name(self):
        return self.system.name

    @property
    def elastic(self):
        return self.reference is not None

    @property
    def mass(self):
        return self.system.mass

    def prescribed(self, t):
        """運動腳本在時間 t 給定的 (位移, 速度, 加速度)；沒有腳本時皆為 0"""
        n = self.system.n
        if self.motion is None:
            return np.zeros((n, 2)), np.zeros((n, 2)), np.zeros((n, 2))
        return (
            self.motion.displacement(self.positions0, t),
            self.motion.velocity(self.positions0, t),
            self.motion.acceleration(self.positions0, t),
        )

    def move_rigid(self, t):
        """剛性牆依腳本移動，法向量隨之旋轉"""
        displacement, velocity, acceleration = self.prescribed(t)
        self.state.displacement[:] = displacement
        self.state.velocity[:] = velocity
        self.state.acceleration = acceleration
        if self.motion is not None:
            self.state.normals = self.normals0 @ self.motion.rotation(t).T
        self.sync()

    def sync(self):
        self.system.position = self.positions0 + self.state.displacement
        self.system.velocity = self.state.velocity
        if self.elastic:
            self.system.density = self.state.density

    def interface(self, counters=None):
        """供耦合使用的固體側資料；平均值尚未建立時使用瞬時值

        彈性或有運動腳本的物體改用瞬時值時記入 empty_history。
        """
        if self.averaged_velocity is None and counters is not None and (self.elastic or self.motion is not None):
            counters['empty_history'] += 1
        velocity = self.state.velocity if self.averaged_velocity is None else self.averaged_velocity
        acceleration = self.state.acceleration if self.averaged_acceleration is None else self.averaged_acceleration
        if self.elastic:
            volume = self.system.mass / self.state.density
        else:
            volume = self.system.volume
        return InterfaceState(
            averaged_velocity=velocity,
            averaged_acceleration=acceleration,
            normals=self.state.normals,
            volume=volume,
            mass=self.system.mass,
        )


@dataclass
class SimulationState:
    """一個案例的完整模擬狀態"""

    name: str
    fluid: object
    solids: list
    eos: object
    fluid_spec: object
    solid_spec: object
    gravity: np.ndarray
    nu: float
    policy: StepPolicy
    regularization: object
    correction_enabled: bool = True
    wkgc_alpha: float = 0.5
    smoothness_indicator: str = 'determinant'
    domain: object = None
    inflow: object = None
    clock: SimClock = field(default_factory=SimClock)
    counters: DegeneracyCounters = field(default_factory=DegeneracyCounters)
    fluid_neighbors: object = None
    cross_pairs: list = field(default_factory=list)
    correction: object = None
    drho_dt: np.ndarray = None
    last_steps: StepSizes = None
    max_regularization: float = 0.0
    structure_gravity: np.ndarray = None
    initial_positions: dict = field(default_factory=dict)
    workers: int = None

    def __post_init__(self):
        if self.structure_gravity is None:
            self.structure_gravity = np.asarray(self.gravity, dtype=float)

    @property
    def particle_count(self):
        return self.fluid.n + sum(body.system.n for body in self.solids)

    @property
    def total_mass(self):
        return self.fluid.total_mass + sum(body.system.total_mass for body in self.solids)

    def body(self, name):
        if name == self.fluid.name:
            return self.fluid
        for solid in self.solids:
            if solid.name == name:
                return solid
        raise KeyError(name)


def compute_time_steps(fluid, solids, eos, nu, fluid_h, solid_h, policy, step=None, time=None):
    """dt_adv = C_adv·min(h^F/max(|v|max, c0/10), (h^F)²/ν)、dt_ac = C_ac·h^F/(c0+|v|max)、dt_s = C_ac·h^S/(c^S+|v^S|max)"""
    v_max = float(np.max(np.linalg.norm(fluid.velocity, axis=1))) if fluid.n else 0.0
    reference_speed = max(v_max, eos.c0 / 10.0)
    bounds = [fluid_h / reference_speed]
    if nu > 0.0:
        bounds.append(fluid_h ** 2 / nu)
    dt_adv = policy.cfl_advection * min(bounds)
    dt_ac = min(policy.cfl_acoustic * fluid_h / (eos.c0 + v_max), dt_adv)

    dt_s = dt_ac
    for body in solids:
        if not body.elastic:
            continue
        vs_max = float(np.max(np.linalg.norm(body.state.velocity, axis=1)))
        dt_s = min(dt_s, policy.cfl_acoustic * solid_h / (body.material.cS + vs_max))

    if policy.fixed_dt is not None:
        multiple = max(1, math.floor(dt_adv / policy.fixed_dt))
        dt_ac = policy.fixed_dt
        dt_adv = multiple * policy.fixed_dt
        dt_s = min(dt_s, dt_ac)

    for name, value in (('dt_adv', dt_adv), ('dt_ac', dt_ac), ('dt_s', dt_s)):
        if not (math.isfinite(value) and value > 0.0):
            raise TimeStepError(f'{name} 計算結果非正值：{value}（|v|max={v_max:.3e}）', step=step, time=time)
    return StepSizes(dt_adv=dt_adv, dt_ac=dt_ac, dt_s=dt_s, fixed_dt=policy.fixed_dt)


def refresh_configuration(state):
    """重建流體與跨物體鄰居列表，並計算本 advection 步的修正矩陣"""
    stamp = state.clock.advection_index
    fluid = state.fluid
    if state.domain is not None:
        fluid.position = state.domain.wrap(fluid.position)
    state.fluid_neighbors = build_neighbor_lists(fluid, state.fluid_spec, grid=state.domain, stamp=stamp, workers=state.workers)
    solid_h = state.solid_spec.h if state.solid_spec is not None else None
    state.cross_pairs = []
    for body in state.solids:
        grid = state.domain if state.domain is not None and any(state.domain.periodic) else None
        cross = build_cross_pairs(fluid, body.system, state.fluid_spec, solid_h=solid_h, grid=grid, stamp=stamp, workers=state.workers)
        state.cross_pairs.append(cross)
    if state.correction_enabled:
        contact = [(cross, body.interface().volume) for cross, body in zip(state.cross_pairs, state.solids)]
        state.correction = compute_correction_matrices(
            fluid, state.fluid_neighbors, alpha=state.wkgc_alpha, indicator=state.smoothness_indicator,
            contact=contact, counters=state.counters, stamp=stamp,
        )
    else:
        state.correction = None


def coupling_step(state):
    """所有結構對流體的作用；每個 acoustic 步計算一次，並凍結在固體子步中"""
    fluid = state.fluid
    accel = np.zeros((fluid.n, 2))
    drho = np.zeros(fluid.n)
    for body, cross in zip(state.solids, state.cross_pairs):
        interface = body.interface(state.counters)
        check_interface_normals(interface, cross, body.name)
        forces = pressure_coupling(fluid, cross, state.eos, state.nu, interface, state.gravity, state.correction)
        accel += forces.fluid_accel
        drho += forces.drho_dt
        body.coupling_accel = forces.solid_accel
    return CouplingForces(fluid_accel=accel, solid_accel=None, pair_forces=None, drho_dt=drho)


def advance_solid_substeps(body, dt_ac, dt_s, gravity, t, step=None):
    """以 ceil(dt_ac/dt_s) 個等長子步推進彈性結構（kick-drift-kick），並記錄運動歷史"""
    if not body.elastic:
        raise ConfigurationError(f'{body.name} 不是彈性結構')
    n_sub = max(1, math.ceil(dt_ac / dt_s - 1e-9))
    h = dt_ac / n_sub
    state, reference, material = body.state, body.reference, body.material
    history = KinematicsHistory()
    rate = solid_momentum_rate(state, reference, material, gravity, body.coupling_accel)
    for k in range(n_sub):
        t_next = t + (k + 1) * h
        state.velocity += 0.5 * h * rate
        state.displacement += h * state.velocity
        displacement, velocity, _ = body.prescribed(t_next)
        state.displacement[state.clamped] = displacement[state.clamped]
        update_stress(state, reference, material, step=step, time=t_next, ids=body.system.ids)
        rate = solid_momentum_rate(state, reference, material, gravity, body.coupling_accel)
        state.velocity += 0.5 * h * rate
        rate = apply_constraints_and_damping(state, rate, body.damping, h, prescribed=(displacement, velocity))
        state.acceleration = rate
        history.append(state.velocity, rate, h)
    body.sync()
    return history, n_sub


def _fluid_first_half(state, dt, coupling):
    fluid = state.fluid
    fluid.density += 0.5 * dt * state.drho_dt
    fluid.position += 0.5 * dt * fluid.velocity
    fluid.pressure = eos_pressure(fluid.density, state.eos)
    riemann = riemann_pairs(fluid, state.fluid_neighbors, state.eos)
    accel, _ = momentum_rate(
        fluid, state.fluid_neighbors, riemann, state.correction, state.nu, state.gravity, state.eos,
        coupling_accel=coupling.fluid_accel, counters=state.counters,
    )
    fluid.velocity += dt * accel
    if state.inflow is not None:
        state.inflow.apply(fluid, state.clock.t + dt)


def _fluid_second_half(state, dt, coupling):
    fluid = state.fluid
    fluid.position += 0.5 * dt * fluid.velocity
    riemann = riemann_pairs(fluid, state.fluid_neighbors, state.eos)
    state.drho_dt = continuity_rate(fluid, state.fluid_neighbors, riemann) + coupling.drho_dt
    fluid.density += 0.5 * dt * state.drho_dt
    fluid.pressure = eos_pressure(fluid.density, state.eos)


def acoustic_step(state, dt, steps):
    """一個流體 acoustic 步，並在其中推進所有結構"""
    t = state.clock.t
    coupling = coupling_step(state)
    _fluid_first_half(state, dt, coupling)
    _fluid_second_half(state, dt, coupling)

    for body in state.solids:
        if body.elastic:
            history, n_sub = advance_solid_substeps(body, dt, steps.dt_s, state.structure_gravity, t, step=state.clock.advection_index)
            state.clock.solid_substeps += n_sub
            surface_normals(body.state, body.reference, state.counters)
            instantaneous = (body.state.velocity, body.state.acceleration)
            body.averaged_velocity, body.averaged_acceleration = time_average_solid_kinematics(
                history, instantaneous, state.counters,
            )
        elif body.motion is not None:
            body.move_rigid(t + dt)
            body.averaged_velocity = body.state.velocity.copy()
            body.averaged_acceleration = body.state.acceleration.copy()
    state.clock.advance(dt)
    state.clock.acoustic_index += 1


def advance_advection_step(state, max_dt=None):
    """一個 advection 步：重建鄰居與修正矩陣、執行 acoustic 步、最後做一次位置正規化"""
    started = time.perf_counter()
    clock = state.clock
    steps = compute_time_steps(
        state.fluid, state.solids, state.eos, state.nu, state.fluid_spec.h,
        state.solid_spec.h if state.solid_spec is not None else state.fluid_spec.h,
        state.policy, step=clock.advection_index, time=clock.t,
    )
    dt_adv = steps.dt_adv if max_dt is None else min(steps.dt_adv, max_dt)
    if dt_adv <= 0.0:
        raise TimeStepError(f'advection 步長非正值：{dt_adv}', step=clock.advection_index, time=clock.t)
    state.last_steps = steps

    refresh_configuration(state)
    if state.drho_dt is None:
        state.drho_dt = np.zeros(state.fluid.n)

    t_start = clock.t
    n_ac = max(1, math.ceil(dt_adv / steps.dt_ac - 1e-9))
    for k in range(n_ac):
        # 最後一步截短，使 acoustic 步長總和等於 dt_adv
        dt = steps.dt_ac if k < n_ac - 1 else dt_adv - (n_ac - 1) * steps.dt_ac
        acoustic_step(state, dt, steps)
    clock.t = t_start + dt_adv

    if state.regularization is not None and state.regularization.enabled:
        contact = [(cross, body.interface().volume) for cross, body in zip(state.cross_pairs, state.solids)]
        shift = position_regularization(state.fluid, state.fluid_neighbors, state.correction, state.regularization, contact)
        state.fluid.position += shift
        state.max_regularization = float(np.max(np.linalg.norm(shift, axis=1))) if state.fluid.n else 0.0
    if state.domain is not None:
        state.fluid.position = state.domain.wrap(state.fluid.position)

    clock.advection_index += 1
    clock.wall_seconds += time.perf_counter() - started
    log_every = getattr(settings, 'SPH_FSI_LOG_EVERY', 50)
    if log_every and clock.advection_index % log_every == 0:
        logger.info(
            '%s: step=%d t=%.6g dt_adv=%.3e dt_ac=%.3e dt_s=%.3e acoustic=%d counters=%s',
            state.name, clock.advection_index, clock.t, dt_adv, steps.dt_ac, steps.dt_s, n_ac,
            state.counters.as_dict(),
        )
    return state
