"""驗證套件：一致性、守恆、Riemann 解與固體 patch test

verify 指令與測試共用這些函式；每個套件回傳 CheckResult 清單。
"""

import logging
from dataclasses import dataclass

import numpy as np

from .cases import tank_walls, wall_body
from .correction import RegularizationParams, compute_correction_matrices, rkgc_gradient
from .coupling import pressure_coupling
from .fluid import EosParams, PointState, eos_pressure, momentum_rate, pressure_pair_forces, riemann_interface, riemann_pairs
from .integration import SimulationState, SolidBody, StepPolicy, advance_advection_step, advance_solid_substeps
from .kernels import CellGrid, KernelSpec, build_cross_pairs, build_neighbor_lists, pair_sum
from .metrics import extract_oscillation_metrics
from .particles import BodyKind, Rectangle, lattice_fill
from .solid import (
    DampingConfig, SolidState, build_reference, deformation_gradient, internal_pair_forces, material_constants,
    stress_pipeline, update_stress,
)

logger = logging.getLogger(__name__)

LINEAR_FIELD_GRADIENT = np.array([2.0, 3.0])


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ''

    def __str__(self):
        mark = 'PASS' if self.passed else 'FAIL'
        return f'[{mark}] {self.suite}.{self.name}: {self.value:.3e} (tolerance {self.tolerance:.1e}) {self.detail}'.rstrip()


def _at_most(suite, name, value, tolerance, detail=''):
    value = float(value)
    return CheckResult(suite, name, bool(np.isfinite(value) and value <= tolerance), value, tolerance, detail)


def _at_least(suite, name, value, tolerance, detail=''):
    value = float(value)
    return CheckResult(suite, name, bool(np.isfinite(value) and value >= tolerance), value, tolerance, detail)


def periodic_lattice(n=50, dp=0.02, h_factor=1.3, jitter=0.0, seed=0, density=1.0, workers=None):
    """n×n 週期格點；jitter 為相對 dp 的隨機擾動幅度"""
    spec = KernelSpec(h=h_factor * dp)
    system = lattice_fill(Rectangle(0.0, 0.0, n * dp, n * dp), dp, name='lattice', body_kind=BodyKind.FLUID, density=density)
    if jitter:
        rng = np.random.default_rng(seed)
        system.position += rng.uniform(-jitter, jitter, size=system.position.shape) * dp
    grid = CellGrid.box((0.0, 0.0), (n * dp, n * dp), spec.cutoff)
    system.position = grid.wrap(system.position)
    neighbors = build_neighbor_lists(system, spec, grid=grid, workers=workers)
    return system, spec, grid, neighbors


def linear_field_gradient_error(system, neighbors, correction):
    """ψ = 2x + 3y 的梯度誤差；鄰居值以鏡像位置計算"""
    psi = system.position @ LINEAR_FIELD_GRADIENT
    image = (system.position[neighbors.i] - neighbors.rvec) @ LINEAR_FIELD_GRADIENT
    gradient = rkgc_gradient(psi, system, neighbors, correction, neighbor_values=image)
    return float(np.max(np.abs(gradient - LINEAR_FIELD_GRADIENT)))


def consistency_suite(workers=None):
    suite = 'consistency'
    system, _, _, neighbors = periodic_lattice(workers=workers)
    correction = compute_correction_matrices(system, neighbors)
    results = [
        _at_most(suite, 'rkgc_linear_gradient', linear_field_gradient_error(system, neighbors, correction), 1e-9),
    ]
    jittered, _, _, jittered_neighbors = periodic_lattice(jitter=0.05, seed=7, workers=workers)
    results.append(
        _at_least(
            suite, 'uncorrected_jittered_gradient', linear_field_gradient_error(jittered, jittered_neighbors, None), 1e-3,
            '未修正格式在擾動格點上的誤差',
        ),
    )
    return results


def random_fluid_box(n=20, dp=0.01, rho0=1000.0, c0=10.0, seed=3, workers=None):
    system, spec, grid, neighbors = periodic_lattice(n=n, dp=dp, density=rho0, workers=workers)
    system.name = 'fluid'
    eos = EosParams(rho0=rho0, c0=c0)
    rng = np.random.default_rng(seed)
    system.density = rho0 * (1.0 + 0.01 * rng.uniform(-1.0, 1.0, system.n))
    system.pressure = eos_pressure(system.density, eos)
    system.velocity = 0.1 * rng.standard_normal((system.n, 2))
    return system, spec, grid, neighbors, eos


def _relative_momentum(system, forces):
    """|Σ F| / Σ|F|"""
    scale = float(np.sum(np.linalg.norm(forces, axis=1)))
    return float(np.linalg.norm(forces.sum(axis=0))) / scale if scale > 0.0 else 0.0


def conservation_suite(workers=None):
    suite = 'conservation'
    nu = 1e-3
    fluid, spec, grid, neighbors, eos = random_fluid_box(workers=workers)
    correction = compute_correction_matrices(fluid, neighbors)
    riemann = riemann_pairs(fluid, neighbors, eos)
    pair = pressure_pair_forces(fluid, neighbors, riemann, correction)
    results = [_at_most(suite, 'pressure_pair_sum', _relative_momentum(fluid, pair), 1e-9)]

    accel, _ = momentum_rate(fluid, neighbors, riemann, correction, nu, np.zeros(2), eos)
    results.append(_at_most(suite, 'momentum_rate_sum', _relative_momentum(fluid, fluid.mass[:, None] * accel), 1e-9))

    state = SimulationState(
        name='conservation', fluid=fluid, solids=[], eos=eos, fluid_spec=spec, solid_spec=None,
        gravity=np.zeros(2), nu=nu, policy=StepPolicy(), regularization=RegularizationParams(dx=fluid.dp),
        domain=grid, workers=workers,
    )
    before = (fluid.mass[:, None] * fluid.velocity).sum(axis=0)
    flux = float(np.sum(fluid.mass * np.linalg.norm(fluid.velocity, axis=1)))
    advance_advection_step(state)
    after = (fluid.mass[:, None] * fluid.velocity).sum(axis=0)
    drift = float(np.linalg.norm(after - before)) / flux / max(1, state.clock.acoustic_index)
    results.append(_at_most(suite, 'momentum_drift_per_acoustic_step', drift, 1e-9))

    results.append(_at_most(suite, 'interface_ledger', wall_ledger_balance(workers), 1e-9, '流體靜置於固定牆上'))
    results.append(_at_most(suite, 'interface_column_weight', abs(wall_column_load(workers) - 1.0), 0.03, '牆的反作用力與水柱重量'))
    return results


def _hydrostatic_column(dp, eos, width=0.4, depth=0.2):
    fluid = lattice_fill(Rectangle(0.0, 0.0, width, depth), dp, name='fluid', body_kind=BodyKind.FLUID, density=eos.rho0)
    fluid.pressure = eos.rho0 * 9.81 * (depth - fluid.position[:, 1])
    fluid.density = eos.rho0 + fluid.pressure / eos.c0 ** 2
    return fluid


def hydrostatic_wall(workers=None):
    """0.4 m × 0.2 m 的靜水柱放在固定牆內，回傳 (流體, 牆, 介面作用力)"""
    dp = 0.02
    gravity = np.array([0.0, -9.81])
    eos = EosParams(rho0=1000.0, c0=20.0)
    fluid = _hydrostatic_column(dp, eos)
    wall = wall_body('wall', tank_walls(0.0, 0.0, 0.4, 0.2, 3 * dp), dp, eos.rho0, id_offset=fluid.n)
    spec = KernelSpec(h=1.3 * dp)
    cross = build_cross_pairs(fluid, wall.system, spec, workers=workers)
    neighbors = build_neighbor_lists(fluid, spec, workers=workers)
    correction = compute_correction_matrices(fluid, neighbors, contact=[(cross, wall.system.volume)])
    forces = pressure_coupling(fluid, cross, eos, 1e-6, wall.interface(), gravity, correction)
    return fluid, wall, forces


def wall_ledger_balance(workers=None):
    """流體壓在固定牆上時 Σ m_i a_i^{S:F} + Σ m_a a_a^{F:S} 相對於作用力大小"""
    fluid, wall, forces = hydrostatic_wall(workers)
    balance = forces.ledger_balance(fluid.mass, wall.system.mass)
    scale = float(np.sum(np.linalg.norm(forces.pair_forces, axis=1)))
    return float(np.linalg.norm(balance)) / scale if scale > 0.0 else 0.0


def wall_column_load(workers=None):
    """牆受到的鉛直合力除以水柱重量 ρ0 g W H"""
    _, wall, forces = hydrostatic_wall(workers)
    load = -float(np.sum(wall.system.mass * forces.solid_accel[:, 1]))
    return load / (1000.0 * 9.81 * 0.4 * 0.2)


def still_water_pressure_error(dp=0.01, nu=0.01, end_time=0.5, workers=None):
    """靜水槽（寬 0.4 m、水深 0.2 m）以靜水壓初始化後推進到 end_time，
    回傳壓力場相對 ρ0 g (H - y) 的 L2 誤差
    """
    eos = EosParams(rho0=1000.0, c0=20.0)
    fluid = _hydrostatic_column(dp, eos)
    wall = wall_body('wall', tank_walls(0.0, 0.0, 0.4, 0.3, 3 * dp), dp, eos.rho0, id_offset=fluid.n)
    state = SimulationState(
        name='still-water', fluid=fluid, solids=[wall], eos=eos, fluid_spec=KernelSpec(h=1.3 * dp), solid_spec=None,
        gravity=np.array([0.0, -9.81]), nu=nu, policy=StepPolicy(), regularization=None, workers=workers,
    )
    while end_time - state.clock.t > 1e-12:
        advance_advection_step(state, max_dt=end_time - state.clock.t)
    exact = eos.rho0 * 9.81 * (0.2 - state.fluid.position[:, 1])
    error = float(np.linalg.norm(state.fluid.pressure - exact) / np.linalg.norm(exact))
    logger.debug('靜水槽 t=%.3f：壓力 L2 誤差 %.4f', state.clock.t, error)
    return error


def riemann_suite(workers=None):
    suite = 'riemann'
    eos = EosParams(rho0=1000.0, c0=10.0)
    e = np.array([1.0, 0.0])
    results = []

    same = PointState(rho=1000.0, velocity=(-0.5, 0.0), pressure=2000.0)
    solution = riemann_interface(same, same, e, eos)
    results.append(_at_most(suite, 'identical_states_u_star', abs(solution.U_star - solution.states.UL), 1e-12))
    results.append(_at_most(suite, 'identical_states_dissipation', abs(solution.P_star_scalar) + solution.beta, 1e-12))

    left = PointState(rho=1000.0, velocity=(-1.0, 0.0), pressure=0.0)
    right = PointState(rho=1000.0, velocity=(1.0, 0.0), pressure=0.0)
    solution = riemann_interface(left, right, e, eos)
    results.append(_at_most(suite, 'compression_beta', abs(solution.beta - 0.6), 1e-12))
    results.append(_at_most(suite, 'compression_dissipation', abs(solution.P_star_scalar - 6000.0), 1e-12))
    results.append(_at_most(suite, 'compression_u_star', abs(solution.U_star), 1e-12))

    high = PointState(rho=1000.0, velocity=(0.0, 0.0), pressure=2000.0)
    low = PointState(rho=1000.0, velocity=(0.0, 0.0), pressure=1000.0)
    solution = riemann_interface(high, low, e, eos)
    results.append(_at_most(suite, 'pressure_jump_u_star', abs(solution.U_star - 0.05), 1e-12))
    return results


def solid_patch(dp=0.05, workers=None):
    region = Rectangle(0.0, 0.0, 1.0, 0.4)
    system = lattice_fill(region, dp, name='patch', body_kind=BodyKind.SOLID, density=1000.0)
    spec = KernelSpec(h=1.15 * dp)
    reference = build_reference(system, spec, region=region, workers=workers)
    material = material_constants(1000.0, 1.0e6, 0.3)
    return system, reference, material


def solid_patch_suite(workers=None):
    suite = 'solid-patch'
    system, reference, material = solid_patch(workers=workers)
    state = SolidState.at_rest(reference, material)

    G = np.array([[1.0e-3, 2.0e-3], [-1.0e-3, 5.0e-4]])
    state.displacement = reference.positions0 @ G.T
    F = deformation_gradient(state, reference)
    results = [_at_most(suite, 'affine_deformation_gradient', np.max(np.abs(F - (np.eye(2) + G))), 1e-12)]

    eps = 1.0e-3
    result = stress_pipeline(np.diag([1.0 + eps, 1.0]), material)
    strain = eps + 0.5 * eps ** 2
    expected = np.diag([(material.lam + 2.0 * material.mu) * strain, material.lam * strain])
    results.append(_at_most(suite, 'uniaxial_stress', np.max(np.abs(result.S - expected)) / np.max(np.abs(expected)), 1e-12))
    results.append(_at_most(suite, 'density_identity', abs(result.density * result.J - material.rho0) / material.rho0, 1e-12))

    rng = np.random.default_rng(11)
    state.displacement = 1e-3 * rng.standard_normal(state.displacement.shape) * system.dp
    update_stress(state, reference, material)
    forces = internal_pair_forces(state, reference)
    total = pair_sum(reference.neighbors.i, forces, system.n)
    scale = float(np.sum(np.linalg.norm(forces, axis=1)))
    results.append(_at_most(suite, 'free_body_internal_force', float(np.linalg.norm(total.sum(axis=0))) / scale, 1e-9))
    return results


# 梁的參數：ρ = 1000、E = 1 MPa、ν = 0.3、厚度 0.04 m
BEAM_MATERIAL = (1000.0, 1.0e6, 0.3)
BEAM_THICKNESS = 0.04


def _bending_stiffness(material, thickness):
    """平面應變梁每單位深度的 E I /(1 - ν²)"""
    return material.E / (1.0 - material.nu ** 2) * thickness ** 3 / 12.0


def elastic_beam(length, bh_dp, clamp_layers=0, thickness=BEAM_THICKNESS, workers=None):
    """x ∈ [0, length] 的彈性梁；clamp_layers > 0 時在 x < 0 加上固定端粒子"""
    dp = thickness / bh_dp
    region = Rectangle(-clamp_layers * dp, 0.0, length, thickness)
    system = lattice_fill(region, dp, name='beam', body_kind=BodyKind.SOLID, density=BEAM_MATERIAL[0])
    reference = build_reference(system, KernelSpec(h=1.15 * dp), region=region, workers=workers)
    material = material_constants(*BEAM_MATERIAL)
    state = SolidState.at_rest(reference, material, clamped=reference.positions0[:, 0] < 0.0)
    return SolidBody(
        system=system, state=state, positions0=reference.positions0.copy(), reference=reference,
        material=material, damping=DampingConfig(0.0),
    )


def _tip(body):
    x = body.positions0[:, 0]
    return np.isclose(x, x.max())


def _integrate_beam(body, duration, gravity=(0.0, 0.0), every_step=None):
    dt = 0.6 * body.reference.spec.h / body.material.cS
    t = 0.0
    while t < duration:
        advance_solid_substeps(body, dt, dt, gravity, t)
        t += dt
        if every_step is not None:
            every_step(t)


def cantilever_deflection(bh_dp, length=0.2, load=0.01, duration=0.6, workers=None):
    """均布體積力 load 下懸臂的靜態端點撓度，回傳 (SPH, 含剪切修正的梁理論)

    阻尼取第一模態的臨界值 2ω₁，duration 後視為已達靜態平衡。
    """
    body = elastic_beam(length, bh_dp, clamp_layers=3, workers=workers)
    material = body.material
    stiffness = _bending_stiffness(material, BEAM_THICKNESS)
    line_mass = material.rho0 * BEAM_THICKNESS
    omega = 1.875104068711961 ** 2 / length ** 2 * np.sqrt(stiffness / line_mass)
    body.damping = DampingConfig(2.0 * omega)
    _integrate_beam(body, duration, gravity=(0.0, -load))

    q = line_mass * load
    bending = q * length ** 4 / (8.0 * stiffness)
    shear = q * length ** 2 / (2.0 * 5.0 / 6.0 * material.mu * BEAM_THICKNESS)
    deflection = -float(body.state.displacement[_tip(body), 1].mean())
    logger.debug('懸臂 bh/dp=%d：撓度 %.6e，梁理論 %.6e', bh_dp, deflection, bending + shear)
    return deflection, bending + shear


def free_plate_frequency(bh_dp, length=0.4, amplitude=1e-3, duration=0.9, workers=None):
    """兩端自由的板以第一彎曲模態形狀的初速度激發，回傳端點振動頻率與薄梁理論頻率"""
    body = elastic_beam(length, bh_dp, workers=workers)
    material = body.material
    beta = 4.730040744862704
    sigma = (np.cosh(beta) - np.cos(beta)) / (np.sinh(beta) - np.sin(beta))
    z = beta * body.positions0[:, 0] / length
    body.state.velocity[:, 1] = amplitude * (np.cosh(z) + np.cos(z) - sigma * (np.sinh(z) + np.sin(z)))
    body.sync()

    tip = _tip(body)
    times, deflection = [], []

    def record(t):
        times.append(t)
        deflection.append(float(body.state.displacement[tip, 1].mean()))

    _integrate_beam(body, duration, every_step=record)
    metrics = extract_oscillation_metrics(times, deflection, ('uy',))
    stiffness = _bending_stiffness(material, BEAM_THICKNESS)
    theory = beta ** 2 / length ** 2 * np.sqrt(stiffness / (material.rho0 * BEAM_THICKNESS)) / (2.0 * np.pi)
    return metrics.frequency['uy'], float(theory)


SUITES = {
    'consistency': consistency_suite,
    'conservation': conservation_suite,
    'riemann': riemann_suite,
    'solid-patch': solid_patch_suite,
}


def run_suite(name, workers=None):
    if name not in SUITES:
        raise KeyError(name)
    results = SUITES[name](workers=workers)
    failed = [result for result in results if not result.passed]
    logger.info('%s: %d/%d 項通過', name, len(results) - len(failed), len(results))
    return results
