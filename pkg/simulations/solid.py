"""全拉格朗日彈性固體：材料常數、參考構形、變形梯度、應力與動量方程式"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .correction import invert_2x2, moment_matrix, SINGULAR_TOLERANCE
from .exceptions import ConfigurationError, ElementInversionError, ReferenceBuildError
from .kernels import build_neighbor_lists, pair_sum

logger = logging.getLogger(__name__)

IDENTITY = np.eye(2)

# ‖Σ∇W V‖·h 超過此值的粒子以核函數梯度決定表面法向量
SURFACE_THRESHOLD = 0.1


@dataclass(frozen=True)
class MaterialElastic:
    rho0: float
    E: float
    nu: float
    lam: float
    mu: float
    K: float
    cS: float

    @property
    def G(self):
        return self.mu


def material_constants(rho0, E, nu):
    """μ = E/(2(1+ν))、K = E/(3(1-2ν))、λ = K - 2μ/3、c^S = √(K/ρ0)"""
    errors = {}
    if not rho0 > 0.0:
        errors['rho0'] = [f'密度必須為正值：{rho0}']
    if not E > 0.0:
        errors['E'] = [f'楊氏模數必須為正值：{E}']
    if nu >= 0.5:
        errors['nu'] = [f'不支援不可壓縮極限 ν >= 0.5：{nu}']
    elif not nu > 0.0:
        errors['nu'] = [f'蒲松比必須介於 0 與 0.5：{nu}']
    if errors:
        raise ConfigurationError('材料參數不合法', errors=errors)
    mu = E / (2.0 * (1.0 + nu))
    K = E / (3.0 * (1.0 - 2.0 * nu))
    return MaterialElastic(
        rho0=float(rho0), E=float(E), nu=float(nu),
        lam=K - 2.0 * mu / 3.0, mu=mu, K=K, cS=float(np.sqrt(K / rho0)),
    )


@dataclass(frozen=True)
class SolidReference:
    """初始構形，建立後不再改變"""

    positions0: np.ndarray
    volume0: np.ndarray
    B0: np.ndarray
    neighbors: object
    normals0: np.ndarray
    surface: np.ndarray
    spec: object


def _freeze(array):
    array = np.array(array)
    array.setflags(write=False)
    return array


def build_reference(solid, spec_hS, region=None, workers=None):
    """建立參考鄰居列表、B⁰ 與參考法向量；不可逆的 A⁰ 直接報錯，不做混合"""
    neighbors = build_neighbor_lists(solid, spec_hS, workers=workers)
    volume0 = solid.volume.copy()
    A0 = moment_matrix(solid.n, neighbors, volume0)
    B0, det = invert_2x2(A0)
    singular = np.flatnonzero(np.abs(det) < SINGULAR_TOLERANCE)
    if len(singular):
        k = int(singular[0])
        raise ReferenceBuildError(f'{solid.name}: 粒子 {int(solid.ids[k])} 的參考修正矩陣不可逆')

    # 單位指標場的修正梯度指向物體內部，取負號即為外法向量
    indicator = pair_sum(neighbors.i, neighbors.grad * volume0[neighbors.j][:, None], solid.n)
    gradient = -np.einsum('nab,nb->na', B0, indicator)
    magnitude = np.linalg.norm(gradient, axis=1)
    surface = magnitude * spec_hS.h > SURFACE_THRESHOLD
    normals = np.zeros((solid.n, 2))
    if region is not None:
        normals[:] = region.outward_normal(solid.position)
    normals[surface] = gradient[surface] / magnitude[surface, None]
    logger.debug('%s: %d 顆表面粒子', solid.name, int(surface.sum()))
    return SolidReference(
        positions0=_freeze(solid.position),
        volume0=_freeze(volume0),
        B0=_freeze(B0),
        neighbors=neighbors,
        normals0=_freeze(normals),
        surface=_freeze(surface),
        spec=spec_hS,
    )


@dataclass
class SolidState:
    displacement: np.ndarray
    velocity: np.ndarray
    F: np.ndarray
    S: np.ndarray
    P: np.ndarray
    density: np.ndarray
    von_mises: np.ndarray
    clamped: np.ndarray
    normals: np.ndarray
    acceleration: np.ndarray = None

    @classmethod
    def at_rest(cls, reference, material, clamped=None):
        n = len(reference.positions0)
        eye = np.broadcast_to(IDENTITY, (n, 2, 2)).copy()
        return cls(
            displacement=np.zeros((n, 2)),
            velocity=np.zeros((n, 2)),
            F=eye,
            S=np.zeros((n, 2, 2)),
            P=np.zeros((n, 2, 2)),
            density=np.full(n, material.rho0),
            von_mises=np.zeros(n),
            clamped=np.zeros(n, dtype=bool) if clamped is None else np.asarray(clamped, dtype=bool),
            normals=np.array(reference.normals0),
            acceleration=np.zeros((n, 2)),
        )

    def positions(self, reference):
        return reference.positions0 + self.displacement


def deformation_gradient(state, reference, step=None, time=None, ids=None):
    """F_a = (Σ_b (u_b - u_a) ⊗ ∇⁰W_ab V_b) B⁰_a + I，det(F) <= 0 時中止"""
    nl = reference.neighbors
    n = len(reference.positions0)
    u = state.displacement
    outer = np.einsum('pa,pb->pab', u[nl.j] - u[nl.i], nl.grad) * reference.volume0[nl.j][:, None, None]
    F = np.einsum('nab,nbc->nac', pair_sum(nl.i, outer, n), reference.B0) + IDENTITY
    J = F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]
    inverted = np.flatnonzero(J <= 0.0)
    if len(inverted):
        k = int(inverted[0])
        label = int(ids[k]) if ids is not None else k
        raise ElementInversionError(f'粒子 {label} 的變形梯度行列式非正值：det(F)={J[k]:.3e}', step=step, time=time)
    return F


@dataclass
class StressResult:
    strain: np.ndarray
    S: np.ndarray
    P: np.ndarray
    density: np.ndarray
    von_mises: np.ndarray
    J: np.ndarray


def von_mises_2d(sigma):
    sxx, syy, sxy = sigma[..., 0, 0], sigma[..., 1, 1], sigma[..., 0, 1]
    return np.sqrt(sxx ** 2 - sxx * syy + syy ** 2 + 3.0 * sxy ** 2)


def stress_pipeline(F, material):
    """Green-Lagrange 應變 → S = λ tr(E) I + 2μE → P = F S；ρ = ρ0/J，von Mises 取自 Cauchy 應力"""
    F = np.asarray(F, dtype=float)
    single = F.ndim == 2
    if single:
        F = F[None]
    strain = 0.5 * (np.einsum('nba,nbc->nac', F, F) - IDENTITY)
    trace = strain[:, 0, 0] + strain[:, 1, 1]
    S = material.lam * trace[:, None, None] * IDENTITY + 2.0 * material.mu * strain
    P = np.einsum('nab,nbc->nac', F, S)
    J = F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]
    cauchy = np.einsum('nab,nbc,ndc->nad', F, S, F) / J[:, None, None]
    result = StressResult(
        strain=strain, S=S, P=P, density=material.rho0 / J, von_mises=von_mises_2d(cauchy), J=J,
    )
    if single:
        return StressResult(*(value[0] for value in (result.strain, result.S, result.P, result.density, result.von_mises, result.J)))
    return result


def update_stress(state, reference, material, step=None, time=None, ids=None):
    """依目前位移更新 F、應力、密度與 von Mises"""
    state.F = deformation_gradient(state, reference, step=step, time=time, ids=ids)
    result = stress_pipeline(state.F, material)
    state.S, state.P = result.S, result.P
    state.density = result.density
    state.von_mises = result.von_mises
    return result


def internal_pair_forces(state, reference):
    """(P_a B⁰_a + P_b B⁰_b) ∇⁰W_ab V_a V_b，對 a、b 反對稱"""
    nl = reference.neighbors
    PB = np.einsum('nab,nbc->nac', state.P, reference.B0)
    pair = PB[nl.i] + PB[nl.j]
    V0 = reference.volume0
    return np.einsum('pab,pb->pa', pair, nl.grad) * (V0[nl.i] * V0[nl.j])[:, None]


def solid_momentum_rate(state, reference, material, gravity, coupling_accel=None):
    """dv_a/dt = (1/m_a) Σ_b (P_a B⁰_a + P_b B⁰_b) ∇⁰W_ab V_a V_b + g + a^{F:S}；固定端為 0"""
    n = len(reference.positions0)
    mass = material.rho0 * reference.volume0
    rate = pair_sum(reference.neighbors.i, internal_pair_forces(state, reference), n) / mass[:, None]
    rate += np.asarray(gravity, dtype=float)
    if coupling_accel is not None:
        rate += coupling_accel
    rate[state.clamped] = 0.0
    return rate


@dataclass(frozen=True)
class DampingConfig:
    """每個固體子步 v ← v (1 - ζ Δt)"""

    zeta: float = 0.0

    def __post_init__(self):
        if self.zeta < 0.0:
            raise ConfigurationError(f'阻尼係數不可為負值：{self.zeta}')


def apply_constraints_and_damping(state, rates, damping, dt, prescribed=None):
    """固定端粒子的速度與位移設為 0（或由運動腳本給定），其餘粒子套用阻尼"""
    rates = np.array(rates)
    clamped = state.clamped
    rates[clamped] = 0.0
    if damping.zeta > 0.0:
        state.velocity *= 1.0 - damping.zeta * dt
    if prescribed is None:
        state.velocity[clamped] = 0.0
        state.displacement[clamped] = 0.0
    else:
        displacement, velocity = prescribed
        state.displacement[clamped] = displacement[clamped]
        state.velocity[clamped] = velocity[clamped]
    return rates


def surface_normals(state, reference, counters=None):
    """n = F^{-T} n0 / ‖F^{-T} n0‖；退化時保留前一次的法向量"""
    F_inv, _ = invert_2x2(state.F)
    mapped = np.einsum('nba,nb->na', F_inv, reference.normals0)
    magnitude = np.linalg.norm(mapped, axis=1)
    degenerate = magnitude < 1e-12
    normals = np.array(state.normals)
    normals[~degenerate] = mapped[~degenerate] / magnitude[~degenerate, None]
    if counters is not None and degenerate.any():
        counters['normal_degenerate'] += int(degenerate.sum())
    state.normals = normals
    return normals


def strain_energy(state, reference):
    """Σ V0 · ½ S:E"""
    strain = 0.5 * (np.einsum('nba,nbc->nac', state.F, state.F) - IDENTITY)
    return float(np.sum(reference.volume0 * 0.5 * np.einsum('nab,nab->n', state.S, strain)))


@dataclass
class KinematicsHistory:
    """一個流體聲波步內每個固體子步的速度、加速度與時長"""

    velocities: list = field(default_factory=list)
    accelerations: list = field(default_factory=list)
    durations: list = field(default_factory=list)

    def append(self, velocity, acceleration, dt):
        self.velocities.append(np.array(velocity))
        self.accelerations.append(np.array(acceleration))
        self.durations.append(float(dt))

    def __len__(self):
        return len(self.durations)
