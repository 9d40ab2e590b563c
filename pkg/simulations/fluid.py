"""弱可壓縮流體：狀態方程式、線性化 Riemann 解與連續/動量方程式的速率"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .correction import rkgc_pair_pressure
from .diagnostics import DegeneracyCounters
from .exceptions import ConfigurationError
from .kernels import pair_sum

logger = logging.getLogger(__name__)

# β = min(LIMITER_SLOPE · max(U_ij / c0, 0), 1)
LIMITER_SLOPE = 3.0


@dataclass(frozen=True)
class EosParams:
    rho0: float
    c0: float

    def __post_init__(self):
        if not self.rho0 > 0.0:
            raise ConfigurationError(f'參考密度必須為正值：rho0={self.rho0}')
        if not self.c0 > 0.0:
            raise ConfigurationError(f'人工聲速必須為正值：c0={self.c0}')

    @property
    def impedance(self):
        """ρ0 c0"""
        return self.rho0 * self.c0


def eos_pressure(rho, eos):
    """p = c0² (ρ - ρ0)，不截斷負壓"""
    return eos.c0 ** 2 * (rho - eos.rho0)


def rho_from_pressure(p, eos):
    return eos.rho0 + p / eos.c0 ** 2


@dataclass(frozen=True)
class PointState:
    """單一粒子在 Riemann 問題中的狀態（密度、速度向量、壓力）"""

    rho: float
    velocity: tuple
    pressure: float


@dataclass(frozen=True)
class RiemannStates:
    rhoL: float
    UL: float
    PL: float
    rhoR: float
    UR: float
    PR: float


@dataclass(frozen=True)
class RiemannSolution:
    v_star: np.ndarray
    U_star: float
    P_star_scalar: float
    beta: float
    p_mean: float
    states: RiemannStates

    @property
    def P_star(self):
        """平均壓力加上耗散項"""
        return self.p_mean + self.P_star_scalar


def limiter(U_ij, c0):
    return np.minimum(LIMITER_SLOPE * np.maximum(U_ij / c0, 0.0), 1.0)


def riemann_interface(i_state, j_state, e_ij, eos):
    """沿 e_ij（由 j 指向 i）的線性化 Riemann 解"""
    e = np.asarray(e_ij, dtype=float)
    if abs(np.linalg.norm(e) - 1.0) > 1e-12:
        raise ValueError(f'e_ij 必須為單位向量：{e.tolist()}')
    vi = np.asarray(i_state.velocity, dtype=float)
    vj = np.asarray(j_state.velocity, dtype=float)
    states = RiemannStates(
        rhoL=float(i_state.rho), UL=float(-vi @ e), PL=float(i_state.pressure),
        rhoR=float(j_state.rho), UR=float(-vj @ e), PR=float(j_state.pressure),
    )
    v_bar = 0.5 * (vi + vj)
    U_bar = 0.5 * (states.UL + states.UR)
    U_ij = states.UL - states.UR
    U_star = U_bar + 0.5 * (states.PL - states.PR) / eos.impedance
    beta = float(limiter(U_ij, eos.c0))
    return RiemannSolution(
        v_star=v_bar - (U_star - U_bar) * e,
        U_star=U_star,
        P_star_scalar=0.5 * beta * eos.impedance * U_ij,
        beta=beta,
        p_mean=0.5 * (states.PL + states.PR),
        states=states,
    )


@dataclass
class PairRiemann:
    """鄰居列表上每一對的 Riemann 解"""

    v_star: np.ndarray
    U_star: np.ndarray
    U_ij: np.ndarray
    beta: np.ndarray
    dissipation: np.ndarray


def riemann_pairs(fluid, neighbors, eos):
    """riemann_interface 的向量化版本，順序與鄰居列表一致"""
    i, j, e = neighbors.i, neighbors.j, neighbors.e
    vi, vj = fluid.velocity[i], fluid.velocity[j]
    UL = -np.einsum('ij,ij->i', vi, e)
    UR = -np.einsum('ij,ij->i', vj, e)
    U_bar = 0.5 * (UL + UR)
    U_ij = UL - UR
    U_star = U_bar + 0.5 * (fluid.pressure[i] - fluid.pressure[j]) / eos.impedance
    beta = limiter(U_ij, eos.c0)
    return PairRiemann(
        v_star=0.5 * (vi + vj) - (U_star - U_bar)[:, None] * e,
        U_star=U_star,
        U_ij=U_ij,
        beta=beta,
        dissipation=0.5 * beta * eos.impedance * U_ij,
    )


@dataclass
class FluidRates:
    drho_dt: np.ndarray
    dv_dt: np.ndarray
    components: dict = field(default_factory=dict)


def continuity_rate(fluid, neighbors, riemann):
    """dρ_i/dt = 2ρ_i Σ_j (v_i - v*)·∇W_ij V_j，不做梯度修正"""
    volume = fluid.current_volume()
    i, j = neighbors.i, neighbors.j
    flux = np.einsum('ij,ij->i', fluid.velocity[i] - riemann.v_star, neighbors.grad) * volume[j]
    return 2.0 * fluid.density * pair_sum(i, flux, fluid.n)


def pressure_pair_forces(fluid, neighbors, riemann, correction=None):
    """每對的壓力作用力 -2[½(p_i B_j + p_j B_i) + ½βρ0c0U_ij I]∇W_ij V_i V_j，對 i、j 反對稱"""
    volume = fluid.current_volume()
    i, j = neighbors.i, neighbors.j
    grad = neighbors.grad
    p = fluid.pressure
    if correction is None:
        mean = 0.5 * (p[i] + p[j])
        corrected = mean[:, None] * grad
    else:
        B = correction.B_tilde
        pair = rkgc_pair_pressure(p[i], p[j], B[i], B[j])
        corrected = np.einsum('pab,pb->pa', pair, grad)
    dissipative = riemann.dissipation[:, None] * grad
    return -2.0 * (corrected + dissipative) * (volume[i] * volume[j])[:, None]


def viscous_acceleration(fluid, neighbors, nu, rho0, counters=None):
    """2 Σ_j (μ/ρ_i)(v_ij/r_ij)(∂W/∂r) V_j，μ = ρ0 ν；r_ij = 0 的粒子對跳過並計數"""
    if nu == 0.0 or neighbors.n_pairs == 0:
        return np.zeros((fluid.n, 2))
    volume = fluid.current_volume()
    i, j = neighbors.i, neighbors.j
    overlap = neighbors.r <= 0.0
    if overlap.any() and counters is not None:
        counters['viscous_zero_distance'] += int(overlap.sum())
    r = np.where(overlap, 1.0, neighbors.r)
    weight = np.where(overlap, 0.0, neighbors.dw * volume[j] / r)
    v_ij = fluid.velocity[i] - fluid.velocity[j]
    mu = rho0 * nu
    return 2.0 * mu / fluid.density[:, None] * pair_sum(i, v_ij * weight[:, None], fluid.n)


def momentum_rate(fluid, neighbors, riemann, correction, nu, gravity, eos, coupling_accel=None, counters=None):
    """流體動量方程式；correction 為 None 時即為未修正的格式（B ≡ I）"""
    if counters is None:
        counters = DegeneracyCounters()
    forces = pressure_pair_forces(fluid, neighbors, riemann, correction)
    pressure = pair_sum(neighbors.i, forces, fluid.n) / fluid.mass[:, None]
    viscous = viscous_acceleration(fluid, neighbors, nu, eos.rho0, counters)
    gravity_term = np.broadcast_to(np.asarray(gravity, dtype=float), (fluid.n, 2))
    coupling = np.zeros((fluid.n, 2)) if coupling_accel is None else np.asarray(coupling_accel)
    components = {
        'pressure': pressure,
        'viscous': viscous,
        'gravity': gravity_term,
        'coupling': coupling,
    }
    return pressure + viscous + gravity_term + coupling, components


def fluid_rates(fluid, neighbors, eos, correction, nu, gravity, coupling_accel=None, counters=None):
    """一次算出密度與速度的時間導數"""
    riemann = riemann_pairs(fluid, neighbors, eos)
    dv_dt, components = momentum_rate(fluid, neighbors, riemann, correction, nu, gravity, eos, coupling_accel, counters)
    return FluidRates(drho_dt=continuity_rate(fluid, neighbors, riemann), dv_dt=dv_dt, components=components)
