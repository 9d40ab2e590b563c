"""流固耦合：虛擬固體狀態、單側 Riemann 介面壓力與雙向作用力"""

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError
from .fluid import limiter
from .kernels import pair_sum

logger = logging.getLogger(__name__)


@dataclass
class InterfaceState:
    """固體側的介面資料；pressure、velocity 為每一對 (i, a) 的虛擬狀態"""

    averaged_velocity: np.ndarray
    averaged_acceleration: np.ndarray
    normals: np.ndarray
    volume: np.ndarray
    mass: np.ndarray
    pressure: np.ndarray = None
    velocity: np.ndarray = None


@dataclass
class CouplingForces:
    fluid_accel: np.ndarray
    solid_accel: np.ndarray
    pair_forces: np.ndarray
    drho_dt: np.ndarray = None

    def ledger_balance(self, fluid_mass, solid_mass):
        """Σ m_i a_i^{S:F} + Σ m_a a_a^{F:S}"""
        return (fluid_mass[:, None] * self.fluid_accel).sum(axis=0) + (solid_mass[:, None] * self.solid_accel).sum(axis=0)

    @classmethod
    def zero(cls, n_fluid, n_solid):
        return cls(
            fluid_accel=np.zeros((n_fluid, 2)),
            solid_accel=np.zeros((n_solid, 2)),
            pair_forces=np.zeros((0, 2)),
            drho_dt=np.zeros(n_fluid),
        )


def imaginary_interface_state(p_i, rho_i, v_i, r_ia, gravity, averaged_velocity, averaged_acceleration):
    """p^d = p_i + ρ_i max(0, (g - d̃v/dt)·(r_a - r_i))，v^d = 2ṽ - v_i；可逐對向量化

    r_ia = r_i - r_a。流體粒子位於結構上方（沿重力方向）時加上靜水壓頭；
    v^d 為 v_i 對結構平均速度的鏡射，介面上的平均速度即為 ṽ。
    """
    r_ia = np.asarray(r_ia, dtype=float)
    load = np.asarray(gravity, dtype=float) - np.asarray(averaged_acceleration, dtype=float)
    head = np.maximum(0.0, -np.sum(load * r_ia, axis=-1))
    p_d = np.asarray(p_i, dtype=float) + np.asarray(rho_i, dtype=float) * head
    v_d = 2.0 * np.asarray(averaged_velocity, dtype=float) - np.asarray(v_i, dtype=float)
    if np.ndim(p_d) == 0:
        return float(p_d), v_d
    return p_d, v_d


def check_interface_normals(interface, cross, name='solid'):
    """有流體鄰居的固體粒子都必須有法向量"""
    if cross.n_pairs == 0:
        return
    paired = np.unique(cross.j)
    missing = paired[np.linalg.norm(interface.normals[paired], axis=1) < 0.5]
    if len(missing):
        raise ConfigurationError(f'{name}: 粒子 {int(missing[0])} 與流體相鄰但沒有法向量', errors={'normals': [name]})


def pressure_coupling(fluid, cross, eos, nu, interface, gravity, correction=None):
    """固體對流體的加速度、反作用力與介面連續方程式項

    單側 Riemann 問題的左態為 (ρ_i, -v_i·n, p_i)，右態為 (ρ_i, -v^d·n, p^d)；
    法向量逐對翻轉為指向流體粒子。
    """
    n_solid = len(interface.normals)
    if cross.n_pairs == 0:
        interface.pressure = np.zeros(0)
        interface.velocity = np.zeros((0, 2))
        return CouplingForces.zero(fluid.n, n_solid)

    i, a = cross.i, cross.j
    grad = cross.grad
    volume_i = fluid.current_volume()[i]
    volume_a = interface.volume[a]
    v_i = fluid.velocity[i]
    v_s = interface.averaged_velocity[a]

    normal = interface.normals[a]
    facing = np.einsum('pa,pa->p', normal, cross.e)
    normal = np.where((facing < 0.0)[:, None], -normal, normal)

    p_i = fluid.pressure[i]
    p_d, v_d = imaginary_interface_state(
        p_i, fluid.density[i], v_i, cross.rvec, gravity, v_s, interface.averaged_acceleration[a],
    )
    interface.pressure = p_d
    interface.velocity = v_d

    # U_L - U_R，流體向結構靠近時為正
    U = np.einsum('pa,pa->p', v_d - v_i, normal)
    beta = limiter(U, eos.c0)
    if correction is None:
        pressure = (0.5 * (p_i + p_d))[:, None] * grad
    else:
        B = correction.B_tilde[i]
        pressure = 0.5 * (p_i[:, None] * grad + p_d[:, None] * np.einsum('pab,pb->pa', B, grad))
    dissipative = (0.5 * beta * eos.impedance * U)[:, None] * grad
    forces = -2.0 * (pressure + dissipative) * (volume_i * volume_a)[:, None]

    if nu > 0.0:
        overlap = cross.r <= 0.0
        r = np.where(overlap, 1.0, cross.r)
        weight = np.where(overlap, 0.0, cross.dw / r)
        mu = eos.rho0 * nu
        forces += 2.0 * mu * (v_i - v_d) * (weight * volume_i * volume_a)[:, None]

    v_star = 0.5 * (v_i + v_d) - (0.5 * (p_i - p_d) / eos.impedance)[:, None] * normal
    flux = np.einsum('pa,pa->p', v_i - v_star, grad) * volume_a

    return CouplingForces(
        fluid_accel=pair_sum(i, forces, fluid.n) / fluid.mass[:, None],
        solid_accel=pair_sum(a, -forces, n_solid) / interface.mass[:, None],
        pair_forces=forces,
        drho_dt=2.0 * fluid.density * pair_sum(i, flux, fluid.n),
    )


def time_average_solid_kinematics(history, instantaneous=None, counters=None):
    """以子步時長加權的平均速度與平均加速度；沒有歷史紀錄時使用瞬時值"""
    if len(history) == 0:
        if instantaneous is None:
            raise ValueError('沒有子步歷史，也沒有提供瞬時值')
        if counters is not None:
            counters['empty_history'] += 1
        velocity, acceleration = instantaneous
        return np.array(velocity), np.array(acceleration)
    weights = np.asarray(history.durations, dtype=float)
    total = weights.sum()
    velocity = np.tensordot(weights, np.asarray(history.velocities), axes=1) / total
    acceleration = np.tensordot(weights, np.asarray(history.accelerations), axes=1) / total
    return velocity, acceleration
