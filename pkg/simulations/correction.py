"""核函數梯度修正：修正矩陣、自由液面加權混合、反向修正梯度與粒子位置正規化"""

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError
from .kernels import pair_sum

logger = logging.getLogger(__name__)

SMOOTHNESS_INDICATORS = ('determinant', 'norm')

# 行列式低於此值視為不可逆
SINGULAR_TOLERANCE = 1e-14

IDENTITY = np.eye(2)


@dataclass
class CorrectionField:
    A: np.ndarray
    B: np.ndarray
    B_tilde: np.ndarray
    smoothness: np.ndarray
    omega1: np.ndarray
    omega2: np.ndarray
    stamp: int = 0


@dataclass(frozen=True)
class RegularizationParams:
    dx: float
    eta: float = 0.2
    enabled: bool = False

    def __post_init__(self):
        if not 0.0 <= self.eta <= 0.5:
            raise ConfigurationError(f'transport_eta 必須介於 0 與 0.5：{self.eta}')
        if not self.dx > 0.0:
            raise ConfigurationError(f'粒子間距必須為正值：dx={self.dx}')


def invert_2x2(A):
    """逐粒子 2×2 反矩陣，回傳 (inverse, det)；不可逆處回傳單位矩陣"""
    a, b, c, d = A[..., 0, 0], A[..., 0, 1], A[..., 1, 0], A[..., 1, 1]
    det = a * d - b * c
    singular = np.abs(det) < SINGULAR_TOLERANCE
    safe = np.where(singular, 1.0, det)
    inverse = np.empty_like(A)
    inverse[..., 0, 0] = d / safe
    inverse[..., 0, 1] = -b / safe
    inverse[..., 1, 0] = -c / safe
    inverse[..., 1, 1] = a / safe
    inverse[singular] = IDENTITY
    return inverse, det


def moment_matrix(n, neighbors, target_volume):
    """A_i = -Σ_j r_ij ⊗ ∇W_ij V_j"""
    if neighbors.n_pairs == 0:
        return np.zeros((n, 2, 2))
    outer = np.einsum('pa,pb->pab', neighbors.rvec, neighbors.grad) * target_volume[neighbors.j][:, None, None]
    return -pair_sum(neighbors.i, outer, n)


def smoothness_indicator(A, kind='determinant'):
    if kind == 'determinant':
        return np.maximum(np.linalg.det(A), 0.0)
    if kind == 'norm':
        return np.sqrt(np.einsum('nab,nab->n', A, A) / 2.0)
    raise ConfigurationError(f'未知的平滑度指標：{kind}', errors={'smoothness_indicator': [kind]})


def compute_correction_matrices(system, neighbors, alpha=0.5, indicator='determinant', contact=(), counters=None, stamp=0):
    """計算 A、B 與加權混合後的 B̃

    contact 為 (跨物體鄰居列表, 固體體積) 的序列，牆邊與結構旁的流體粒子一併計入，
    不會被誤判為自由液面粒子。
    """
    volume = system.current_volume()
    A = moment_matrix(system.n, neighbors, volume)
    for cross, solid_volume in contact:
        A += moment_matrix(system.n, cross, solid_volume)

    s = smoothness_indicator(A, indicator)
    kappa = np.maximum(alpha - s, 0.0)
    total = s + kappa
    empty = total <= 0.0
    omega1 = np.where(empty, 0.0, s / np.where(empty, 1.0, total))
    omega2 = 1.0 - omega1

    B, det = invert_2x2(A)
    singular = (np.abs(det) < SINGULAR_TOLERANCE) & (omega1 > 0.0)
    B_tilde = omega1[:, None, None] * B + omega2[:, None, None] * IDENTITY
    if singular.any():
        B_tilde[singular] = IDENTITY
        if counters is not None:
            counters['correction_singular'] += int(singular.sum())
        logger.debug('%s: %d 顆粒子的修正矩陣不可逆，改用單位矩陣', system.name, int(singular.sum()))
    return CorrectionField(A=A, B=B, B_tilde=B_tilde, smoothness=s, omega1=omega1, omega2=omega2, stamp=stamp)


def rkgc_pair_pressure(p_i, p_j, B_i, B_j):
    """½(p_i B_j + p_j B_i)，對 i、j 交換對稱"""
    p_i = np.asarray(p_i, dtype=float)
    p_j = np.asarray(p_j, dtype=float)
    return 0.5 * (p_i[..., None, None] * np.asarray(B_j) + p_j[..., None, None] * np.asarray(B_i))


def rkgc_gradient(values, system, neighbors, correction=None, neighbor_values=None):
    """∇ψ_i = Σ_j (ψ_i B_j + ψ_j B_i) ∇W_ij V_j；correction 為 None 時 B ≡ I

    neighbor_values 為逐對的 ψ_j，供週期邊界上非週期的場（例如線性場的鏡像值）使用。
    """
    psi = np.asarray(values, dtype=float)
    volume = system.current_volume()
    i, j = neighbors.i, neighbors.j
    psi_j = psi[j] if neighbor_values is None else np.asarray(neighbor_values, dtype=float)
    if correction is None:
        weights = (psi[i] + psi_j)[:, None] * neighbors.grad
    else:
        B = correction.B_tilde
        pair = 2.0 * rkgc_pair_pressure(psi[i], psi_j, B[i], B[j])
        weights = np.einsum('pab,pb->pa', pair, neighbors.grad)
    return pair_sum(i, weights * volume[j][:, None], system.n)


def consistency_residual(system, neighbors, correction, contact=()):
    """Σ_j (B̃_i + B̃_j) ∇W_ij V_j（牆邊的對以 B_a = I 計入）；correction 為 None 時 B̃ ≡ I"""
    volume = system.current_volume()
    B = np.broadcast_to(IDENTITY, (system.n, 2, 2)) if correction is None else correction.B_tilde
    i, j = neighbors.i, neighbors.j
    residual = pair_sum(i, np.einsum('pab,pb->pa', B[i] + B[j], neighbors.grad) * volume[j][:, None], system.n)
    for cross, solid_volume in contact:
        if cross.n_pairs == 0:
            continue
        k = cross.i
        term = np.einsum('pab,pb->pa', B[k] + IDENTITY, cross.grad) * solid_volume[cross.j][:, None]
        residual += pair_sum(k, term, system.n)
    return residual


def position_regularization(system, neighbors, correction, params, contact=()):
    """單步位置修正 Δr_i = -η Δx² Σ_j (B̃_i + B̃_j) ∇W_ij V_j，將粒子推離擁擠處"""
    if not params.enabled or params.eta == 0.0:
        return np.zeros((system.n, 2))
    return -params.eta * params.dx ** 2 * consistency_residual(system, neighbors, correction, contact)
