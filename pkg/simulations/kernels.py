"""Wendland C2 核函數、格網分桶與鄰居列表"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from .exceptions import ConfigurationError, NeighborBuildError

logger = logging.getLogger(__name__)

WENDLAND_C2_SIGMA_2D = 7.0 / (4.0 * np.pi)


@dataclass(frozen=True)
class KernelSpec:
    """二維 Wendland C2 核函數，支撐半徑 2h"""

    h: float
    kind: str = 'wendland_c2'
    dimension: int = 2

    def __post_init__(self):
        if self.kind != 'wendland_c2':
            raise ConfigurationError(f'不支援的核函數：{self.kind}')
        if self.dimension != 2:
            raise ConfigurationError('僅支援二維核函數')
        if not self.h > 0.0:
            raise ConfigurationError(f'平滑長度必須為正值：h={self.h}')

    @property
    def cutoff(self):
        return 2.0 * self.h

    @property
    def w0(self):
        """W(0) = σ/h²"""
        return WENDLAND_C2_SIGMA_2D / self.h ** 2


def kernel_eval(r, spec):
    """回傳 (W, dW/dr)；r 可為純量或陣列，r >= 2h 時皆為 0"""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0.0):
        raise ValueError('距離不可為負值')
    q = r_arr / spec.h
    inside = q < 2.0
    s = np.where(inside, 1.0 - 0.5 * q, 0.0)
    s3 = s ** 3
    w = WENDLAND_C2_SIGMA_2D / spec.h ** 2 * s3 * s * (2.0 * q + 1.0)
    dw = -5.0 * WENDLAND_C2_SIGMA_2D / spec.h ** 3 * q * s3
    w = np.where(inside, w, 0.0)
    dw = np.where(inside, dw, 0.0)
    if np.ndim(r) == 0:
        return float(w), float(dw)
    return w, dw


def pair_sum(index, values, n):
    """將每對的值依 index 加總到長度 n 的陣列（固定順序，結果可重現）"""
    values = np.asarray(values, dtype=float)
    tail = values.shape[1:]
    flat = values.reshape(len(values), -1)
    out = np.empty((n, flat.shape[1]))
    for k in range(flat.shape[1]):
        out[:, k] = np.bincount(index, weights=flat[:, k], minlength=n)
    return out.reshape((n,) + tail)


@dataclass
class CellGrid:
    """邊長不小於截斷半徑的均勻格網，可逐軸設定週期"""

    origin: np.ndarray
    cell_size: np.ndarray
    shape: tuple
    periodic: tuple = (False, False)

    @classmethod
    def covering(cls, positions, cutoff):
        """涵蓋所有粒子的非週期格網"""
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        if len(positions) == 0:
            lower = np.zeros(2)
            extent = np.zeros(2)
        else:
            lower = positions.min(axis=0)
            extent = positions.max(axis=0) - lower
        pad = 1e-9 * max(cutoff, 1.0)
        origin = lower - pad
        shape = tuple(int(k) for k in np.floor((extent + 2.0 * pad) / cutoff) + 1)
        return cls(origin=origin, cell_size=np.full(2, float(cutoff)), shape=shape)

    @classmethod
    def box(cls, lower, upper, cutoff, periodic=(True, True)):
        """以 [lower, upper) 為週期盒的格網；週期軸至少需 3 格"""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        length = upper - lower
        counts = np.maximum(np.floor(length / cutoff).astype(int), 1)
        for axis in range(2):
            if periodic[axis] and counts[axis] < 3:
                raise ConfigurationError(f'週期軸 {axis} 長度 {length[axis]} 小於三倍截斷半徑 {cutoff}')
        return cls(origin=lower, cell_size=length / counts, shape=tuple(int(k) for k in counts), periodic=tuple(periodic))

    @property
    def length(self):
        return self.cell_size * np.array(self.shape)

    def wrap(self, positions):
        """將週期軸上的座標移回盒內"""
        out = np.array(positions, dtype=float)
        for axis in range(2):
            if self.periodic[axis]:
                out[:, axis] = self.origin[axis] + np.mod(out[:, axis] - self.origin[axis], self.length[axis])
        return out

    def minimum_image(self, d):
        for axis in range(2):
            if self.periodic[axis]:
                length = self.length[axis]
                d[:, axis] -= length * np.round(d[:, axis] / length)
        return d

    def cell_coords(self, positions, strict=True):
        """floor((x - origin)/cell)；strict 時越界粒子會觸發錯誤"""
        coords = np.floor((positions - self.origin) / self.cell_size).astype(np.int64)
        for axis in range(2):
            if self.periodic[axis]:
                coords[:, axis] = np.mod(coords[:, axis], self.shape[axis])
            elif strict:
                bad = np.flatnonzero((coords[:, axis] < 0) | (coords[:, axis] >= self.shape[axis]))
                if len(bad):
                    k = int(bad[0])
                    raise NeighborBuildError(f'粒子 {k} 位於格網之外：{positions[k].tolist()}')
        return coords

    def buckets(self, positions):
        """回傳 (order, starts, counts)：依格子編號排序的粒子與每格的起點、數量"""
        coords = self.cell_coords(positions)
        linear = coords[:, 0] * self.shape[1] + coords[:, 1]
        order = np.argsort(linear, kind='stable')
        counts = np.bincount(linear, minlength=self.shape[0] * self.shape[1])
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        return order, starts, counts


@dataclass
class NeighborList:
    """依來源粒子排序的鄰居對快取（i 為來源、j 為目標）"""

    i: np.ndarray
    j: np.ndarray
    r: np.ndarray
    e: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    n_source: int
    n_target: int
    cutoff: float
    stamp: int = 0
    symmetric: bool = True

    @property
    def n_pairs(self):
        return len(self.i)

    @property
    def grad(self):
        """∇W_ij = e_ij ∂W/∂r，e_ij 由 j 指向 i"""
        return self.e * self.dw[:, None]

    @property
    def rvec(self):
        """r_ij = r_i - r_j"""
        return self.e * self.r[:, None]

    @property
    def offsets(self):
        return np.searchsorted(self.i, np.arange(self.n_source + 1))

    def counts(self):
        return np.bincount(self.i, minlength=self.n_source)

    def neighbors_of(self, k):
        start, stop = self.offsets[k], self.offsets[k + 1]
        return self.j[start:stop]

    def reversed(self):
        """交換來源與目標的檢視（不重新搜尋）"""
        order = np.lexsort((self.i, self.j))
        return NeighborList(
            i=self.j[order],
            j=self.i[order],
            r=self.r[order],
            e=-self.e[order],
            w=self.w[order],
            dw=self.dw[order],
            n_source=self.n_target,
            n_target=self.n_source,
            cutoff=self.cutoff,
            stamp=self.stamp,
            symmetric=self.symmetric,
        )

    @classmethod
    def empty(cls, n_source, n_target, cutoff, stamp=0, symmetric=True):
        return cls(
            i=np.zeros(0, dtype=np.int64),
            j=np.zeros(0, dtype=np.int64),
            r=np.zeros(0),
            e=np.zeros((0, 2)),
            w=np.zeros(0),
            dw=np.zeros(0),
            n_source=n_source,
            n_target=n_target,
            cutoff=cutoff,
            stamp=stamp,
            symmetric=symmetric,
        )


def _query_rows(rows, query, target, grid, order, starts, counts, cutoff, exclude_self):
    coords = grid.cell_coords(query[rows], strict=False)
    ii_parts, jj_parts = [], []
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            cell = coords + (dx, dy)
            valid = np.ones(len(rows), dtype=bool)
            for axis in range(2):
                if grid.periodic[axis]:
                    cell[:, axis] = np.mod(cell[:, axis], grid.shape[axis])
                else:
                    valid &= (cell[:, axis] >= 0) & (cell[:, axis] < grid.shape[axis])
            linear = cell[valid, 0] * grid.shape[1] + cell[valid, 1]
            cnt = counts[linear]
            total = int(cnt.sum())
            if total == 0:
                continue
            within = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
            ii_parts.append(np.repeat(rows[valid], cnt))
            jj_parts.append(order[np.repeat(starts[linear], cnt) + within])
    if not ii_parts:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros((0, 2))
    ii = np.concatenate(ii_parts)
    jj = np.concatenate(jj_parts)
    d = grid.minimum_image(query[ii] - target[jj])
    keep = np.einsum('ij,ij->i', d, d) < cutoff * cutoff
    if exclude_self:
        keep &= ii != jj
    ii, jj, d = ii[keep], jj[keep], d[keep]
    sort = np.lexsort((jj, ii))
    return ii[sort], jj[sort], d[sort]


def _search(query, target, grid, cutoff, exclude_self, workers):
    """格網鄰居搜尋；依來源區段平行處理後按順序串接，輸出與執行緒數無關"""
    order, starts, counts = grid.buckets(target)
    n = len(query)
    if workers is None:
        workers = getattr(settings, 'SPH_FSI_THREADS', 1)
    chunks = [c for c in np.array_split(np.arange(n, dtype=np.int64), max(1, min(workers, n))) if len(c)]
    if len(chunks) <= 1:
        parts = [_query_rows(c, query, target, grid, order, starts, counts, cutoff, exclude_self) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _query_rows(c, query, target, grid, order, starts, counts, cutoff, exclude_self), chunks))
    if not parts:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros((0, 2))
    return (
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
    )


def _assemble(ii, jj, d, spec, n_source, n_target, stamp, symmetric):
    r = np.sqrt(np.einsum('ij,ij->i', d, d))
    e = np.zeros_like(d)
    nonzero = r > 0.0
    e[nonzero] = d[nonzero] / r[nonzero, None]
    w, dw = kernel_eval(r, spec)
    return NeighborList(
        i=ii, j=jj, r=r, e=e, w=np.asarray(w), dw=np.asarray(dw),
        n_source=n_source, n_target=n_target, cutoff=spec.cutoff, stamp=stamp, symmetric=symmetric,
    )


def build_neighbor_lists(system, spec, grid=None, stamp=0, workers=None):
    """單一物體內的鄰居列表（嚴格 r < 2h，不含自身，依索引排序）"""
    positions = np.asarray(system.position, dtype=float)
    if not np.all(np.isfinite(positions)):
        bad = int(np.flatnonzero(~np.isfinite(positions).all(axis=1))[0])
        raise NeighborBuildError(f'粒子 {bad} 的座標不是有限值')
    if grid is None:
        grid = CellGrid.covering(positions, spec.cutoff)
    elif np.any(grid.cell_size < spec.cutoff * (1.0 - 1e-12)):
        raise ConfigurationError(f'格子邊長 {grid.cell_size.tolist()} 小於截斷半徑 {spec.cutoff}')
    ii, jj, d = _search(positions, positions, grid, spec.cutoff, True, workers)
    return _assemble(ii, jj, d, spec, len(positions), len(positions), stamp, True)


def build_cross_pairs(fluid, solid, spec_hF, solid_h=None, grid=None, stamp=0, workers=None):
    """流體→固體的跨解析度鄰居對，以 h^F 計算核函數"""
    if solid_h is not None and spec_hF.h < solid_h:
        raise ConfigurationError(f'多解析度需要 h^F >= h^S：h^F={spec_hF.h}, h^S={solid_h}')
    query = np.asarray(fluid.position, dtype=float)
    target = np.asarray(solid.position, dtype=float)
    if len(query) == 0 or len(target) == 0:
        return NeighborList.empty(len(query), len(target), spec_hF.cutoff, stamp, symmetric=False)
    if grid is None:
        grid = CellGrid.covering(target, spec_hF.cutoff)
    ii, jj, d = _search(query, target, grid, spec_hF.cutoff, False, workers)
    return _assemble(ii, jj, d, spec_hF, len(query), len(target), stamp, False)
