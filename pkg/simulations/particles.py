"""粒子系統（structure-of-arrays）與幾何區域的格點填充"""

from dataclasses import dataclass, field, replace

import numpy as np
from django.db import models

from .exceptions import GeometryError


class BodyKind(models.TextChoices):
    FLUID = 'fluid', '流體'
    SOLID = 'solid', '彈性固體'
    WALL = 'wall', '剛性牆'


@dataclass
class ParticleSystem:
    """單一物體的粒子狀態，所有欄位皆為長度 N 的陣列"""

    name: str
    body_kind: str
    ids: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    density: np.ndarray
    pressure: np.ndarray
    volume: np.ndarray
    mass: np.ndarray
    dp: float

    @classmethod
    def from_positions(cls, name, body_kind, positions, dp, density, id_offset=0):
        """由格點座標建立靜止粒子，體積 dp²、質量 = 密度 × 體積"""
        positions = np.array(positions, dtype=float).reshape(-1, 2)
        n = len(positions)
        volume = np.full(n, dp * dp)
        rho = np.full(n, float(density))
        return cls(
            name=name,
            body_kind=body_kind,
            ids=np.arange(id_offset, id_offset + n, dtype=np.int64),
            position=positions,
            velocity=np.zeros((n, 2)),
            density=rho,
            pressure=np.zeros(n),
            volume=volume,
            mass=rho * volume,
            dp=float(dp),
        )

    @property
    def n(self):
        return len(self.position)

    @property
    def id_to_index(self):
        return {int(pid): k for k, pid in enumerate(self.ids)}

    @property
    def total_mass(self):
        return float(self.mass.sum())

    def current_volume(self):
        """流體 V = m/ρ 隨密度變化；固體與牆使用參考體積"""
        if self.body_kind == BodyKind.FLUID:
            return self.mass / self.density
        return self.volume

    def copy(self):
        return replace(
            self,
            ids=self.ids.copy(),
            position=self.position.copy(),
            velocity=self.velocity.copy(),
            density=self.density.copy(),
            pressure=self.pressure.copy(),
            volume=self.volume.copy(),
            mass=self.mass.copy(),
        )

    def validate(self):
        """密度與體積必須為正"""
        if np.any(self.density <= 0.0) or np.any(self.volume <= 0.0):
            bad = int(np.flatnonzero((self.density <= 0.0) | (self.volume <= 0.0))[0])
            raise GeometryError(f'{self.name}: 粒子 {int(self.ids[bad])} 的密度或體積非正值')


# 幾何區域


@dataclass(frozen=True)
class Rectangle:
    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def area(self):
        return max(self.x1 - self.x0, 0.0) * max(self.y1 - self.y0, 0.0)

    @property
    def bounds(self):
        return self.x0, self.y0, self.x1, self.y1

    def contains(self, points):
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        return (p[:, 0] >= self.x0) & (p[:, 0] <= self.x1) & (p[:, 1] >= self.y0) & (p[:, 1] <= self.y1)

    def outward_normal(self, points):
        """最近邊的外法向量"""
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        distances = np.stack([p[:, 0] - self.x0, self.x1 - p[:, 0], p[:, 1] - self.y0, self.y1 - p[:, 1]], axis=1)
        faces = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
        return faces[np.argmin(distances, axis=1)]


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    radius: float

    @property
    def area(self):
        return np.pi * self.radius ** 2 if self.radius > 0 else 0.0

    @property
    def bounds(self):
        return self.cx - self.radius, self.cy - self.radius, self.cx + self.radius, self.cy + self.radius

    def contains(self, points):
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.hypot(p[:, 0] - self.cx, p[:, 1] - self.cy) <= self.radius

    def outward_normal(self, points):
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        d = p - np.array([self.cx, self.cy])
        norm = np.linalg.norm(d, axis=1)
        out = np.zeros_like(d)
        ok = norm > 0.0
        out[ok] = d[ok] / norm[ok, None]
        out[~ok] = (1.0, 0.0)
        return out


@dataclass(frozen=True)
class Difference:
    """base 扣除 holes"""

    base: object
    holes: tuple = field(default_factory=tuple)

    @property
    def area(self):
        return self.base.area

    @property
    def bounds(self):
        return self.base.bounds

    def contains(self, points):
        inside = self.base.contains(points)
        for hole in self.holes:
            inside &= ~hole.contains(points)
        return inside

    def outward_normal(self, points):
        return self.base.outward_normal(points)


def lattice_fill(region, dp, name='body', body_kind=BodyKind.FLUID, density=1.0, id_offset=0):
    """以格點填滿區域並建立靜止粒子系統骨架（每顆粒子體積 dp²）"""
    return ParticleSystem.from_positions(name, body_kind, lattice_points(region, dp), dp, density, id_offset)


def lattice_points(region, dp):
    """以間距 dp 的正方格點（格心）覆蓋區域，回傳 (N, 2) 座標"""
    if dp <= 0.0:
        raise GeometryError(f'粒子間距必須為正值：dp={dp}')
    if region.area <= 0.0:
        raise GeometryError(f'區域面積必須為正值：{region!r}')

    x0, y0, x1, y1 = region.bounds
    if isinstance(region, Rectangle):
        nx = int(np.floor((x1 - x0) / dp + 0.5))
        ny = int(np.floor((y1 - y0) / dp + 0.5))
        if nx == 0 or ny == 0:
            raise GeometryError(f'區域小於半個粒子間距：{region!r}, dp={dp}')
        xs = x0 + (np.arange(nx) + 0.5) * dp
        ys = y0 + (np.arange(ny) + 0.5) * dp
        gx, gy = np.meshgrid(xs, ys, indexing='xy')
        return np.column_stack([gx.ravel(), gy.ravel()])

    nx = int(np.ceil((x1 - x0) / dp))
    ny = int(np.ceil((y1 - y0) / dp))
    xs = x0 + (np.arange(nx) + 0.5) * dp
    ys = y0 + (np.arange(ny) + 0.5) * dp
    gx, gy = np.meshgrid(xs, ys, indexing='xy')
    points = np.column_stack([gx.ravel(), gy.ravel()])
    points = points[region.contains(points)]
    if len(points) == 0:
        raise GeometryError(f'區域內沒有任何格點：{region!r}, dp={dp}')
    return points
