import numpy as np
from django.test import SimpleTestCase

from simulations.exceptions import ConfigurationError, NeighborBuildError
from simulations.kernels import (
    CellGrid, KernelSpec, build_cross_pairs, build_neighbor_lists, kernel_eval, pair_sum,
)
from simulations.particles import BodyKind, ParticleSystem, Rectangle, lattice_fill
from simulations.verification import periodic_lattice


def _points(positions, name='body', dp=1.0):
    return ParticleSystem.from_positions(name, BodyKind.FLUID, positions, dp, 1.0)


class KernelEvalTest(SimpleTestCase):
    """Wendland C2 核函數測試"""

    def setUp(self):
        self.spec = KernelSpec(h=0.013)

    def test_zero_at_cutoff(self):
        """測試 r = 2h 時 W 與 dW/dr 皆為 0"""
        self.assertEqual(kernel_eval(2.0 * self.spec.h, self.spec), (0.0, 0.0))
        self.assertEqual(kernel_eval(5.0 * self.spec.h, self.spec), (0.0, 0.0))

    def test_peak_value(self):
        """測試 W(0) = 7/(4πh²)"""
        w, dw = kernel_eval(0.0, self.spec)
        self.assertAlmostEqual(w, 7.0 / (4.0 * np.pi * self.spec.h ** 2), places=6)
        self.assertEqual(dw, 0.0)
        self.assertAlmostEqual(self.spec.w0, w)

    def test_normalization(self):
        """測試 ∫ W dA = 1"""
        r = np.linspace(0.0, 2.0 * self.spec.h, 20001)
        w, _ = kernel_eval(r, self.spec)
        self.assertAlmostEqual(float(np.trapezoid(w * 2.0 * np.pi * r, r)), 1.0, delta=1e-6)

    def test_derivative_matches_finite_difference(self):
        """測試 dW/dr 與中央差分一致"""
        h = self.spec.h
        r = np.linspace(0.05 * h, 1.95 * h, 39)
        delta = 1e-6 * h
        w_plus, _ = kernel_eval(r + delta, self.spec)
        w_minus, _ = kernel_eval(r - delta, self.spec)
        _, dw = kernel_eval(r, self.spec)
        scale = self.spec.w0 / h
        np.testing.assert_allclose(dw, (w_plus - w_minus) / (2.0 * delta), atol=1e-6 * scale)

    def test_negative_distance(self):
        """測試負距離時拋出錯誤"""
        with self.assertRaises(ValueError):
            kernel_eval(-1e-3, self.spec)

    def test_invalid_kernel_settings(self):
        """測試不合法的核函數設定"""
        with self.assertRaises(ConfigurationError):
            KernelSpec(h=0.0)
        with self.assertRaises(ConfigurationError):
            KernelSpec(h=1.0, kind='cubic_spline')


class NeighborListTest(SimpleTestCase):
    """鄰居列表建立測試"""

    def test_lattice_center_has_eight_neighbors(self):
        """測試 3×3 格點中心粒子有 8 個鄰居"""
        system = lattice_fill(Rectangle(0.0, 0.0, 3.0, 3.0), 1.0)
        neighbors = build_neighbor_lists(system, KernelSpec(h=1.3))
        center = int(np.argmin(np.linalg.norm(system.position - (1.5, 1.5), axis=1)))
        self.assertEqual(len(neighbors.neighbors_of(center)), 8)
        self.assertNotIn(center, neighbors.neighbors_of(center))

    def test_single_particle(self):
        """測試單一粒子沒有鄰居"""
        system = lattice_fill(Rectangle(0.0, 0.0, 1.0, 1.0), 1.0)
        neighbors = build_neighbor_lists(system, KernelSpec(h=1.0))
        self.assertEqual(system.n, 1)
        self.assertEqual(neighbors.n_pairs, 0)

    def test_exact_cutoff_excluded(self):
        """測試距離恰為 2h 的粒子不配對"""
        system = _points([[0.0, 0.0], [2.0, 0.0]])
        self.assertEqual(build_neighbor_lists(system, KernelSpec(h=1.0)).n_pairs, 0)
        self.assertEqual(build_neighbor_lists(system, KernelSpec(h=1.01)).n_pairs, 2)

    def test_matches_brute_force(self):
        """測試與暴力搜尋結果相同且依索引排序"""
        rng = np.random.default_rng(5)
        system = _points(rng.uniform(0.0, 1.0, size=(300, 2)))
        spec = KernelSpec(h=0.04)
        neighbors = build_neighbor_lists(system, spec)

        d = system.position[:, None, :] - system.position[None, :, :]
        r = np.linalg.norm(d, axis=2)
        ii, jj = np.nonzero((r < spec.cutoff) & ~np.eye(system.n, dtype=bool))
        self.assertEqual(list(zip(neighbors.i.tolist(), neighbors.j.tolist())), list(zip(ii.tolist(), jj.tolist())))
        np.testing.assert_allclose(neighbors.r, r[ii, jj], rtol=1e-12)
        np.testing.assert_allclose(neighbors.rvec, d[ii, jj], atol=1e-14)

    def test_random_configurations_match_brute_force(self):
        """測試 100 組隨機粒子分布（含叢聚與稀疏）都與暴力搜尋相同"""
        rng = np.random.default_rng(17)
        for trial in range(100):
            n = int(rng.integers(2, 120))
            spread = rng.uniform(0.05, 1.0)
            system = _points(rng.uniform(0.0, spread, size=(n, 2)))
            spec = KernelSpec(h=rng.uniform(0.01, 0.1))
            neighbors = build_neighbor_lists(system, spec)
            r = np.linalg.norm(system.position[:, None, :] - system.position[None, :, :], axis=2)
            ii, jj = np.nonzero((r < spec.cutoff) & ~np.eye(n, dtype=bool))
            self.assertEqual(
                list(zip(neighbors.i.tolist(), neighbors.j.tolist())), list(zip(ii.tolist(), jj.tolist())), trial,
            )

    def test_symmetric_pairs(self):
        """測試 (i, j) 存在時 (j, i) 也存在"""
        rng = np.random.default_rng(1)
        system = _points(rng.uniform(0.0, 1.0, size=(200, 2)))
        neighbors = build_neighbor_lists(system, KernelSpec(h=0.05))
        pairs = set(zip(neighbors.i.tolist(), neighbors.j.tolist()))
        self.assertEqual(pairs, {(j, i) for i, j in pairs})

    def test_worker_count_does_not_change_result(self):
        """測試執行緒數不影響輸出"""
        rng = np.random.default_rng(2)
        system = _points(rng.uniform(0.0, 1.0, size=(500, 2)))
        spec = KernelSpec(h=0.03)
        single = build_neighbor_lists(system, spec, workers=1)
        parallel = build_neighbor_lists(system, spec, workers=4)
        np.testing.assert_array_equal(single.i, parallel.i)
        np.testing.assert_array_equal(single.j, parallel.j)
        np.testing.assert_array_equal(single.dw, parallel.dw)

    def test_periodic_gradient_sum_vanishes(self):
        """測試週期格點上 Σ∇W V = 0"""
        system, _, _, neighbors = periodic_lattice(n=20)
        total = pair_sum(neighbors.i, neighbors.grad * system.volume[neighbors.j][:, None], system.n)
        self.assertLess(np.max(np.abs(total)), 1e-8 / system.dp)
        self.assertTrue(np.all(neighbors.counts() == neighbors.counts()[0]))

    def test_particle_outside_grid(self):
        """測試粒子落在非週期格網之外"""
        system = _points([[0.5, 0.5], [2.0, 2.0]])
        grid = CellGrid.box((0.0, 0.0), (1.0, 1.0), 0.2, periodic=(False, False))
        with self.assertRaises(NeighborBuildError):
            build_neighbor_lists(system, KernelSpec(h=0.1), grid=grid)

    def test_non_finite_position(self):
        """測試座標不是有限值"""
        system = _points([[0.0, 0.0], [np.nan, 0.0]])
        with self.assertRaises(NeighborBuildError):
            build_neighbor_lists(system, KernelSpec(h=1.0))

    def test_periodic_axis_too_short(self):
        """測試週期軸短於三倍截斷半徑"""
        with self.assertRaises(ConfigurationError):
            CellGrid.box((0.0, 0.0), (0.5, 1.0), 0.2)


class CrossPairsTest(SimpleTestCase):
    """跨解析度鄰居對測試"""

    def test_pair_within_fluid_cutoff(self):
        """測試以 h^F 判斷跨物體鄰居"""
        fluid = _points([[0.0, 0.0]], name='fluid')
        solid = _points([[1.9, 0.0], [10.0, 0.0]], name='solid')
        cross = build_cross_pairs(fluid, solid, KernelSpec(h=1.0), solid_h=0.5)
        self.assertEqual(cross.n_pairs, 1)
        self.assertEqual(int(cross.j[0]), 0)
        self.assertFalse(cross.symmetric)
        np.testing.assert_allclose(cross.e[0], [-1.0, 0.0])

    def test_far_apart(self):
        """測試相距很遠時沒有鄰居對"""
        fluid = _points([[0.0, 0.0]], name='fluid')
        solid = _points([[10.0, 0.0]], name='solid')
        self.assertEqual(build_cross_pairs(fluid, solid, KernelSpec(h=1.0)).n_pairs, 0)

    def test_fluid_smoothing_length_must_not_be_smaller(self):
        """測試 h^F < h^S 時拋出錯誤"""
        fluid = _points([[0.0, 0.0]], name='fluid')
        solid = _points([[1.0, 0.0]], name='solid')
        with self.assertRaises(ConfigurationError):
            build_cross_pairs(fluid, solid, KernelSpec(h=0.5), solid_h=1.0)

    def test_reversed_view(self):
        """測試交換來源與目標"""
        fluid = _points([[0.0, 0.0], [0.5, 0.0]], name='fluid')
        solid = _points([[1.0, 0.0]], name='solid')
        cross = build_cross_pairs(fluid, solid, KernelSpec(h=1.0))
        back = cross.reversed()
        self.assertEqual(back.n_source, 1)
        self.assertEqual(back.i.tolist(), [0, 0])
        np.testing.assert_allclose(back.e, -cross.e)
