import numpy as np
from django.test import SimpleTestCase

from simulations.correction import compute_correction_matrices
from simulations.diagnostics import DegeneracyCounters
from simulations.exceptions import ConfigurationError
from simulations.fluid import (
    EosParams, PointState, continuity_rate, eos_pressure, fluid_rates, limiter, momentum_rate, pressure_pair_forces,
    rho_from_pressure, riemann_interface, riemann_pairs, viscous_acceleration,
)
from simulations.kernels import KernelSpec, build_neighbor_lists, pair_sum
from simulations.particles import BodyKind, ParticleSystem, Rectangle, lattice_fill
from simulations.verification import periodic_lattice

EOS = EosParams(rho0=1000.0, c0=10.0)
E_X = np.array([1.0, 0.0])


def _block(n=20, dp=0.02):
    system = lattice_fill(Rectangle(0.0, 0.0, n * dp, n * dp), dp, name='fluid', density=EOS.rho0)
    neighbors = build_neighbor_lists(system, KernelSpec(h=1.3 * dp))
    return system, neighbors


def _interior(system, margin):
    x, y = system.position[:, 0], system.position[:, 1]
    upper = system.position.max() + 0.5 * system.dp
    return (x > margin) & (x < upper - margin) & (y > margin) & (y < upper - margin)


class EquationOfStateTest(SimpleTestCase):
    """狀態方程式測試"""

    def test_linear_pressure(self):
        """測試 p = c0²(ρ - ρ0)"""
        self.assertAlmostEqual(eos_pressure(1001.0, EOS), 100.0)
        self.assertAlmostEqual(eos_pressure(999.0, EOS), -100.0)
        self.assertAlmostEqual(rho_from_pressure(100.0, EOS), 1001.0)

    def test_round_trip(self):
        """測試壓力與密度互相轉換"""
        rho = np.linspace(990.0, 1010.0, 11)
        np.testing.assert_allclose(rho_from_pressure(eos_pressure(rho, EOS), EOS), rho)

    def test_invalid_parameters(self):
        """測試非正值的參數"""
        with self.assertRaises(ConfigurationError):
            EosParams(rho0=1000.0, c0=0.0)
        with self.assertRaises(ConfigurationError):
            EosParams(rho0=-1.0, c0=10.0)


class RiemannInterfaceTest(SimpleTestCase):
    """線性化 Riemann 解測試"""

    def test_identical_states(self):
        """測試相同狀態時沒有耗散"""
        state = PointState(rho=1000.0, velocity=(-0.5, 0.0), pressure=2000.0)
        solution = riemann_interface(state, state, E_X, EOS)
        self.assertAlmostEqual(solution.U_star, solution.states.UL)
        self.assertEqual(solution.beta, 0.0)
        self.assertEqual(solution.P_star_scalar, 0.0)
        np.testing.assert_allclose(solution.v_star, [-0.5, 0.0])
        self.assertAlmostEqual(solution.P_star, 2000.0)

    def test_compression(self):
        """測試相向運動時 β = 0.6、耗散項 6000"""
        left = PointState(rho=1000.0, velocity=(-1.0, 0.0), pressure=0.0)
        right = PointState(rho=1000.0, velocity=(1.0, 0.0), pressure=0.0)
        solution = riemann_interface(left, right, E_X, EOS)
        self.assertAlmostEqual(solution.beta, 0.6)
        self.assertAlmostEqual(solution.P_star_scalar, 6000.0)
        self.assertAlmostEqual(solution.U_star, 0.0)

    def test_pressure_jump(self):
        """測試壓力差造成的介面速度 U* = 0.05"""
        high = PointState(rho=1000.0, velocity=(0.0, 0.0), pressure=2000.0)
        low = PointState(rho=1000.0, velocity=(0.0, 0.0), pressure=1000.0)
        solution = riemann_interface(high, low, E_X, EOS)
        self.assertAlmostEqual(solution.U_star, 0.05)
        np.testing.assert_allclose(solution.v_star, [-0.05, 0.0])

    def test_relabel_invariance(self):
        """測試交換 i、j 並反轉 e 後介面狀態不變"""
        a = PointState(rho=1001.0, velocity=(0.3, -0.2), pressure=1500.0)
        b = PointState(rho=999.0, velocity=(-0.4, 0.1), pressure=800.0)
        e = np.array([0.6, 0.8])
        forward = riemann_interface(a, b, e, EOS)
        backward = riemann_interface(b, a, -e, EOS)
        np.testing.assert_allclose(forward.v_star, backward.v_star, atol=1e-14)
        self.assertAlmostEqual(forward.P_star, backward.P_star)
        self.assertAlmostEqual(forward.beta, backward.beta)

    def test_non_unit_direction(self):
        """測試 e_ij 不是單位向量"""
        state = PointState(rho=1000.0, velocity=(0.0, 0.0), pressure=0.0)
        with self.assertRaises(ValueError):
            riemann_interface(state, state, (2.0, 0.0), EOS)

    def test_pair_velocity_along_line(self):
        """測試 v*·e_ij = -U*，切向分量等於平均速度的切向分量"""
        e = np.array([0.6, 0.8])
        left = PointState(rho=1000.0, velocity=(0.3, -0.2), pressure=1500.0)
        right = PointState(rho=1000.0, velocity=(-0.1, 0.4), pressure=900.0)
        solution = riemann_interface(left, right, e, EOS)
        self.assertAlmostEqual(solution.U_star, -0.11, places=12)
        self.assertAlmostEqual(float(solution.v_star @ e), -solution.U_star, places=12)
        tangent = np.array([-0.8, 0.6])
        self.assertAlmostEqual(float(solution.v_star @ tangent), float(np.array([0.1, 0.1]) @ tangent), places=12)

    def test_limiter_range(self):
        """測試限制器介於 0 與 1"""
        U = np.array([-5.0, 0.0, 1.0, 3.0, 50.0])
        np.testing.assert_allclose(limiter(U, 10.0), [0.0, 0.0, 0.3, 0.9, 1.0])

    def test_vectorized_pairs_match_scalar(self):
        """測試逐對向量化結果與單對解一致"""
        system, neighbors = _block(n=6, dp=0.1)
        rng = np.random.default_rng(4)
        system.velocity = rng.standard_normal((system.n, 2))
        system.pressure = 1000.0 * rng.standard_normal(system.n)
        pairs = riemann_pairs(system, neighbors, EOS)
        for p in (0, neighbors.n_pairs // 2, neighbors.n_pairs - 1):
            i, j = int(neighbors.i[p]), int(neighbors.j[p])
            single = riemann_interface(
                PointState(system.density[i], system.velocity[i], system.pressure[i]),
                PointState(system.density[j], system.velocity[j], system.pressure[j]),
                neighbors.e[p], EOS,
            )
            np.testing.assert_allclose(pairs.v_star[p], single.v_star, atol=1e-12)
            self.assertAlmostEqual(pairs.dissipation[p], single.P_star_scalar)


class ContinuityTest(SimpleTestCase):
    """連續方程式測試"""

    def test_rest_state(self):
        """測試靜止流體密度不變"""
        system, _, _, neighbors = periodic_lattice(n=20, density=EOS.rho0)
        riemann = riemann_pairs(system, neighbors, EOS)
        self.assertLess(np.max(np.abs(continuity_rate(system, neighbors, riemann))), 1e-9)

    def test_uniform_translation(self):
        """測試等速平移時密度不變"""
        system, _, _, neighbors = periodic_lattice(n=20, density=EOS.rho0)
        system.velocity[:] = (0.7, -0.3)
        riemann = riemann_pairs(system, neighbors, EOS)
        self.assertLess(np.max(np.abs(continuity_rate(system, neighbors, riemann))), 1e-9)

    def test_radial_expansion(self):
        """測試 v = k r 的膨脹流 dρ/dt ≈ -2ρk"""
        k = 0.1
        system, neighbors = _block()
        system.velocity = k * (system.position - 0.2)
        riemann = riemann_pairs(system, neighbors, EOS)
        rate = continuity_rate(system, neighbors, riemann)
        correction = compute_correction_matrices(system, neighbors)
        trace = correction.A[:, 0, 0] + correction.A[:, 1, 1]
        np.testing.assert_allclose(rate, -EOS.rho0 * k * trace, rtol=1e-9, atol=1e-9)
        interior = _interior(system, 0.1)
        np.testing.assert_allclose(rate[interior], -2.0 * EOS.rho0 * k, rtol=0.05)

    def test_galilean_invariance(self):
        """測試加上等速度後密度變化率不變"""
        k = 0.1
        system, neighbors = _block()
        system.velocity = k * (system.position - 0.2)
        base = continuity_rate(system, neighbors, riemann_pairs(system, neighbors, EOS))
        system.velocity += (1.5, -0.5)
        shifted = continuity_rate(system, neighbors, riemann_pairs(system, neighbors, EOS))
        np.testing.assert_allclose(shifted, base, rtol=1e-9, atol=1e-9 * np.max(np.abs(base)))


class MomentumTest(SimpleTestCase):
    """動量方程式測試"""

    def test_uniform_pressure_has_no_acceleration(self):
        """測試週期格點上均勻壓力不產生加速度"""
        system, _, _, neighbors = periodic_lattice(n=20, density=EOS.rho0)
        system.pressure[:] = 1000.0
        riemann = riemann_pairs(system, neighbors, EOS)
        scale = 1000.0 / (EOS.rho0 * system.dp)
        for correction in (None, compute_correction_matrices(system, neighbors)):
            accel, _ = momentum_rate(system, neighbors, riemann, correction, 0.0, (0.0, 0.0), EOS)
            self.assertLess(np.max(np.abs(accel)), 1e-8 * scale)

    def test_fluid_rates_at_rest(self):
        """測試靜止均勻流體的密度變化率為 0、加速度為重力"""
        system, _, _, neighbors = periodic_lattice(n=20, density=EOS.rho0)
        system.pressure[:] = 1000.0
        rates = fluid_rates(system, neighbors, EOS, None, 1e-3, (0.0, -9.81))
        np.testing.assert_array_equal(rates.drho_dt, 0.0)
        np.testing.assert_allclose(rates.dv_dt, np.tile([0.0, -9.81], (system.n, 1)), atol=1e-6)
        self.assertIn('pressure', rates.components)

    def test_hydrostatic_pressure_balances_gravity(self):
        """測試靜水壓梯度產生向上的加速度 g"""
        g = 9.81
        system, neighbors = _block()
        system.pressure = EOS.rho0 * g * (0.4 - system.position[:, 1])
        riemann = riemann_pairs(system, neighbors, EOS)

        _, components = momentum_rate(system, neighbors, riemann, None, 0.0, (0.0, -g), EOS)
        interior = _interior(system, 0.06)
        np.testing.assert_allclose(components['pressure'][interior, 1], g, rtol=0.02)
        np.testing.assert_allclose(components['pressure'][interior, 0], 0.0, atol=0.02 * g)

        correction = compute_correction_matrices(system, neighbors)
        accel, components = momentum_rate(system, neighbors, riemann, correction, 0.0, (0.0, -g), EOS)
        deep = _interior(system, 0.12)
        np.testing.assert_allclose(components['pressure'][deep], np.tile([0.0, g], (int(deep.sum()), 1)), atol=1e-6 * g)
        np.testing.assert_allclose(accel[deep], 0.0, atol=1e-6 * g)

    def test_pair_forces_are_antisymmetric(self):
        """測試兩顆粒子的壓力作用力大小相等、方向相反"""
        system = ParticleSystem.from_positions('fluid', BodyKind.FLUID, [[0.0, 0.0], [0.013, 0.005]], 0.01, 1000.0)
        system.pressure = np.array([2000.0, 500.0])
        system.velocity = np.array([[0.2, 0.0], [-0.1, 0.1]])
        neighbors = build_neighbor_lists(system, KernelSpec(h=0.013))
        riemann = riemann_pairs(system, neighbors, EOS)
        for correction in (None, compute_correction_matrices(system, neighbors, indicator='norm')):
            forces = pressure_pair_forces(system, neighbors, riemann, correction)
            np.testing.assert_allclose(forces[0], -forces[1], atol=1e-15)
            np.testing.assert_allclose(pair_sum(neighbors.i, forces, 2).sum(axis=0), 0.0, atol=1e-15)

    def test_viscous_zero_distance_is_counted(self):
        """測試重疊粒子的黏滯項跳過並計數"""
        system = ParticleSystem.from_positions('fluid', BodyKind.FLUID, [[0.0, 0.0], [0.0, 0.0]], 0.01, 1000.0)
        system.velocity = np.array([[1.0, 0.0], [0.0, 0.0]])
        neighbors = build_neighbor_lists(system, KernelSpec(h=0.013))
        counters = DegeneracyCounters()
        accel = viscous_acceleration(system, neighbors, 1e-3, 1000.0, counters)
        self.assertEqual(counters['viscous_zero_distance'], 2)
        self.assertTrue(np.all(np.isfinite(accel)))
        np.testing.assert_allclose(accel, 0.0)

    def test_viscous_damps_relative_motion(self):
        """測試黏滯項減緩相對運動"""
        system = ParticleSystem.from_positions('fluid', BodyKind.FLUID, [[0.0, 0.0], [0.01, 0.0]], 0.01, 1000.0)
        system.velocity = np.array([[0.0, 1.0], [0.0, -1.0]])
        neighbors = build_neighbor_lists(system, KernelSpec(h=0.013))
        accel = viscous_acceleration(system, neighbors, 1e-3, 1000.0)
        self.assertLess(accel[0, 1], 0.0)
        self.assertGreater(accel[1, 1], 0.0)
