import numpy as np
from django.test import SimpleTestCase

from simulations.correction import moment_matrix
from simulations.exceptions import ConfigurationError, ElementInversionError, ReferenceBuildError
from simulations.kernels import KernelSpec
from simulations.particles import BodyKind, Rectangle, lattice_fill
from simulations.solid import (
    DampingConfig, KinematicsHistory, SolidState, apply_constraints_and_damping, build_reference,
    deformation_gradient, material_constants, solid_momentum_rate, strain_energy, stress_pipeline,
    surface_normals, update_stress, von_mises_2d,
)
from simulations.verification import cantilever_deflection, free_plate_frequency, solid_patch


def _rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


class MaterialConstantsTest(SimpleTestCase):
    """材料常數測試"""

    def test_aluminium(self):
        """測試鋁板 E = 67.5 GPa、ν = 0.34"""
        material = material_constants(2700.0, 67.5e9, 0.34)
        self.assertAlmostEqual(material.K / 70.3125e9, 1.0, places=12)
        self.assertAlmostEqual(material.cS, 5103.1, delta=0.5)
        self.assertAlmostEqual(material.lam, material.K - 2.0 * material.mu / 3.0)

    def test_rubber(self):
        """測試橡膠 E = 7.8 MPa、ν = 0.4"""
        material = material_constants(1100.0, 7.8e6, 0.4)
        self.assertAlmostEqual(material.mu, 2.786e6, delta=1e3)
        self.assertAlmostEqual(material.G, material.mu)
        self.assertAlmostEqual(material.K, 13e6, delta=1e-3)
        self.assertAlmostEqual(material.cS, 108.7, delta=0.1)

    def test_incompressible_limit_rejected(self):
        """測試 ν >= 0.5 不支援"""
        with self.assertRaises(ConfigurationError) as context:
            material_constants(1000.0, 1e6, 0.5)
        self.assertIn('nu', context.exception.errors)

    def test_non_positive_modulus(self):
        """測試楊氏模數與密度必須為正值"""
        with self.assertRaises(ConfigurationError) as context:
            material_constants(0.0, -1.0, 0.3)
        self.assertEqual(set(context.exception.errors), {'rho0', 'E'})


class SolidReferenceTest(SimpleTestCase):
    """參考構形測試"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.system, cls.reference, cls.material = solid_patch()

    def test_reference_correction_inverts_moments(self):
        """測試 B⁰A⁰ = I（含邊界粒子）"""
        A0 = moment_matrix(self.system.n, self.reference.neighbors, self.reference.volume0)
        product = np.einsum('nab,nbc->nac', self.reference.B0, A0)
        np.testing.assert_allclose(product, np.broadcast_to(np.eye(2), product.shape), atol=1e-10)

    def test_reference_is_read_only(self):
        """測試參考構形陣列不可修改"""
        with self.assertRaises(ValueError):
            self.reference.positions0[0, 0] = 1.0
        with self.assertRaises(ValueError):
            self.reference.B0[0, 0, 0] = 1.0

    def test_surface_normals_point_outward(self):
        """測試表面粒子的法向量指向外側"""
        normals = self.reference.normals0
        surface = self.reference.surface
        self.assertTrue(surface.any())
        self.assertFalse(surface.all())
        np.testing.assert_allclose(np.linalg.norm(normals[surface], axis=1), 1.0)
        left = self.reference.positions0[:, 0] < 0.05
        middle = (self.reference.positions0[:, 1] > 0.15) & (self.reference.positions0[:, 1] < 0.25)
        self.assertTrue(np.all(normals[left & middle, 0] < -0.9))

    def test_single_particle_fails(self):
        """測試只有一顆粒子時參考修正矩陣不可逆"""
        system = lattice_fill(Rectangle(0.0, 0.0, 0.05, 0.05), 0.05, name='single', body_kind=BodyKind.SOLID, density=1000.0)
        with self.assertRaises(ReferenceBuildError):
            build_reference(system, KernelSpec(h=0.0575))


class DeformationGradientTest(SimpleTestCase):
    """變形梯度測試"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.system, cls.reference, cls.material = solid_patch()

    def setUp(self):
        self.state = SolidState.at_rest(self.reference, self.material)

    def test_translation(self):
        """測試剛體平移 F = I"""
        self.state.displacement[:] = (0.3, -0.2)
        F = deformation_gradient(self.state, self.reference)
        np.testing.assert_allclose(F, np.broadcast_to(np.eye(2), F.shape), atol=1e-12)

    def test_affine(self):
        """測試仿射變形 F = I + G"""
        G = np.array([[1.0e-3, 2.0e-3], [-1.0e-3, 5.0e-4]])
        self.state.displacement = self.reference.positions0 @ G.T
        F = deformation_gradient(self.state, self.reference)
        np.testing.assert_allclose(F, np.broadcast_to(np.eye(2) + G, F.shape), atol=1e-12)

    def test_rotation_is_stress_free(self):
        """測試剛體旋轉 F = R 且應力為 0"""
        R = _rotation(0.3)
        self.state.displacement = self.reference.positions0 @ (R - np.eye(2)).T
        result = update_stress(self.state, self.reference, self.material)
        np.testing.assert_allclose(self.state.F, np.broadcast_to(R, self.state.F.shape), atol=1e-12)
        self.assertLess(np.max(np.abs(result.S)), 1e-9 * self.material.E)
        np.testing.assert_allclose(self.state.density, self.material.rho0, rtol=1e-10)

    def test_reflection_aborts(self):
        """測試 det(F) <= 0 時中止"""
        self.state.displacement = self.reference.positions0 @ (np.diag([-1.0, 1.0]) - np.eye(2)).T
        with self.assertRaises(ElementInversionError) as context:
            deformation_gradient(self.state, self.reference, step=4, time=0.5, ids=self.system.ids)
        self.assertEqual(context.exception.step, 4)
        self.assertIn('step=4', str(context.exception))


class StressTest(SimpleTestCase):
    """應力計算測試"""

    def setUp(self):
        self.material = material_constants(1000.0, 1.0e6, 0.3)

    def test_uniaxial_stretch(self):
        """測試單軸拉伸的第二 Piola-Kirchhoff 應力"""
        eps = 1e-3
        result = stress_pipeline(np.diag([1.0 + eps, 1.0]), self.material)
        strain = eps + 0.5 * eps ** 2
        lam, mu = self.material.lam, self.material.mu
        np.testing.assert_allclose(result.S, np.diag([(lam + 2.0 * mu) * strain, lam * strain]), rtol=1e-12)
        np.testing.assert_allclose(result.P, np.diag([1.0 + eps, 1.0]) @ result.S, rtol=1e-12)
        self.assertAlmostEqual(result.density * result.J, self.material.rho0)

    def test_simple_shear(self):
        """測試簡單剪切的剪應力 μγ"""
        gamma = 2e-3
        result = stress_pipeline(np.array([[1.0, gamma], [0.0, 1.0]]), self.material)
        self.assertAlmostEqual(result.S[0, 1], self.material.mu * gamma)
        self.assertAlmostEqual(result.S[0, 1], result.S[1, 0])
        self.assertAlmostEqual(result.J, 1.0)

    def test_von_mises_pure_shear(self):
        """測試純剪應力 τ 的 von Mises 為 √3τ"""
        tau = 250.0
        self.assertAlmostEqual(float(von_mises_2d(np.array([[0.0, tau], [tau, 0.0]]))), np.sqrt(3.0) * tau)

    def test_batch_matches_single(self):
        """測試批次與單一矩陣結果一致"""
        F = np.array([[[1.01, 0.0], [0.0, 1.0]], [[1.0, 0.02], [0.0, 0.99]]])
        batch = stress_pipeline(F, self.material)
        single = stress_pipeline(F[1], self.material)
        np.testing.assert_allclose(batch.S[1], single.S)
        self.assertAlmostEqual(float(batch.von_mises[1]), float(single.von_mises))


class SolidDynamicsTest(SimpleTestCase):
    """固體動量方程式、邊界條件與能量測試"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.system, cls.reference, cls.material = solid_patch()

    def test_rest_state_has_zero_rate(self):
        """測試未變形且無重力時加速度為 0"""
        state = SolidState.at_rest(self.reference, self.material)
        np.testing.assert_array_equal(solid_momentum_rate(state, self.reference, self.material, (0.0, 0.0)), 0.0)

    def test_clamped_particles_do_not_accelerate(self):
        """測試固定端粒子的加速度為 0"""
        clamped = self.reference.positions0[:, 0] < 0.1
        state = SolidState.at_rest(self.reference, self.material, clamped=clamped)
        rate = solid_momentum_rate(state, self.reference, self.material, (0.0, -9.81))
        np.testing.assert_array_equal(rate[clamped], 0.0)
        np.testing.assert_allclose(rate[~clamped], np.tile([0.0, -9.81], (int((~clamped).sum()), 1)))

    def test_constraints_and_damping(self):
        """測試固定端速度歸零，其他粒子乘上 1 - ζΔt"""
        clamped = self.reference.positions0[:, 0] < 0.1
        state = SolidState.at_rest(self.reference, self.material, clamped=clamped)
        state.velocity[:] = (1.0, 0.0)
        state.displacement[:] = (1e-3, 0.0)
        rates = apply_constraints_and_damping(state, np.ones((self.system.n, 2)), DampingConfig(10.0), 0.01)
        np.testing.assert_array_equal(rates[clamped], 0.0)
        np.testing.assert_array_equal(state.velocity[clamped], 0.0)
        np.testing.assert_array_equal(state.displacement[clamped], 0.0)
        np.testing.assert_allclose(state.velocity[~clamped, 0], 0.9)

    def test_negative_damping(self):
        """測試阻尼係數不可為負值"""
        with self.assertRaises(ConfigurationError):
            DampingConfig(-1.0)

    def test_normals_follow_rotation(self):
        """測試法向量隨 F 旋轉"""
        state = SolidState.at_rest(self.reference, self.material)
        R = _rotation(0.2)
        state.F = np.broadcast_to(R, state.F.shape).copy()
        normals = surface_normals(state, self.reference)
        surface = self.reference.surface
        np.testing.assert_allclose(normals[surface], self.reference.normals0[surface] @ R.T, atol=1e-12)

    def test_strain_energy_of_uniaxial_stretch(self):
        """測試單軸拉伸的應變能"""
        state = SolidState.at_rest(self.reference, self.material)
        self.assertEqual(strain_energy(state, self.reference), 0.0)
        eps = 1e-3
        state.displacement = self.reference.positions0 @ np.diag([eps, 0.0]).T
        update_stress(state, self.reference, self.material)
        strain = eps + 0.5 * eps ** 2
        area = float(self.reference.volume0.sum())
        expected = area * 0.5 * (self.material.lam + 2.0 * self.material.mu) * strain ** 2
        self.assertAlmostEqual(strain_energy(state, self.reference) / expected, 1.0, places=8)

    def test_kinematics_history(self):
        """測試子步歷史紀錄"""
        history = KinematicsHistory()
        history.append(np.zeros((2, 2)), np.ones((2, 2)), 1e-5)
        history.append(np.ones((2, 2)), np.ones((2, 2)), 2e-5)
        self.assertEqual(len(history), 2)
        self.assertEqual(history.durations, [1e-5, 2e-5])


class BeamBendingTest(SimpleTestCase):
    """梁彎曲與梁理論比較測試"""

    def test_cantilever_deflection_converges(self):
        """測試懸臂靜態撓度在 bh/dp = 8 時與梁理論相差 20% 以內，且誤差比 bh/dp = 4 減少一半以上"""
        fine, theory = cantilever_deflection(8)
        coarse, _ = cantilever_deflection(4)
        self.assertGreater(fine / theory, 1.0)
        self.assertLess(fine / theory, 1.2)
        self.assertLess(fine / theory - 1.0, 0.5 * (coarse / theory - 1.0))

    def test_free_plate_first_mode(self):
        """測試自由板第一彎曲模態頻率在 bh/dp = 8 時比薄梁理論低 10% 以內"""
        frequency, theory = free_plate_frequency(8)
        self.assertLess(frequency, theory)
        self.assertGreater(frequency, 0.9 * theory)
