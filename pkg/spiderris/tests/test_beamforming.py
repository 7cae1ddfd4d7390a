import math
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given
from hypothesis import settings as hypothesis_settings
from hypothesis import strategies as st

from spiderris.beamforming import (
    AngleSupport, BeamformerSet, achievable_rate, bb_stages, beam_vector, build_grid, design_link,
    design_rf, effective_channel, rf_stages, select_beams,
)
from spiderris.channel import mean_angles_from_geometry
from spiderris.exceptions import InvalidBeamError
from spiderris.scenario import ArrayShape, RfChainPolicy, default_config


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def grid_stages(rng, tx_shape, rx_shape, count, spacing=0.5):
    """RF-ступени из count случайных различных пар сетки."""
    pairs_tx = [p for p in build_grid(tx_shape.mx, tx_shape.my).pairs if p[0] ** 2 + p[1] ** 2 <= 1]
    pairs_rx = [p for p in build_grid(rx_shape.mx, rx_shape.my).pairs if p[0] ** 2 + p[1] ** 2 <= 1]
    beams_tx = [pairs_tx[i] for i in rng.choice(len(pairs_tx), count, replace=False)]
    beams_rx = [pairs_rx[i] for i in rng.choice(len(pairs_rx), count, replace=False)]
    return rf_stages(beams_tx, beams_rx, tx_shape, rx_shape, spacing)


def eigen_rate(beamformers, effective, noise):
    """Скорость через собственные числа W^-1/2 S W^-1/2."""
    b1, b2, f2 = beamformers.b1, beamformers.b2, beamformers.f2
    signal = b2 @ effective.matrix @ b1
    covariance = noise * (b2 @ f2 @ f2.conj().T @ b2.conj().T)
    values, vectors = np.linalg.eigh((covariance + covariance.conj().T) / 2)
    root = vectors @ np.diag(values ** -0.5) @ vectors.conj().T
    whitened = root @ signal @ signal.conj().T @ root.conj().T
    return float(np.sum(np.log2(1 + np.linalg.eigvalsh((whitened + whitened.conj().T) / 2))))


class GridTestCase(SimpleTestCase):

    def test_reference_grids(self):
        np.testing.assert_allclose(build_grid(8, 1).lambda_x, [-0.875, -0.625, -0.375, -0.125, 0.125, 0.375, 0.625, 0.875])
        np.testing.assert_allclose(build_grid(1, 1).lambda_x, [0.0])
        np.testing.assert_allclose(build_grid(2, 2).lambda_y, [-0.5, 0.5])

    @given(size=st.integers(min_value=1, max_value=32))
    def test_grid_inside_interval(self, size):
        values = build_grid(size, 1).lambda_x
        self.assertEqual(len(values), size)
        self.assertTrue(np.all(np.diff(values) > 0))
        self.assertTrue(np.all(np.abs(values) < 1))

    def test_cell_of(self):
        grid = build_grid(8, 8)
        u, k = grid.cell_of(np.array([0.1, -0.99]), np.array([0.4, 0.99]))
        self.assertEqual(u.tolist(), [4, 0])
        self.assertEqual(k.tolist(), [5, 7])


class SelectBeamsTestCase(SimpleTestCase):

    def setUp(self):
        self.grid = build_grid(8, 8)

    def test_whole_hemisphere(self):
        """
        Область на всю полусферу задевает все видимые пары сетки
        """
        support = AngleSupport(elevation=(0.0, math.pi / 2), azimuth=(-math.pi, math.pi))
        visible = {pair for pair in self.grid.pairs if pair[0] ** 2 + pair[1] ** 2 <= 1}
        beams = select_beams(self.grid, support, 2, RfChainPolicy(min_chains=2, max_chains=64))
        self.assertEqual(set(beams), visible)
        self.assertEqual(len(beams), len(visible))

        limited = select_beams(self.grid, support, 2, RfChainPolicy(min_chains=2, max_chains=16))
        self.assertEqual(len(limited), 16)

    def test_point_support(self):
        """
        Область из одной точки: её ячейка первая, остальное добирается до N_S
        """
        target = (0.125, 0.375)
        theta = math.asin(math.hypot(*target))
        psi = math.atan2(target[1], target[0])
        support = AngleSupport.around(theta, psi, 0.0, 0.0)
        beams = select_beams(self.grid, support, 2, RfChainPolicy(min_chains=2, max_chains=16))
        self.assertEqual(len(beams), 2)
        self.assertEqual(beams[0], target)
        self.assertNotEqual(beams[1], target)

    def test_selected_cells_intersect_support(self):
        support = AngleSupport.around(math.radians(40), math.radians(30), math.radians(20), math.radians(20))
        beams = select_beams(self.grid, support, 2, RfChainPolicy(min_chains=2, max_chains=64))
        cx, cy, _ = support.sample(201)
        u, k = self.grid.cell_of(cx, cy)
        touched = {(float(self.grid.lambda_x[a]), float(self.grid.lambda_y[b])) for a, b in zip(u, k)}
        self.assertGreaterEqual(len(beams), 2)
        for beam in beams:
            self.assertIn(beam, touched)
            self.assertLessEqual(beam[0] ** 2 + beam[1] ** 2, 1.0)

    def test_transmitter_beams_for_reference_geometry(self):
        config, geometry = default_config()
        node = geometry.node_position(*geometry.platform_center)
        angles = mean_angles_from_geometry(geometry.tx_position, node)
        rf = design_rf(config, angles, mean_angles_from_geometry(node, geometry.ue_position))
        self.assertEqual(rf.beams_tx[0], (0.625, 0.625))
        self.assertEqual(len(rf.beams_tx), 2)
        self.assertIn(rf.beams_tx[1], {(0.375, 0.625), (0.625, 0.375)})
        self.assertEqual(rf.f1.shape, (64, 2))
        self.assertEqual(rf.f2.shape[1], 64)


class RfStagesTestCase(SimpleTestCase):

    def test_broadside_beam(self):
        np.testing.assert_allclose(beam_vector((0.0, 0.0), ArrayShape(4, 4), 0.5), np.full(16, 0.25))

    def test_constant_modulus(self):
        f1, f2 = grid_stages(np.random.default_rng(0), ArrayShape(8, 8), ArrayShape(4, 2), 3)
        np.testing.assert_allclose(np.abs(f1), 1 / 8, atol=1e-12)
        np.testing.assert_allclose(np.abs(f2), 1 / math.sqrt(8), atol=1e-12)
        self.assertEqual(f1.shape, (64, 3))
        self.assertEqual(f2.shape, (3, 8))

    def test_grid_beams_are_orthogonal(self):
        """
        Различные лучи сетки ортогональны при шаге lambda/2
        """
        pairs = [pair for pair in build_grid(4, 4).pairs if pair[0] ** 2 + pair[1] ** 2 <= 1]
        beams = np.column_stack([beam_vector(pair, ArrayShape(4, 4), 0.5) for pair in pairs])
        self.assertEqual(len(pairs), 12)
        np.testing.assert_allclose(beams.conj().T @ beams, np.eye(12), atol=1e-12)

    def test_invalid_beam(self):
        with self.assertRaises(InvalidBeamError):
            beam_vector((0.9, 0.9), ArrayShape(2, 2), 0.5)
        with self.assertRaises(InvalidBeamError):
            rf_stages([], [(0.0, 0.0)], ArrayShape(2, 2), ArrayShape(2, 2), 0.5)


class EffectiveChannelTestCase(SimpleTestCase):

    def test_zero_channel(self):
        effective = effective_channel(np.eye(3), np.zeros((3, 4)), np.eye(4)[:, :2])
        np.testing.assert_array_equal(effective.s, np.zeros(2))
        self.assertEqual(effective.rank, 0)

    def test_scalar_channel(self):
        effective = effective_channel(np.eye(1), np.array([[3 - 4j]]), np.eye(1))
        self.assertAlmostEqual(float(effective.s[0]), 5.0)
        self.assertEqual(effective.rank, 1)

    def test_decomposition(self):
        rng = np.random.default_rng(1)
        h = random_complex(rng, (6, 5))
        effective = effective_channel(np.eye(6), h, np.eye(5))
        np.testing.assert_allclose(effective.u @ np.diag(effective.s) @ effective.v.conj().T, h, atol=1e-9)
        np.testing.assert_allclose(effective.u.conj().T @ effective.u, np.eye(5), atol=1e-12)
        np.testing.assert_allclose(effective.v.conj().T @ effective.v, np.eye(5), atol=1e-12)
        self.assertTrue(np.all(np.diff(effective.s) <= 0))
        self.assertEqual(effective.rank, 5)

    def test_phase_convention(self):
        """
        Первый ненулевой элемент каждого столбца V вещественный положительный
        """
        h = random_complex(np.random.default_rng(2), (4, 4))
        effective = effective_channel(np.eye(4), h, np.eye(4))
        first = effective.v[0]
        np.testing.assert_allclose(first.imag, 0.0, atol=1e-12)
        self.assertTrue(np.all(first.real > 0))


class BasebandTestCase(SimpleTestCase):

    def test_identity_channel(self):
        effective = effective_channel(np.eye(2), np.eye(2), np.eye(2))
        b1, b2, streams, degraded = bb_stages(effective, 2.0, 2)
        np.testing.assert_allclose(b1, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(b2, np.eye(2), atol=1e-12)
        self.assertEqual((streams, degraded), (2, False))

    def test_rank_deficient_channel(self):
        h = np.diag([2.0 + 0j, 0.0, 0.0])
        effective = effective_channel(np.eye(3), h, np.eye(3))
        b1, b2, streams, degraded = bb_stages(effective, 1.0, 2)
        self.assertEqual((streams, degraded), (1, True))
        self.assertEqual(b1.shape, (3, 1))
        self.assertEqual(b2.shape, (1, 3))

    def test_diagonalizes_effective_channel(self):
        """
        Внедиагональная масса B2 H B1 меньше 1e-8 диагональной на 200 случайных задачах
        """
        rng = np.random.default_rng(3)
        for trial in range(200):
            spacing = 0.5 if trial % 2 else 0.37
            streams = 1 + trial % 3
            f1, f2 = grid_stages(rng, ArrayShape(4, 4), ArrayShape(4, 4), 4, spacing)
            effective = effective_channel(f2, random_complex(rng, (16, 16)), f1)
            b1, b2, _, _ = bb_stages(effective, 10 ** rng.uniform(-2, 2), streams, f1=f1)
            product = b2 @ effective.matrix @ b1
            diagonal = np.diag(np.diag(product))
            ratio = np.linalg.norm(product - diagonal) / np.linalg.norm(diagonal)
            self.assertLess(ratio, 1e-8)

    def test_rescale_for_non_orthogonal_rf_is_logged(self):
        rng = np.random.default_rng(12)
        f1, f2 = grid_stages(rng, ArrayShape(4, 4), ArrayShape(4, 4), 3, 0.37)
        effective = effective_channel(f2, random_complex(rng, (16, 16)), f1)
        with self.assertLogs("spiderris.beamforming", "WARNING") as logs:
            bb_stages(effective, 1.0, 2, f1=f1)
        self.assertIn("перенормирован", logs.output[0])

    def test_orthogonal_rf_is_not_rescaled(self):
        rng = np.random.default_rng(13)
        f1, f2 = grid_stages(rng, ArrayShape(4, 4), ArrayShape(4, 4), 3)
        effective = effective_channel(f2, random_complex(rng, (16, 16)), f1)
        with self.assertNoLogs("spiderris.beamforming", "WARNING"):
            b1, _, _, _ = bb_stages(effective, 1.0, 2, f1=f1)
        np.testing.assert_allclose(b1, math.sqrt(0.5) * effective.v[:, :2], atol=1e-12)

    def test_power_constraint(self):
        """
        ||F1 B1||_F^2 = P_T для ортогональных и неортогональных RF-ступеней
        """
        rng = np.random.default_rng(4)
        for trial in range(100):
            spacing = 0.5 if trial % 2 else 0.37
            f1, f2 = grid_stages(rng, ArrayShape(4, 4), ArrayShape(4, 4), 3, spacing)
            effective = effective_channel(f2, random_complex(rng, (16, 16)), f1)
            power = 10 ** rng.uniform(-3, 3)
            b1, _, _, _ = bb_stages(effective, power, 2, f1=f1)
            self.assertTrue(math.isclose(np.linalg.norm(f1 @ b1) ** 2, power, rel_tol=1e-9))


class RateTestCase(SimpleTestCase):

    def design(self, h, power, noise, streams=2, spacing=0.5, seed=5):
        rng = np.random.default_rng(seed)
        f1, f2 = grid_stages(rng, ArrayShape(4, 4), ArrayShape(4, 4), max(streams, 2), spacing)
        effective = effective_channel(f2, h, f1)
        b1, b2, count, degraded = bb_stages(effective, power, streams, f1=f1)
        beamformers = BeamformerSet(f1=f1, b1=b1, f2=f2, b2=b2, streams=count, degraded=degraded)
        return beamformers, effective

    def test_zero_channel(self):
        beamformers, effective = self.design(np.zeros((16, 16)), 1.0, 1e-3)
        self.assertEqual(achievable_rate(beamformers, effective, 1e-3), 0.0)

    def test_single_stream(self):
        h = random_complex(np.random.default_rng(6), (16, 16))
        beamformers, effective = self.design(h, 2.0, 0.5, streams=1)
        expected = math.log2(1 + 2.0 * effective.s[0] ** 2 / 0.5)
        self.assertTrue(math.isclose(achievable_rate(beamformers, effective, 0.5), expected, rel_tol=1e-9))

    def test_matches_eigenvalue_formula(self):
        rng = np.random.default_rng(7)
        for seed in range(200):
            h = random_complex(rng, (16, 16))
            power = 10 ** rng.uniform(-2, 2)
            spacing = 0.5 if seed % 2 else 0.37
            beamformers, effective = self.design(h, power, 0.1, streams=1 + seed % 2, spacing=spacing, seed=seed)
            self.assertAlmostEqual(
                achievable_rate(beamformers, effective, 0.1), eigen_rate(beamformers, effective, 0.1), delta=1e-8
            )

    def test_high_snr_slope(self):
        """
        Удвоение мощности при высоком SNR даёт около N_S бит/с/Гц
        """
        h = random_complex(np.random.default_rng(8), (16, 16))
        _, effective = self.design(h, 1.0, 1.0)
        noise = effective.s[1] ** 2 / (2 * 1e6)
        low = achievable_rate(*self.design(h, 1.0, noise), noise)
        high = achievable_rate(*self.design(h, 2.0, noise), noise)
        self.assertAlmostEqual(high - low, 2.0, delta=0.01)

    def test_unimodular_rotation_invariance(self):
        h = random_complex(np.random.default_rng(9), (16, 16))
        beamformers, effective = self.design(h, 1.0, 0.2)
        rate = achievable_rate(beamformers, effective, 0.2)
        b1 = beamformers.b1.copy()
        b2 = beamformers.b2.copy()
        b1[:, 0] *= np.exp(0.7j)
        b2[1, :] *= np.exp(-1.3j)
        rotated = replace(beamformers, b1=b1, b2=b2)
        self.assertAlmostEqual(achievable_rate(rotated, effective, 0.2), rate, delta=1e-9)

    @hypothesis_settings(deadline=None, max_examples=30)
    @given(low=st.floats(min_value=-30, max_value=30), step=st.floats(min_value=0.5, max_value=10))
    def test_monotone_in_power(self, low, step):
        h = random_complex(np.random.default_rng(10), (16, 16))
        weak = achievable_rate(*self.design(h, 10 ** (low / 10), 1.0), 1.0)
        strong = achievable_rate(*self.design(h, 10 ** ((low + step) / 10), 1.0), 1.0)
        self.assertGreater(strong, weak)

    def test_design_link(self):
        config, geometry = default_config()
        node = geometry.node_position(*geometry.platform_center)
        rf = design_rf(
            config,
            mean_angles_from_geometry(geometry.tx_position, node),
            mean_angles_from_geometry(node, geometry.ue_position),
        )
        h = random_complex(np.random.default_rng(11), (64, 64))
        design = design_link(h, rf, config.transmit_power_w, config.num_streams, 1e-3)
        self.assertGreater(design.rate, 0.0)
        self.assertFalse(design.regularized)
        self.assertTrue(math.isclose(design.beamformers.transmit_power, config.transmit_power_w, rel_tol=1e-9))
