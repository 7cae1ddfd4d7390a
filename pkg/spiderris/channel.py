"""
Геометрический mmWave-канал (модель Салеха-Валенсуэлы) для линий
Tx-RIS и RIS-Rx, управляющие векторы URA и составной канал через RIS.
"""
import logging
import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from spiderris.exceptions import DegenerateGeometryError, DimensionMismatchError
from spiderris.scenario import Stream, rng_stream

logger = logging.getLogger(__name__)


class LinkTag(StrEnum):
    TI = "TI"
    IR = "IR"


@dataclass(frozen=True)
class LinkAngles:
    """
    Средние углы линии (радианы) и её длина (метры):
        - departure_* - на передающем конце
        - arrival_* - на приёмном конце
    """
    departure_elevation: float
    departure_azimuth: float
    arrival_elevation: float
    arrival_azimuth: float
    distance: float


@dataclass(frozen=True)
class PathSet:
    """
    L путей одной линии: комплексные усиления и углы EAoD, AAoD, EAoA, AAoA
    для каждого пути, длина линии tau и метка линии.
    """
    gains: np.ndarray
    departure_elevation: np.ndarray
    departure_azimuth: np.ndarray
    arrival_elevation: np.ndarray
    arrival_azimuth: np.ndarray
    distance: float
    link: LinkTag

    @property
    def num_paths(self):
        return len(self.gains)


@dataclass(frozen=True)
class PathDraw:
    """
    Случайная часть линии, фиксируемая на всё испытание: усиления путей и
    угловые отклонения от средних углов (столбцы EAoD, AAoD, EAoA, AAoA).
    """
    gains: np.ndarray
    offsets: np.ndarray

    @classmethod
    def draw(cls, num_paths, elevation_spread, azimuth_spread, rng):
        spreads = np.array([elevation_spread, azimuth_spread, elevation_spread, azimuth_spread])
        offsets = rng.uniform(-1.0, 1.0, size=(num_paths, 4)) * spreads
        gains = (rng.standard_normal(num_paths) + 1j * rng.standard_normal(num_paths)) / math.sqrt(2)
        return cls(gains=gains, offsets=offsets)

    def realize(self, angles, link):
        return PathSet(
            gains=self.gains,
            departure_elevation=angles.departure_elevation + self.offsets[:, 0],
            departure_azimuth=angles.departure_azimuth + self.offsets[:, 1],
            arrival_elevation=angles.arrival_elevation + self.offsets[:, 2],
            arrival_azimuth=angles.arrival_azimuth + self.offsets[:, 3],
            distance=angles.distance,
            link=link,
        )


@dataclass(frozen=True)
class ChannelRealization:
    h_ti: np.ndarray
    h_ir: np.ndarray
    paths_ti: PathSet
    paths_ir: PathSet
    angles_ti: LinkAngles
    angles_ir: LinkAngles


def _element_indices(mx, my):
    # порядок Кронекера: индекс x - старший
    return np.repeat(np.arange(mx), my), np.tile(np.arange(my), mx)


def steering_vector(theta, psi, mx, my, spacing):
    """
    Управляющий вектор URA с единичной евклидовой нормой.

    Для массивов theta, psi длины L возвращает матрицу (mx*my, L),
    по столбцу на направление.
    """
    theta = np.asarray(theta, dtype=float)
    psi = np.asarray(psi, dtype=float)
    ix, iy = _element_indices(mx, my)
    u = np.sin(theta) * np.cos(psi)
    v = np.sin(theta) * np.sin(psi)
    phase = -2j * np.pi * spacing * (np.multiply.outer(ix, u) + np.multiply.outer(iy, v))
    return np.exp(phase) / math.sqrt(mx * my)


def path_loss_linear(carrier_frequency_ghz, distance, exponent):
    """Линейное ослабление мощности: 32.4 + 20 lg f_c + 10 eta lg tau (дБ)."""
    loss_db = 32.4 + 20 * math.log10(carrier_frequency_ghz) + 10 * exponent * math.log10(distance)
    return 10 ** (loss_db / 10)


def _end_angles(vector, distance):
    elevation = math.acos(min(1.0, abs(vector[2]) / distance))
    azimuth = math.atan2(vector[1], vector[0])
    return elevation, azimuth


def mean_angles_from_geometry(pos_a, pos_b):
    """
    Средние углы линии из геометрии.

    Угол места отсчитывается от нормали решётки (вертикаль: горизонтальные
    решётки Tx/UE и обращённая вниз RIS), азимут - atan2(dy, dx). Углы
    отправления берутся в точке pos_a, углы прихода - в pos_b (направление
    на источник).
    """
    pos_a = np.asarray(pos_a, dtype=float)
    pos_b = np.asarray(pos_b, dtype=float)
    delta = pos_b - pos_a
    distance = float(np.linalg.norm(delta))
    if distance == 0.0:
        raise DegenerateGeometryError(f"Совпадающие концы линии {pos_a.tolist()}")
    departure_elevation, departure_azimuth = _end_angles(delta, distance)
    arrival_elevation, arrival_azimuth = _end_angles(-delta, distance)
    return LinkAngles(
        departure_elevation=departure_elevation,
        departure_azimuth=departure_azimuth,
        arrival_elevation=arrival_elevation,
        arrival_azimuth=arrival_azimuth,
        distance=distance,
    )


def draw_paths(angles, elevation_spread, azimuth_spread, num_paths, rng, link=LinkTag.TI):
    """Углы путей равномерно в пределах +-разброса, усиления CN(0, 1)."""
    return PathDraw.draw(num_paths, elevation_spread, azimuth_spread, rng).realize(angles, link)


def link_channel(path_set, tx_shape, rx_shape, carrier_frequency_ghz, exponent, spacing):
    """
    Матрица канала (rx.count x tx.count):
    H = sum_l z_l / sqrt(PL(tau)) * a_r a_t^T, где a - управляющие векторы
    с единичным модулем элементов.
    """
    a_t = steering_vector(
        path_set.departure_elevation, path_set.departure_azimuth, tx_shape.mx, tx_shape.my, spacing
    ) * math.sqrt(tx_shape.count)
    a_r = steering_vector(
        path_set.arrival_elevation, path_set.arrival_azimuth, rx_shape.mx, rx_shape.my, spacing
    ) * math.sqrt(rx_shape.count)
    amplitude = path_set.gains / math.sqrt(
        path_loss_linear(carrier_frequency_ghz, path_set.distance, exponent)
    )
    return (a_r * amplitude) @ a_t.T


def composite_channel(h_ir, phases, h_ti):
    """H = H_IR diag(e^{j phi}) H_TI."""
    phases = np.asarray(phases, dtype=float)
    if h_ir.shape[1] != len(phases) or h_ti.shape[0] != len(phases):
        raise DimensionMismatchError(
            f"H_IR {h_ir.shape}, phi ({len(phases)},), H_TI {h_ti.shape}: размерности не согласованы"
        )
    return (h_ir * np.exp(1j * phases)) @ h_ti


@dataclass(frozen=True)
class ChannelTrial:
    """Случайные величины одного испытания для линий TI и IR."""
    ti: PathDraw
    ir: PathDraw

    @classmethod
    def draw(cls, config, seed, trial):
        rng = rng_stream(seed, trial, Stream.CHANNEL)
        ti = PathDraw.draw(config.num_paths, config.elevation_spread_rad, config.azimuth_spread_rad, rng)
        ir = PathDraw.draw(config.num_paths, config.elevation_spread_rad, config.azimuth_spread_rad, rng)
        return cls(ti=ti, ir=ir)

    def realize(self, config, geometry, node_position, *, tx_shape=None, node_rx_shape=None,
                node_tx_shape=None, rx_shape=None):
        """
        Каналы Tx -> узел -> UE для узла на платформе.

        По умолчанию узел - RIS (ris_elements с обеих сторон); для реле
        передаются формы его приёмной и передающей решёток.
        """
        tx_shape = tx_shape or config.tx_antennas
        rx_shape = rx_shape or config.rx_antennas
        node_rx_shape = node_rx_shape or config.ris_elements
        node_tx_shape = node_tx_shape or config.ris_elements

        angles_ti = mean_angles_from_geometry(geometry.tx_position, node_position)
        angles_ir = mean_angles_from_geometry(node_position, geometry.ue_position)
        paths_ti = self.ti.realize(angles_ti, LinkTag.TI)
        paths_ir = self.ir.realize(angles_ir, LinkTag.IR)
        spacing = config.element_spacing_wavelengths
        h_ti = link_channel(
            paths_ti, tx_shape, node_rx_shape, config.carrier_frequency_ghz, config.path_loss_exponent, spacing
        )
        h_ir = link_channel(
            paths_ir, node_tx_shape, rx_shape, config.carrier_frequency_ghz, config.path_loss_exponent, spacing
        )
        return ChannelRealization(
            h_ti=h_ti, h_ir=h_ir, paths_ti=paths_ti, paths_ir=paths_ir, angles_ti=angles_ti, angles_ir=angles_ir
        )


def dump_channels(realization, directory, prefix):
    """Сохранение H_TI и H_IR в .npy (по файлу на линию)."""
    directory.mkdir(parents=True, exist_ok=True)
    for link, matrix in ((LinkTag.TI, realization.h_ti), (LinkTag.IR, realization.h_ir)):
        path = directory / f"{prefix}_{link}.npy"
        np.save(path, np.ascontiguousarray(matrix))
        logger.debug("Канал %s сохранён в %s", link, path)
