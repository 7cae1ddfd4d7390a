"""
Угловое гибридное формирование луча (AB-HBF): аналоговые RF-ступени из
квантованных пар углов, цифровые BB-ступени из SVD эффективного канала и
достижимая скорость.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from spiderris.exceptions import DimensionMismatchError, InvalidBeamError

logger = logging.getLogger(__name__)

# Плотность выборки области углов при отборе лучей (на каждую ось)
SUPPORT_SAMPLES = 41

CONDITION_LIMIT = 1e12
RIDGE = 1e-12


@dataclass(frozen=True)
class QuantizedGrid:
    lambda_x: np.ndarray
    lambda_y: np.ndarray

    @property
    def pairs(self):
        """Все пары (lambda_x, lambda_y), индекс x - старший."""
        return [(float(x), float(y)) for x in self.lambda_x for y in self.lambda_y]

    def cell_of(self, cx, cy):
        """Индексы ячеек (u, k), в которые попадают точки пространства косинусов."""
        mx, my = len(self.lambda_x), len(self.lambda_y)
        u = np.clip(np.floor((np.asarray(cx) + 1) * mx / 2).astype(int), 0, mx - 1)
        k = np.clip(np.floor((np.asarray(cy) + 1) * my / 2).astype(int), 0, my - 1)
        return u, k


@dataclass(frozen=True)
class AngleSupport:
    """
    Область направляющих косинусов sin(theta) * (cos(psi), sin(psi)) для
    theta в elevation и psi в azimuth (границы в радианах).
    """
    elevation: tuple
    azimuth: tuple

    @classmethod
    def around(cls, elevation, azimuth, elevation_spread, azimuth_spread):
        return cls(
            elevation=(elevation - elevation_spread, elevation + elevation_spread),
            azimuth=(azimuth - azimuth_spread, azimuth + azimuth_spread),
        )

    @property
    def center(self):
        theta = sum(self.elevation) / 2
        psi = sum(self.azimuth) / 2
        return math.sin(theta) * math.cos(psi), math.sin(theta) * math.sin(psi)

    def sample(self, samples=SUPPORT_SAMPLES):
        """
        Равномерная сетка по (theta, psi), отображённая в пространство косинусов.

        Возвращает координаты точек и их вес - элемент площади |sin cos| dtheta dpsi.
        """
        theta = np.linspace(*self.elevation, samples)
        psi = np.linspace(*self.azimuth, samples)
        theta, psi = np.meshgrid(theta, psi, indexing="ij")
        cx = np.sin(theta) * np.cos(psi)
        cy = np.sin(theta) * np.sin(psi)
        weight = np.abs(np.sin(theta) * np.cos(theta))
        return cx.ravel(), cy.ravel(), weight.ravel()


@dataclass(frozen=True)
class RfStages:
    f1: np.ndarray
    f2: np.ndarray
    beams_tx: tuple
    beams_rx: tuple


@dataclass(frozen=True)
class EffectiveChannel:
    """H_eff = F2 H F1 = U diag(s) V^H; s по невозрастанию."""
    matrix: np.ndarray
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    rank: int


@dataclass(frozen=True)
class BeamformerSet:
    f1: np.ndarray
    b1: np.ndarray
    f2: np.ndarray
    b2: np.ndarray
    streams: int
    degraded: bool = False

    @property
    def transmit_power(self):
        return float(np.linalg.norm(self.f1 @ self.b1) ** 2)


@dataclass(frozen=True)
class LinkDesign:
    beamformers: BeamformerSet
    effective: EffectiveChannel
    rate: float
    regularized: bool


def build_grid(mx, my):
    """Квантованные пары: lambda = -1 + (2u - 1) / M, u = 1..M."""
    lambda_x = -1 + (2 * np.arange(1, mx + 1) - 1) / mx
    lambda_y = -1 + (2 * np.arange(1, my + 1) - 1) / my
    return QuantizedGrid(lambda_x=lambda_x, lambda_y=lambda_y)


def select_beams(grid, support, num_streams, policy):
    """
    Пары сетки, чьи ячейки пересекают область углов.

    Порядок - по убыванию площади пересечения (затем по индексу сетки); пары
    вне единичного круга отбрасываются. Число лучей ограничено
    [max(N_S, min_chains), max_chains]; недостающие добираются ближайшими к
    центру области парами.
    """
    mx, my = len(grid.lambda_x), len(grid.lambda_y)
    cx, cy, weight = support.sample()
    u, k = grid.cell_of(cx, cy)
    overlap = np.zeros(mx * my)
    np.add.at(overlap, u * my + k, weight)
    # клетки, задетые только краем области (вес 0 на полюсе), тоже считаются
    touched = np.zeros(mx * my, dtype=bool)
    touched[u * my + k] = True

    pairs = grid.pairs
    visible = np.array([x * x + y * y <= 1.0 for x, y in pairs])
    candidates = [i for i in range(mx * my) if touched[i] and visible[i]]
    candidates.sort(key=lambda i: (-overlap[i], i))

    lower = min(max(num_streams, policy.min_chains), int(visible.sum()))
    selected = candidates[:policy.max_chains]
    if len(selected) < lower:
        center_x, center_y = support.center
        rest = [i for i in range(mx * my) if visible[i] and i not in selected]
        rest.sort(key=lambda i: ((pairs[i][0] - center_x) ** 2 + (pairs[i][1] - center_y) ** 2, i))
        selected += rest[:lower - len(selected)]
    return [pairs[i] for i in selected]


def beam_vector(beam, shape, spacing):
    """Вектор RF-ступени для пары (lambda_x, lambda_y), модуль элементов 1/sqrt(M)."""
    lambda_x, lambda_y = beam
    if lambda_x * lambda_x + lambda_y * lambda_y > 1.0 + 1e-12:
        raise InvalidBeamError(f"Пара ({lambda_x}, {lambda_y}) вне единичного круга")
    ix = np.repeat(np.arange(shape.mx), shape.my)
    iy = np.tile(np.arange(shape.my), shape.mx)
    return np.exp(2j * np.pi * spacing * (ix * lambda_x + iy * lambda_y)) / math.sqrt(shape.count)


def rf_stages(beams_tx, beams_rx, tx_shape, rx_shape, spacing):
    """F1 - столбцы по лучам передатчика, F2 - строки по лучам приёмника."""
    if not beams_tx or not beams_rx:
        raise InvalidBeamError("Пустой список лучей")
    f1 = np.column_stack([beam_vector(beam, tx_shape, spacing) for beam in beams_tx])
    f2 = np.vstack([beam_vector(beam, rx_shape, spacing) for beam in beams_rx])
    return f1, f2


def design_rf(config, tx_angles, rx_angles, tx_shape=None, rx_shape=None):
    """
    RF-ступени по угловой статистике: углы отправления на Tx (tx_angles)
    и углы прихода на Rx (rx_angles).
    """
    tx_shape = tx_shape or config.tx_antennas
    rx_shape = rx_shape or config.rx_antennas
    elevation_spread = config.elevation_spread_rad
    azimuth_spread = config.azimuth_spread_rad
    tx_support = AngleSupport.around(
        tx_angles.departure_elevation, tx_angles.departure_azimuth, elevation_spread, azimuth_spread
    )
    rx_support = AngleSupport.around(
        rx_angles.arrival_elevation, rx_angles.arrival_azimuth, elevation_spread, azimuth_spread
    )
    policy = config.rf_chain_policy
    beams_tx = select_beams(build_grid(tx_shape.mx, tx_shape.my), tx_support, config.num_streams, policy)
    beams_rx = select_beams(build_grid(rx_shape.mx, rx_shape.my), rx_support, config.num_streams, policy)
    f1, f2 = rf_stages(beams_tx, beams_rx, tx_shape, rx_shape, config.element_spacing_wavelengths)
    return RfStages(f1=f1, f2=f2, beams_tx=tuple(beams_tx), beams_rx=tuple(beams_rx))


def effective_channel(f2, h, f1):
    if f2.shape[1] != h.shape[0] or h.shape[1] != f1.shape[0]:
        raise DimensionMismatchError(f"F2 {f2.shape}, H {h.shape}, F1 {f1.shape}: размерности не согласованы")
    matrix = f2 @ h @ f1
    u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    v = vh.conj().T
    # первый ненулевой элемент столбца V делаем вещественным положительным
    for column in range(v.shape[1]):
        nonzero = np.flatnonzero(np.abs(v[:, column]) > 1e-14)
        if nonzero.size:
            pivot = v[nonzero[0], column]
            rotation = np.conj(pivot) / abs(pivot)
            v[:, column] *= rotation
            u[:, column] *= rotation
    tolerance = s[0] * max(matrix.shape) * np.finfo(float).eps if s.size else 0.0
    rank = int(np.sum(s > tolerance)) if s.size and s[0] > 0 else 0
    return EffectiveChannel(matrix=matrix, u=u, s=s, v=v, rank=rank)


def bb_stages(effective, transmit_power, num_streams, f1=None):
    """
    B1 = sqrt(P_T / N_S) V_1, B2 = U_1^H.

    При rank < N_S число потоков снижается до ранга (не меньше одного).
    Если передан F1, мощность ||F1 B1||_F^2 сверяется с P_T и при
    неортогональных столбцах F1 нормируется.
    """
    streams = num_streams
    degraded = False
    if effective.rank < num_streams:
        streams = max(effective.rank, 1)
        degraded = True
        logger.debug("Ранг эффективного канала %d < N_S=%d", effective.rank, num_streams)
    v1 = effective.v[:, :streams]
    u1 = effective.u[:, :streams]
    b1 = math.sqrt(transmit_power / streams) * v1
    b2 = u1.conj().T
    if f1 is not None:
        power = np.linalg.norm(f1 @ b1) ** 2
        if power > 0 and abs(power - transmit_power) > 1e-9 * transmit_power:
            logger.warning(
                "Столбцы F1 неортогональны: ||F1 B1||^2 = %.6g вместо P_T = %.6g, B1 перенормирован",
                power, transmit_power,
            )
            b1 = b1 * math.sqrt(transmit_power / power)
    return b1, b2, streams, degraded


def _rate(beamformers, effective, noise):
    b1, b2, f2 = beamformers.b1, beamformers.b2, beamformers.f2
    signal = b2 @ effective.matrix @ b1
    noise_cov = noise * (b2 @ f2 @ f2.conj().T @ b2.conj().T)
    noise_cov = (noise_cov + noise_cov.conj().T) / 2
    size = noise_cov.shape[0]
    regularized = False
    if np.linalg.cond(noise_cov) > CONDITION_LIMIT:
        scale = np.trace(noise_cov).real / size
        noise_cov = noise_cov + RIDGE * (scale if scale > 0 else 1.0) * np.eye(size)
        regularized = True
        logger.warning("Ковариация шума плохо обусловлена, добавлена регуляризация")
    whitened = np.linalg.solve(np.linalg.cholesky(noise_cov), signal)
    gram = np.eye(size) + whitened @ whitened.conj().T
    _, logdet = np.linalg.slogdet(gram)
    return max(float(logdet) / math.log(2), 0.0), regularized


def achievable_rate(beamformers, effective, noise):
    """R = log2 det(I + W^-1 B2 H_eff B1 B1^H H_eff^H B2^H), бит/с/Гц."""
    rate, _ = _rate(beamformers, effective, noise)
    return rate


def design_link(h, rf, transmit_power, num_streams, noise):
    """Полный цикл BB-ступеней для канала h при заданных RF-ступенях."""
    effective = effective_channel(rf.f2, h, rf.f1)
    b1, b2, streams, degraded = bb_stages(effective, transmit_power, num_streams, f1=rf.f1)
    beamformers = BeamformerSet(f1=rf.f1, b1=b1, f2=rf.f2, b2=b2, streams=streams, degraded=degraded)
    rate, regularized = _rate(beamformers, effective, noise)
    return LinkDesign(beamformers=beamformers, effective=effective, rate=rate, regularized=regularized)
