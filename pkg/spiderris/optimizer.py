"""
Совместная оптимизация положения RIS на платформе и фазовых сдвигов её
элементов роем частиц (PSO), а также полный перебор для малых задач.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from spiderris.beamforming import design_link, design_rf
from spiderris.channel import composite_channel, mean_angles_from_geometry
from spiderris.exceptions import GridTooLargeError

logger = logging.getLogger(__name__)

GRID_LIMIT = 10 ** 7


@dataclass(frozen=True)
class RisState:
    """Положение платформы (x_r, y_r) и фазы элементов phi в [0, 2pi)."""
    x: float
    y: float
    phases: np.ndarray

    @property
    def phase_matrix(self):
        return np.diag(np.exp(1j * self.phases))


@dataclass(frozen=True)
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray
    best_value: float


@dataclass
class SwarmState:
    """
    Состояние роя: позиции и скорости частиц (строки), личные лучшие,
    глобальный лучший и история значения глобального лучшего по итерациям.
    """
    positions: np.ndarray
    velocities: np.ndarray
    best_positions: np.ndarray
    best_values: np.ndarray
    global_position: np.ndarray
    global_value: float
    history: list = field(default_factory=list)

    @property
    def size(self):
        return self.positions.shape[0]

    def particle(self, index):
        return Particle(
            position=self.positions[index].copy(),
            velocity=self.velocities[index].copy(),
            best_position=self.best_positions[index].copy(),
            best_value=float(self.best_values[index]),
        )


@dataclass(frozen=True)
class SwarmResult:
    position: np.ndarray
    value: float
    history: list


@dataclass(frozen=True)
class JointResult:
    state: RisState
    rate: float
    history: list


def decode(position, geometry, num_elements=None):
    """
    Отображение точки единичного гиперкуба [0, 1]^(M_I + 2) в состояние RIS:
    первые две координаты - положение на платформе, остальные - фазы.
    """
    position = np.asarray(position, dtype=float)
    if num_elements is not None and position.size != num_elements + 2:
        raise ValueError(f"Длина вектора {position.size} не равна M_I + 2 = {num_elements + 2}")
    x_min, x_max = geometry.platform_x_range
    y_min, y_max = geometry.platform_y_range
    return RisState(
        x=x_min + position[0] * (x_max - x_min),
        y=y_min + position[1] * (y_max - y_min),
        phases=np.mod(2 * np.pi * position[2:], 2 * np.pi),
    )


def encode_position(x, y, geometry):
    """Координаты платформы в долях диапазона."""
    x_min, x_max = geometry.platform_x_range
    y_min, y_max = geometry.platform_y_range
    return np.array([(x - x_min) / (x_max - x_min), (y - y_min) / (y_max - y_min)])


class RisProblem:
    """
    Целевая функция одного испытания.

    Случайная часть каналов (ChannelTrial) заморожена. RF-ступени строятся
    по угловой статистике того положения RIS, которое оценивается, и
    кэшируются по координатам платформы. Каскад Tx-RIS-Rx усиливается на
    config.ris_reflection_gain_db (апертурное усиление отражения).
    """

    def __init__(self, config, geometry, channels, initial_position=None):
        self.config = config
        self.geometry = geometry
        self.channels = channels
        self.initial_position = initial_position or geometry.platform_center
        self.transmit_power = config.transmit_power_w
        self.noise = config.noise_power_w
        self.reflection_gain = 10 ** (config.ris_reflection_gain_db / 20)
        self._rf_cache = {}

    @property
    def num_elements(self):
        return self.config.ris_elements.count

    def rf_at(self, x, y):
        key = (float(x), float(y))
        if key not in self._rf_cache:
            node = self.geometry.node_position(x, y)
            self._rf_cache[key] = design_rf(
                self.config,
                mean_angles_from_geometry(self.geometry.tx_position, node),
                mean_angles_from_geometry(node, self.geometry.ue_position),
            )
        return self._rf_cache[key]

    def channel(self, state):
        realization = self.channels.realize(self.config, self.geometry, self.geometry.node_position(state.x, state.y))
        return self.reflection_gain * composite_channel(realization.h_ir, state.phases, realization.h_ti)

    def design(self, state):
        return design_link(
            self.channel(state), self.rf_at(state.x, state.y), self.transmit_power, self.config.num_streams, self.noise
        )

    def rate(self, state):
        return self.design(state).rate


def fitness(position, problem):
    """Достижимая скорость для частицы (бит/с/Гц)."""
    return problem.rate(decode(position, problem.geometry, problem.num_elements))


def _evaluate(fitness_fn, positions):
    return np.array([fitness_fn(row) for row in positions], dtype=float)


def initialize_swarm(fitness_fn, dimension, params, rng):
    """Нулевые скорости, позиции равномерно в [0, 1]."""
    positions = rng.random((params.swarm_size, dimension))
    values = _evaluate(fitness_fn, positions)
    leader = int(np.argmax(values))
    return SwarmState(
        positions=positions,
        velocities=np.zeros_like(positions),
        best_positions=positions.copy(),
        best_values=values.copy(),
        global_position=positions[leader].copy(),
        global_value=float(values[leader]),
        history=[float(values[leader])],
    )


def pso_step(state, params, t, rng, fitness_fn):
    """
    Одна итерация роя.

    Скорость: mu_1 Y_1 (глобальный - x) + mu_2 Y_2 (личный - x) + mu_3(t) v,
    ограничение по модулю velocity_clamp; позиция x + v зажимается в [0, 1]
    с обнулением скорости по нарушенной координате.
    """
    shape = state.positions.shape
    social = rng.random(shape)
    cognitive = rng.random(shape)
    velocities = (
        params.social_weight * social * (state.global_position - state.positions)
        + params.cognitive_weight * cognitive * (state.best_positions - state.positions)
        + params.inertia(t) * state.velocities
    )
    velocities = np.clip(velocities, -params.velocity_clamp, params.velocity_clamp)
    positions = state.positions + velocities
    outside = (positions < 0.0) | (positions > 1.0)
    positions = np.clip(positions, 0.0, 1.0)
    velocities[outside] = 0.0

    values = _evaluate(fitness_fn, positions)
    improved = values > state.best_values
    best_positions = state.best_positions.copy()
    best_positions[improved] = positions[improved]
    best_values = np.where(improved, values, state.best_values)

    global_position = state.global_position
    global_value = state.global_value
    leader = int(np.argmax(best_values))
    if best_values[leader] > global_value:
        global_position = best_positions[leader].copy()
        global_value = float(best_values[leader])

    return SwarmState(
        positions=positions,
        velocities=velocities,
        best_positions=best_positions,
        best_values=best_values,
        global_position=global_position,
        global_value=global_value,
        history=state.history + [global_value],
    )


def run_swarm(fitness_fn, dimension, params, rng, iterations=None):
    """Рой в единичном гиперкубе размерности dimension (максимизация)."""
    iterations = params.iterations if iterations is None else iterations
    state = initialize_swarm(fitness_fn, dimension, params, rng)
    for t in range(1, iterations + 1):
        state = pso_step(state, params, t, rng, fitness_fn)
        logger.debug("Итерация %d: лучшее значение %.6f", t, state.global_value)
    return SwarmResult(position=state.global_position, value=state.global_value, history=state.history)


def run(problem, params, rng, iterations=None):
    """
    Совместный поиск положения и фаз RIS.

    Возвращает лучшее декодированное состояние, его скорость и историю
    глобального лучшего (длина T + 1).
    """
    result = run_swarm(
        lambda position: fitness(position, problem), problem.num_elements + 2, params, rng, iterations
    )
    state = decode(result.position, problem.geometry, problem.num_elements)
    return JointResult(state=state, rate=result.value, history=result.history)


def _grid(steps):
    return np.linspace(0.0, 1.0, steps) if steps > 1 else np.array([0.5])


def brute_force_joint(problem, position_grid_steps, phase_grid_steps, limit=GRID_LIMIT):
    """
    Полный перебор по сетке положений (position_grid_steps по каждой оси) и
    фаз (phase_grid_steps значений 2pi k / steps на элемент).
    """
    num_elements = problem.num_elements
    count = position_grid_steps ** 2 * phase_grid_steps ** num_elements
    if count > limit:
        raise GridTooLargeError(count, limit)

    coordinates = _grid(position_grid_steps)
    phase_fractions = np.arange(phase_grid_steps) / phase_grid_steps
    best_state, best_rate = None, -math.inf
    for px, py in itertools.product(coordinates, coordinates):
        for fractions in itertools.product(phase_fractions, repeat=num_elements):
            state = decode(np.array([px, py, *fractions]), problem.geometry, num_elements)
            rate = problem.rate(state)
            if rate > best_rate:
                best_state, best_rate = state, rate
    logger.debug("Перебор %d точек, лучшая скорость %.6f", count, best_rate)
    return best_state, best_rate
