"""
Опорные схемы для сравнения: RIS в фиксированном положении (с оптимизацией
фаз и со случайными фазами), подвижная RIS со случайными фазами, совместная
оптимизация Spider RIS и подвижные DF-реле в полнодуплексном и
полудуплексном режимах.
"""
import logging
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property

import numpy as np

from spiderris import optimizer
from spiderris.beamforming import design_link, design_rf
from spiderris.channel import ChannelTrial
from spiderris.optimizer import RisProblem, RisState, decode, encode_position, run_swarm
from spiderris.scenario import Stream, rng_stream

logger = logging.getLogger(__name__)


class BaselineKind(StrEnum):
    FIXED_RIS_OPT_PHASE = "fixed_ris_opt_phase"
    FIXED_RIS_RANDOM_PHASE = "fixed_ris_random_phase"
    MOVABLE_RIS_RANDOM_PHASE = "movable_ris_random_phase"
    MOVABLE_RIS_JOINT = "movable_ris_joint"
    FD_RELAY = "fd_relay"
    HD_RELAY = "hd_relay"


class Duplex(StrEnum):
    FD = "fd"
    HD = "hd"


@dataclass(frozen=True)
class BaselineOutcome:
    """
    Результат одной схемы в одном испытании:
        - rate - скорость, бит/с/Гц
        - x, y - положение узла на платформе (RIS или реле)
        - phases - фазы RIS (для реле None)
        - degraded - число потоков снижено из-за ранга канала
    """
    kind: BaselineKind
    rate: float
    x: float
    y: float
    phases: np.ndarray | None = None
    degraded: bool = False


class Scenario:
    """
    Одно испытание Монте-Карло: конфигурация, геометрия и замороженные
    случайные величины каналов. Все схемы испытания используют одни и те
    же каналы (общие случайные числа).
    """

    def __init__(self, config, geometry, seed, trial):
        self.config = config
        self.geometry = geometry
        self.seed = seed
        self.trial = trial

    @cached_property
    def channels(self):
        return ChannelTrial.draw(self.config, self.seed, self.trial)

    @cached_property
    def problem(self):
        return RisProblem(self.config, self.geometry, self.channels)

    def rng(self, stream):
        seed = self.seed
        if stream not in (Stream.CHANNEL, Stream.RANDOM_PHASE) and self.config.pso.seed is not None:
            seed = self.config.pso.seed
        return rng_stream(seed, self.trial, stream)

    @cached_property
    def random_phases(self):
        """Случайные фазы испытания, общие для схем со случайными фазами."""
        return self.rng(Stream.RANDOM_PHASE).uniform(0.0, 2 * np.pi, self.config.ris_elements.count)


def _outcome(kind, problem, state):
    design = problem.design(state)
    return BaselineOutcome(
        kind=kind,
        rate=design.rate,
        x=state.x,
        y=state.y,
        phases=state.phases,
        degraded=design.beamformers.degraded,
    )


def fixed_ris_rate(scenario, optimize_phase, rng=None):
    """RIS в центре платформы; фазы подбирает рой либо выбираются случайно."""
    problem = scenario.problem
    x, y = scenario.geometry.platform_center
    if not optimize_phase:
        state = RisState(x=x, y=y, phases=scenario.random_phases)
        return _outcome(BaselineKind.FIXED_RIS_RANDOM_PHASE, problem, state)

    rng = rng or scenario.rng(Stream.PHASE_SWARM)
    anchor = encode_position(x, y, scenario.geometry)

    def phase_fitness(fractions):
        return optimizer.fitness(np.concatenate([anchor, fractions]), problem)

    result = run_swarm(phase_fitness, problem.num_elements, scenario.config.pso, rng)
    state = decode(np.concatenate([anchor, result.position]), scenario.geometry)
    return _outcome(BaselineKind.FIXED_RIS_OPT_PHASE, problem, state)


def movable_random_phase_rate(scenario, rng=None):
    """Подвижная RIS со случайными фазами: рой ищет только положение."""
    problem = scenario.problem
    rng = rng or scenario.rng(Stream.POSITION_SWARM)
    phases = scenario.random_phases

    def position_fitness(position):
        state = decode(position, scenario.geometry)
        return problem.rate(RisState(x=state.x, y=state.y, phases=phases))

    result = run_swarm(position_fitness, 2, scenario.config.pso, rng)
    placed = decode(result.position, scenario.geometry)
    state = RisState(x=placed.x, y=placed.y, phases=phases)
    return _outcome(BaselineKind.MOVABLE_RIS_RANDOM_PHASE, problem, state)


def movable_joint_rate(scenario, rng=None):
    """Spider RIS: совместный поиск положения и фаз."""
    problem = scenario.problem
    rng = rng or scenario.rng(Stream.JOINT_SWARM)
    result = optimizer.run(problem, scenario.config.pso, rng)
    return _outcome(BaselineKind.MOVABLE_RIS_JOINT, problem, result.state)


def relay_hop_rates(scenario, x, y):
    """
    Скорости двух участков DF-реле в точке (x, y).

    Приёмная решётка реле повторяет Rx, передающая - Tx; лучи реле строятся
    заново для каждого положения.
    """
    config, geometry = scenario.config, scenario.geometry
    node = geometry.node_position(x, y)
    realization = scenario.channels.realize(
        config, geometry, node, node_rx_shape=config.rx_antennas, node_tx_shape=config.tx_antennas
    )
    first = design_rf(config, realization.angles_ti, realization.angles_ti, rx_shape=config.rx_antennas)
    second = design_rf(config, realization.angles_ir, realization.angles_ir, tx_shape=config.tx_antennas)
    power, noise, streams = config.transmit_power_w, config.noise_power_w, config.num_streams
    hop1 = design_link(realization.h_ti, first, power, streams, noise)
    hop2 = design_link(realization.h_ir, second, power, streams, noise)
    return hop1, hop2


def _relay_fd(scenario, rng):
    def relay_fitness(position):
        placed = decode(position, scenario.geometry)
        hop1, hop2 = relay_hop_rates(scenario, placed.x, placed.y)
        return min(hop1.rate, hop2.rate)

    result = run_swarm(relay_fitness, 2, scenario.config.pso, rng)
    placed = decode(result.position, scenario.geometry)
    hop1, hop2 = relay_hop_rates(scenario, placed.x, placed.y)
    return BaselineOutcome(
        kind=BaselineKind.FD_RELAY,
        rate=min(hop1.rate, hop2.rate),
        x=placed.x,
        y=placed.y,
        degraded=hop1.beamformers.degraded or hop2.beamformers.degraded,
    )


def relay_rate(scenario, duplex, rng=None):
    """
    DF-реле: R_FD = min(R_1, R_2), R_HD = R_FD / 2 в том же положении.
    Положение реле подбирает рой по двум координатам.
    """
    full = _relay_fd(scenario, rng or scenario.rng(Stream.RELAY_SWARM))
    if Duplex(duplex) == Duplex.FD:
        return full
    return BaselineOutcome(
        kind=BaselineKind.HD_RELAY, rate=full.rate / 2, x=full.x, y=full.y, degraded=full.degraded
    )


def run_baseline(kind, scenario, rng=None):
    """Запуск схемы kind на каналах испытания scenario."""
    kind = BaselineKind(kind)
    logger.debug("Схема %s, испытание %d", kind, scenario.trial)
    if kind == BaselineKind.FIXED_RIS_OPT_PHASE:
        return fixed_ris_rate(scenario, True, rng)
    if kind == BaselineKind.FIXED_RIS_RANDOM_PHASE:
        return fixed_ris_rate(scenario, False, rng)
    if kind == BaselineKind.MOVABLE_RIS_RANDOM_PHASE:
        return movable_random_phase_rate(scenario, rng)
    if kind == BaselineKind.MOVABLE_RIS_JOINT:
        return movable_joint_rate(scenario, rng)
    if kind == BaselineKind.FD_RELAY:
        return relay_rate(scenario, Duplex.FD, rng)
    return relay_rate(scenario, Duplex.HD, rng)
