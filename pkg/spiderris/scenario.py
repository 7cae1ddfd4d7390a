"""
Конфигурация симулятора: параметры системы, геометрия размещения узлов,
производные физические величины и детерминированные потоки случайных чисел.
"""
import hashlib
import logging
import math
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np
from decouple import Config, Csv, RepositoryEnv

from spiderris.exceptions import InvalidConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ArrayShape:
    """Размер URA: число элементов вдоль осей x и y."""
    mx: int
    my: int

    @property
    def count(self):
        return self.mx * self.my

    @classmethod
    def square(cls, count):
        """Наиболее близкая к квадрату решётка из count элементов."""
        side = math.isqrt(count)
        while side > 1 and count % side:
            side -= 1
        return cls(count // side, side)

    def __str__(self):
        return f"{self.mx}x{self.my}"


@dataclass(frozen=True)
class RfChainPolicy:
    """Границы числа RF-цепей на каждой стороне линии."""
    min_chains: int = 2
    max_chains: int = 16


@dataclass(frozen=True)
class PsoParams:
    """
    Параметры роя:
        - swarm_size (Z) и iterations (T)
        - social_weight - вес притяжения к глобальному лучшему (mu_1)
        - cognitive_weight - вес притяжения к личному лучшему (mu_2)
        - инерция mu_3(t), линейно от inertia_start к inertia_end
        - velocity_clamp - предел скорости по каждой координате
        - seed - отдельный seed роя (None - общий seed сценария)
    """
    swarm_size: int = 10
    iterations: int = 30
    social_weight: float = 2.0
    cognitive_weight: float = 2.0
    inertia_start: float = 0.9
    inertia_end: float = 0.4
    velocity_clamp: float = 0.2
    seed: int | None = None

    def inertia(self, t):
        """mu_3 на итерации t = 1..T."""
        if self.iterations <= 1:
            return self.inertia_start
        fraction = (t - 1) / (self.iterations - 1)
        return self.inertia_start + (self.inertia_end - self.inertia_start) * fraction


@dataclass(frozen=True)
class SystemConfig:
    tx_antennas: ArrayShape = ArrayShape(8, 8)
    rx_antennas: ArrayShape = ArrayShape(8, 8)
    ris_elements: ArrayShape = ArrayShape(8, 8)
    carrier_frequency_ghz: float = 28.0
    bandwidth_hz: float = 10e6
    noise_psd_dbm_per_hz: float = -174.0
    transmit_power_dbm: float = 30.0
    path_loss_exponent: float = 3.6
    # усиление каскада Tx-RIS-Rx относительно произведения потерь двух участков
    ris_reflection_gain_db: float = 86.0
    num_paths: int = 10
    elevation_spread_deg: float = 10.0
    azimuth_spread_deg: float = 10.0
    element_spacing_wavelengths: float = 0.5
    num_streams: int = 2
    rf_chain_policy: RfChainPolicy = RfChainPolicy()
    pso: PsoParams = PsoParams()
    monte_carlo_trials: int = 50
    rng_seed: int = 2024

    @property
    def transmit_power_w(self):
        return 10 ** ((self.transmit_power_dbm - 30) / 10)

    @property
    def noise_power_w(self):
        return noise_power(self.noise_psd_dbm_per_hz, self.bandwidth_hz)

    @property
    def elevation_spread_rad(self):
        return math.radians(self.elevation_spread_deg)

    @property
    def azimuth_spread_rad(self):
        return math.radians(self.azimuth_spread_deg)


@dataclass(frozen=True)
class DeploymentGeometry:
    """
    Размещение узлов (метры):
        - tx_position, ue_position - координаты передатчика и пользователя
        - platform_x_range, platform_y_range - границы потолочной платформы
        - ris_height - высота RIS над полом
    """
    tx_position: tuple = (0.0, 0.0, 2.0)
    ue_position: tuple = (100.0, 100.0, 2.0)
    platform_x_range: tuple = (40.0, 70.0)
    platform_y_range: tuple = (40.0, 70.0)
    ris_height: float = 5.0

    @property
    def platform_center(self):
        return (
            (self.platform_x_range[0] + self.platform_x_range[1]) / 2,
            (self.platform_y_range[0] + self.platform_y_range[1]) / 2,
        )

    def node_position(self, x, y):
        """Координаты узла на платформе (RIS или реле)."""
        return np.array([x, y, self.ris_height], dtype=float)

    def contains(self, x, y):
        x_min, x_max = self.platform_x_range
        y_min, y_max = self.platform_y_range
        return x_min <= x <= x_max and y_min <= y <= y_max


@dataclass(frozen=True)
class ConfigIssue:
    code: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.message}"


class Stream(IntEnum):
    """Назначение независимого потока случайных чисел внутри испытания."""
    CHANNEL = 0
    RANDOM_PHASE = 1
    JOINT_SWARM = 2
    PHASE_SWARM = 3
    POSITION_SWARM = 4
    RELAY_SWARM = 5


def default_config():
    """Параметры моделирования по умолчанию и геометрия размещения."""
    return SystemConfig(), DeploymentGeometry()


def noise_power(noise_psd_dbm_per_hz, bandwidth_hz):
    """Мощность шума (Вт) по спектральной плотности (дБм/Гц) и полосе (Гц)."""
    if bandwidth_hz <= 0:
        raise InvalidConfigError([
            ConfigIssue("bandwidth_not_positive", f"полоса {bandwidth_hz} Гц должна быть положительной")
        ])
    return 10 ** ((noise_psd_dbm_per_hz + 10 * math.log10(bandwidth_hz) - 30) / 10)


def validate(config, geometry):
    """
    Проверка инвариантов конфигурации.

    Возвращает список нарушений; пустой список означает корректную конфигурацию.
    """
    issues = []

    def issue(code, message):
        issues.append(ConfigIssue(code, message))

    for name in ("tx_antennas", "rx_antennas", "ris_elements"):
        shape = getattr(config, name)
        if shape.mx < 1 or shape.my < 1:
            issue("count_not_positive", f"{name}: размер решётки {shape} должен быть не меньше 1x1")

    if config.num_paths < 1:
        issue("count_not_positive", "num_paths: число путей должно быть не меньше 1")
    if config.num_streams < 1:
        issue("count_not_positive", "num_streams: число потоков должно быть не меньше 1")
    if config.monte_carlo_trials < 1:
        issue("count_not_positive", "monte_carlo_trials: число испытаний должно быть не меньше 1")

    policy = config.rf_chain_policy
    if config.num_streams > policy.min_chains:
        issue(
            "streams_exceed_rf_chains",
            f"число потоков {config.num_streams} превышает число RF-цепей {policy.min_chains}",
        )
    if policy.max_chains < policy.min_chains:
        issue("rf_policy_inverted", f"max_chains {policy.max_chains} меньше min_chains {policy.min_chains}")
    if policy.min_chains > min(config.tx_antennas.count, config.rx_antennas.count):
        issue("rf_chains_exceed_antennas", f"min_chains {policy.min_chains} превышает число антенн")

    if config.bandwidth_hz <= 0:
        issue("bandwidth_not_positive", f"полоса {config.bandwidth_hz} Гц должна быть положительной")
    if config.carrier_frequency_ghz <= 0:
        issue("frequency_not_positive", "несущая частота должна быть положительной")
    if config.path_loss_exponent <= 0:
        issue("path_loss_exponent_not_positive", "показатель потерь eta должен быть положительным")
    if not math.isfinite(config.ris_reflection_gain_db):
        issue("ris_gain_not_finite", "усиление отражения RIS должно быть конечным числом дБ")
    if config.element_spacing_wavelengths <= 0:
        issue("spacing_not_positive", "шаг решётки должен быть положительным")
    for name in ("elevation_spread_deg", "azimuth_spread_deg"):
        spread = getattr(config, name)
        if not 0 <= spread < 90:
            issue("spread_out_of_range", f"{name}={spread} вне диапазона [0, 90)")

    pso = config.pso
    if pso.swarm_size < 1:
        issue("pso_swarm_size", "размер роя должен быть не меньше 1")
    if pso.iterations < 1:
        issue("pso_iterations", "число итераций должно быть не меньше 1")
    if pso.social_weight <= 0 or pso.cognitive_weight <= 0:
        issue("pso_weights_not_positive", "веса mu_1 и mu_2 должны быть положительными")
    if not 0 < pso.velocity_clamp <= 1:
        issue("pso_velocity_clamp", f"velocity_clamp={pso.velocity_clamp} вне (0, 1]")

    for axis, (low, high) in (("x", geometry.platform_x_range), ("y", geometry.platform_y_range)):
        if not low < high:
            issue("empty_range", f"пустой диапазон платформы по оси {axis}: [{low}, {high}]")
    if geometry.ris_height <= 0:
        issue("ris_height_not_positive", "высота RIS должна быть положительной")

    return issues


def ensure_valid(config, geometry):
    issues = validate(config, geometry)
    if issues:
        raise InvalidConfigError(issues)
    return config, geometry


def flatten(config, geometry):
    """Плоское представление ключ-значение (значения - строки)."""
    def number(value):
        return repr(float(value))

    def vector(values):
        return ",".join(number(v) for v in values)

    pso = config.pso
    return {
        "tx_antennas_x": str(config.tx_antennas.mx),
        "tx_antennas_y": str(config.tx_antennas.my),
        "rx_antennas_x": str(config.rx_antennas.mx),
        "rx_antennas_y": str(config.rx_antennas.my),
        "ris_elements_x": str(config.ris_elements.mx),
        "ris_elements_y": str(config.ris_elements.my),
        "carrier_frequency_ghz": number(config.carrier_frequency_ghz),
        "bandwidth_hz": number(config.bandwidth_hz),
        "noise_psd_dbm_per_hz": number(config.noise_psd_dbm_per_hz),
        "transmit_power_dbm": number(config.transmit_power_dbm),
        "path_loss_exponent": number(config.path_loss_exponent),
        "ris_reflection_gain_db": number(config.ris_reflection_gain_db),
        "num_paths": str(config.num_paths),
        "elevation_spread_deg": number(config.elevation_spread_deg),
        "azimuth_spread_deg": number(config.azimuth_spread_deg),
        "element_spacing_wavelengths": number(config.element_spacing_wavelengths),
        "num_streams": str(config.num_streams),
        "rf_chains_min": str(config.rf_chain_policy.min_chains),
        "rf_chains_max": str(config.rf_chain_policy.max_chains),
        "pso_particles": str(pso.swarm_size),
        "pso_iterations": str(pso.iterations),
        "pso_social_weight": number(pso.social_weight),
        "pso_cognitive_weight": number(pso.cognitive_weight),
        "pso_inertia_start": number(pso.inertia_start),
        "pso_inertia_end": number(pso.inertia_end),
        "pso_velocity_clamp": number(pso.velocity_clamp),
        "pso_seed": "" if pso.seed is None else str(pso.seed),
        "monte_carlo_trials": str(config.monte_carlo_trials),
        "rng_seed": str(config.rng_seed),
        "tx_position": vector(geometry.tx_position),
        "ue_position": vector(geometry.ue_position),
        "platform_x_range": vector(geometry.platform_x_range),
        "platform_y_range": vector(geometry.platform_y_range),
        "ris_height": number(geometry.ris_height),
    }


VECTOR_KEYS = ("tx_position", "ue_position", "platform_x_range", "platform_y_range")


def dump_config(config, geometry):
    """Текст конфигурационного файла (key=value, по строке на поле)."""
    lines = [f"{key}={value}" for key, value in flatten(config, geometry).items()]
    return "\n".join(lines) + "\n"


def from_flat(data):
    """Сборка конфигурации из проверенного сериализатором словаря."""
    config = SystemConfig(
        tx_antennas=ArrayShape(data["tx_antennas_x"], data["tx_antennas_y"]),
        rx_antennas=ArrayShape(data["rx_antennas_x"], data["rx_antennas_y"]),
        ris_elements=ArrayShape(data["ris_elements_x"], data["ris_elements_y"]),
        carrier_frequency_ghz=data["carrier_frequency_ghz"],
        bandwidth_hz=data["bandwidth_hz"],
        noise_psd_dbm_per_hz=data["noise_psd_dbm_per_hz"],
        transmit_power_dbm=data["transmit_power_dbm"],
        path_loss_exponent=data["path_loss_exponent"],
        ris_reflection_gain_db=data["ris_reflection_gain_db"],
        num_paths=data["num_paths"],
        elevation_spread_deg=data["elevation_spread_deg"],
        azimuth_spread_deg=data["azimuth_spread_deg"],
        element_spacing_wavelengths=data["element_spacing_wavelengths"],
        num_streams=data["num_streams"],
        rf_chain_policy=RfChainPolicy(data["rf_chains_min"], data["rf_chains_max"]),
        pso=PsoParams(
            swarm_size=data["pso_particles"],
            iterations=data["pso_iterations"],
            social_weight=data["pso_social_weight"],
            cognitive_weight=data["pso_cognitive_weight"],
            inertia_start=data["pso_inertia_start"],
            inertia_end=data["pso_inertia_end"],
            velocity_clamp=data["pso_velocity_clamp"],
            seed=data.get("pso_seed"),
        ),
        monte_carlo_trials=data["monte_carlo_trials"],
        rng_seed=data["rng_seed"],
    )
    geometry = DeploymentGeometry(
        tx_position=tuple(data["tx_position"]),
        ue_position=tuple(data["ue_position"]),
        platform_x_range=tuple(data["platform_x_range"]),
        platform_y_range=tuple(data["platform_y_range"]),
        ris_height=data["ris_height"],
    )
    return config, geometry


def load_config(path):
    """
    Чтение конфигурационного файла.

    Отсутствующие ключи берутся из default_config(). Формат значений проверяет
    ScenarioFileSerializer, инварианты - validate().
    """
    from spiderris.serializers import ScenarioFileSerializer

    try:
        source = Config(RepositoryEnv(str(path)))
    except OSError as exc:
        issue = ConfigIssue("config_unreadable", f"файл конфигурации {path}: {exc.strerror}")
        raise InvalidConfigError([issue]) from exc
    defaults = flatten(*default_config())
    raw = {}
    for key, default in defaults.items():
        if key in VECTOR_KEYS:
            raw[key] = source(key, default=default, cast=Csv())
        else:
            raw[key] = source(key, default=default)
    if raw["pso_seed"] == "":
        raw["pso_seed"] = None

    serializer = ScenarioFileSerializer(data=raw)
    if not serializer.is_valid():
        raise InvalidConfigError(
            ConfigIssue("malformed_value", f"{key}: {' '.join(map(str, errors))}")
            for key, errors in serializer.errors.items()
        )
    config, geometry = from_flat(serializer.validated_data)
    logger.debug("Загружена конфигурация %s", path)
    return ensure_valid(config, geometry)


def config_digest(config, geometry):
    """Короткий устойчивый хеш всех полей конфигурации."""
    return hashlib.sha256(dump_config(config, geometry).encode("utf-8")).hexdigest()[:16]


def rng_stream(seed, *key):
    """
    Независимый поток случайных чисел для (seed, *key).

    Счётчиковый генератор Philox; ключ разделяет потоки испытаний и назначений.
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def with_overrides(config, *, seed=None, trials=None, particles=None, iterations=None, pso_seed=None):
    """Копия конфигурации с переопределениями из командной строки."""
    pso = config.pso
    if particles is not None:
        pso = replace(pso, swarm_size=particles)
    if iterations is not None:
        pso = replace(pso, iterations=iterations)
    if pso_seed is not None:
        pso = replace(pso, seed=pso_seed)
    changes = {"pso": pso}
    if seed is not None:
        changes["rng_seed"] = seed
    if trials is not None:
        changes["monte_carlo_trials"] = trials
    return replace(config, **changes)
