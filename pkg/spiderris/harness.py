"""
Монте-Карло прогоны и развёртки по мощности, числу элементов RIS и
положениям пользователя; запись результатов и скриптов построения графиков.
"""
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import StrEnum
from pathlib import Path

import numpy as np
import pandas as pd
from django.conf import settings
from scipy import stats

from spiderris import optimizer
from spiderris.baselines import BaselineKind, Scenario, run_baseline
from spiderris.channel import ChannelTrial, dump_channels
from spiderris.exceptions import InvalidConfigError, ResultsError, SpiderRisError
from spiderris.optimizer import brute_force_joint
from spiderris.scenario import (
    ArrayShape, ConfigIssue, DeploymentGeometry, PsoParams, RfChainPolicy, Stream,
    config_digest, flatten, rng_stream,
)
from spiderris.serializers import ResultMetadataSerializer

logger = logging.getLogger(__name__)

DEFAULT_POWERS_DBM = (0.0, 10.0, 20.0, 30.0, 40.0)
DEFAULT_ELEMENTS = (16, 36, 64, 100)
DEFAULT_UE_POSITIONS = ((90.0, 85.0, 2.0), (85.0, 95.0, 2.0), (95.0, 80.0, 2.0))

# Доля неудачных испытаний, при превышении которой точка помечается
FAILURE_LIMIT = 0.1

CSV_COLUMNS = [
    "sweep_kind", "swept_value", "baseline", "mean_rate_bpshz", "stderr",
    "trials", "seed", "config_digest", "ris_x", "ris_y",
]

ANGLE_MODEL = "mean angles recomputed from node geometry for every RIS/relay position"
LINK_BUDGET = (
    "per-hop path loss 32.4 + 20 lg fc + 10 eta lg d dB; Tx-RIS-Rx cascade scaled by "
    "ris_reflection_gain_db; RF stages redesigned at every evaluated RIS position"
)


class SweepKind(StrEnum):
    POWER = "power"
    ELEMENTS = "elements"
    UE_SCENARIOS = "ue_scenarios"
    SINGLE = "single"


@dataclass(frozen=True)
class SweepSpec:
    """
    Описание развёртки:
        - kind - что варьируется
        - values - значения (P_T в дБм, M_I или координаты UE)
        - baselines - сравниваемые схемы
        - trials - испытаний на точку
        - seed - общий seed
    """
    kind: SweepKind
    values: tuple
    baselines: tuple = tuple(BaselineKind)
    trials: int = 50
    seed: int = 2024

    def __post_init__(self):
        issues = []
        if not self.values:
            issues.append(ConfigIssue("empty_values", "список значений развёртки пуст"))
        if self.trials < 1:
            issues.append(ConfigIssue("count_not_positive", "trials должно быть не меньше 1"))
        if not self.baselines:
            issues.append(ConfigIssue("empty_baselines", "не выбрано ни одной схемы"))
        if issues:
            raise InvalidConfigError(issues)


@dataclass(frozen=True)
class TrialRecord:
    rate: float | None
    x: float | None = None
    y: float | None = None
    degraded: bool = False
    error: str | None = None


@dataclass(frozen=True)
class RateResult:
    sweep_kind: str
    swept_value: str
    baseline: str
    mean_rate: float
    stderr: float
    trials: int
    failed_trials: int
    degraded_trials: int
    flagged: bool
    seed: int
    config_digest: str
    ris_x: float | None
    ris_y: float | None
    per_trial_rates: tuple
    per_trial_positions: tuple


def apply_value(kind, value, config, geometry):
    """Конфигурация точки развёртки."""
    kind = SweepKind(kind)
    if kind in (SweepKind.POWER, SweepKind.SINGLE):
        return replace(config, transmit_power_dbm=float(value)), geometry
    if kind == SweepKind.ELEMENTS:
        return replace(config, ris_elements=ArrayShape.square(int(value))), geometry
    return config, replace(geometry, ue_position=tuple(float(c) for c in value))


def format_value(kind, value):
    kind = SweepKind(kind)
    if kind == SweepKind.ELEMENTS:
        return str(int(value))
    if kind == SweepKind.UE_SCENARIOS:
        return ";".join(repr(float(c)) for c in value)
    return repr(float(value))


def _run_trial(config, geometry, kind, seed, trial):
    scenario = Scenario(config, geometry, seed, trial)
    try:
        outcome = run_baseline(kind, scenario)
    except (SpiderRisError, np.linalg.LinAlgError, ValueError) as exc:
        logger.warning("Испытание %d схемы %s завершилось ошибкой: %s", trial, kind, exc)
        return TrialRecord(rate=None, error=str(exc))
    if not math.isfinite(outcome.rate):
        return TrialRecord(rate=None, error="нечисловая скорость")
    logger.debug("Испытание %d схемы %s: %.6f бит/с/Гц", trial, kind, outcome.rate)
    return TrialRecord(rate=outcome.rate, x=outcome.x, y=outcome.y, degraded=outcome.degraded)


def _run_trials(config, geometry, kind, seed, trials, workers):
    if workers <= 1 or trials == 1:
        return [_run_trial(config, geometry, kind, seed, trial) for trial in range(trials)]
    count = range(trials)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(
            _run_trial, [config] * trials, [geometry] * trials, [kind] * trials, [seed] * trials, count
        ))


def monte_carlo_point(config, geometry, kind, trials, seed, *, sweep_kind=SweepKind.SINGLE,
                      swept_value=None, workers=None):
    """
    Усреднение схемы kind по trials испытаниям; испытание t использует
    потоки случайных чисел (seed, t).
    """
    if trials < 1:
        raise InvalidConfigError([ConfigIssue("count_not_positive", "trials должно быть не меньше 1")])
    kind = BaselineKind(kind)
    workers = settings.SPIDERRIS_WORKERS if workers is None else workers
    records = _run_trials(config, geometry, kind, seed, trials, workers)

    rates = [record.rate for record in records if record.rate is not None]
    failed = trials - len(rates)
    positions = [(record.x, record.y) for record in records if record.rate is not None]
    if rates:
        mean_rate = float(np.mean(rates))
        stderr = float(stats.sem(rates)) if len(rates) > 1 else 0.0
        ris_x = float(np.mean([x for x, _ in positions]))
        ris_y = float(np.mean([y for _, y in positions]))
    else:
        mean_rate, stderr, ris_x, ris_y = math.nan, 0.0, None, None
    flagged = failed > FAILURE_LIMIT * trials
    if flagged:
        logger.warning("Точка %s / %s помечена: %d из %d испытаний с ошибкой", swept_value, kind, failed, trials)

    return RateResult(
        sweep_kind=str(SweepKind(sweep_kind)),
        swept_value=swept_value if swept_value is not None else repr(float(config.transmit_power_dbm)),
        baseline=str(kind),
        mean_rate=mean_rate,
        stderr=stderr,
        trials=trials,
        failed_trials=failed,
        degraded_trials=sum(record.degraded for record in records),
        flagged=flagged,
        seed=seed,
        config_digest=config_digest(config, geometry),
        ris_x=ris_x,
        ris_y=ris_y,
        per_trial_rates=tuple(record.rate for record in records),
        per_trial_positions=tuple(
            None if record.rate is None else (record.x, record.y) for record in records
        ),
    )


def dump_trial_channels(config, geometry, seed, trials, directory, label):
    """Каналы испытаний для RIS в центре платформы (--dump-channels)."""
    node = geometry.node_position(*geometry.platform_center)
    for trial in range(trials):
        realization = ChannelTrial.draw(config, seed, trial).realize(config, geometry, node)
        dump_channels(realization, Path(directory), f"{label}_trial{trial:04d}")


def sweep(spec, config, geometry, *, workers=None, dump_dir=None):
    """
    Декартово произведение значений и схем; строки упорядочены по
    (значение, схема). При фиксированном значении все схемы используют одни
    и те же испытания.
    """
    table = []
    for index, value in enumerate(spec.values):
        point_config, point_geometry = apply_value(spec.kind, value, config, geometry)
        label = format_value(spec.kind, value)
        logger.info("Точка %s = %s", spec.kind, label)
        if dump_dir is not None:
            dump_trial_channels(point_config, point_geometry, spec.seed, spec.trials, dump_dir, f"point{index:02d}")
        for kind in spec.baselines:
            result = monte_carlo_point(
                point_config, point_geometry, kind, spec.trials, spec.seed,
                sweep_kind=spec.kind, swept_value=label, workers=workers,
            )
            logger.info("  %s: %.4f +- %.4f бит/с/Гц", kind, result.mean_rate, result.stderr)
            table.append(result)
    return table


def results_frame(table):
    """Таблица результатов в виде DataFrame с колонками CSV."""
    rows = [
        {
            "sweep_kind": result.sweep_kind,
            "swept_value": result.swept_value,
            "baseline": result.baseline,
            "mean_rate_bpshz": result.mean_rate,
            "stderr": result.stderr,
            "trials": result.trials,
            "seed": result.seed,
            "config_digest": result.config_digest,
            "ris_x": result.ris_x,
            "ris_y": result.ris_y,
        }
        for result in table
    ]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def write_results(table, path, config, geometry):
    """
    CSV с результатами и рядом файл метаданных <имя>.meta.json с полной
    конфигурацией и всеми испытаниями.
    """
    if not table:
        raise ResultsError("Пустая таблица результатов не записывается")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    results_frame(table).to_csv(path, index=False, lineterminator="\n")

    metadata = ResultMetadataSerializer({
        "sweep_kind": table[0].sweep_kind,
        "config": flatten(config, geometry),
        "ris_height": geometry.ris_height,
        "fixed_ris_position": list(geometry.platform_center),
        "angle_model": ANGLE_MODEL,
        "link_budget": LINK_BUDGET,
        "results": table,
    }).data
    sidecar = path.with_suffix(".meta.json")
    sidecar.write_text(json.dumps(metadata, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    logger.info("Результаты записаны в %s", path)
    return path


def read_results(path):
    return pd.read_csv(path, dtype={"swept_value": str, "config_digest": str, "sweep_kind": str, "baseline": str})


LINE_TEMPLATE = '''"""Rate vs {xlabel}: one series per scheme."""
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

table = pd.read_csv(Path(__file__).with_name({csv_name!r}), dtype={{"swept_value": str}})
table["x"] = table["swept_value"].astype(float)

fig, ax = plt.subplots(figsize=(6, 4))
for baseline, rows in table.groupby("baseline", sort=False):
    rows = rows.sort_values("x")
    ax.errorbar(rows["x"], rows["mean_rate_bpshz"], yerr=rows["stderr"], marker="o", capsize=3, label=baseline)
ax.set_xlabel({xlabel!r})
ax.set_ylabel("Achievable rate, bps/Hz")
ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(Path(__file__).with_suffix(".png"), dpi=150)
'''

UE_TEMPLATE = '''"""Rates per UE position and optimized node positions on the ceiling platform."""
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from matplotlib.patches import Rectangle

PLATFORM_X = {platform_x!r}
PLATFORM_Y = {platform_y!r}

table = pd.read_csv(Path(__file__).with_name({csv_name!r}), dtype={{"swept_value": str}})
scenarios = list(dict.fromkeys(table["swept_value"]))
baselines = list(dict.fromkeys(table["baseline"]))

fig, (bars, platform) = plt.subplots(1, 2, figsize=(11, 4))
width = 0.8 / len(baselines)
for index, baseline in enumerate(baselines):
    rows = table[table["baseline"] == baseline].set_index("swept_value").loc[scenarios]
    offsets = np.arange(len(scenarios)) + index * width
    bars.bar(offsets, rows["mean_rate_bpshz"], width, yerr=rows["stderr"], capsize=2, label=baseline)
bars.set_xticks(np.arange(len(scenarios)) + 0.4 - width / 2)
bars.set_xticklabels(["UE (" + s.replace(";", ", ") + ")" for s in scenarios], fontsize=8)
bars.set_ylabel("Achievable rate, bps/Hz")
bars.legend(fontsize=7)

platform.add_patch(Rectangle(
    (PLATFORM_X[0], PLATFORM_Y[0]), PLATFORM_X[1] - PLATFORM_X[0], PLATFORM_Y[1] - PLATFORM_Y[0],
    fill=False, linestyle="--", label="ceiling platform",
))
for (scenario, baseline), rows in table.groupby(["swept_value", "baseline"], sort=False):
    platform.scatter(rows["ris_x"], rows["ris_y"], label=f"{{baseline}} @ UE {{scenario}}", s=25)
platform.set_xlim(PLATFORM_X[0] - 5, PLATFORM_X[1] + 5)
platform.set_ylim(PLATFORM_Y[0] - 5, PLATFORM_Y[1] + 5)
platform.set_xlabel("x, m")
platform.set_ylabel("y, m")
platform.set_aspect("equal")
platform.legend(fontsize=6)
fig.tight_layout()
fig.savefig(Path(__file__).with_suffix(".png"), dpi=150)
'''

AXIS_LABELS = {
    SweepKind.POWER: "P_T, dBm",
    SweepKind.ELEMENTS: "M_I",
    SweepKind.SINGLE: "P_T, dBm",
}


def emit_plot_script(table, path, csv_name, geometry=None):
    """Самодостаточный скрипт matplotlib, читающий CSV по относительному пути."""
    if not table:
        raise ResultsError("Пустая таблица результатов")
    kinds = {result.sweep_kind for result in table}
    if len(kinds) > 1:
        raise ResultsError(f"В таблице смешаны развёртки: {sorted(kinds)}")
    kind = SweepKind(kinds.pop())
    csv_name = Path(csv_name).name
    if kind == SweepKind.UE_SCENARIOS:
        geometry = geometry or DeploymentGeometry()
        script = UE_TEMPLATE.format(
            csv_name=csv_name,
            platform_x=tuple(geometry.platform_x_range),
            platform_y=tuple(geometry.platform_y_range),
        )
    else:
        script = LINE_TEMPLATE.format(csv_name=csv_name, xlabel=AXIS_LABELS[kind])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(script, encoding="utf-8")
    return path


def tiny_instance(config, ris_elements=1):
    """Малая задача для сверки роя с перебором: решётки 2x2, один или два элемента RIS."""
    return replace(
        config,
        tx_antennas=ArrayShape(2, 2),
        rx_antennas=ArrayShape(2, 2),
        ris_elements=ArrayShape(ris_elements, 1),
        num_streams=1,
        rf_chain_policy=RfChainPolicy(min_chains=1, max_chains=4),
        pso=replace(config.pso, swarm_size=10, iterations=50),
    )


@dataclass(frozen=True)
class OracleReport:
    ratios: tuple
    monotone: bool
    threshold: float

    @property
    def success_share(self):
        return sum(ratio >= self.threshold for ratio in self.ratios) / len(self.ratios)


def oracle_check(config, geometry, seeds=50, position_steps=16, phase_steps=8, threshold=0.98):
    """
    Сравнение роя с полным перебором на малой задаче.

    Для каждого seed: отношение лучшей скорости роя к лучшей по сетке и
    проверка монотонности истории глобального лучшего.
    """
    ratios = []
    monotone = True
    for seed in range(seeds):
        scenario = Scenario(config, geometry, seed, 0)
        problem = scenario.problem
        _, oracle = brute_force_joint(problem, position_steps, phase_steps)
        result = optimizer.run(problem, config.pso, rng_stream(seed, 0, Stream.JOINT_SWARM))
        monotone &= all(b >= a for a, b in zip(result.history, result.history[1:]))
        ratios.append(result.rate / oracle if oracle > 0 else 1.0)
        logger.debug("seed %d: рой %.6g, перебор %.6g", seed, result.rate, oracle)
    return OracleReport(ratios=tuple(ratios), monotone=monotone, threshold=threshold)
