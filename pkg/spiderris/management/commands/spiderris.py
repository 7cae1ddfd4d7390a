from dataclasses import replace
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from spiderris.baselines import BaselineKind
from spiderris.exceptions import SpiderRisError
from spiderris.harness import (
    DEFAULT_ELEMENTS, DEFAULT_POWERS_DBM, DEFAULT_UE_POSITIONS, SweepKind, SweepSpec,
    emit_plot_script, oracle_check, sweep, tiny_instance, write_results,
)
from spiderris.scenario import default_config, ensure_valid, load_config, with_overrides

ACTIONS = {
    "sweep-power": (SweepKind.POWER, "Скорость в зависимости от мощности передатчика P_T"),
    "sweep-elements": (SweepKind.ELEMENTS, "Скорость в зависимости от числа элементов RIS M_I"),
    "ue-scenarios": (SweepKind.UE_SCENARIOS, "Сравнение схем для нескольких положений пользователя"),
    "single-run": (SweepKind.SINGLE, "Одна точка при текущей конфигурации"),
    "oracle-check": (None, "Сверка роя с полным перебором на малой задаче"),
}


def float_list(value):
    return [float(item) for item in value.split(",") if item.strip()]


def int_list(value):
    return [int(item) for item in value.split(",") if item.strip()]


def position_list(value):
    """'x,y,z;x,y,z' -> [(x, y, z), ...]"""
    positions = [tuple(float_list(item)) for item in value.split(";") if item.strip()]
    if any(len(position) != 3 for position in positions):
        raise ValueError("Ожидаются тройки координат x,y,z через ';'")
    return positions


def baseline_list(value):
    return [BaselineKind(item.strip()) for item in value.split(",") if item.strip()]


class Command(BaseCommand):
    help = "Моделирование Spider RIS: развёртки, одиночный прогон и сверка роя с перебором"

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="action", required=True)
        for action, (_, description) in ACTIONS.items():
            subparser = subparsers.add_parser(action, help=description)
            self.add_common_arguments(subparser)
            if action == "sweep-power":
                subparser.add_argument(
                    "--powers", type=float_list, default=list(DEFAULT_POWERS_DBM),
                    help="Значения P_T в дБм через запятую",
                )
            elif action == "sweep-elements":
                subparser.add_argument(
                    "--elements", type=int_list, default=list(DEFAULT_ELEMENTS),
                    help="Значения M_I через запятую",
                )
                subparser.add_argument("--power", type=float, default=None, help="P_T в дБм")
            elif action == "ue-scenarios":
                subparser.add_argument(
                    "--ue-positions", type=position_list, default=list(DEFAULT_UE_POSITIONS),
                    help="Положения пользователя 'x,y,z;x,y,z;...'",
                )
            elif action == "oracle-check":
                subparser.add_argument("--seeds", type=int, default=50)
                subparser.add_argument("--position-steps", type=int, default=16)
                subparser.add_argument("--phase-steps", type=int, default=8)
                subparser.add_argument(
                    "--ris-elements", type=int, choices=(1, 2), default=1, help="Число элементов RIS малой задачи"
                )

    def add_common_arguments(self, parser):
        parser.add_argument("--config", type=Path, default=None, help="Файл конфигурации key=value")
        parser.add_argument("--seed", type=int, default=None)
        parser.add_argument("--trials", type=int, default=None)
        parser.add_argument("--out", type=Path, default=None, help="Каталог результатов")
        parser.add_argument("--baselines", type=baseline_list, default=None, help="Схемы через запятую")
        parser.add_argument("--dump-channels", type=Path, default=None, help="Каталог для матриц каналов")
        parser.add_argument("--pso-particles", type=int, default=None)
        parser.add_argument("--pso-iters", type=int, default=None)
        parser.add_argument("--pso-seed", type=int, default=None)
        parser.add_argument("--workers", type=int, default=None)

    def handle(self, *args, **options):
        try:
            self.run_action(options)
        except SpiderRisError as exc:
            raise CommandError(str(exc)) from exc

    def load(self, options):
        if options["config"] is not None:
            config, geometry = load_config(options["config"])
        else:
            config, geometry = default_config()
        trials = options["trials"]
        if trials is None and options["config"] is None:
            trials = settings.SPIDERRIS_DEFAULT_TRIALS
        config = with_overrides(
            config,
            seed=options["seed"],
            trials=trials,
            particles=options["pso_particles"],
            iterations=options["pso_iters"],
            pso_seed=options["pso_seed"],
        )
        return config, geometry

    def run_action(self, options):
        action = options["action"]
        config, geometry = self.load(options)
        if action == "oracle-check":
            return self.run_oracle(config, geometry, options)

        ensure_valid(config, geometry)
        kind = ACTIONS[action][0]
        if kind == SweepKind.POWER:
            values = options["powers"]
        elif kind == SweepKind.ELEMENTS:
            values = options["elements"]
            if options["power"] is not None:
                config = replace(config, transmit_power_dbm=options["power"])
        elif kind == SweepKind.UE_SCENARIOS:
            values = options["ue_positions"]
        else:
            values = [config.transmit_power_dbm]

        spec = SweepSpec(
            kind=kind,
            values=tuple(values),
            baselines=tuple(options["baselines"] or BaselineKind),
            trials=config.monte_carlo_trials,
            seed=config.rng_seed,
        )
        out = options["out"] or settings.SPIDERRIS_OUTPUT_DIR / action
        self.stdout.write(f"{action}: {len(spec.values)} точек x {len(spec.baselines)} схем, {spec.trials} испытаний")
        table = sweep(spec, config, geometry, workers=options["workers"], dump_dir=options["dump_channels"])

        csv_path = write_results(table, Path(out) / "results.csv", config, geometry)
        script_path = emit_plot_script(table, Path(out) / "plot_results.py", csv_path.name, geometry)
        for result in table:
            line = f"{result.swept_value:>20} {result.baseline:<26} {result.mean_rate:10.4f} +- {result.stderr:.4f}"
            self.stdout.write(self.style.WARNING(line) if result.flagged else line)
        self.stdout.write(self.style.SUCCESS(f"Результаты: {csv_path}, график: {script_path}"))

    def run_oracle(self, config, geometry, options):
        config = tiny_instance(config, options["ris_elements"])
        if options["pso_particles"] is not None or options["pso_iters"] is not None:
            config = with_overrides(config, particles=options["pso_particles"], iterations=options["pso_iters"])
        ensure_valid(config, geometry)
        report = oracle_check(
            config, geometry,
            seeds=options["seeds"],
            position_steps=options["position_steps"],
            phase_steps=options["phase_steps"],
        )
        summary = (
            f"Доля seed с результатом роя >= {report.threshold:.0%} от перебора: "
            f"{report.success_share:.0%}, история монотонна: {report.monotone}"
        )
        if report.success_share < 0.9 or not report.monotone:
            raise CommandError(summary)
        self.stdout.write(self.style.SUCCESS(summary))
