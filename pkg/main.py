# main.py

"""
main.py

Command-line entry point of the damped-wave resolvent laboratory.
Runs experiment presets, builds reports from run manifests and dumps the
geometry or a single mode operator for inspection.
"""

import argparse
import json
import logging
import os
import sys

# Add src directory to path for imports  # noqa: E402
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "src"))

from experiment import (  # noqa: E402
    PRESETS,
    ConfigError,
    UnknownPresetError,
    dump_geometry,
    dump_operator,
    load_config,
    run_preset,
)
from report import collect_manifests, emit_report  # noqa: E402
from visualization import LabVisualization  # noqa: E402

logger = logging.getLogger("resolvent_lab")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resolvent-lab",
        description="Laboratoř rezolventy tlumené vlnové rovnice",
    )
    parser.add_argument("--log-level", default="info",
                        choices=["debug", "info", "warning", "error"],
                        help="Úroveň logování (výchozí info)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Spustit preset experimentu")
    run.add_argument("preset", choices=sorted(PRESETS))
    run.add_argument("--config", help="Uživatelský JSON konfigurace")
    run.add_argument("--output", help="Výstupní adresář (přepíše output_dir)")
    run.add_argument("--seed", type=int, help="Náhodné semínko")

    report = sub.add_parser("report", help="Vytvořit zprávu z manifestů")
    report.add_argument("directory")
    report.add_argument("--excel", action="store_true", help="Zapsat také report.xlsx")

    geometry = sub.add_parser("dump-geometry", help="Tabulka deformace a profilů")
    geometry.add_argument("--config")
    geometry.add_argument("--preset", default="gcc", choices=sorted(PRESETS))
    geometry.add_argument("--points", type=int, default=513)
    geometry.add_argument("--out", default="geometry.csv")
    geometry.add_argument("--plot", action="store_true", help="Uložit také PNG")

    operator = sub.add_parser("dump-operator", help="Tripletový výpis operátoru módu")
    operator.add_argument("--config")
    operator.add_argument("--preset", default="gcc", choices=sorted(PRESETS))
    operator.add_argument("--h", type=float, required=True)
    operator.add_argument("--n", type=int, required=True)
    operator.add_argument("--kind", default="damped",
                          choices=["free", "damped", "absorbing", "modified"])
    operator.add_argument("--z", type=complex, default=None)
    operator.add_argument("--N", type=int, default=None)
    operator.add_argument("--out", default="operator.csv")
    return parser


def _overrides(args) -> dict:
    overrides = {}
    if getattr(args, "output", None):
        overrides["output_dir"] = args.output
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return overrides


def main(argv=None) -> int:
    """
    Run the CLI.

    Returns:
        int: 0 on success, 1 if any assertion failed, 2 on configuration errors
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        if args.command == "run":
            config = load_config(args.preset, args.config, _overrides(args))
            manifest = run_preset(args.preset, config)
            failed = [a.name for a in manifest.assertions if not a.passed]
            if failed:
                logger.error("Neprošlá ověření: %s", ", ".join(failed))
                return 1
            return 0

        if args.command == "report":
            manifests = collect_manifests(args.directory)
            files = emit_report(manifests, args.directory, excel=args.excel)
            print(json.dumps(files.as_list(), indent=2))
            return 0 if all(m.passed for m in manifests) else 1

        config = load_config(args.preset, args.config)
        if args.command == "dump-geometry":
            path = dump_geometry(config, args.out, args.points)
            if args.plot:
                import pandas as pd

                plots = LabVisualization(os.path.dirname(os.path.abspath(path)))
                plots.plot_geometry(pd.read_csv(path), os.path.splitext(path)[0] + ".png")
        else:
            path = dump_operator(config, args.out, args.h, args.n, args.kind, args.z, args.N)
        logger.info("Zapsáno: %s", path)
        return 0

    except (ConfigError, UnknownPresetError) as exc:
        logger.error("Chyba konfigurace: %s", exc)
        return 2
    except ValueError as exc:
        logger.error("Chyba výpočtu: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
