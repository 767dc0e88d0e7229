"""
cli.py — Interface console (sous-commandes)

    generate <genspec.json> <outdir>   génère un jeu synthétique
    run <config.json> <outdir>         exécute une expérience (ou une grille)
    summarize <outdir>                 affiche les summary.csv trouvés

Codes de sortie : 0 succès, 1 erreur métier, 2 erreur inattendue.
"""

from __future__ import annotations

import argparse
import logging
from dataclasses import replace
from typing import List, Optional

from .config import load_genspec, parse_config
from .exceptions import (
    ConfigError,
    DataLoadError,
    FairRankError,
    SimulationError,
    ValidationError,
)
from .logging_conf import configure_logging
from .services import ExperimentService
from .utils import format_table

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairrank", description="Re-classement équitable multi-agents (simulateur)")
    parser.add_argument("--seed", type=int, default=None, help="Remplace la graine de la configuration")
    parser.add_argument("--quiet", action="store_true", help="Console limitée aux avertissements")
    parser.add_argument("--log-level", default="INFO", help="Niveau de log (DEBUG, INFO, etc.)")
    parser.add_argument("--log-file", default="fairrank.log", help="Fichier de log (rotation)")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="Générer un jeu synthétique")
    gen.add_argument("genspec", help="Fichier JSON GenSpec")
    gen.add_argument("outdir", help="Dossier de sortie")

    run = sub.add_parser("run", help="Exécuter une expérience")
    run.add_argument("config", help="Fichier JSON de configuration")
    run.add_argument("outdir", help="Dossier de sortie")

    summ = sub.add_parser("summarize", help="Résumer un dossier de sortie")
    summ.add_argument("outdir", help="Dossier produit par `run`")
    return parser


def action_generate(app: ExperimentService, args: argparse.Namespace) -> None:
    spec = load_genspec(args.genspec)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    counts = app.generate_dataset(spec, args.outdir)
    print(
        f"✅ Jeu généré dans {args.outdir} : {counts['users']} utilisateurs, "
        f"{counts['items']} items, {counts['recommendation_rows']} lignes de recommandations."
    )


def action_run(app: ExperimentService, args: argparse.Namespace) -> None:
    grid = parse_config(args.config)
    if args.seed is not None:
        grid = grid.with_seed(args.seed)
    done = app.run_experiment(grid, args.outdir)
    print(f"✅ {len(done)} exécution(s) écrite(s) dans {args.outdir}.")


def action_summarize(app: ExperimentService, args: argparse.Namespace) -> None:
    headers, rows = app.summarize(args.outdir)
    print(format_table(headers, rows))


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(log_level=args.log_level, log_file=args.log_file, quiet=args.quiet)
    app = ExperimentService()
    logger.info("Command %s started", args.command)

    actions = {"generate": action_generate, "run": action_run, "summarize": action_summarize}
    try:
        actions[args.command](app, args)
    except (ConfigError, ValidationError, DataLoadError, SimulationError) as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"⚠️ Erreur : {e}")
        return 1
    except FairRankError as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"❌ Erreur : {e}")
        return 1
    except Exception as e:
        logger.exception("Unexpected error")
        print(f"🔥 Erreur inattendue : {e}")
        return 2
    return 0


if __name__ == "__main__":
    import sys
    sys.exit(main())
