"""
services.py — Logique métier (use-cases)

- run_experiment : exécute une expérience ou une grille et écrit les CSV ;
- generate_dataset : génère un jeu synthétique aux schémas d'ingestion ;
- summarize : relit les summary.csv d'un dossier de sortie.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Sequence, Tuple

from . import __version__
from .agents import list_proportion
from .config import DataSpec, ExperimentConfig, ExperimentGrid, GenSpec
from .datagen import generate
from .exceptions import ConfigError, DataLoadError
from .metrics import allocation_counts, summarize_log, windowed_fairness_series
from .models import AgentSpec, Dataset, ExperimentLog
from .repository import (
    fmt_float,
    load_ingested_dataset,
    read_rows,
    write_compatibilities,
    write_csv,
    write_item_features,
    write_manifest,
    write_recommendations,
)
from .simulator import Simulator

logger = logging.getLogger(__name__)

STEPS_FILE = "steps.csv"
SUMMARY_FILE = "summary.csv"
ALLOCATION_FILE = "allocation.csv"
FAIRNESS_SERIES_FILE = "fairness_series.csv"
MANIFEST_FILE = "manifest.json"


def build_dataset(data: DataSpec, agents: Sequence[AgentSpec]) -> Dataset:
    if data.source == "generated":
        if data.genspec is None:
            raise ConfigError("data.genspec manquant pour une source générée.")
        return generate(data.genspec, data.order).to_dataset()
    return load_ingested_dataset(
        data.recommendations or "",
        data.item_features or "",
        agents,
        compatibilities=data.compatibilities,
        ratings=data.ratings,
    )


def write_log(log: ExperimentLog, config: ExperimentConfig, dataset: Dataset, outdir: str) -> None:
    """Écrit les cinq fichiers d'une cellule."""
    os.makedirs(outdir, exist_ok=True)
    names = [a.name for a in config.agents]
    flags = dataset.item_flags

    header = ["arrival", "user_id", "regime"]
    for n in names:
        header += [f"fairness_{n}", f"compatibility_{n}", f"weight_{n}", f"proportion_{n}"]
    header += ["delivered", "scores"]
    rows: List[List[Any]] = []
    for r in log:
        row: List[Any] = [r.arrival, r.user_id, r.regime or ""]
        for spec in config.agents:
            row += [
                fmt_float(r.fairness[spec.name]),
                fmt_float(r.compatibility[spec.name]),
                fmt_float(r.weights[spec.name]),
                fmt_float(list_proportion(r.delivered, spec, flags)),
            ]
        row += [" ".join(r.delivered), " ".join(fmt_float(s) for s in r.scores)]
        rows.append(row)
    write_csv(os.path.join(outdir, STEPS_FILE), header, rows)

    summary = summarize_log(log, config.agents, flags, config.list_length)
    write_csv(
        os.path.join(outdir, SUMMARY_FILE),
        ["metric", "value"],
        [(m, v if isinstance(v, int) else fmt_float(v)) for m, v in summary],
    )

    arrivals = [r.arrival for r in log]
    for filename, series in ((ALLOCATION_FILE, allocation_counts(log)), (FAIRNESS_SERIES_FILE, windowed_fairness_series(log))):
        write_csv(
            os.path.join(outdir, filename),
            ["arrival", *names],
            [[a, *(fmt_float(series[n][t]) for n in names)] for t, a in enumerate(arrivals)],
        )

    write_manifest(
        os.path.join(outdir, MANIFEST_FILE),
        {"version": __version__, "seed": config.seed, "config": log.config},
    )


def run_cell(config: ExperimentConfig, dataset: Dataset, outdir: str) -> str:
    log = Simulator(config, dataset).run()
    write_log(log, config, dataset, outdir)
    logger.info("Cell %s seed=%d written to %s", config.label, config.seed, outdir)
    return outdir


def _run_cell_job(job: Tuple[ExperimentConfig, Dataset, str]) -> str:
    return run_cell(*job)


class ExperimentService:
    """Service principal orchestrant les cas d'usage."""

    def run_experiment(self, grid: ExperimentGrid, outdir: str) -> List[str]:
        """Exécute toutes les cellules de la grille ; renvoie leurs dossiers."""
        logger.info("Experiment requested: %d cell(s) -> %s", len(grid.cells()), outdir)
        dataset = build_dataset(grid.base.data, grid.base.agents)
        jobs = [(cfg, dataset, os.path.join(outdir, rel) if rel else outdir) for rel, cfg in grid.cells()]

        if grid.workers > 1 and len(jobs) > 1:
            # Les cellules ne partagent rien : les fichiers ne dépendent pas de workers.
            with ProcessPoolExecutor(max_workers=grid.workers) as pool:
                done = list(pool.map(_run_cell_job, jobs))
        else:
            done = [_run_cell_job(job) for job in jobs]

        if grid.is_grid:
            write_manifest(
                os.path.join(outdir, MANIFEST_FILE),
                {
                    "version": __version__,
                    "allocations": list(grid.allocations),
                    "choices": list(grid.choices),
                    "seeds": list(grid.seeds),
                    "cells": sorted(os.path.relpath(d, outdir) for d in done),
                    "config": grid.base.to_dict(),
                },
            )
        return done

    def generate_dataset(self, spec: GenSpec, outdir: str) -> Dict[str, int]:
        """Écrit recommendations.csv, item_features.csv, compatibilities.csv et le manifeste."""
        logger.info("Dataset generation requested: seed=%d -> %s", spec.seed, outdir)
        data = generate(spec)
        os.makedirs(outdir, exist_ok=True)
        n_rows = write_recommendations(os.path.join(outdir, "recommendations.csv"), data.recommendations)
        write_item_features(os.path.join(outdir, "item_features.csv"), data.catalog.flags, spec.feature_names)
        write_compatibilities(os.path.join(outdir, "compatibilities.csv"), data.compatibilities())
        write_manifest(
            os.path.join(outdir, MANIFEST_FILE),
            {
                "version": __version__,
                "seed": spec.seed,
                "genspec": spec.to_dict(),
                "arrivals": [a.user_id for a in data.arrivals],
            },
        )
        logger.info("Dataset written: %d users, %d recommendation rows", len(data.users), n_rows)
        return {"users": len(data.users), "items": spec.n_items, "recommendation_rows": n_rows}

    def summarize(self, outdir: str) -> Tuple[List[str], List[List[str]]]:
        """(en-têtes, lignes) : une ligne par summary.csv trouvé sous outdir."""
        found: List[Tuple[str, Dict[str, str]]] = []
        for root, dirs, files in os.walk(outdir):
            dirs.sort()
            if SUMMARY_FILE in files:
                path = os.path.join(root, SUMMARY_FILE)
                with read_rows(path, ("metric", "value")) as (_, rows):
                    metrics = {metric: value for _, (metric, value) in rows}
                found.append((os.path.relpath(root, outdir), metrics))
        if not found:
            raise DataLoadError(f"Aucun {SUMMARY_FILE} sous {outdir}.")

        columns: List[str] = []
        for _, metrics in found:
            columns += [m for m in metrics if m not in columns]
        rows = [[cell] + [_short(metrics.get(c, "")) for c in columns] for cell, metrics in found]
        return ["cell", *columns], rows


def _short(value: str) -> str:
    try:
        x = float(value)
    except ValueError:
        return value
    return str(int(x)) if x.is_integer() and "." not in value else f"{x:.4f}"
