"""
metrics.py — Évaluation a posteriori d'un journal d'expérience

- nDCG@k relatif aux listes d'origine (pertinence binaire : top-k d'origine) ;
- équité normalisée sur toute l'expérience (différente de la vue fenêtrée
  des agents) ;
- séries temporelles d'équité et d'allocation cumulée.
"""

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .agents import normalized_fairness, protected_count
from .exceptions import MetricError, ValidationError
from .models import AgentSpec, ExperimentLog, ItemFlags, ScoredList

Ranking = Union[ScoredList, Sequence[str]]


def _ids(ranking: Ranking) -> Tuple[str, ...]:
    return ranking.item_ids if isinstance(ranking, ScoredList) else tuple(ranking)


def ndcg_at_k(delivered: Ranking, original: Ranking, k: int) -> float:
    if k < 1:
        raise ValidationError("k doit être >= 1.")
    reference = _ids(original)[:k]
    if not reference:
        raise MetricError("nDCG indéfini : liste d'origine vide.")
    relevant = set(reference)
    dcg = sum(1.0 / math.log2(r + 2) for r, item in enumerate(_ids(delivered)[:k]) if item in relevant)
    idcg = sum(1.0 / math.log2(r + 2) for r in range(len(reference)))
    return dcg / idcg


def mean_ndcg(log: ExperimentLog, k: int) -> float:
    if not log.records:
        raise MetricError("nDCG indéfini : journal vide.")
    return float(np.mean([ndcg_at_k(r.delivered, r.baseline, k) for r in log]))


def experiment_fairness(
    log: ExperimentLog,
    agents: Sequence[AgentSpec],
    flags: ItemFlags,
    baseline: bool = False,
) -> Tuple[Dict[str, float], float]:
    """Équité normalisée par agent sur toutes les listes livrées, et sa moyenne.

    `baseline=True` évalue les top-k d'origine (sans re-classement).
    """
    if not log.records:
        raise MetricError("Équité indéfinie : journal vide.")
    lists = [r.baseline if baseline else r.delivered for r in log]
    total = sum(len(ids) for ids in lists)
    per_agent = {
        spec.name: normalized_fairness(sum(protected_count(ids, spec, flags) for ids in lists), total, spec)
        for spec in agents
    }
    return per_agent, float(np.mean(list(per_agent.values())))


def windowed_fairness_series(log: ExperimentLog) -> Dict[str, List[float]]:
    if not log.records:
        return {}
    return {name: [r.fairness[name] for r in log] for name in log.records[0].fairness}


def allocation_counts(log: ExperimentLog) -> Dict[str, List[float]]:
    if not log.records:
        return {}
    return {
        name: np.cumsum([r.weights[name] for r in log]).tolist()
        for name in log.records[0].weights
    }


def summarize_log(
    log: ExperimentLog, agents: Sequence[AgentSpec], flags: ItemFlags, k: int
) -> List[Tuple[str, Union[int, float]]]:
    """Lignes (métrique, valeur) de summary.csv."""
    rows: List[Tuple[str, Union[int, float]]] = [("arrivals", len(log)), ("skipped", log.skipped)]
    if not log.records:
        return rows
    rows.append((f"ndcg@{k}", mean_ndcg(log, k)))
    for prefix, baseline in (("fairness", False), ("baseline_fairness", True)):
        per_agent, average = experiment_fairness(log, agents, flags, baseline=baseline)
        rows.extend((f"{prefix}_{name}", value) for name, value in per_agent.items())
        rows.append((f"{prefix}_average", average))
    return rows
