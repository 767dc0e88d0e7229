"""
agents.py — Calculs côté agent d'équité

- équité proportionnelle fenêtrée (proportion protégée / π, tronquée à 1) ;
- compatibilité utilisateur (propension synthétique ou entropie du profil) ;
- construction du bulletin binaire protégé > non protégé.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from .exceptions import ValidationError
from .models import AgentSpec, HistoryWindow, ItemFlags, ScoredList, window_multiset
from .voting import Ballot


def protected_count(item_ids: Iterable[str], spec: AgentSpec, flags: ItemFlags) -> int:
    return sum(1 for i in item_ids if spec.protects(i, flags))


def normalized_fairness(protected: int, total: int, spec: AgentSpec) -> float:
    # Fenêtre vide : proportion 0, l'agent est maximalement insatisfait.
    proportion = protected / total if total else 0.0
    return min(1.0, proportion / spec.target_proportion)


def agent_fairness(window: HistoryWindow, spec: AgentSpec, flags: ItemFlags) -> float:
    counts, total = window_multiset(window)
    protected = sum(n for item_id, n in counts.items() if spec.protects(item_id, flags))
    return normalized_fairness(protected, total, spec)


def list_proportion(item_ids: Sequence[str], spec: AgentSpec, flags: ItemFlags) -> float:
    """Proportion protégée d'une seule liste (diagnostic, non utilisé pour l'allocation)."""
    if not item_ids:
        return 0.0
    return protected_count(item_ids, spec, flags) / len(item_ids)


def agent_compatibility_synthetic(user_propensity: float) -> float:
    return min(1.0, max(0.0, float(user_propensity)))


def agent_compatibility_entropy(profile_protected_count: int, profile_total: int) -> float:
    """Entropie binaire (base 2) de la part d'items protégés dans le profil."""
    if profile_total < 0 or profile_protected_count < 0:
        raise ValidationError("Comptes de profil négatifs.")
    if profile_protected_count > profile_total:
        raise ValidationError(
            f"Compte protégé ({profile_protected_count}) supérieur au total ({profile_total})."
        )
    if profile_total == 0:
        return 0.0
    p = profile_protected_count / profile_total
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def agent_ballot(spec: AgentSpec, candidates: ScoredList, flags: ItemFlags) -> Ballot:
    """Deux niveaux : protégés puis non protégés ; les niveaux vides sont omis.

    Le poids est fixé plus tard à partir de l'allocation.
    """
    if not len(candidates):
        raise ValidationError("Aucun candidat pour construire le bulletin.")
    protected = frozenset(i for i in candidates.item_ids if spec.protects(i, flags))
    others = frozenset(candidates.item_ids) - protected
    return Ballot(tiers=tuple(t for t in (protected, others) if t), weight=0.0)
