"""
allocation.py — Mécanismes d'allocation (phase 1)

Associe les agents d'équité à une opportunité de recommandation (une
arrivée d'utilisateur) à partir de deux aspects du contexte : l'équité
de chaque agent et sa compatibilité avec l'utilisateur.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Mapping

import numpy as np

from .exceptions import ConfigError, ValidationError
from .models import AllocationResult

logger = logging.getLogger(__name__)

ALLOCATION_MECHANISMS = ("least_fair", "lottery", "weighted")
DEFAULT_COMPATIBILITY_EXPONENT = 2.0


@dataclass(frozen=True)
class OpportunityContext:
    """Équité et compatibilité par agent, dans l'ordre de déclaration des agents."""

    fairness: Mapping[str, float]
    compatibility: Mapping[str, float]

    def __post_init__(self) -> None:
        if set(self.fairness) != set(self.compatibility):
            raise ValidationError("Équité et compatibilité doivent couvrir les mêmes agents.")
        for label, values in (("équité", self.fairness), ("compatibilité", self.compatibility)):
            for name, v in values.items():
                if not 0.0 <= v <= 1.0:
                    raise ValidationError(f"{label} de {name} hors de [0, 1] : {v}")

    @property
    def agents(self) -> tuple:
        return tuple(self.fairness)


def _need(ctx: OpportunityContext, exponent: float) -> Dict[str, float]:
    # (1 - équité) * compatibilité^exposant ; 0**0 vaut 1 en Python.
    return {a: (1.0 - ctx.fairness[a]) * ctx.compatibility[a] ** exponent for a in ctx.agents}


def allocate_least_fair(ctx: OpportunityContext) -> AllocationResult:
    """L'agent d'équité minimale reçoit 1.0 ; égalités : ordre de déclaration."""
    if not ctx.agents:
        raise ConfigError("Aucun agent d'équité configuré.")
    chosen = min(ctx.agents, key=lambda a: ctx.fairness[a])
    return AllocationResult({a: (1.0 if a == chosen else 0.0) for a in ctx.agents})


def lottery_weights(ctx: OpportunityContext, exponent: float = DEFAULT_COMPATIBILITY_EXPONENT) -> Dict[str, float]:
    """Distribution de la loterie ; vide si aucun agent n'a de besoin."""
    raw = _need(ctx, exponent)
    total = sum(raw.values())
    if total <= 0:
        return {}
    return {a: w / total for a, w in raw.items()}


def allocate_lottery(
    ctx: OpportunityContext,
    rng: np.random.Generator,
    exponent: float = DEFAULT_COMPATIBILITY_EXPONENT,
) -> AllocationResult:
    dist = lottery_weights(ctx, exponent)
    if not dist:
        logger.debug("Lottery: no agent in need, nothing allocated")
        return AllocationResult({a: 0.0 for a in ctx.agents})
    names = list(dist)
    cumulative = np.cumsum([dist[a] for a in names])
    u = rng.random()
    idx = min(int(np.searchsorted(cumulative, u, side="right")), len(names) - 1)
    return AllocationResult({a: (1.0 if a == names[idx] else 0.0) for a in ctx.agents})


def allocate_weighted(ctx: OpportunityContext, exponent: float = DEFAULT_COMPATIBILITY_EXPONENT) -> AllocationResult:
    """Tous les agents, avec leur produit brut (non normalisé)."""
    return AllocationResult(_need(ctx, exponent))


def allocate(
    name: str,
    ctx: OpportunityContext,
    rng: np.random.Generator,
    exponent: float = DEFAULT_COMPATIBILITY_EXPONENT,
) -> AllocationResult:
    """Applique le mécanisme d'allocation `name`."""
    mechanisms: Dict[str, Callable[[], AllocationResult]] = {
        "least_fair": lambda: allocate_least_fair(ctx),
        "lottery": lambda: allocate_lottery(ctx, rng, exponent),
        "weighted": lambda: allocate_weighted(ctx, exponent),
    }
    if name not in mechanisms:
        raise ConfigError(f"Mécanisme d'allocation inconnu : {name}")
    return mechanisms[name]()
