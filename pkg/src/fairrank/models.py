"""
models.py — Modèles de données (POO + type hints)

Pourquoi ce fichier ?
- Représenter les objets partagés par tous les modules : listes scorées,
  agents d'équité, fenêtre d'historique, résultats d'allocation, journal.
- Les objets valeur sont figés (frozen) ; seule la fenêtre d'historique est
  mutable, avec un unique écrivain (la boucle du simulateur).
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Callable, Deque, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .exceptions import ValidationError

# item_id -> {feature -> protégé ?}
ItemFlags = Mapping[str, Mapping[str, bool]]


@dataclass(frozen=True)
class Item:
    """Un item du catalogue et son appartenance aux groupes protégés."""

    id: str
    protected_flags: Mapping[str, bool] = field(default_factory=dict)

    def is_protected(self, feature: str) -> bool:
        return bool(self.protected_flags.get(feature, False))


@dataclass(frozen=True)
class ScoredList:
    """Séquence ordonnée (item_id, score), scores non croissants, ids distincts."""

    entries: Tuple[Tuple[str, float], ...] = ()

    def __post_init__(self) -> None:
        seen: set[str] = set()
        previous: Optional[float] = None
        for item_id, score in self.entries:
            if item_id in seen:
                raise ValidationError(f"Item dupliqué dans la liste : {item_id}")
            seen.add(item_id)
            if previous is not None and score > previous:
                raise ValidationError(f"Scores non décroissants à l'item {item_id}")
            previous = score

    @classmethod
    def from_scores(cls, scores: Mapping[str, float] | Iterable[Tuple[str, float]]) -> "ScoredList":
        """Trie par score décroissant puis id croissant."""
        pairs = scores.items() if isinstance(scores, Mapping) else scores
        ordered = sorted(((str(i), float(s)) for i, s in pairs), key=lambda p: (-p[1], p[0]))
        return cls(tuple(ordered))

    @property
    def item_ids(self) -> Tuple[str, ...]:
        return tuple(i for i, _ in self.entries)

    @property
    def scores(self) -> Dict[str, float]:
        return dict(self.entries)

    def top(self, k: int) -> "ScoredList":
        return ScoredList(self.entries[:k])

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Tuple[str, float]]:
        return iter(self.entries)


@dataclass(frozen=True)
class AgentSpec:
    """Un agent d'équité : prédicat protégé, proportion cible π et incrément δ."""

    name: str
    protected_feature: str
    target_proportion: float
    delta: float = 0.0

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("Nom d'agent obligatoire.")
        if not 0 < self.target_proportion <= 1:
            raise ValidationError(f"Agent {self.name} : π doit être dans ]0, 1].")
        if self.delta < 0:
            raise ValidationError(f"Agent {self.name} : δ doit être >= 0.")

    def protects(self, item_id: str, flags: ItemFlags) -> bool:
        return bool(flags.get(item_id, {}).get(self.protected_feature, False))


@dataclass(frozen=True)
class AgentState:
    spec: AgentSpec
    fairness: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.fairness <= 1.0:
            raise ValidationError(f"Agent {self.spec.name} : équité hors de [0, 1].")


class HistoryWindow:
    """FIFO bornée des W dernières listes livrées (ids d'items)."""

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValidationError("La capacité de la fenêtre doit être >= 1.")
        self.capacity = capacity
        self._lists: Deque[Tuple[str, ...]] = deque(maxlen=capacity)

    def push(self, delivered: Sequence[str]) -> "HistoryWindow":
        if not delivered:
            raise ValidationError("Liste livrée vide : rien à ajouter à la fenêtre.")
        self._lists.append(tuple(delivered))
        return self

    def multiset(self) -> Counter:
        counts: Counter = Counter()
        for ids in self._lists:
            counts.update(ids)
        return counts

    @property
    def lists(self) -> List[Tuple[str, ...]]:
        return list(self._lists)

    def __len__(self) -> int:
        return len(self._lists)


def window_push(window: HistoryWindow, delivered: Sequence[str]) -> HistoryWindow:
    return window.push(delivered)


def window_multiset(window: HistoryWindow) -> Tuple[Counter, int]:
    """Concaténation (avec répétitions) des listes stockées, et son nombre total de places."""
    counts = window.multiset()
    return counts, sum(counts.values())


@dataclass(frozen=True)
class AllocationResult:
    """Poids d'allocation par agent (0 = non alloué)."""

    weights: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, w in self.weights.items():
            if w < 0:
                raise ValidationError(f"Poids négatif pour l'agent {name}.")

    def weight(self, name: str) -> float:
        return float(self.weights.get(name, 0.0))

    @property
    def allocated(self) -> Tuple[str, ...]:
        return tuple(name for name, w in self.weights.items() if w > 0)

    @property
    def total(self) -> float:
        return float(sum(self.weights.values()))


@dataclass(frozen=True)
class UserArrival:
    user_id: str
    regime: Optional[str] = None


@dataclass
class Dataset:
    """Entrées du simulateur, qu'elles soient générées ou chargées."""

    recommendations: Dict[str, ScoredList]
    item_flags: Dict[str, Dict[str, bool]]
    arrivals: Tuple[UserArrival, ...]
    compatibility: Callable[[str, AgentSpec], float]


@dataclass(frozen=True)
class StepRecord:
    """Trace d'audit d'une arrivée."""

    arrival: int
    user_id: str
    regime: Optional[str]
    fairness: Mapping[str, float]
    compatibility: Mapping[str, float]
    weights: Mapping[str, float]
    delivered: Tuple[str, ...]
    scores: Tuple[float, ...]
    baseline: Tuple[str, ...]


@dataclass
class ExperimentLog:
    """Suite complète des StepRecord plus l'écho de la configuration."""

    config: Dict[str, Any]
    records: List[StepRecord] = field(default_factory=list)
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[StepRecord]:
        return iter(self.records)
