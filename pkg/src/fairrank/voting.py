"""
voting.py — Mécanismes de choix (agrégation de préférences)

Un profil pondéré de bulletins (ordres faibles en niveaux d'indifférence)
est fusionné en une liste classée par l'une des quatre règles :
rescoring, Borda, Copeland, Ranked Pairs.

Départage canonique partout : score recommandeur décroissant, puis id
croissant. Seul Ranked Pairs départage au hasard (ordre des paires à marge
égale, sens des paires à égalité parfaite).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ProfileError
from .models import AgentSpec, AllocationResult, ItemFlags, ScoredList

CHOICE_MECHANISMS = ("rescoring", "borda", "copeland", "ranked_pairs")

# Tolérance d'égalité des soutiens pondérés (poids réels)
_ATOL = 1e-12
_RTOL = 1e-9


@dataclass(frozen=True)
class Ballot:
    """Ordre faible : niveaux disjoints, le premier strictement préféré."""

    tiers: Tuple[FrozenSet[str], ...]
    weight: float = 1.0
    scores: Optional[Mapping[str, float]] = None

    @classmethod
    def from_scored_list(cls, ranked: ScoredList, weight: float = 1.0) -> "Ballot":
        """Ordre total strict induit par la liste du recommandeur."""
        return cls(
            tiers=tuple(frozenset([i]) for i in ranked.item_ids),
            weight=weight,
            scores=ranked.scores,
        )

    def with_weight(self, weight: float) -> "Ballot":
        return Ballot(tiers=self.tiers, weight=weight, scores=self.scores)

    def rank_of(self) -> Dict[str, int]:
        return {item: t for t, tier in enumerate(self.tiers) for item in tier}


@dataclass(frozen=True)
class Profile:
    """Bulletin du recommandeur + bulletins des agents alloués."""

    candidates: FrozenSet[str]
    recommender_ballot: Ballot
    agent_ballots: Tuple[Tuple[AgentSpec, Ballot], ...] = ()

    @property
    def ballots(self) -> List[Ballot]:
        return [self.recommender_ballot] + [b for _, b in self.agent_ballots]

    def validate(self) -> None:
        for n, ballot in enumerate(self.ballots):
            if ballot.weight < 0:
                raise ProfileError(f"Bulletin #{n} : poids négatif.")
            covered: set[str] = set()
            for tier in ballot.tiers:
                outside = tier - self.candidates
                if outside:
                    raise ProfileError(f"Bulletin #{n} : candidat inconnu {sorted(outside)[0]}.")
                if covered & tier:
                    raise ProfileError(f"Bulletin #{n} : niveaux non disjoints.")
                covered |= tier
            if covered != self.candidates:
                missing = sorted(self.candidates - covered)[0]
                raise ProfileError(f"Bulletin #{n} : candidat {missing} absent.")

    def canonical_order(self) -> List[str]:
        scores = self.recommender_ballot.scores or {}
        return sorted(self.candidates, key=lambda i: (-scores.get(i, 0.0), i))


def build_profile(
    candidates: ScoredList,
    recommender_weight: float,
    agent_ballots: Sequence[Tuple[AgentSpec, Ballot]] = (),
) -> Profile:
    return Profile(
        candidates=frozenset(candidates.item_ids),
        recommender_ballot=Ballot.from_scored_list(candidates, recommender_weight),
        agent_ballots=tuple(agent_ballots),
    )


@dataclass(frozen=True)
class MarginMatrix:
    """support[i, j] = poids total des bulletins préférant strictement i à j."""

    candidates: Tuple[str, ...]
    support: np.ndarray

    def index(self, item: str) -> int:
        return self.candidates.index(item)

    def get(self, i: str, j: str) -> float:
        return float(self.support[self.index(i), self.index(j)])


def _ranked_output(points: Mapping[str, float], profile: Profile) -> ScoredList:
    rec = profile.recommender_ballot.scores or {}
    ordered = sorted(points, key=lambda i: (-points[i], -rec.get(i, 0.0), i))
    return ScoredList(tuple((i, float(points[i])) for i in ordered))


def pairwise_support(profile: Profile) -> MarginMatrix:
    profile.validate()
    candidates = tuple(profile.canonical_order())
    n = len(candidates)
    support = np.zeros((n, n), dtype=float)
    for ballot in profile.ballots:
        if ballot.weight == 0:
            continue
        rank = ballot.rank_of()
        r = np.array([rank[c] for c in candidates])
        # Indifférence : le bulletin s'abstient sur la paire.
        support += ballot.weight * (r[:, None] < r[None, :])
    return MarginMatrix(candidates=candidates, support=support)


def aggregate_rescoring(
    recommender_scores: Mapping[str, float],
    allocation: AllocationResult,
    agent_specs: Sequence[AgentSpec],
    protected_flags: ItemFlags,
) -> ScoredList:
    final: Dict[str, float] = {}
    for item, score in recommender_scores.items():
        bonus = sum(
            allocation.weight(spec.name) * spec.delta
            for spec in agent_specs
            if spec.protects(item, protected_flags)
        )
        final[item] = score + bonus
    ordered = sorted(final, key=lambda i: (-final[i], -recommender_scores[i], i))
    return ScoredList(tuple((i, final[i]) for i in ordered))


def aggregate_borda(profile: Profile) -> ScoredList:
    profile.validate()
    n = len(profile.candidates)
    totals: Dict[str, float] = {c: 0.0 for c in profile.candidates}
    for ballot in profile.ballots:
        start = 0
        for tier in ballot.tiers:
            # Moyenne des scores positionnels n-1-start ... n-start-len(tier)
            avg = (n - 1 - start) - (len(tier) - 1) / 2.0
            for item in tier:
                totals[item] += ballot.weight * avg
            start += len(tier)
    return _ranked_output(totals, profile)


def copeland_points(margins: MarginMatrix) -> np.ndarray:
    s = margins.support
    tie = np.isclose(s, s.T, rtol=_RTOL, atol=_ATOL)
    win = (s > s.T) & ~tie
    # La diagonale compte comme égalité : on la retire.
    return win.sum(axis=1) + 0.5 * (tie.sum(axis=1) - 1)


def aggregate_copeland(profile: Profile) -> ScoredList:
    margins = pairwise_support(profile)
    points = copeland_points(margins)
    return _ranked_output(dict(zip(margins.candidates, points.tolist())), profile)


def _lock(reach: np.ndarray, locked: List[Tuple[int, int]], winner: int, loser: int) -> None:
    # reach[a, b] : b est atteignable depuis a dans le graphe verrouillé
    if reach[loser, winner]:
        return
    locked.append((winner, loser))
    if reach[winner, loser]:
        return
    sources = reach[:, winner].copy()
    sources[winner] = True
    targets = reach[loser].copy()
    targets[loser] = True
    reach |= np.outer(sources, targets)


def locked_pairs(margins: MarginMatrix, rng: np.random.Generator) -> List[Tuple[int, int]]:
    """Verrouille les victoires par marge décroissante en sautant celles qui créent un cycle.

    Les paires à égalité parfaite passent ensuite, dans un ordre et un sens
    tirés au hasard, avec la même règle anti-cycle.
    """
    s = margins.support
    n = len(margins.candidates)
    rows, cols = np.triu_indices(n, 1)
    forward, backward = s[rows, cols], s[cols, rows]
    decided = ~np.isclose(forward, backward, rtol=_RTOL, atol=_ATOL)
    wins = forward > backward
    winners = np.where(wins, rows, cols)[decided]
    losers = np.where(wins, cols, rows)[decided]
    gaps = np.round(np.abs(forward - backward)[decided], 9)

    order = np.arange(0)
    if len(gaps):
        shuffled = rng.permutation(len(gaps))
        # tri stable : les marges égales gardent l'ordre tiré au hasard
        order = shuffled[np.argsort(-gaps[shuffled], kind="stable")]

    reach = np.zeros((n, n), dtype=bool)
    locked: List[Tuple[int, int]] = []
    for k in order:
        _lock(reach, locked, int(winners[k]), int(losers[k]))

    tied_rows, tied_cols = rows[~decided], cols[~decided]
    if len(tied_rows):
        shuffled = rng.permutation(len(tied_rows))
        flip = rng.random(len(tied_rows)) < 0.5
        firsts = np.where(flip, tied_cols, tied_rows)[shuffled]
        seconds = np.where(flip, tied_rows, tied_cols)[shuffled]
        for winner, loser in zip(firsts.tolist(), seconds.tolist()):
            _lock(reach, locked, winner, loser)
    return locked


def aggregate_ranked_pairs(profile: Profile, rng: np.random.Generator) -> ScoredList:
    margins = pairwise_support(profile)
    n = len(margins.candidates)
    locked = locked_pairs(margins, rng)

    indegree = [0] * n
    successors: List[List[int]] = [[] for _ in range(n)]
    for winner, loser in locked:
        successors[winner].append(loser)
        indegree[loser] += 1

    # Kahn : les candidats disponibles sortent dans l'ordre canonique
    # (margins.candidates est déjà trié canoniquement, l'indice suffit).
    ready = [i for i in range(n) if indegree[i] == 0]
    heapq.heapify(ready)
    order: List[int] = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for v in successors[u]:
            indegree[v] -= 1
            if indegree[v] == 0:
                heapq.heappush(ready, v)

    return ScoredList(tuple((margins.candidates[u], float(n - pos)) for pos, u in enumerate(order)))


def aggregate(
    name: str,
    profile: Profile,
    protected_flags: ItemFlags,
    rng: np.random.Generator,
) -> ScoredList:
    """Applique le mécanisme de choix `name` au profil."""
    if name == "rescoring":
        allocation = AllocationResult({spec.name: b.weight for spec, b in profile.agent_ballots})
        specs = [spec for spec, _ in profile.agent_ballots]
        return aggregate_rescoring(profile.recommender_ballot.scores or {}, allocation, specs, protected_flags)
    rules: Dict[str, Callable[[Profile], ScoredList]] = {
        "borda": aggregate_borda,
        "copeland": aggregate_copeland,
        "ranked_pairs": lambda p: aggregate_ranked_pairs(p, rng),
    }
    if name not in rules:
        raise ProfileError(f"Mécanisme de choix inconnu : {name}")
    return rules[name](profile)
