"""
simulator.py — Boucle dynamique de re-classement

Pour chaque arrivée d'utilisateur, dans cet ordre :
1. équité de chaque agent sur la fenêtre courante (avant livraison) ;
2. compatibilité utilisateur / agent ;
3. allocation ;
4. profil : bulletin du recommandeur + bulletins des agents de poids non nul ;
5. mécanisme de choix ;
6. troncature à k, ajout à la fenêtre, trace.

Une exécution est strictement séquentielle : un seul générateur aléatoire,
consommé dans l'ordre des arrivées (tirages de loterie, départages de
Ranked Pairs).
"""

from __future__ import annotations

import logging
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from .agents import agent_ballot, agent_fairness
from .allocation import OpportunityContext, allocate
from .config import ExperimentConfig
from .exceptions import FairRankError, SimulationError
from .models import AgentState, Dataset, ExperimentLog, HistoryWindow, ScoredList, StepRecord, UserArrival
from .voting import aggregate, build_profile

logger = logging.getLogger(__name__)


class Simulator:
    """État d'une exécution : fenêtre d'historique et flux aléatoire."""

    def __init__(self, config: ExperimentConfig, dataset: Dataset) -> None:
        self.config = config
        self.dataset = dataset
        self.window = HistoryWindow(config.window)
        self.rng = np.random.default_rng(config.seed)

    def agent_states(self) -> Tuple[AgentState, ...]:
        """Équité courante de chaque agent, calculée sur la fenêtre avant livraison."""
        flags = self.dataset.item_flags
        return tuple(AgentState(spec, agent_fairness(self.window, spec, flags)) for spec in self.config.agents)

    def _compatibilities(self, user_id: str) -> Dict[str, float]:
        return {
            spec.name: min(1.0, max(0.0, float(self.dataset.compatibility(user_id, spec))))
            for spec in self.config.agents
        }

    def step(self, index: int, arrival: UserArrival, candidates: ScoredList) -> Optional[Tuple[ScoredList, StepRecord]]:
        """Traite une arrivée ; None si l'utilisateur n'a aucun candidat."""
        if not len(candidates):
            logger.warning("Arrival #%d (user=%s): no candidates, user skipped", index, arrival.user_id)
            return None

        cfg = self.config
        flags = self.dataset.item_flags
        fairness = {state.spec.name: state.fairness for state in self.agent_states()}
        compatibility = self._compatibilities(arrival.user_id)

        allocation = allocate(
            cfg.allocation,
            OpportunityContext(fairness=fairness, compatibility=compatibility),
            self.rng,
            cfg.compatibility_exponent,
        )
        ballots = [
            (spec, agent_ballot(spec, candidates, flags).with_weight(allocation.weight(spec.name)))
            for spec in cfg.agents
            if allocation.weight(spec.name) > 0
        ]
        profile = build_profile(candidates, cfg.recommender_weight, ballots)
        ranked = aggregate(cfg.choice, profile, flags, self.rng)

        delivered = ranked.top(cfg.list_length)
        self.window.push(delivered.item_ids)

        record = StepRecord(
            arrival=index,
            user_id=arrival.user_id,
            regime=arrival.regime,
            fairness=fairness,
            compatibility=compatibility,
            weights={spec.name: allocation.weight(spec.name) for spec in cfg.agents},
            delivered=delivered.item_ids,
            scores=tuple(s for _, s in delivered),
            baseline=candidates.top(cfg.list_length).item_ids,
        )
        logger.debug("Arrival #%d user=%s allocated=%s", index, arrival.user_id, allocation.allocated)
        return delivered, record

    def run(self, arrivals: Optional[Iterable[UserArrival]] = None) -> ExperimentLog:
        arrivals = self.dataset.arrivals if arrivals is None else arrivals
        log = ExperimentLog(config=self.config.to_dict())
        for index, arrival in enumerate(arrivals):
            candidates = self.dataset.recommendations.get(arrival.user_id, ScoredList())
            try:
                result = self.step(index, arrival, candidates)
            except SimulationError:
                raise
            except (FairRankError, ValueError) as e:
                raise SimulationError(index, str(e)) from e
            if result is None:
                log.skipped += 1
                continue
            log.records.append(result[1])
        logger.info(
            "Run %s seed=%d finished: %d steps, %d skipped", self.config.label, self.config.seed, len(log), log.skipped
        )
        return log


def run(config: ExperimentConfig, arrivals: Iterable[UserArrival], data: Dataset) -> ExperimentLog:
    """Exécution à froid (fenêtre vide) sur la séquence d'arrivées donnée."""
    return Simulator(config, data).run(arrivals)
