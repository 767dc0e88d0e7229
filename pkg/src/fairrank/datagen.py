"""
datagen.py — Générateur de données synthétiques (facteurs latents)

Déroulement :
1. catalogue : propension binaire Φ_j ~ Bernoulli(p_f) par facteur, puis
   V_j ~ Normal(Φ_j, factor_stddev) (ou V_j = Φ_j si `exact_binary_items`) ;
2. utilisateurs, régime par régime : Φ_i ~ Normal(μ_f, σ_f), puis
   U_i ~ Normal(Φ_i, factor_stddev) ;
3. pour chaque utilisateur, m items tirés uniformément, score = U_i · V_j,
   les m′ meilleurs forment la sortie du recommandeur ;
4. ordre d'arrivée : blocs de régimes concaténés, ou "mixed" (mélange).

Les flux aléatoires (catalogue, ordre, chaque régime) sont des enfants
indépendants de la graine maîtresse (`numpy.random.SeedSequence.spawn`).
Générateur de bits PCG64, lois normales par l'algorithme ziggurat de numpy :
une réimplémentation ailleurs ne coïncide qu'en distribution, pas au bit près.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .agents import agent_compatibility_synthetic
from .config import MIXED, GenSpec, Order, RegimeSpec
from .exceptions import ConfigError, ValidationError
from .models import Dataset, Item, ScoredList, UserArrival
from .repository import FEATURE_KEY, CompatibilityTable

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Catalog:
    item_ids: Tuple[str, ...]
    propensities: np.ndarray  # (n_items, k), 0/1
    factors: np.ndarray  # (n_items, k)
    feature_names: Tuple[str, ...]

    @property
    def items(self) -> Tuple[Item, ...]:
        return tuple(
            Item(item_id, {name: bool(self.propensities[j, f]) for f, name in enumerate(self.feature_names)})
            for j, item_id in enumerate(self.item_ids)
        )

    @property
    def flags(self) -> Dict[str, Dict[str, bool]]:
        return {item.id: dict(item.protected_flags) for item in self.items}

    def prevalence(self, feature: str) -> float:
        return float(self.propensities[:, self.feature_names.index(feature)].mean())


@dataclass(frozen=True)
class SyntheticUser:
    user_id: str
    regime: str
    propensities: np.ndarray
    latent: np.ndarray


@dataclass
class SyntheticDataset:
    spec: GenSpec
    catalog: Catalog
    users: Dict[str, SyntheticUser]
    recommendations: Dict[str, ScoredList]
    arrivals: Tuple[UserArrival, ...]
    order: Order

    def compatibilities(self) -> Dict[Tuple[str, str], float]:
        """Compatibilité (utilisateur, caractéristique) = propension bornée à [0, 1]."""
        return {
            (u.user_id, name): agent_compatibility_synthetic(u.propensities[f])
            for u in self.users.values()
            for f, name in enumerate(self.spec.feature_names)
        }

    def to_dataset(self) -> Dataset:
        table = CompatibilityTable(explicit=self.compatibilities(), key=FEATURE_KEY)
        return Dataset(
            recommendations=self.recommendations,
            item_flags=self.catalog.flags,
            arrivals=self.arrivals,
            compatibility=table.lookup,
        )


def item_ids_for(n_items: int) -> Tuple[str, ...]:
    # zéros à gauche : l'ordre lexical suit l'ordre numérique
    width = len(str(max(n_items - 1, 0)))
    return tuple(f"i{j:0{width}d}" for j in range(n_items))


def regime_user_ids(spec: GenSpec) -> Dict[str, Tuple[str, ...]]:
    """Identifiants utilisateurs par régime, numérotés dans l'ordre de déclaration."""
    width = len(str(max(spec.n_users - 1, 0)))
    out: Dict[str, Tuple[str, ...]] = {}
    start = 0
    for regime in spec.regimes:
        out[regime.name] = tuple(f"u{start + n:0{width}d}" for n in range(regime.count))
        start += regime.count
    return out


def gen_user(regime: RegimeSpec, rng: np.random.Generator, factor_stddev: float) -> Tuple[np.ndarray, np.ndarray]:
    """(Φ_i, U_i) pour un utilisateur du régime."""
    propensities = rng.normal(np.asarray(regime.means), np.asarray(regime.stddevs))
    latent = rng.normal(propensities, factor_stddev)
    return propensities, latent


def gen_item(spec: GenSpec, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """(Φ_j binaire, V_j) pour un item."""
    propensities = rng.binomial(1, np.asarray(spec.item_probabilities))
    if spec.exact_binary_items:
        return propensities, propensities.astype(float)
    return propensities, rng.normal(propensities.astype(float), spec.factor_stddev)


def gen_catalog(spec: GenSpec, rng: np.random.Generator) -> Catalog:
    rows = [gen_item(spec, rng) for _ in range(spec.n_items)]
    return Catalog(
        item_ids=item_ids_for(spec.n_items),
        propensities=np.array([p for p, _ in rows], dtype=int).reshape(spec.n_items, spec.n_factors),
        factors=np.array([v for _, v in rows], dtype=float).reshape(spec.n_items, spec.n_factors),
        feature_names=spec.feature_names,
    )


def gen_recommendations(
    latent: np.ndarray,
    item_matrix: np.ndarray,
    m: int,
    m_prime: int,
    rng: np.random.Generator,
    item_ids: Optional[Sequence[str]] = None,
) -> ScoredList:
    """m items uniformes, score = produit scalaire, m′ meilleurs."""
    n_items = item_matrix.shape[0]
    if m > n_items or m_prime > m:
        raise ValidationError(f"Paramètres incohérents : m′={m_prime}, m={m}, n_items={n_items}.")
    ids = item_ids if item_ids is not None else item_ids_for(n_items)
    sampled = rng.choice(n_items, size=m, replace=False)
    scores = item_matrix[sampled] @ np.asarray(latent, dtype=float)
    return ScoredList.from_scores(zip((ids[j] for j in sampled), scores.tolist())).top(m_prime)


def sequence_arrivals(spec: GenSpec, order: Order, rng: np.random.Generator) -> List[UserArrival]:
    """Blocs de régimes dans l'ordre donné, ou mélange uniforme pour "mixed"."""
    ids = regime_user_ids(spec)
    if order == MIXED:
        pool = [UserArrival(u, r.name) for r in spec.regimes for u in ids[r.name]]
        return [pool[k] for k in rng.permutation(len(pool))]
    arrivals: List[UserArrival] = []
    for name in order:
        if name not in ids:
            raise ConfigError(f"Régime inconnu dans l'ordre : {name}")
        arrivals.extend(UserArrival(u, name) for u in ids[name])
    return arrivals


def generate(spec: GenSpec, order: Optional[Order] = None) -> SyntheticDataset:
    """Génère un jeu complet, reproductible pour une graine donnée."""
    order = order if order is not None else spec.order
    spec.check_order(order)
    catalog_seed, order_seed, *regime_seeds = np.random.SeedSequence(spec.seed).spawn(2 + len(spec.regimes))

    catalog = gen_catalog(spec, np.random.default_rng(catalog_seed))
    for name in spec.feature_names:
        logger.info("Catalog prevalence of %s: %.4f", name, catalog.prevalence(name))

    ids = regime_user_ids(spec)
    users: Dict[str, SyntheticUser] = {}
    recommendations: Dict[str, ScoredList] = {}
    for regime, seed in zip(spec.regimes, regime_seeds):
        rng = np.random.default_rng(seed)
        for user_id in ids[regime.name]:
            propensities, latent = gen_user(regime, rng, spec.factor_stddev)
            users[user_id] = SyntheticUser(user_id, regime.name, propensities, latent)
            recommendations[user_id] = gen_recommendations(
                latent, catalog.factors, spec.m, spec.m_prime, rng, catalog.item_ids
            )

    arrivals = tuple(sequence_arrivals(spec, order, np.random.default_rng(order_seed)))
    logger.info("Generated %d users x %d items (order=%s)", len(users), spec.n_items, order)
    return SyntheticDataset(
        spec=spec,
        catalog=catalog,
        users=users,
        recommendations=recommendations,
        arrivals=arrivals,
        order=order,
    )
