"""
repository.py — Accès aux fichiers de données (chargeurs et écrivains CSV)

Schémas (CSV séparé par des virgules, en-tête obligatoire, UTF-8) :
- recommandations :   user_id,item_id,score
- caractéristiques :  item_id,<feature_1>,<feature_2>,...   (cellules 0/1)
- compatibilités :    user_id,agent_name,score   (agent_name : nom d'agent, ou
                      caractéristique protégée dans les fichiers de `generate`)
- profils (option) :  user_id,item_id,rating

Les erreurs de lecture deviennent des DataLoadError portant le nom du
fichier et le numéro de ligne.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from .agents import agent_compatibility_entropy
from .exceptions import ConfigError, DataLoadError
from .models import AgentSpec, Dataset, ScoredList, UserArrival
from .utils import ensure_file_exists

logger = logging.getLogger(__name__)

RECOMMENDATION_HEADER = ("user_id", "item_id", "score")
COMPATIBILITY_HEADER = ("user_id", "agent_name", "score")
RATING_HEADER = ("user_id", "item_id", "rating")

NEUTRAL_COMPATIBILITY = 0.5
# Au-delà de cette marge, la colonne est probablement la mauvaise.
COMPATIBILITY_TOLERANCE = 0.01


@contextmanager
def read_rows(path: str, expected_header: Optional[Sequence[str]] = None) -> Iterator[Tuple[List[str], Iterator[Tuple[int, List[str]]]]]:
    """Ouvre un CSV et renvoie (en-tête, itérateur de (numéro de ligne, cellules))."""
    ensure_file_exists(path)
    name = os.path.basename(path)
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise DataLoadError(f"{name} : fichier vide (en-tête attendu).") from None
            if expected_header is not None and tuple(header) != tuple(expected_header):
                raise DataLoadError(f"{name}, ligne 1 : en-tête attendu {','.join(expected_header)}.")

            def rows() -> Iterator[Tuple[int, List[str]]]:
                for cells in reader:
                    if not cells or all(not c.strip() for c in cells):
                        continue
                    if len(cells) != len(header):
                        raise DataLoadError(
                            f"{name}, ligne {reader.line_num} : {len(header)} colonnes attendues, {len(cells)} lues."
                        )
                    yield reader.line_num, [c.strip() for c in cells]

            yield header, rows()
    except csv.Error as e:
        raise DataLoadError(f"{name} : CSV invalide ({e}).") from e
    except UnicodeDecodeError as e:
        raise DataLoadError(f"{name} : encodage UTF-8 attendu.") from e


def _parse_number(value: str, path: str, line: int, column: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise DataLoadError(f"{os.path.basename(path)}, ligne {line} : {column} non numérique ({value!r}).") from None
    if math.isnan(x) or math.isinf(x):
        raise DataLoadError(f"{os.path.basename(path)}, ligne {line} : {column} non fini.")
    return x


def _require_id(value: str, path: str, line: int, column: str) -> str:
    if not value:
        raise DataLoadError(f"{os.path.basename(path)}, ligne {line} : {column} vide.")
    return value


def load_recommendations(path: str) -> Dict[str, ScoredList]:
    """Listes par utilisateur, triées par score décroissant."""
    per_user: Dict[str, Dict[str, float]] = {}
    with read_rows(path, RECOMMENDATION_HEADER) as (_, rows):
        for line, (user, item, score) in rows:
            user = _require_id(user, path, line, "user_id")
            item = _require_id(item, path, line, "item_id")
            value = _parse_number(score, path, line, "score")
            scores = per_user.setdefault(user, {})
            if item in scores:
                raise DataLoadError(f"{os.path.basename(path)}, ligne {line} : couple ({user}, {item}) dupliqué.")
            scores[item] = value
    logger.info("Loaded recommendations for %d users from %s", len(per_user), path)
    return {user: ScoredList.from_scores(scores) for user, scores in per_user.items()}


@dataclass
class FeatureTable:
    """Drapeaux protégés par item, restreints aux caractéristiques des agents."""

    flags: Dict[str, Dict[str, bool]]
    features: Tuple[str, ...]
    columns: Tuple[str, ...] = ()
    missing: int = 0

    def resolve(self, item_ids: Sequence[str]) -> Dict[str, Dict[str, bool]]:
        """Complète les items absents du fichier (non protégés, compteur d'avertissements)."""
        out = dict(self.flags)
        for item in item_ids:
            if item not in out:
                out[item] = {f: False for f in self.features}
                self.missing += 1
        if self.missing:
            logger.warning("%d item(s) missing from the features file, treated as unprotected", self.missing)
        return out


def load_item_features(path: str, feature_keys: Sequence[str]) -> FeatureTable:
    name = os.path.basename(path)
    flags: Dict[str, Dict[str, bool]] = {}
    with read_rows(path) as (header, rows):
        if not header or header[0] != "item_id":
            raise DataLoadError(f"{name}, ligne 1 : première colonne 'item_id' attendue.")
        for key in feature_keys:
            if key not in header[1:]:
                raise ConfigError(f"Caractéristique {key!r} absente de {name} (colonnes : {', '.join(header[1:])}).")
        columns = {key: header.index(key) for key in feature_keys}
        for line, cells in rows:
            item = _require_id(cells[0], path, line, "item_id")
            if item in flags:
                raise DataLoadError(f"{name}, ligne {line} : item {item} dupliqué.")
            row: Dict[str, bool] = {}
            for key, col in columns.items():
                if cells[col] not in ("0", "1"):
                    raise DataLoadError(f"{name}, ligne {line} : {key} doit valoir 0 ou 1 ({cells[col]!r}).")
                row[key] = cells[col] == "1"
            flags[item] = row
    return FeatureTable(flags=flags, features=tuple(feature_keys), columns=tuple(header[1:]))


def load_compatibilities(path: str) -> Dict[Tuple[str, str], float]:
    out: Dict[Tuple[str, str], float] = {}
    name = os.path.basename(path)
    with read_rows(path, COMPATIBILITY_HEADER) as (_, rows):
        for line, (user, agent, score) in rows:
            user = _require_id(user, path, line, "user_id")
            agent = _require_id(agent, path, line, "agent_name")
            value = _parse_number(score, path, line, "score")
            if not -COMPATIBILITY_TOLERANCE <= value <= 1 + COMPATIBILITY_TOLERANCE:
                raise DataLoadError(f"{name}, ligne {line} : compatibilité hors de [0, 1] ({value}).")
            if (user, agent) in out:
                raise DataLoadError(f"{name}, ligne {line} : couple ({user}, {agent}) dupliqué.")
            out[(user, agent)] = min(1.0, max(0.0, value))
    return out


def load_rating_profiles(path: str) -> Dict[str, List[Tuple[str, float]]]:
    out: Dict[str, List[Tuple[str, float]]] = {}
    with read_rows(path, RATING_HEADER) as (_, rows):
        for line, (user, item, rating) in rows:
            user = _require_id(user, path, line, "user_id")
            item = _require_id(item, path, line, "item_id")
            out.setdefault(user, []).append((item, _parse_number(rating, path, line, "rating")))
    return out


AGENT_KEY = "agent"
FEATURE_KEY = "feature"


def compatibility_key(
    explicit: Mapping[Tuple[str, str], float], agents: Sequence[AgentSpec], feature_columns: Sequence[str]
) -> str:
    """Ce que contient la colonne agent_name du fichier : noms d'agents ou caractéristiques.

    Un fichier écrit par `generate` est indexé par caractéristique ; un fichier
    externe, par nom d'agent. On tranche sur l'ensemble des valeurs présentes.
    """
    keys = {key for _, key in explicit}
    if keys <= {a.name for a in agents}:
        return AGENT_KEY
    if keys <= set(feature_columns):
        logger.info("Compatibilities keyed by protected feature (%s)", ", ".join(sorted(keys)))
        return FEATURE_KEY
    unknown = sorted(keys - {a.name for a in agents})
    logger.warning("Compatibility rows for unknown agents ignored: %s", ", ".join(unknown))
    return AGENT_KEY


@dataclass
class CompatibilityTable:
    """Résolution de la compatibilité (utilisateur, agent).

    Ordre : ligne explicite (clé = nom d'agent ou caractéristique protégée,
    selon `key`), entropie du profil de notes, puis valeur neutre 0.5 (WARNING).
    """

    explicit: Dict[Tuple[str, str], float] = field(default_factory=dict)
    profiles: Optional[Dict[str, List[Tuple[str, float]]]] = None
    flags: Optional[Mapping[str, Mapping[str, bool]]] = None
    key: str = AGENT_KEY
    fallbacks: int = 0

    def __post_init__(self) -> None:
        if self.key not in (AGENT_KEY, FEATURE_KEY):
            raise ConfigError(f"Clé de compatibilité inconnue : {self.key}")

    def lookup(self, user_id: str, spec: AgentSpec) -> float:
        row = (user_id, spec.name if self.key == AGENT_KEY else spec.protected_feature)
        if row in self.explicit:
            return self.explicit[row]
        if self.profiles is not None and user_id in self.profiles:
            items = [item for item, _ in self.profiles[user_id]]
            protected = sum(1 for item in items if spec.protects(item, self.flags or {}))
            return agent_compatibility_entropy(protected, len(items))
        self.fallbacks += 1
        logger.warning(
            "No compatibility for user=%s agent=%s, using neutral %.1f", user_id, spec.name, NEUTRAL_COMPATIBILITY
        )
        return NEUTRAL_COMPATIBILITY


def load_ingested_dataset(
    recommendations: str,
    item_features: str,
    agents: Sequence[AgentSpec],
    compatibilities: Optional[str] = None,
    ratings: Optional[str] = None,
) -> Dataset:
    """Assemble un Dataset depuis des fichiers au schéma Microlending."""
    recs = load_recommendations(recommendations)
    features = sorted({a.protected_feature for a in agents})
    table = load_item_features(item_features, features)
    referenced = sorted({i for ranked in recs.values() for i in ranked.item_ids})
    flags = table.resolve(referenced)
    explicit = load_compatibilities(compatibilities) if compatibilities else {}
    compat = CompatibilityTable(
        explicit=explicit,
        profiles=load_rating_profiles(ratings) if ratings else None,
        flags=flags,
        key=compatibility_key(explicit, agents, table.columns),
    )
    return Dataset(
        recommendations=recs,
        item_flags=flags,
        arrivals=tuple(UserArrival(u) for u in recs),
        compatibility=compat.lookup,
    )


# --- ÉCRITURE ---

def fmt_float(x: float) -> str:
    return repr(float(x))


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    # "\n" fixe : fichiers identiques octet par octet quel que soit l'OS
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_recommendations(path: str, recommendations: Mapping[str, ScoredList]) -> int:
    rows = [(user, item, fmt_float(score)) for user, ranked in recommendations.items() for item, score in ranked]
    write_csv(path, RECOMMENDATION_HEADER, rows)
    return len(rows)


def write_item_features(path: str, flags: Mapping[str, Mapping[str, bool]], features: Sequence[str]) -> None:
    rows = [[item] + [int(bool(row.get(f, False))) for f in features] for item, row in flags.items()]
    write_csv(path, ["item_id", *features], rows)


def write_compatibilities(path: str, compatibilities: Mapping[Tuple[str, str], float]) -> None:
    rows = [(user, agent, fmt_float(score)) for (user, agent), score in compatibilities.items()]
    write_csv(path, COMPATIBILITY_HEADER, rows)


def write_manifest(path: str, payload: Mapping[str, Any]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def read_manifest(path: str) -> Dict[str, Any]:
    ensure_file_exists(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise DataLoadError(f"{os.path.basename(path)} : JSON invalide (ligne {e.lineno}).") from e
