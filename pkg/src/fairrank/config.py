"""
config.py — Configuration applicative

Pourquoi ce fichier ?
- Centraliser les paramètres d'expérience et de génération (valeurs par défaut
  documentées, pas de constantes "magiques" dispersées).
- Valider les fichiers JSON de configuration : clés inconnues refusées,
  erreurs avec le chemin de clé (ex: agents[1].target_proportion).
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from .allocation import ALLOCATION_MECHANISMS, DEFAULT_COMPATIBILITY_EXPONENT
from .exceptions import ConfigError, ValidationError
from .models import AgentSpec
from .utils import (
    as_list,
    load_json_object,
    require_keys,
    to_bool,
    to_float,
    to_int,
    validate_choice,
    validate_non_empty,
    validate_non_negative,
    validate_positive_int,
    validate_probability,
    validate_target_proportion,
)
from .voting import CHOICE_MECHANISMS

DEFAULT_WINDOW = 100
DEFAULT_LIST_LENGTH = 10
DEFAULT_SEED = 42
MIXED = "mixed"

Order = Union[str, Tuple[str, ...]]


@dataclass(frozen=True)
class RegimeSpec:
    """Un lot d'utilisateurs tirés d'une même distribution de propensions."""

    name: str
    count: int
    means: Tuple[float, ...]
    stddevs: Tuple[float, ...]

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ConfigError(f"Régime {self.name} : count doit être > 0.")
        if len(self.means) != len(self.stddevs):
            raise ConfigError(f"Régime {self.name} : means et stddevs de longueurs différentes.")
        if any(s < 0 for s in self.stddevs):
            raise ConfigError(f"Régime {self.name} : écart-type négatif.")


def _default_regime() -> Tuple[RegimeSpec, ...]:
    return (RegimeSpec("synthetic", 500, (0.5, 0.6, 0.0), (0.06, 0.08, 1.0)),)


@dataclass(frozen=True)
class GenSpec:
    """Paramètres du générateur synthétique (défauts : jeu "Synthetic")."""

    n_items: int = 5000
    n_factors: int = 3
    n_sensitive: int = 2
    item_probabilities: Tuple[float, ...] = (0.039, 0.05, 0.9)
    factor_stddev: float = 1.0
    m: int = 200
    m_prime: int = 50
    exact_binary_items: bool = False
    seed: int = DEFAULT_SEED
    regimes: Tuple[RegimeSpec, ...] = field(default_factory=_default_regime)
    order: Order = ()
    feature_names: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.feature_names:
            object.__setattr__(self, "feature_names", tuple(f"feature_{f}" for f in range(self.n_sensitive)))
        if not self.order:
            object.__setattr__(self, "order", tuple(r.name for r in self.regimes))
        self.validate()

    def validate(self) -> None:
        if self.n_items < 1 or self.n_factors < 1:
            raise ConfigError("genspec : n_items et n_factors doivent être >= 1.")
        if not 0 <= self.n_sensitive <= self.n_factors:
            raise ConfigError("genspec.n_sensitive : k_s doit être <= k.")
        if len(self.feature_names) != self.n_sensitive:
            raise ConfigError("genspec.feature_names : un nom par facteur sensible attendu.")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ConfigError("genspec.feature_names : noms dupliqués.")
        if len(self.item_probabilities) != self.n_factors:
            raise ConfigError("genspec.item_probabilities : une probabilité par facteur attendue.")
        if any(not 0 <= p <= 1 for p in self.item_probabilities):
            raise ConfigError("genspec.item_probabilities : valeurs attendues dans [0, 1].")
        if self.factor_stddev < 0:
            raise ConfigError("genspec.factor_stddev : doit être >= 0.")
        if self.m_prime < 1:
            raise ConfigError("genspec.m_prime : doit être >= 1.")
        if self.m_prime > self.m:
            raise ConfigError(f"genspec.m_prime ({self.m_prime}) > genspec.m ({self.m}).")
        if self.m > self.n_items:
            raise ConfigError(f"genspec.m ({self.m}) > genspec.n_items ({self.n_items}).")
        if not self.regimes:
            raise ConfigError("genspec.regimes : au moins un régime attendu.")
        names = [r.name for r in self.regimes]
        if len(set(names)) != len(names):
            raise ConfigError("genspec.regimes : noms de régime dupliqués.")
        for r in self.regimes:
            if len(r.means) != self.n_factors:
                raise ConfigError(f"genspec.regimes.{r.name} : une moyenne par facteur attendue.")
        self.check_order(self.order)

    def check_order(self, order: Order) -> None:
        if order == MIXED:
            return
        if isinstance(order, str):
            raise ConfigError(f"Ordre de régimes invalide : {order!r}")
        known = {r.name for r in self.regimes}
        for name in order:
            if name not in known:
                raise ConfigError(f"Régime inconnu dans l'ordre : {name}")

    @property
    def n_users(self) -> int:
        return sum(r.count for r in self.regimes)

    def regime(self, name: str) -> RegimeSpec:
        for r in self.regimes:
            if r.name == name:
                return r
        raise ConfigError(f"Régime inconnu : {name}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class DataSpec:
    """Source des données : générées (GenSpec) ou chargées (fichiers CSV)."""

    source: str
    genspec: Optional[GenSpec] = None
    order: Optional[Order] = None
    recommendations: Optional[str] = None
    item_features: Optional[str] = None
    compatibilities: Optional[str] = None
    ratings: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"source": self.source}
        if self.source == "generated":
            out["genspec"] = self.genspec.to_dict() if self.genspec else None
            out["order"] = self.order
        else:
            for key in ("recommendations", "item_features", "compatibilities", "ratings"):
                out[key] = getattr(self, key)
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Une cellule d'expérience : un couple de mécanismes et une graine."""

    agents: Tuple[AgentSpec, ...]
    allocation: str
    choice: str
    data: DataSpec
    recommender_weight: float = 1.0
    compatibility_exponent: float = DEFAULT_COMPATIBILITY_EXPONENT
    window: int = DEFAULT_WINDOW
    list_length: int = DEFAULT_LIST_LENGTH
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if not self.agents:
            raise ConfigError("agents : au moins un agent attendu.")
        validate_choice(self.allocation, ALLOCATION_MECHANISMS, "allocation")
        validate_choice(self.choice, CHOICE_MECHANISMS, "choice")
        if self.window < 1 or self.list_length < 1:
            raise ConfigError("window et list_length doivent être >= 1.")

    @property
    def label(self) -> str:
        return f"{self.allocation}__{self.choice}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "agents": [asdict(a) for a in self.agents],
            "allocation": self.allocation,
            "choice": self.choice,
            "recommender_weight": self.recommender_weight,
            "compatibility_exponent": self.compatibility_exponent,
            "window": self.window,
            "list_length": self.list_length,
            "seed": self.seed,
            "data": self.data.to_dict(),
        }


@dataclass(frozen=True)
class ExperimentGrid:
    """Configuration complète : axes de grille allocation × choix × graine."""

    base: ExperimentConfig
    allocations: Tuple[str, ...]
    choices: Tuple[str, ...]
    seeds: Tuple[int, ...]
    workers: int = 1

    @property
    def is_grid(self) -> bool:
        return len(self.allocations) * len(self.choices) * len(self.seeds) > 1

    def with_seed(self, seed: int) -> "ExperimentGrid":
        return replace(self, seeds=(seed,))

    def cells(self) -> List[Tuple[str, ExperimentConfig]]:
        """(chemin relatif, config) par cellule ; "" pour une expérience simple."""
        out: List[Tuple[str, ExperimentConfig]] = []
        for allocation in self.allocations:
            for choice in self.choices:
                for seed in self.seeds:
                    cfg = replace(self.base, allocation=allocation, choice=choice, seed=seed)
                    parts: List[str] = []
                    if len(self.allocations) * len(self.choices) > 1:
                        parts.append(cfg.label)
                    if len(self.seeds) > 1:
                        parts.append(f"seed_{seed}")
                    out.append((os.path.join(*parts) if parts else "", cfg))
        return out


# ---------------------------------------------------------------------------
# Lecture / validation JSON
# ---------------------------------------------------------------------------

_REGIME_KEYS = ("name", "count", "means", "stddevs")
_GENSPEC_KEYS = (
    "n_users", "n_items", "n_factors", "n_sensitive", "feature_names", "item_probabilities",
    "factor_stddev", "m", "m_prime", "exact_binary_items", "seed", "order", "regimes",
)
_AGENT_KEYS = ("name", "protected_feature", "target_proportion", "delta")
_CONFIG_KEYS = (
    "agents", "allocation", "choice", "recommender_weight", "compatibility_exponent",
    "window", "list_length", "seed", "workers", "data",
)
_GENERATED_KEYS = ("source", "genspec", "genspec_path", "order")
_INGESTED_KEYS = ("source", "recommendations", "item_features", "compatibilities", "ratings")


def _float_tuple(value: Any, field_name: str) -> Tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"Champ '{field_name}' invalide (liste de nombres attendue).")
    return tuple(to_float(v, f"{field_name}[{i}]") for i, v in enumerate(value))


def _parse_order(value: Any, where: str) -> Order:
    if value == MIXED:
        return MIXED
    if isinstance(value, list) and value:
        return tuple(validate_non_empty(v, f"{where}[{i}]") for i, v in enumerate(value))
    raise ConfigError(f"Champ '{where}' invalide (liste de régimes ou \"mixed\").")


def _parse_regime(payload: Any, where: str) -> RegimeSpec:
    if not isinstance(payload, dict):
        raise ConfigError(f"{where} : objet attendu.")
    require_keys(payload, _REGIME_KEYS, _REGIME_KEYS, where)
    stddevs = _float_tuple(payload["stddevs"], f"{where}.stddevs")
    for i, s in enumerate(stddevs):
        validate_non_negative(s, f"{where}.stddevs[{i}]")
    return RegimeSpec(
        name=validate_non_empty(payload["name"], f"{where}.name"),
        count=validate_positive_int(payload["count"], f"{where}.count"),
        means=_float_tuple(payload["means"], f"{where}.means"),
        stddevs=stddevs,
    )


def parse_genspec(payload: Mapping[str, Any], where: str = "genspec") -> GenSpec:
    """Construit un GenSpec validé depuis un objet JSON."""
    if not isinstance(payload, dict):
        raise ConfigError(f"{where} : objet attendu.")
    require_keys(payload, (), _GENSPEC_KEYS, where)
    kwargs: Dict[str, Any] = {}
    for key in ("n_items", "n_factors", "m", "m_prime"):
        if key in payload:
            kwargs[key] = validate_positive_int(payload[key], f"{where}.{key}")
    if "n_sensitive" in payload:
        kwargs["n_sensitive"] = to_int(payload["n_sensitive"], f"{where}.n_sensitive")
    if "seed" in payload:
        kwargs["seed"] = to_int(payload["seed"], f"{where}.seed")
    if "factor_stddev" in payload:
        kwargs["factor_stddev"] = validate_non_negative(payload["factor_stddev"], f"{where}.factor_stddev")
    if "exact_binary_items" in payload:
        kwargs["exact_binary_items"] = to_bool(payload["exact_binary_items"], f"{where}.exact_binary_items")
    if "item_probabilities" in payload:
        probs = _float_tuple(payload["item_probabilities"], f"{where}.item_probabilities")
        kwargs["item_probabilities"] = tuple(
            validate_probability(p, f"{where}.item_probabilities[{i}]") for i, p in enumerate(probs)
        )
    if "feature_names" in payload:
        names = payload["feature_names"]
        if not isinstance(names, list):
            raise ConfigError(f"Champ '{where}.feature_names' invalide (liste attendue).")
        kwargs["feature_names"] = tuple(
            validate_non_empty(n, f"{where}.feature_names[{i}]") for i, n in enumerate(names)
        )
    if "regimes" in payload:
        regimes = payload["regimes"]
        if not isinstance(regimes, list) or not regimes:
            raise ConfigError(f"Champ '{where}.regimes' invalide (liste non vide attendue).")
        kwargs["regimes"] = tuple(_parse_regime(r, f"{where}.regimes[{i}]") for i, r in enumerate(regimes))
    if "order" in payload:
        kwargs["order"] = _parse_order(payload["order"], f"{where}.order")

    spec = GenSpec(**kwargs)
    if "n_users" in payload:
        n_users = validate_positive_int(payload["n_users"], f"{where}.n_users")
        if n_users != spec.n_users:
            raise ConfigError(
                f"{where}.n_users ({n_users}) différent de la somme des régimes ({spec.n_users})."
            )
    return spec


def load_genspec(path: str) -> GenSpec:
    return parse_genspec(load_json_object(path), "genspec")


def _parse_agent(payload: Any, where: str) -> AgentSpec:
    if not isinstance(payload, dict):
        raise ConfigError(f"{where} : objet attendu.")
    require_keys(payload, ("name", "protected_feature", "target_proportion"), _AGENT_KEYS, where)
    try:
        return AgentSpec(
            name=validate_non_empty(payload["name"], f"{where}.name"),
            protected_feature=validate_non_empty(payload["protected_feature"], f"{where}.protected_feature"),
            target_proportion=validate_target_proportion(payload["target_proportion"], f"{where}.target_proportion"),
            delta=validate_non_negative(payload.get("delta", 0.0), f"{where}.delta"),
        )
    except ValidationError as e:
        raise ConfigError(f"{where} : {e}") from e


def _resolve(base_dir: str, path: Any, where: str) -> str:
    path = validate_non_empty(path, where)
    return path if os.path.isabs(path) else os.path.normpath(os.path.join(base_dir, path))


def _parse_data(payload: Any, base_dir: str) -> DataSpec:
    if not isinstance(payload, dict):
        raise ConfigError("data : objet attendu.")
    source = validate_choice(payload.get("source"), ("generated", "ingested"), "data.source")
    if source == "generated":
        require_keys(payload, ("source",), _GENERATED_KEYS, "data")
        if ("genspec" in payload) == ("genspec_path" in payload):
            raise ConfigError("data : exactement une clé parmi genspec / genspec_path attendue.")
        if "genspec" in payload:
            genspec = parse_genspec(payload["genspec"], "data.genspec")
        else:
            genspec = load_genspec(_resolve(base_dir, payload["genspec_path"], "data.genspec_path"))
        order = _parse_order(payload["order"], "data.order") if "order" in payload else None
        if order is not None:
            genspec.check_order(order)
        return DataSpec(source=source, genspec=genspec, order=order)

    require_keys(payload, ("source", "recommendations", "item_features"), _INGESTED_KEYS, "data")
    paths = {
        key: _resolve(base_dir, payload[key], f"data.{key}")
        for key in ("recommendations", "item_features", "compatibilities", "ratings")
        if key in payload
    }
    return DataSpec(source=source, **paths)


def config_from_dict(payload: Mapping[str, Any], base_dir: str = ".") -> ExperimentGrid:
    """Valide un objet de configuration d'expérience (éventuellement une grille)."""
    require_keys(payload, ("agents", "allocation", "choice", "data"), _CONFIG_KEYS, "")

    agents_raw = payload["agents"]
    if not isinstance(agents_raw, list) or not agents_raw:
        raise ConfigError("agents : liste non vide attendue.")
    agents = tuple(_parse_agent(a, f"agents[{i}]") for i, a in enumerate(agents_raw))
    names = [a.name for a in agents]
    if len(set(names)) != len(names):
        raise ConfigError("agents : noms d'agents dupliqués.")

    allocations = tuple(
        validate_choice(v, ALLOCATION_MECHANISMS, f"allocation[{i}]")
        for i, v in enumerate(as_list(payload["allocation"], "allocation"))
    )
    choices = tuple(
        validate_choice(v, CHOICE_MECHANISMS, f"choice[{i}]")
        for i, v in enumerate(as_list(payload["choice"], "choice"))
    )
    seeds = tuple(
        to_int(v, f"seed[{i}]") for i, v in enumerate(as_list(payload.get("seed", DEFAULT_SEED), "seed"))
    )

    base = ExperimentConfig(
        agents=agents,
        allocation=allocations[0],
        choice=choices[0],
        data=_parse_data(payload["data"], base_dir),
        recommender_weight=validate_non_negative(payload.get("recommender_weight", 1.0), "recommender_weight"),
        compatibility_exponent=validate_non_negative(
            payload.get("compatibility_exponent", DEFAULT_COMPATIBILITY_EXPONENT), "compatibility_exponent"
        ),
        window=validate_positive_int(payload.get("window", DEFAULT_WINDOW), "window"),
        list_length=validate_positive_int(payload.get("list_length", DEFAULT_LIST_LENGTH), "list_length"),
        seed=seeds[0],
    )
    if base.data.genspec is not None:
        known = set(base.data.genspec.feature_names)
        for i, agent in enumerate(agents):
            if agent.protected_feature not in known:
                raise ConfigError(
                    f"agents[{i}].protected_feature : caractéristique inconnue {agent.protected_feature!r}."
                )

    return ExperimentGrid(
        base=base,
        allocations=allocations,
        choices=choices,
        seeds=seeds,
        workers=validate_positive_int(payload.get("workers", 1), "workers"),
    )


def parse_config(path: str) -> ExperimentGrid:
    """Lit et valide un fichier de configuration d'expérience."""
    payload = load_json_object(path)
    return config_from_dict(payload, base_dir=os.path.dirname(os.path.abspath(path)))
