"""
utils.py — Fonctions utilitaires (validation, conversion, affichage)

Pourquoi ce fichier ?
- Éviter de dupliquer des validations partout (config, GenSpec, chargeurs CSV).
- Les messages d'erreur portent toujours le chemin de clé ou la ligne fautive.
"""

from __future__ import annotations

import json
import os
from typing import Any, Dict, List, Mapping, Sequence

from .exceptions import ConfigError, ValidationError


def ensure_file_exists(path: str) -> None:
    if not path or not os.path.isfile(path):
        raise ValidationError(f"Fichier introuvable: {path}")


def load_json_object(path: str) -> Dict[str, Any]:
    """Charge un fichier JSON dont la racine doit être un objet."""
    ensure_file_exists(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: JSON invalide (ligne {e.lineno}).") from e
    except OSError as e:
        raise ConfigError(f"{path}: impossible de lire le fichier.") from e

    if not isinstance(data, dict):
        raise ConfigError(f"{path}: objet racine attendu.")
    return data


def to_float(value: Any, field: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"Champ '{field}' invalide (float attendu).")
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Champ '{field}' invalide (float attendu).") from e


def to_int(value: Any, field: str) -> int:
    if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
        raise ConfigError(f"Champ '{field}' invalide (int attendu).")
    try:
        return int(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Champ '{field}' invalide (int attendu).") from e


def to_bool(value: Any, field: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"Champ '{field}' invalide (booléen attendu).")
    return value


def validate_non_empty(text: Any, field: str) -> str:
    text = str(text if text is not None else "").strip()
    if not text:
        raise ConfigError(f"{field} obligatoire.")
    return text


def validate_positive_int(value: Any, field: str) -> int:
    n = to_int(value, field)
    if n < 1:
        raise ConfigError(f"Champ '{field}' invalide (entier >= 1 attendu).")
    return n


def validate_non_negative(value: Any, field: str) -> float:
    x = to_float(value, field)
    if x < 0:
        raise ConfigError(f"Champ '{field}' invalide (>= 0 attendu).")
    return x


def validate_probability(value: Any, field: str) -> float:
    x = to_float(value, field)
    if x < 0 or x > 1:
        raise ConfigError(f"Champ '{field}' invalide (attendu entre 0 et 1).")
    return x


def validate_target_proportion(value: Any, field: str) -> float:
    x = to_float(value, field)
    if x <= 0 or x > 1:
        raise ConfigError(f"Champ '{field}' invalide (attendu dans ]0, 1]).")
    return x


def validate_choice(value: Any, allowed: Sequence[str], field: str) -> str:
    if value not in allowed:
        raise ConfigError(f"Champ '{field}' invalide : {value!r} (attendu : {', '.join(allowed)}).")
    return value


def require_keys(payload: Mapping[str, Any], required: Sequence[str], allowed: Sequence[str], where: str) -> None:
    """Refuse les clés inconnues et signale les clés obligatoires manquantes."""
    prefix = f"{where}." if where else ""
    unknown = sorted(set(payload) - set(allowed))
    if unknown:
        raise ConfigError(f"Clé inconnue : {prefix}{unknown[0]}")
    for key in required:
        if key not in payload:
            raise ConfigError(f"Clé obligatoire manquante : {prefix}{key}")


def as_list(value: Any, field: str) -> List[Any]:
    """Accepte une valeur seule ou une liste non vide (axe de grille)."""
    if isinstance(value, list):
        if not value:
            raise ConfigError(f"Champ '{field}' invalide (liste vide).")
        return value
    return [value]


def format_table(headers: List[str], rows: List[List[str]]) -> str:
    """Petit rendu tabulaire en monospace."""
    if not rows:
        return "(aucune donnée)"

    widths = [len(h) for h in headers]
    for r in rows:
        for i, cell in enumerate(r):
            widths[i] = max(widths[i], len(cell))

    def fmt_row(r: List[str]) -> str:
        return " | ".join(cell.ljust(widths[i]) for i, cell in enumerate(r))

    sep = "-+-".join("-" * w for w in widths)
    out = [fmt_row(headers), sep]
    out.extend(fmt_row(r) for r in rows)
    return "\n".join(out)
