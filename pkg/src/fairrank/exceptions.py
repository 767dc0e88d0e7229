"""
exceptions.py — Exceptions métier

Pourquoi ce fichier ?
- Avoir des erreurs "propres" et lisibles.
- Ne pas remonter des erreurs CSV/JSON/numpy brutes à l'utilisateur.
- Faciliter la gestion d'erreurs dans `cli.py` (code de sortie 1).
"""


class FairRankError(Exception):
    """Erreur applicative générique."""


class ValidationError(FairRankError):
    """Entrée rejetée par une opération."""


class ConfigError(FairRankError):
    """Configuration d'expérience ou GenSpec invalide (chemin de clé dans le message)."""


class DataLoadError(FairRankError):
    """Fichier de données mal formé (nom de fichier + numéro de ligne dans le message)."""


class ProfileError(FairRankError):
    """Profil de vote mal formé."""


class MetricError(FairRankError):
    """Métrique non définie pour l'entrée fournie."""


class SimulationError(FairRankError):
    """Erreur survenue pendant la boucle de simulation."""

    def __init__(self, arrival: int, message: str) -> None:
        super().__init__(f"arrivée #{arrival} : {message}")
        self.arrival = arrival
