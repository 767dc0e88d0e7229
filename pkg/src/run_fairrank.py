"""
run_fairrank.py — Script de lancement

Équivalent de `python -m fairrank`, sans configurer PYTHONPATH :
quand on exécute ce fichier, Python ajoute `src/` au chemin des modules.
Aucune logique métier ici ; tout est dans le package `fairrank/`.

Depuis la racine du projet :
    python src/run_fairrank.py run data/config_default.json out/default
"""

from __future__ import annotations

from fairrank.cli import main


if __name__ == "__main__":
    raise SystemExit(main())
