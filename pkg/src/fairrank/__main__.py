"""
Point d'entrée du package lorsque vous exécutez : `python -m fairrank`

Exécution :
- python -m fairrank run data/config_default.json out/default
"""

from __future__ import annotations

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
