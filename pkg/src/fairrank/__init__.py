"""
fairrank/

Re-classement de recommandations sensible à l'équité, en deux phases :
allocation d'agents d'équité à chaque arrivée d'utilisateur, puis vote
(recommandeur + agents alloués). Inclut un générateur de données
synthétiques et la suite d'évaluation.

Organisation : cli.py (console), services.py (cas d'usage), simulator.py
(boucle), allocation.py / voting.py / agents.py (mécanismes), datagen.py
(génération), repository.py (fichiers), metrics.py (évaluation),
models.py (structures), config.py, utils.py, exceptions.py.
"""

__version__ = "0.3.0"
