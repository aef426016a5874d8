"""Metaheuristic hyperparameter tuning for stacked Boltzmann machines."""
