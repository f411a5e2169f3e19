"""Inventory replenishment experiments: forecasting, tree ensembles and deep Q-learning."""

__version__ = "0.1.0"
