"""Experiment drivers: variational state preparation, MaxCut QAOA and truncation sweeps."""
