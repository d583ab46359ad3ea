"""Tomography-assisted noisy circuit simulation with matrix product density operators."""
