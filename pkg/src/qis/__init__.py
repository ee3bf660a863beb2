"""Quantum inception scores and a cluster-Ising QCNN reproduction pipeline."""

__version__ = "0.1.0"
