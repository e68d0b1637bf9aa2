"""
Accelerated Oracles

Accelerated first-order methods with stochastic, variance-reduced and
compressed gradient oracles, plus the harness that reproduces their
convergence experiments.
"""

__version__ = "0.1.0"
