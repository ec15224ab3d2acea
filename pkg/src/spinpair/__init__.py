"""Joint measurability of spin observables on pairs of qubit copies.

Modules: ``matcore`` (operators and Pauli algebra), ``qubit`` (states, unsharp
observables, qubit maps), ``povm`` (two-qubit measurement families),
``gptcheck`` (separable positivity), ``compat`` (configurations and SDP
constraints), ``sdpsolve`` (bisection over alternating projections) and ``cli``.
"""
__version__ = "0.1.0"
