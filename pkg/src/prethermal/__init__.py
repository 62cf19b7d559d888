"""Open-system dynamics of qubits in a spatially correlated bosonic bath.

Submodules
----------
bathmodel    bath rates and spatial correlation
spinops      spin operators, Dicke basis, observables and states
liouvillian  superoperator, spectrum and steady states
dynamics     full, reduced and collective time evolution
equilibria   Gibbs, GGE and block-thermal states
measures     purity, entropy and concurrence
"""
from ._core import BACKEND
from .bathmodel import BathParams, RateSet, SpatialModel

__version__ = "0.1.0"

__all__ = ["BACKEND", "BathParams", "RateSet", "SpatialModel", "__version__"]
