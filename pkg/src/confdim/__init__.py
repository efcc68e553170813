"""Conformal dimension bounds for self-similar spaces given by graph endomorphisms."""

from .bounds import (
    DEFAULT_Q_GRID,
    DimensionCertificate,
    EnergyEstimate,
    arc_lower_from_nbar,
    arc_upper_direct,
    arc_upper_from_energy,
    certify,
    nbar_bracket,
)
from .endomorphism import CoveringMap, EdgePathMap, VirtualEndomorphism, iterate
from .energy import minimize_Eqq, multiplicity, pull_tight, tighten
from .fixtures import Fixture, load
from .graph import ConformalStructure, Graph
from .modulus import modulus

__all__ = [
    "DEFAULT_Q_GRID",
    "ConformalStructure",
    "CoveringMap",
    "DimensionCertificate",
    "EdgePathMap",
    "EnergyEstimate",
    "Fixture",
    "Graph",
    "VirtualEndomorphism",
    "arc_lower_from_nbar",
    "arc_upper_direct",
    "arc_upper_from_energy",
    "certify",
    "iterate",
    "load",
    "minimize_Eqq",
    "modulus",
    "multiplicity",
    "nbar_bracket",
    "pull_tight",
    "tighten",
]
