"""Network-coded broadcast over erasure channels: simulator and delay analysis."""

from .gf import FieldContext
from .linalg import CodedVector, KnowledgeSpace
from .sim import Metrics, SimConfig, Simulation, run

__all__ = ["FieldContext", "CodedVector", "KnowledgeSpace", "Metrics", "SimConfig", "Simulation", "run"]

__version__ = "0.1.0"
