"""Multilevel and filtered multilevel Monte Carlo for cell-centered random fields."""

from .grid import GridHierarchy, Level1D, Level2D, build_hierarchy, gram_weight
from .transfer import TransferKind, TransferPipeline, pipeline_apply
from .estimators import Allocation, CostModel, EstimatorRun, allocate, cost_model, cost_table
from .diffusion import SolverError

__all__ = [
    "Allocation",
    "CostModel",
    "EstimatorRun",
    "GridHierarchy",
    "Level1D",
    "Level2D",
    "SolverError",
    "TransferKind",
    "TransferPipeline",
    "allocate",
    "build_hierarchy",
    "cost_model",
    "cost_table",
    "gram_weight",
    "pipeline_apply",
]

__version__ = "0.1.0"
