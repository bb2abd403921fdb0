"""Neighbor distribution prediction in temporal star-schema networks."""
from .graph import (
    AttributeNode,
    IngestError,
    LabelCatalog,
    LinkEvent,
    RunWindows,
    TemporalStarGraph,
    TimeWindow,
    ingest,
)
from .distribution import compute_ldv, compute_ndv, ndv_for
from .linalg import SingularMatrix, gauss_jordan_invert, normal_equations_solve
from .clustering import ClusterModel, kmeans
from .efm import EfmModel, EvolutionMatrix, predict, select_k, train
from .metrics import absolute_accuracy, prediction_difficulty, virtual_accuracy

__version__ = "0.1.0"
