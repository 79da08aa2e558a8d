"""Structural fingerprints for networks.

The package turns a corpus of graphs into eight scale-free features
(clustering, degree assortativity, and a six-component motif
significance profile), trains random forests on them, and distills
repeated classification runs into similarity networks and communities.
"""
from .features import FeatureVector, MotifCensus, ZScoreReport, featurize
from .generators import GraphSpec, generate
from .graph import Graph, GmlError, load_gml, parse_gml, simplify, write_gml
from .learner import ForestConfig, ForestModel, train_forest
from .nullmodels import EnsembleSpec, ensemble
from .sampling import DataPoint, LabeledDataset

__version__ = "0.1.0"

__all__ = [
    "DataPoint",
    "EnsembleSpec",
    "FeatureVector",
    "ForestConfig",
    "ForestModel",
    "GmlError",
    "Graph",
    "GraphSpec",
    "LabeledDataset",
    "MotifCensus",
    "ZScoreReport",
    "ensemble",
    "featurize",
    "generate",
    "load_gml",
    "parse_gml",
    "simplify",
    "train_forest",
    "write_gml",
    "__version__",
]
