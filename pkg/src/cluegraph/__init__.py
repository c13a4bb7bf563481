"""Explainable question answering over user manuals via clue chains."""

from .alignment import AlignmentResult, align
from .encoder import HashNGramEncoder, NodeEmbeddings, encode_nodes, project_question
from .engine import Engine
from .graph import (
    ArgumentRole,
    Edge,
    ManualGraph,
    Node,
    NodeKind,
    RelationKind,
)
from .inference import ChainHop, ClueChain, InferenceParams, infer_chains
from .ingest import fuse_coreferences, load_annotation, parse_manual
from .model import ModelParams
from .scorer import ScorerGeometry, link_info, score_triple

__version__ = "0.1.0"

__all__ = [
    "AlignmentResult",
    "align",
    "ArgumentRole",
    "ChainHop",
    "ClueChain",
    "Edge",
    "Engine",
    "HashNGramEncoder",
    "InferenceParams",
    "ManualGraph",
    "ModelParams",
    "Node",
    "NodeEmbeddings",
    "NodeKind",
    "RelationKind",
    "ScorerGeometry",
    "encode_nodes",
    "fuse_coreferences",
    "infer_chains",
    "link_info",
    "load_annotation",
    "parse_manual",
    "project_question",
    "score_triple",
    "__version__",
]
