"""Adaptive-convolution triple scoring.

The link vector estimated for a question is carved into two banks of
small 2D filters, one bank for procedural hops and one for factual hops.
The head node's embedding is reshaped into a grid and convolved with the
selected bank; the activated feature maps pass through a fully-connected
layer whose output is dotted with the candidate tail embedding. A sigmoid
turns that into a plausibility in (0, 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionMismatch, GeometryMismatch
from .graph import RelationKind

PROCEDURAL_BANK = 0
FACTUAL_BANK = 1


def bank_for_relation(kind: RelationKind) -> int:
    """Next hops use the procedural bank; everything else, including the
    transient self-loop, is a fact about the node."""
    return PROCEDURAL_BANK if kind is RelationKind.NEXT else FACTUAL_BANK


@dataclass(frozen=True)
class ScorerGeometry:
    """Reshape and filter dimensions for the convolution scorer."""

    grid_h: int = 16
    grid_w: int = 8
    filters_per_bank: int = 8
    filter_h: int = 3
    filter_w: int = 3

    def __post_init__(self):
        if min(self.grid_h, self.grid_w, self.filters_per_bank, self.filter_h, self.filter_w) < 1:
            raise GeometryMismatch("all geometry dimensions must be positive")
        if self.conv_h < 1 or self.conv_w < 1:
            raise GeometryMismatch(
                f"filters {self.filter_h}x{self.filter_w} do not fit grid "
                f"{self.grid_h}x{self.grid_w}"
            )

    @property
    def node_dim(self) -> int:
        return self.grid_h * self.grid_w

    @property
    def conv_h(self) -> int:
        return self.grid_h - self.filter_h + 1

    @property
    def conv_w(self) -> int:
        return self.grid_w - self.filter_w + 1

    @property
    def bank_size(self) -> int:
        return self.filters_per_bank * self.filter_h * self.filter_w

    @property
    def link_dim(self) -> int:
        return 2 * self.bank_size

    @property
    def feature_size(self) -> int:
        return self.filters_per_bank * self.conv_h * self.conv_w

    def to_dict(self) -> dict:
        return {
            "grid": [self.grid_h, self.grid_w],
            "filters_per_bank": self.filters_per_bank,
            "filter": [self.filter_h, self.filter_w],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScorerGeometry":
        gh, gw = data["grid"]
        fh, fw = data["filter"]
        return cls(gh, gw, data["filters_per_bank"], fh, fw)


def carve_filters(link_vec: np.ndarray, geometry: ScorerGeometry, bank: int) -> np.ndarray:
    """Slice one bank out of the link vector as (c, filter_h, filter_w)."""
    link_vec = np.asarray(link_vec)
    if link_vec.shape != (geometry.link_dim,):
        raise GeometryMismatch(f"link vector {link_vec.shape} != ({geometry.link_dim},)")
    if bank not in (PROCEDURAL_BANK, FACTUAL_BANK):
        raise GeometryMismatch(f"no bank {bank}")
    lo = bank * geometry.bank_size
    piece = link_vec[lo : lo + geometry.bank_size]
    return piece.reshape(geometry.filters_per_bank, geometry.filter_h, geometry.filter_w)


def convolution_features(head_emb: np.ndarray, filters: np.ndarray, geometry: ScorerGeometry):
    """Valid sliding-dot-product of the head grid with each filter.

    Returns (pre, feat, windows): pre-activation maps (c, oh, ow), the
    ReLU-activated maps flattened filter-major, and the grid windows
    (kept for gradient computation).
    """
    head_emb = np.asarray(head_emb)
    if head_emb.shape != (geometry.node_dim,):
        raise GeometryMismatch(f"head embedding {head_emb.shape} != ({geometry.node_dim},)")
    grid = head_emb.reshape(geometry.grid_h, geometry.grid_w)
    windows = sliding_window_view(grid, (geometry.filter_h, geometry.filter_w))
    pre = np.einsum("ijkl,fkl->fij", windows, filters)
    feat = np.maximum(pre, 0.0).reshape(-1)
    return pre, feat, windows


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z)) if z < 700 else 1.0
    e = math.exp(z)
    return e / (1.0 + e)


def pre_sigmoid_score(
    head_emb: np.ndarray,
    link_vec: np.ndarray,
    tail_emb: np.ndarray,
    relation: RelationKind,
    w_score: np.ndarray,
    b_score: np.ndarray,
    geometry: ScorerGeometry,
) -> float:
    """The raw logit dotted against the tail, before the sigmoid."""
    tail_emb = np.asarray(tail_emb)
    if tail_emb.shape != (geometry.node_dim,):
        raise GeometryMismatch(f"tail embedding {tail_emb.shape} != ({geometry.node_dim},)")
    if w_score.shape != (geometry.node_dim, geometry.feature_size):
        raise GeometryMismatch(
            f"w_score {w_score.shape} != ({geometry.node_dim}, {geometry.feature_size})"
        )
    if b_score.shape != (geometry.node_dim,):
        raise GeometryMismatch(f"b_score {b_score.shape} != ({geometry.node_dim},)")
    filters = carve_filters(link_vec, geometry, bank_for_relation(relation))
    _, feat, _ = convolution_features(head_emb, filters, geometry)
    hidden = np.maximum(w_score @ feat + b_score, 0.0)
    return float(hidden @ tail_emb)


def score_triple(
    head_emb: np.ndarray,
    link_vec: np.ndarray,
    tail_emb: np.ndarray,
    relation: RelationKind,
    w_score: np.ndarray,
    b_score: np.ndarray,
    geometry: ScorerGeometry,
) -> float:
    """Plausibility of <head, link, tail> in (0, 1)."""
    return sigmoid(
        pre_sigmoid_score(head_emb, link_vec, tail_emb, relation, w_score, b_score, geometry)
    )


def link_info(clue_vec: np.ndarray, node_emb: np.ndarray, w_link: np.ndarray) -> np.ndarray:
    """Estimate the link vector from the gap between the recomposed clue
    text and the node's fused embedding, projected into filter space."""
    clue_vec = np.asarray(clue_vec)
    node_emb = np.asarray(node_emb)
    w_link = np.asarray(w_link)
    if clue_vec.shape != node_emb.shape:
        raise DimensionMismatch(f"clue {clue_vec.shape} vs node {node_emb.shape}")
    if w_link.ndim != 2 or w_link.shape[1] != clue_vec.shape[0]:
        raise DimensionMismatch(f"w_link {w_link.shape} cannot project {clue_vec.shape}")
    return w_link @ (clue_vec - node_emb)
