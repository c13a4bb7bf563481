"""Trainable parameter bundle and its JSON checkpoint format."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .scorer import ScorerGeometry

SCHEMA_VERSION = 1


@dataclass
class ModelParams:
    """Everything that trains: the alignment projection, the link
    projection, and the scorer's fully-connected layer."""

    w_align: np.ndarray
    w_link: np.ndarray
    w_score: np.ndarray
    b_score: np.ndarray
    geometry: ScorerGeometry = field(default_factory=ScorerGeometry)
    encoder_fingerprint: str | None = None
    train_config: dict | None = None

    @classmethod
    def fresh(cls, dim: int = 128, geometry: ScorerGeometry | None = None,
              encoder_fingerprint: str | None = None) -> "ModelParams":
        """Untrained parameters: identity projections, zero scorer.

        With the identity alignment the engine degrades to dot-product
        similarity; with a zero scorer every triple scores exactly 0.5.
        """
        geometry = geometry or ScorerGeometry()
        if geometry.node_dim != dim:
            raise ValueError(f"geometry grid {geometry.node_dim} != dim {dim}")
        return cls(
            w_align=np.eye(dim),
            w_link=np.eye(geometry.link_dim, dim),
            w_score=np.zeros((dim, geometry.feature_size)),
            b_score=np.zeros(dim),
            geometry=geometry,
            encoder_fingerprint=encoder_fingerprint,
        )

    @classmethod
    def seeded(cls, seed: int, dim: int = 128, geometry: ScorerGeometry | None = None,
               scale: float = 0.2, link_gain: float = 10.0,
               encoder_fingerprint: str | None = None) -> "ModelParams":
        """Training-start init: small random scorer weights so gradients flow
        from the first step (a zero scorer sits on a dead-ReLU plateau), and
        an amplified identity link projection so the carved filters produce
        features well above the bias noise floor."""
        geometry = geometry or ScorerGeometry()
        rng = np.random.default_rng(seed)
        params = cls.fresh(dim, geometry, encoder_fingerprint)
        params.w_link = params.w_link * link_gain
        params.w_score = rng.normal(0.0, scale, size=(dim, geometry.feature_size))
        params.b_score = rng.normal(0.0, scale, size=dim)
        return params

    def copy(self) -> "ModelParams":
        return ModelParams(
            w_align=self.w_align.copy(),
            w_link=self.w_link.copy(),
            w_score=self.w_score.copy(),
            b_score=self.b_score.copy(),
            geometry=self.geometry,
            encoder_fingerprint=self.encoder_fingerprint,
            train_config=dict(self.train_config) if self.train_config else None,
        )

    def all_finite(self) -> bool:
        return all(
            bool(np.all(np.isfinite(m)))
            for m in (self.w_align, self.w_link, self.w_score, self.b_score)
        )

    # -- checkpoints ------------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "geometry": self.geometry.to_dict(),
            "encoder_fingerprint": self.encoder_fingerprint,
            "w_align": self.w_align.tolist(),
            "w_link": self.w_link.tolist(),
            "w_score": self.w_score.tolist(),
            "b_score": self.b_score.tolist(),
        }
        if self.train_config is not None:
            out["train_config"] = self.train_config
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        return cls(
            w_align=np.array(data["w_align"], dtype=float),
            w_link=np.array(data["w_link"], dtype=float),
            w_score=np.array(data["w_score"], dtype=float),
            b_score=np.array(data["b_score"], dtype=float),
            geometry=ScorerGeometry.from_dict(data["geometry"]),
            encoder_fingerprint=data.get("encoder_fingerprint"),
            train_config=data.get("train_config"),
        )

    def save(self, path: str | Path):
        Path(path).write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, separators=(",", ":")),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "ModelParams":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
