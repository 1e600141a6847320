"""Experiment configuration: a YAML (or JSON) mapping plus command-line overrides."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from eccf.evaluation import ProtocolSettings
from eccf.recommenders import SVDppParams

PATH_KEYS = ("ratings", "items", "log", "lexicon", "graph")


@dataclass(frozen=True)
class ExperimentConfig:
    ratings: str | None = None
    items: str | None = None
    log: str | None = None
    lexicon: str | None = None
    graph: str | None = None
    output_dir: str = "results"
    categories: list[str] | None = None
    min_user_ratings: int = 20
    gap_minutes: float = 30.0
    neighbors: int = 50
    folds: int = 10
    seed: int = 0
    k_values: list[int] = field(default_factory=lambda: [10, 20])
    positive_variants: list[list[int]] = field(default_factory=lambda: [[3, 4, 5], [4, 5], [5]])
    relevance: int = 4
    algorithms: list[str] = field(default_factory=lambda: ["U2UCF", "SCCF", "ECCF", "SVD++"])
    top_arcs: int = 1
    candidates: str = "test"
    similarity: str = "cosine"
    relevant_coverage: bool = False
    svdpp: dict[str, Any] = field(default_factory=lambda: asdict(SVDppParams()))

    def __post_init__(self):
        if self.candidates not in ("test", "all"):
            raise ValueError(f"candidates must be 'test' or 'all', got {self.candidates!r}")
        if self.neighbors < 1 or self.folds < 2 or self.top_arcs < 1:
            raise ValueError("neighbors >= 1, folds >= 2 and top_arcs >= 1 are required")
        if not self.k_values or min(self.k_values) < 1:
            raise ValueError("k values must be positive")
        if not 1 <= self.relevance <= 5:
            raise ValueError("relevance threshold must lie in 1..5")
        if self.gap_minutes <= 0:
            raise ValueError("session gap must be positive")
        for pos in self.positive_variants:
            if not pos or not set(pos) <= {1, 2, 3, 4, 5}:
                raise ValueError(f"bad PositiveRatings variant {pos}")

    @classmethod
    def from_mapping(cls, data: dict, base_dir: str | Path | None = None) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        data = dict(data)
        if base_dir is not None:
            for key in PATH_KEYS:
                if data.get(key) is not None:
                    data[key] = str((Path(base_dir) / data[key]).resolve())
        return cls(**data)

    def to_mapping(self) -> dict:
        return asdict(self)

    def override(self, **changes) -> ExperimentConfig:
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def protocol(self) -> ProtocolSettings:
        return ProtocolSettings(
            algorithms=tuple(self.algorithms),
            positive_variants=tuple(tuple(sorted(set(p))) for p in self.positive_variants),
            k_values=tuple(self.k_values),
            neighbors=self.neighbors,
            folds=self.folds,
            seed=self.seed,
            relevance=self.relevance,
            candidates=self.candidates,
            top_arcs=self.top_arcs,
            similarity=self.similarity,
            relevant_coverage=self.relevant_coverage,
            svdpp=SVDppParams(**self.svdpp),
        )


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a config file; relative paths resolve against the file's directory.

    A JSON report written by ``eccf run`` is also accepted: its embedded
    ``config`` block is used.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    if "protocol" in data and "results" in data:
        data = data["protocol"]["config"]
    return ExperimentConfig.from_mapping(data, base_dir=path.parent)
