"""Category hierarchies and category-to-category similarity.

Categories are dot paths (``phys.optics.lasers``); the first segment is
level 1. Truncating a record to level L replaces each category by its
depth-L ancestor and folds the weights of collapsed siblings together.

Two similarity estimators are provided. Co-contribution similarity
s_ij = n_ij / n_j is the share of category j's contributors who are also
active in category i; it is not symmetric in general and is kept
asymmetric unless explicitly symmetrized. Topic cosine similarity is the
cosine between topic columns of a document-topic matrix and is symmetric
by construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import ContributionRecord


def ancestor(path: str, level: int) -> str:
    """Depth-``level`` prefix of a dot path; the path itself if shallower."""
    if level < 1:
        raise ValueError("level must be >= 1")
    parts = path.split(".")
    if len(parts) <= level:
        return path
    return ".".join(parts[:level])


def truncate_weighted(
    categories: Iterable[tuple[str, float]], level: int
) -> tuple[tuple[str, float], ...]:
    """Map weighted categories to their level-``level`` ancestors, merging weights."""
    merged: dict[str, float] = {}
    for path, w in categories:
        key = ancestor(path, level)
        merged[key] = merged.get(key, 0.0) + w
    return tuple(merged.items())


@dataclass
class CategoryTaxonomy:
    """Forest of dot-path category nodes.

    ``levels`` maps every node (including implied ancestors) to its depth;
    a virtual root sits at level 0 and is not stored.
    """

    levels: dict[str, int] = field(default_factory=dict)
    parents: dict[str, str | None] = field(default_factory=dict)

    @classmethod
    def from_paths(cls, paths: Iterable[str]) -> "CategoryTaxonomy":
        tax = cls()
        for path in paths:
            tax.add(path)
        return tax

    def add(self, path: str) -> None:
        parts = path.split(".")
        if not path or any(p == "" for p in parts):
            raise ValueError(f"bad category path {path!r}")
        for depth in range(1, len(parts) + 1):
            node = ".".join(parts[:depth])
            self.levels[node] = depth
            self.parents[node] = ".".join(parts[: depth - 1]) if depth > 1 else None

    def level(self, path: str) -> int:
        try:
            return self.levels[path]
        except KeyError:
            raise ValueError(f"unknown category {path!r}")

    def nodes_at(self, level: int) -> list[str]:
        return sorted(n for n, d in self.levels.items() if d == level)


@dataclass
class SimilarityMatrix:
    """Square similarity matrix over an ordered category list.

    ``values[i, j]`` is s_ij. ``dead`` lists indices whose column carried
    no signal (topics never sampled); their off-diagonal entries are 0.
    """

    categories: list[str]
    values: np.ndarray
    provenance: str  # "co_contributor" or "topic_cosine"
    dead: tuple[int, ...] = ()

    def __post_init__(self):
        n = len(self.categories)
        if self.values.shape != (n, n):
            raise ValueError("matrix shape does not match category list")

    def index(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.categories)}

    def symmetrized(self) -> "SimilarityMatrix":
        return SimilarityMatrix(
            list(self.categories),
            (self.values + self.values.T) / 2.0,
            self.provenance + "_symmetrized",
            self.dead,
        )


def active_categories(
    records: Iterable[ContributionRecord], level: int
) -> dict[str, set[str]]:
    """Categories each contributor touches with positive weight, truncated."""
    active: dict[str, set[str]] = {}
    for r in records:
        if not r.contributor_id:
            continue
        cats = active.setdefault(r.contributor_id, set())
        for path, w in truncate_weighted(r.categories, level):
            if w > 0.0:
                cats.add(path)
    return active


def co_contribution_similarity(
    records: Iterable[ContributionRecord], level: int
) -> SimilarityMatrix:
    """Estimate s_ij = n_ij / n_j from joint contributor activity.

    n_j counts the distinct contributors active in category j and n_ij
    those active in both i and j, so the diagonal is exactly 1 wherever a
    category has any contributor at all.
    """
    active = active_categories(records, level)
    if not active:
        raise ValueError("no records with a contributor_id")
    cats = sorted({c for s in active.values() for c in s})
    idx = {c: i for i, c in enumerate(cats)}
    k = len(cats)
    n_joint = np.zeros((k, k), dtype=np.int64)
    for cat_set in active.values():
        ids = sorted(idx[c] for c in cat_set)
        for a in ids:
            for b in ids:
                n_joint[a, b] += 1
    n_per = np.diagonal(n_joint).astype(np.float64)
    values = np.zeros((k, k))
    nonzero = n_per > 0
    values[:, nonzero] = n_joint[:, nonzero] / n_per[nonzero]
    return SimilarityMatrix(cats, values, "co_contributor")


def topic_cosine_similarity(doc_topic: np.ndarray, topic_ids: Sequence[str] | None = None) -> SimilarityMatrix:
    """Cosine similarity between topic columns of a document-topic matrix.

    A topic whose column is all zeros gets similarity 0 to every other
    topic, keeps a diagonal of 1, and is flagged in ``dead``.
    """
    m = np.asarray(doc_topic, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise ValueError("doc_topic must be a non-empty 2d array")
    k = m.shape[1]
    if topic_ids is None:
        topic_ids = [f"topic{i:03d}" for i in range(k)]
    else:
        topic_ids = list(topic_ids)
        if len(topic_ids) != k:
            raise ValueError("topic_ids length does not match matrix width")
    norms = np.sqrt((m * m).sum(axis=0))
    dead = tuple(int(i) for i in np.flatnonzero(norms == 0.0))
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = m / safe
    values = unit.T @ unit
    for i in dead:
        values[i, :] = 0.0
        values[:, i] = 0.0
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(topic_ids, values, "topic_cosine", dead)


def write_similarity(matrix: SimilarityMatrix, path) -> None:
    """Write the matrix with row/column category headers, 9 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["category"] + matrix.categories)
        for i, cat in enumerate(matrix.categories):
            writer.writerow([cat] + [f"{v:.9g}" for v in matrix.values[i]])


def read_similarity(path, provenance: str = "file") -> SimilarityMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "category":
            raise ValueError(f"{path}: not a similarity matrix file")
        cats = header[1:]
        rows = []
        for row in reader:
            if row[0] != cats[len(rows)]:
                raise ValueError(f"{path}: row order does not match header")
            rows.append([float(v) for v in row[1:]])
    values = np.array(rows, dtype=np.float64)
    return SimilarityMatrix(cats, values, provenance)
