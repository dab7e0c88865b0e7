"""Per-contributor focus and quality metrics.

Focus is the similarity-weighted concentration of a contributor's
category proportions: F = sum_ij s_ij p_i p_j, including the diagonal,
so a single-category contributor scores exactly 1. With the identity
similarity it reduces to sum_i p_i^2. Shannon entropy of the same
proportions is kept alongside as the similarity-blind spread measure.

Quality is medium specific: cohort-normalized citation counts for
articles and patents, the best-answer excess score for Q&A forums, and
the surviving-word ratio for wiki editing.
"""

from __future__ import annotations

import csv
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .corpus import AnswerEvent, CitationEdge, ItemMetadata, RevisionEvent
from .taxonomy import SimilarityMatrix, truncate_weighted

_WORD = re.compile(r"[^\W_]+")


def _as_proportions(p: Sequence[float] | np.ndarray) -> np.ndarray:
    v = np.asarray(p, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("proportions must be a non-empty 1d vector")
    if np.any(v < 0.0) or np.any(np.isnan(v)):
        raise ValueError("proportions must be non-negative")
    total = float(v.sum())
    if not math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-6):
        raise ValueError(f"proportions sum to {total!r}, expected 1")
    return v


def stirling_focus(p: Sequence[float] | np.ndarray, similarity: SimilarityMatrix | np.ndarray) -> float:
    """Similarity-weighted concentration sum_ij s_ij p_i p_j.

    The full double sum is used, diagonal included. Higher is narrower.
    """
    v = _as_proportions(p)
    s = similarity.values if isinstance(similarity, SimilarityMatrix) else np.asarray(similarity, dtype=np.float64)
    if s.shape != (v.size, v.size):
        raise ValueError(f"similarity shape {s.shape} does not match {v.size} proportions")
    return float(v @ s @ v)


def shannon_entropy(p: Sequence[float] | np.ndarray) -> float:
    """Natural-log entropy of a proportion vector, with 0 ln 0 taken as 0."""
    v = _as_proportions(p)
    nz = v[v > 0.0]
    return float(-(nz * np.log(nz)).sum())


# ---------------------------------------------------------------------------
# Citation-based quality (articles, patents)

def citation_counts(edges: Iterable[CitationEdge]) -> Counter:
    counts: Counter = Counter()
    for e in edges:
        counts[e.cited_item] += 1
    return counts


def filter_self_citations(
    edges: Iterable[CitationEdge], items: Mapping[str, ItemMetadata]
) -> list[CitationEdge]:
    """Drop edges whose endpoints share an author last name (case insensitive).

    Edges touching items without metadata cannot be checked and are kept.
    """
    out = []
    for e in edges:
        citing = items.get(e.citing_item)
        cited = items.get(e.cited_item)
        if citing is not None and cited is not None:
            citing_lasts = {last.lower() for last, _ in citing.author_names}
            if any(last.lower() in citing_lasts for last, _ in cited.author_names):
                continue
        out.append(e)
    return out


def build_cohort_means(
    items: Mapping[str, ItemMetadata] | Iterable[ItemMetadata], counts: Mapping[str, int]
) -> dict[tuple[str, int], float]:
    """Mean citation count per (category, year) cohort over all member items.

    Items with several categories belong to every one of those cohorts;
    uncited items enter the means with count 0.
    """
    if isinstance(items, Mapping):
        items = items.values()
    totals: dict[tuple[str, int], int] = {}
    sizes: dict[tuple[str, int], int] = {}
    for it in items:
        c = counts.get(it.item_id, 0)
        for cat in it.categories:
            key = (cat, it.year)
            totals[key] = totals.get(key, 0) + c
            sizes[key] = sizes.get(key, 0) + 1
    return {key: totals[key] / sizes[key] for key in totals}


def expected_citations(
    meta: ItemMetadata, cohort_means: Mapping[tuple[str, int], float]
) -> float | None:
    """Mean of the item's cohort means; None when the item has no cohort."""
    if not meta.categories:
        return None
    means = []
    for cat in meta.categories:
        try:
            means.append(cohort_means[(cat, meta.year)])
        except KeyError:
            raise ValueError(f"no cohort for ({cat!r}, {meta.year})")
    return sum(means) / len(means)


def citation_quality(
    item_ids: Iterable[str],
    counts: Mapping[str, int],
    items: Mapping[str, ItemMetadata],
    cohort_means: Mapping[tuple[str, int], float],
    aggregation: str = "mean_of_ratios",
) -> float | None:
    """Cohort-normalized citation score over a contributor's items.

    Each item scores its citation count divided by the mean of its
    cohorts' mean counts. Items whose expected count is zero (or that
    have no cohort at all) carry no signal and are left out; if every
    item is left out the contributor's quality is undefined (None).

    ``aggregation`` picks the contributor-level combination: the default
    ``mean_of_ratios`` averages per-item scores, ``ratio_of_means``
    divides total citations by total expected citations.
    """
    if aggregation not in ("mean_of_ratios", "ratio_of_means"):
        raise ValueError(f"unknown aggregation {aggregation!r}")
    got, want = [], []
    for item_id in item_ids:
        try:
            meta = items[item_id]
        except KeyError:
            raise ValueError(f"no metadata for item {item_id!r}")
        expected = expected_citations(meta, cohort_means)
        if expected is None or expected <= 0.0:
            continue
        got.append(counts.get(item_id, 0))
        want.append(expected)
    if not got:
        return None
    if aggregation == "mean_of_ratios":
        return float(sum(g / w for g, w in zip(got, want)) / len(got))
    return float(sum(got) / sum(want))


# ---------------------------------------------------------------------------
# Best-answer quality (Q&A forums)

def answerer_counts(answers: Iterable[AnswerEvent]) -> dict[str, int]:
    """Distinct answerer count per question."""
    seen: dict[str, set[str]] = {}
    for a in answers:
        seen.setdefault(a.question_id, set()).add(a.answerer_id)
    return {qid: len(users) for qid, users in seen.items()}


def gamma_score(
    user_answers: Iterable[AnswerEvent], counts: Mapping[str, int]
) -> float | None:
    """Best-answer excess over the chance baseline.

    Over the distinct questions a user answered, the chance baseline is
    b_e = sum_k 1/a_k with a_k the number of answerers of question k.
    The score is (observed_best - b_e) / b_e: 0 means winning exactly as
    often as a random pick among answerers, -1 means never winning.
    Undefined (None) for a user with no answers.
    """
    questions: set[str] = set()
    won: set[str] = set()
    for a in user_answers:
        questions.add(a.question_id)
        if a.is_best:
            won.add(a.question_id)
    if not questions:
        return None
    b_e = 0.0
    for qid in questions:
        try:
            a_k = counts[qid]
        except KeyError:
            raise ValueError(f"no answerer count for question {qid!r}")
        if a_k < 1:
            raise ValueError(f"question {qid!r} has a non-positive answerer count")
        b_e += 1.0 / a_k
    return (len(won) - b_e) / b_e


# ---------------------------------------------------------------------------
# Word-survival quality (wiki)

def tokenize_words(text: str) -> set[str]:
    """Lowercased word types; splits on anything non-alphanumeric."""
    return set(_WORD.findall(text.lower()))


def survival_counts(
    pages: Mapping[str, Sequence[RevisionEvent]],
    user_id: str,
    revision_filter: Callable[[RevisionEvent], bool] | None = None,
) -> tuple[int, int]:
    """Count word types the user introduced and those alive in the final text.

    A word type is introduced by the user when it first appears, page
    wide, in one of the user's revisions; it survives when the page's
    last revision still contains it. Counts are pooled over all pages.
    ``revision_filter`` restricts which of the user's revisions earn
    introduction credit (novelty is still judged against the full
    earlier history).
    """
    if not user_id:
        raise ValueError("anonymous edits cannot be credited")
    total_new = 0
    total_surviving = 0
    for revs in pages.values():
        if not revs:
            continue
        final = tokenize_words(revs[-1].text)
        seen: set[str] = set()
        introduced: set[str] = set()
        for rev in revs:
            tokens = tokenize_words(rev.text)
            if rev.user_id == user_id and (revision_filter is None or revision_filter(rev)):
                introduced |= tokens - seen
            seen |= tokens
        total_new += len(introduced)
        total_surviving += len(introduced & final)
    return total_new, total_surviving


def word_survival_quality(
    pages: Mapping[str, Sequence[RevisionEvent]],
    user_id: str,
    revision_filter: Callable[[RevisionEvent], bool] | None = None,
) -> float | None:
    """Pooled surviving-word share; None for a user who introduced nothing."""
    new, surviving = survival_counts(pages, user_id, revision_filter)
    if new == 0:
        return None
    return surviving / new


class SurvivalIndex:
    """Tokenize each page history once, then score any number of users.

    Matches :func:`survival_counts` exactly: the per-revision sets of
    words first introduced there (page wide) are precomputed, so a
    user's introduced words are the union over their credited revisions.
    """

    def __init__(self, pages: Mapping[str, Sequence[RevisionEvent]]):
        self.pages = {page: list(revs) for page, revs in pages.items()}
        self.novel: dict[str, list[set[str]]] = {}
        self.final: dict[str, set[str]] = {}
        for page, revs in self.pages.items():
            seen: set[str] = set()
            per_rev = []
            for rev in revs:
                tokens = tokenize_words(rev.text)
                per_rev.append(tokens - seen)
                seen |= tokens
            self.novel[page] = per_rev
            self.final[page] = tokenize_words(revs[-1].text) if revs else set()

    def counts(
        self, user_id: str, revision_filter: Callable[[RevisionEvent], bool] | None = None
    ) -> tuple[int, int]:
        if not user_id:
            raise ValueError("anonymous edits cannot be credited")
        total_new = 0
        total_surviving = 0
        for page, revs in self.pages.items():
            introduced: set[str] = set()
            for rev, fresh in zip(revs, self.novel[page]):
                if rev.user_id == user_id and (revision_filter is None or revision_filter(rev)):
                    introduced |= fresh
            if introduced:
                total_new += len(introduced)
                total_surviving += len(introduced & self.final[page])
        return total_new, total_surviving

    def quality(
        self, user_id: str, revision_filter: Callable[[RevisionEvent], bool] | None = None
    ) -> float | None:
        new, surviving = self.counts(user_id, revision_filter)
        if new == 0:
            return None
        return surviving / new


def stability_filter(
    revisions: Sequence[RevisionEvent],
    dump_time: int,
    window_seconds: int = 30 * 86400,
    max_fraction: float = 0.05,
) -> bool:
    """True when editing activity has settled.

    A page passes when strictly less than ``max_fraction`` of its
    revisions fall inside the window [dump_time - window, dump_time].
    """
    if not revisions:
        raise ValueError("page has no revisions")
    lo = dump_time - window_seconds
    recent = sum(1 for r in revisions if lo <= r.timestamp <= dump_time)
    return recent / len(revisions) < max_fraction


# ---------------------------------------------------------------------------
# Contributor profiles

@dataclass
class ContributorProfile:
    contributor_id: str
    medium: str
    quantity: int
    focus: float
    entropy: float
    quality: float | None
    p: np.ndarray | None = None  # category proportions, aligned to the similarity matrix


def proportion_vector(records, index: Mapping[str, int], level: int) -> np.ndarray:
    """Aggregate a record list into category proportions under ``index``."""
    p = np.zeros(len(index), dtype=np.float64)
    for r in records:
        for cat, w in truncate_weighted(r.categories, level):
            try:
                p[index[cat]] += w
            except KeyError:
                raise ValueError(f"category {cat!r} missing from the similarity matrix")
    total = p.sum()
    if total <= 0.0:
        raise ValueError("record list carries no category weight")
    return p / total


def build_profiles(
    grouped: Mapping[str, Sequence],
    similarity: SimilarityMatrix,
    level: int,
    quality: Mapping[str, float | None],
    medium: str,
) -> list[ContributorProfile]:
    """Assemble one profile per contributor, sorted by contributor id."""
    index = similarity.index()
    profiles = []
    for cid in sorted(grouped):
        records = grouped[cid]
        p = proportion_vector(records, index, level)
        profiles.append(
            ContributorProfile(
                contributor_id=cid,
                medium=medium,
                quantity=len(records),
                focus=stirling_focus(p, similarity),
                entropy=shannon_entropy(p),
                quality=quality.get(cid),
                p=p,
            )
        )
    return profiles


PROFILES_HEADER = ["contributor_id", "medium", "quantity", "focus", "entropy", "quality"]


def write_profiles(profiles: Iterable[ContributorProfile], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROFILES_HEADER)
        for pr in profiles:
            writer.writerow(
                [
                    pr.contributor_id,
                    pr.medium,
                    str(pr.quantity),
                    repr(pr.focus),
                    repr(pr.entropy),
                    "" if pr.quality is None else repr(pr.quality),
                ]
            )


def read_profiles(path) -> list[ContributorProfile]:
    profiles = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PROFILES_HEADER:
            raise ValueError(f"{path}: not a profiles file")
        for row in reader:
            profiles.append(
                ContributorProfile(
                    contributor_id=row[0],
                    medium=row[1],
                    quantity=int(row[2]),
                    focus=float(row[3]),
                    entropy=float(row[4]),
                    quality=None if row[5] == "" else float(row[5]),
                )
            )
    return profiles
