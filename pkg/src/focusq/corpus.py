"""Data model and flat-file ingestion for contribution corpora.

A corpus bundles the contribution events of one medium with whatever raw
material its quality metric needs: citation edges and item metadata for
articles and patents, answer events for Q&A forums, and full revision
histories for wiki pages.

File formats (one schema per file):

* ``contributions.csv``: contributor_id,item_id,timestamp,medium,categories,weights
  where categories is a pipe-separated list of dot paths (``phys.optics``)
  and weights is a pipe-separated list of non-negative reals, or empty for
  an equal split. Weights are normalized to sum to 1 at load time.
* ``citations.csv``: citing_item,cited_item
* ``items.csv``: item_id,year,categories,authors with authors encoded as
  ``Last:First|Last2:F.``
* ``answers.jsonl``: question_id, answerer_id, category_id, is_best, timestamp
* ``revisions.jsonl``: page_id, revision_index, timestamp, user_id, text
  (empty user_id marks an anonymous edit)
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

MEDIA = ("articles", "patents", "wiki", "qa")

SCHEMAS = ("contributions", "citations", "items", "answers", "revisions")

# Minimum contribution counts below which a contributor is not profiled.
DEFAULT_THRESHOLDS = {"articles": 10, "patents": 10, "wiki": 40, "qa": 40}

CONTRIBUTIONS_HEADER = ["contributor_id", "item_id", "timestamp", "medium", "categories", "weights"]
CITATIONS_HEADER = ["citing_item", "cited_item"]
ITEMS_HEADER = ["item_id", "year", "categories", "authors"]


class IngestError(ValueError):
    """Malformed input; carries the file path and 1-based line number."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)


@dataclass(frozen=True)
class ContributionRecord:
    contributor_id: str
    item_id: str
    timestamp: int | None
    medium: str
    # (category path, weight) pairs; weights sum to 1 per record
    categories: tuple[tuple[str, float], ...]


class CitationEdge(NamedTuple):
    citing_item: str
    cited_item: str


@dataclass(frozen=True)
class AnswerEvent:
    question_id: str
    answerer_id: str
    category_id: str
    is_best: bool
    timestamp: int | None


@dataclass(frozen=True)
class RevisionEvent:
    page_id: str
    revision_index: int
    timestamp: int
    user_id: str  # empty string marks an anonymous edit
    text: str


@dataclass(frozen=True)
class ItemMetadata:
    item_id: str
    year: int
    categories: tuple[str, ...]
    author_names: tuple[tuple[str, str], ...]  # (last, first) pairs


@dataclass
class Corpus:
    """Container for everything loaded from one input directory."""

    contributions: list[ContributionRecord] = field(default_factory=list)
    citations: list[CitationEdge] = field(default_factory=list)
    items: dict[str, ItemMetadata] = field(default_factory=dict)
    answers: list[AnswerEvent] = field(default_factory=list)
    revisions: dict[str, list[RevisionEvent]] = field(default_factory=dict)
    # malformed lines skipped per schema when ingesting with on_error="skip"
    skipped: Counter = field(default_factory=Counter)

    def counts(self) -> dict[str, int]:
        return {
            "contributions": len(self.contributions),
            "citations": len(self.citations),
            "items": len(self.items),
            "answers": len(self.answers),
            "revisions": sum(len(v) for v in self.revisions.values()),
        }


def _parse_timestamp(text: str) -> int | None:
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"bad timestamp {text!r}")


def _parse_weighted_categories(cat_field: str, weight_field: str) -> tuple[tuple[str, float], ...]:
    cats = cat_field.split("|") if cat_field else []
    if not cats or any(c == "" for c in cats):
        raise ValueError("empty category list or empty category path")
    if weight_field == "":
        w = 1.0 / len(cats)
        weights = [w] * len(cats)
    else:
        parts = weight_field.split("|")
        if len(parts) != len(cats):
            raise ValueError(f"{len(cats)} categories but {len(parts)} weights")
        try:
            weights = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"non-numeric weight in {weight_field!r}")
        for w in weights:
            if math.isnan(w) or w < 0.0:
                raise ValueError(f"negative or NaN weight {w!r}")
        total = sum(weights)
        if total <= 0.0:
            raise ValueError("weights sum to zero")
        weights = [w / total for w in weights]
    # A repeated category in one record folds into a single entry.
    merged: dict[str, float] = {}
    for c, w in zip(cats, weights):
        merged[c] = merged.get(c, 0.0) + w
    return tuple(merged.items())


def _parse_authors(text: str) -> tuple[tuple[str, str], ...]:
    if text == "":
        return ()
    out = []
    for chunk in text.split("|"):
        last, sep, first = chunk.partition(":")
        if last == "":
            raise ValueError(f"author {chunk!r} has no last name")
        out.append((last, first))
    return tuple(out)


def _read_csv_rows(path, expected_header: list[str]):
    """Yield (line_number, row) for each data row; validates the header."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("missing header", path, 1)
        if header != expected_header:
            raise IngestError(f"expected header {','.join(expected_header)}", path, 1)
        for row in reader:
            yield reader.line_num, row


def ingest(path, schema: str, into: Corpus | None = None, on_error: str = "raise") -> Corpus:
    """Load one file into a corpus.

    ``schema`` is one of ``contributions``, ``citations``, ``items``,
    ``answers``, ``revisions``. With ``on_error="raise"`` the first
    malformed line aborts with an :class:`IngestError` naming the line;
    with ``on_error="skip"`` malformed lines are dropped and counted in
    ``corpus.skipped``. Cross-line invariants (dense revision indices,
    at most one best answer per question) always raise.
    """
    if schema not in SCHEMAS:
        raise ValueError(f"unknown schema {schema!r}")
    if on_error not in ("raise", "skip"):
        raise ValueError(f"on_error must be 'raise' or 'skip', got {on_error!r}")
    corpus = into if into is not None else Corpus()
    loader = _LOADERS[schema]
    loader(path, corpus, on_error)
    return corpus


def _handle(corpus: Corpus, schema: str, path, line: int, err: Exception, on_error: str):
    if on_error == "skip":
        corpus.skipped[schema] += 1
        return
    raise IngestError(str(err), path, line)


def _load_contributions(path, corpus: Corpus, on_error: str):
    for line, row in _read_csv_rows(path, CONTRIBUTIONS_HEADER):
        try:
            if len(row) != 6:
                raise ValueError(f"expected 6 fields, got {len(row)}")
            contributor, item, ts_text, medium, cats, weights = row
            if contributor == "" and medium != "wiki":
                raise ValueError("empty contributor_id")
            if item == "":
                raise ValueError("empty item_id")
            if medium not in MEDIA:
                raise ValueError(f"unknown medium {medium!r}")
            record = ContributionRecord(
                contributor_id=contributor,
                item_id=item,
                timestamp=_parse_timestamp(ts_text),
                medium=medium,
                categories=_parse_weighted_categories(cats, weights),
            )
        except ValueError as err:
            _handle(corpus, "contributions", path, line, err, on_error)
            continue
        corpus.contributions.append(record)


def _load_citations(path, corpus: Corpus, on_error: str):
    seen = {f"{e.citing_item}\x00{e.cited_item}" for e in corpus.citations}
    for line, row in _read_csv_rows(path, CITATIONS_HEADER):
        try:
            if len(row) != 2:
                raise ValueError(f"expected 2 fields, got {len(row)}")
            citing, cited = row
            if citing == "" or cited == "":
                raise ValueError("empty item id")
            if citing == cited:
                raise ValueError(f"self-loop on {citing!r}")
            key = f"{citing}\x00{cited}"
            if key in seen:
                raise ValueError(f"duplicate edge {citing} -> {cited}")
        except ValueError as err:
            _handle(corpus, "citations", path, line, err, on_error)
            continue
        seen.add(key)
        corpus.citations.append(CitationEdge(citing, cited))


def _load_items(path, corpus: Corpus, on_error: str):
    for line, row in _read_csv_rows(path, ITEMS_HEADER):
        try:
            if len(row) != 4:
                raise ValueError(f"expected 4 fields, got {len(row)}")
            item, year_text, cats, authors = row
            if item == "":
                raise ValueError("empty item_id")
            if item in corpus.items:
                raise ValueError(f"duplicate item {item!r}")
            try:
                year = int(year_text)
            except ValueError:
                raise ValueError(f"bad year {year_text!r}")
            categories = tuple(c for c in cats.split("|") if c) if cats else ()
            meta = ItemMetadata(item, year, categories, _parse_authors(authors))
        except ValueError as err:
            _handle(corpus, "items", path, line, err, on_error)
            continue
        corpus.items[item] = meta


def _load_answers(path, corpus: Corpus, on_error: str):
    best_seen = {a.question_id for a in corpus.answers if a.is_best}
    with open(path, encoding="utf-8") as fh:
        for line, raw in enumerate(fh, start=1):
            if raw.strip() == "":
                continue
            try:
                obj = json.loads(raw)
                qid = obj["question_id"]
                answerer = obj["answerer_id"]
                category = obj["category_id"]
                best = obj["is_best"]
                if not isinstance(best, bool):
                    raise ValueError("is_best must be a boolean")
                if not qid or not answerer or not category:
                    raise ValueError("empty question_id, answerer_id or category_id")
                ts = obj.get("timestamp")
                if ts is not None and not isinstance(ts, int):
                    raise ValueError(f"bad timestamp {ts!r}")
            except (ValueError, KeyError, json.JSONDecodeError) as err:
                _handle(corpus, "answers", path, line, err, on_error)
                continue
            # Cross-line invariant, enforced regardless of the error mode.
            if best:
                if qid in best_seen:
                    raise IngestError(f"second best answer for question {qid!r}", path, line)
                best_seen.add(qid)
            corpus.answers.append(AnswerEvent(qid, answerer, category, best, ts))


def _load_revisions(path, corpus: Corpus, on_error: str):
    seen = {(p, r.revision_index) for p, revs in corpus.revisions.items() for r in revs}
    with open(path, encoding="utf-8") as fh:
        for line, raw in enumerate(fh, start=1):
            if raw.strip() == "":
                continue
            try:
                obj = json.loads(raw)
                page = obj["page_id"]
                index = obj["revision_index"]
                ts = obj["timestamp"]
                user = obj.get("user_id", "")
                text = obj["text"]
                if not page:
                    raise ValueError("empty page_id")
                if not isinstance(index, int) or index < 0:
                    raise ValueError(f"bad revision_index {index!r}")
                if not isinstance(ts, int):
                    raise ValueError(f"bad timestamp {ts!r}")
                if not isinstance(text, str):
                    raise ValueError("text must be a string")
                if (page, index) in seen:
                    raise ValueError(f"duplicate revision_index {index} for page {page!r}")
            except (ValueError, KeyError, json.JSONDecodeError) as err:
                _handle(corpus, "revisions", path, line, err, on_error)
                continue
            seen.add((page, index))
            corpus.revisions.setdefault(page, []).append(
                RevisionEvent(page, index, ts, user, text)
            )
    # Histories must be dense: indices 0..n-1 once sorted.
    for page, revs in corpus.revisions.items():
        revs.sort(key=lambda r: r.revision_index)
        for pos, rev in enumerate(revs):
            if rev.revision_index != pos:
                raise IngestError(
                    f"page {page!r} has a gap before revision_index {rev.revision_index}", path
                )


_LOADERS = {
    "contributions": _load_contributions,
    "citations": _load_citations,
    "items": _load_items,
    "answers": _load_answers,
    "revisions": _load_revisions,
}


def default_threshold(medium: str) -> int:
    if medium not in DEFAULT_THRESHOLDS:
        raise ValueError(f"unknown medium {medium!r}")
    return DEFAULT_THRESHOLDS[medium]


def apply_threshold(corpus: Corpus, min_contributions: int) -> set[str]:
    """Return the contributors with at least ``min_contributions`` records.

    Anonymous records (empty contributor_id) never qualify.
    """
    if min_contributions < 1:
        raise ValueError("min_contributions must be >= 1")
    counts = Counter(r.contributor_id for r in corpus.contributions if r.contributor_id)
    return {cid for cid, n in counts.items() if n >= min_contributions}


def records_by_contributor(
    records: Iterable[ContributionRecord],
) -> dict[str, list[ContributionRecord]]:
    """Group records by contributor, preserving file order within groups."""
    grouped: dict[str, list[ContributionRecord]] = {}
    for r in records:
        if r.contributor_id:
            grouped.setdefault(r.contributor_id, []).append(r)
    return grouped


def in_time_order(records: Iterable[ContributionRecord]) -> list[ContributionRecord]:
    """Sort by timestamp, breaking ties by item_id; untimestamped records sort last."""
    return sorted(records, key=lambda r: (r.timestamp is None, r.timestamp or 0, r.item_id))


def _fmt(value: float) -> str:
    return repr(value)


def export_contributions(records: Iterable[ContributionRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CONTRIBUTIONS_HEADER)
        for r in records:
            cats = "|".join(c for c, _ in r.categories)
            weights = "|".join(_fmt(w) for _, w in r.categories)
            ts = "" if r.timestamp is None else str(r.timestamp)
            writer.writerow([r.contributor_id, r.item_id, ts, r.medium, cats, weights])


def export_citations(edges: Iterable[CitationEdge], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CITATIONS_HEADER)
        for e in edges:
            writer.writerow([e.citing_item, e.cited_item])


def export_items(items: Iterable[ItemMetadata] | Mapping[str, ItemMetadata], path) -> None:
    if isinstance(items, Mapping):
        items = items.values()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ITEMS_HEADER)
        for it in items:
            authors = "|".join(f"{last}:{first}" for last, first in it.author_names)
            writer.writerow([it.item_id, str(it.year), "|".join(it.categories), authors])


def export_answers(answers: Iterable[AnswerEvent], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in answers:
            fh.write(
                json.dumps(
                    {
                        "question_id": a.question_id,
                        "answerer_id": a.answerer_id,
                        "category_id": a.category_id,
                        "is_best": a.is_best,
                        "timestamp": a.timestamp,
                    },
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
                + "\n"
            )


def export_revisions(revisions: Mapping[str, list[RevisionEvent]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for page in revisions:
            for r in revisions[page]:
                fh.write(
                    json.dumps(
                        {
                            "page_id": r.page_id,
                            "revision_index": r.revision_index,
                            "timestamp": r.timestamp,
                            "user_id": r.user_id,
                            "text": r.text,
                        },
                        ensure_ascii=False,
                        separators=(",", ":"),
                    )
                    + "\n"
                )
