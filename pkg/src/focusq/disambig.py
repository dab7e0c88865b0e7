"""Name-ambiguity screening for author-identified media.

Authors are (last name, first token) pairs, where the first token is
either a full first name or an initial. All comparisons are case
insensitive. The ambiguity of a name grows both with the number of
distinct first tokens its last name appears with (F_L) and the number of
distinct last names its first token appears with (L_F); the combined
score is sqrt(F_L * L_F). Names scoring above a medium-specific
threshold are too risky to treat as single identities and are dropped.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

Name = tuple[str, str]

# Default score cutoffs; a score exactly at the cutoff is retained.
DEFAULT_AMBIGUITY_THRESHOLDS = {"articles": 200.0, "patents": 150.0}

# An initial collapses into a full first name only when the last name is
# seen with fewer than this many distinct first tokens.
COLLAPSE_MAX_FIRST_NAMES = 50


def _is_initial(first: str) -> bool:
    f = first.rstrip(".")
    return len(f) == 1 and f.isalpha()


def _key(name: Name) -> tuple[str, str]:
    last, first = name
    return last.lower(), first.lower()


@dataclass(frozen=True)
class NameStats:
    """Corpus-wide co-occurrence counts between last names and first tokens."""

    firsts_per_last: Mapping[str, frozenset[str]]
    lasts_per_first: Mapping[str, frozenset[str]]

    def f_l(self, last: str) -> int:
        """Distinct first tokens seen with this last name."""
        try:
            return len(self.firsts_per_last[last.lower()])
        except KeyError:
            raise ValueError(f"unknown last name {last!r}")

    def l_f(self, first: str) -> int:
        """Distinct last names seen with this first token."""
        try:
            return len(self.lasts_per_first[first.lower()])
        except KeyError:
            raise ValueError(f"unknown first token {first!r}")


def build_name_stats(names: Iterable[Name]) -> NameStats:
    firsts: dict[str, set[str]] = {}
    lasts: dict[str, set[str]] = {}
    for name in names:
        last, first = _key(name)
        firsts.setdefault(last, set()).add(first)
        lasts.setdefault(first, set()).add(last)
    return NameStats(
        {k: frozenset(v) for k, v in firsts.items()},
        {k: frozenset(v) for k, v in lasts.items()},
    )


def ambiguity_score(name: Name, stats: NameStats) -> float:
    """sqrt(F_L * L_F) for one name; larger means harder to disambiguate."""
    last, first = name
    return math.sqrt(stats.f_l(last) * stats.l_f(first))


def filter_ambiguous(names: Iterable[Name], stats: NameStats, threshold: float) -> list[Name]:
    """Keep the names whose ambiguity score does not exceed ``threshold``."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    return [n for n in names if ambiguity_score(n, stats) <= threshold]


def collapse_initials(names: Iterable[Name], stats: NameStats | None = None) -> dict[Name, Name]:
    """Map each name to its canonical spelling.

    ``(Last, F.)`` collapses into ``(Last, First)`` only when exactly one
    full first name starting with that letter is seen with the last name,
    and the last name co-occurs with fewer than 50 distinct first tokens.
    Everything else maps to itself. Applying the returned mapping and
    collapsing again is a no-op.
    """
    names = list(names)
    if stats is None:
        stats = build_name_stats(names)
    # First-seen spelling of each full first name, per last name.
    fulls: dict[str, dict[str, Name]] = {}
    for name in names:
        last, first = _key(name)
        if not _is_initial(first):
            fulls.setdefault(last, {}).setdefault(first, name)
    mapping: dict[Name, Name] = {}
    for name in names:
        if name in mapping:
            continue
        last, first = _key(name)
        target = name
        if _is_initial(first) and stats.f_l(last) < COLLAPSE_MAX_FIRST_NAMES:
            letter = first.rstrip(".")
            matches = [n for f, n in fulls.get(last, {}).items() if f.startswith(letter)]
            if len(matches) == 1:
                target = matches[0]
        mapping[name] = target
    return mapping


@dataclass(frozen=True)
class DisambigReportRow:
    last: str
    first: str
    f_l: int
    l_f: int
    score: float
    action: str  # kept | excluded | merged_into


def screen_names(
    names: Iterable[Name], threshold: float
) -> tuple[dict[Name, Name], set[Name], list[DisambigReportRow]]:
    """Run the full screening pass: stats, then collapse, then filter.

    Returns the collapse mapping, the set of canonical names that survive
    the ambiguity filter, and one report row per distinct input name.
    Scores are computed from the pre-collapse stats.
    """
    names = list(dict.fromkeys(names))  # preserve order, drop duplicates
    stats = build_name_stats(names)
    mapping = collapse_initials(names, stats)
    canonical = list(dict.fromkeys(mapping.values()))
    kept = set(filter_ambiguous(canonical, stats, threshold))
    rows = []
    for name in names:
        score = ambiguity_score(name, stats)
        if mapping[name] != name:
            action = "merged_into"
        elif name in kept:
            action = "kept"
        else:
            action = "excluded"
        rows.append(
            DisambigReportRow(name[0], name[1], stats.f_l(name[0]), stats.l_f(name[1]), score, action)
        )
    return mapping, kept, rows


def write_report(rows: Iterable[DisambigReportRow], path) -> None:
    """Write the screening report; the header comment records the pass order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# order: stats,collapse,filter\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["last", "first", "F_L", "L_F", "score", "action"])
        for r in rows:
            writer.writerow([r.last, r.first, str(r.f_l), str(r.l_f), repr(r.score), r.action])
