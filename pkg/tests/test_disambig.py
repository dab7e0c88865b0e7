import math
import random

import pytest

from focusq import disambig
from focusq.disambig import (
    NameStats,
    ambiguity_score,
    build_name_stats,
    collapse_initials,
    filter_ambiguous,
    screen_names,
)


def test_score_is_geometric_mean_of_counts():
    stats = NameStats(
        {"smith": frozenset(f"f{i}" for i in range(728))},
        {"anna": frozenset(f"l{i}" for i in range(100))},
    )
    score = ambiguity_score(("Smith", "Anna"), stats)
    assert score == math.sqrt(72800)
    assert score == pytest.approx(269.8147512646, abs=1e-6)
    # Far above both default thresholds, so this name is always dropped.
    assert score > disambig.DEFAULT_AMBIGUITY_THRESHOLDS["articles"]
    assert score > disambig.DEFAULT_AMBIGUITY_THRESHOLDS["patents"]


def test_filter_keeps_scores_at_the_threshold():
    stats = NameStats(
        {"smith": frozenset(f"f{i}" for i in range(400))},
        {"anna": frozenset(f"l{i}" for i in range(100))},
    )
    name = ("Smith", "Anna")
    assert ambiguity_score(name, stats) == 200.0
    assert filter_ambiguous([name], stats, 200.0) == [name]
    assert filter_ambiguous([name], stats, 199.0) == []
    with pytest.raises(ValueError):
        filter_ambiguous([name], stats, 0.0)


def test_stats_from_names_are_case_insensitive():
    stats = build_name_stats([("Doe", "John"), ("DOE", "jane"), ("Roe", "John")])
    assert stats.f_l("doe") == 2
    assert stats.f_l("Doe") == 2
    assert stats.l_f("JOHN") == 2
    with pytest.raises(ValueError):
        stats.f_l("unknown")


def test_initial_collapses_into_unique_full_name():
    names = [("Doe", "John"), ("Doe", "J."), ("Doe", "J")]
    mapping = collapse_initials(names)
    assert mapping[("Doe", "J.")] == ("Doe", "John")
    assert mapping[("Doe", "J")] == ("Doe", "John")
    assert mapping[("Doe", "John")] == ("Doe", "John")


def test_no_collapse_with_two_matching_full_names():
    names = [("Doe", "John"), ("Doe", "Jane"), ("Doe", "J.")]
    mapping = collapse_initials(names)
    assert mapping[("Doe", "J.")] == ("Doe", "J.")


def test_no_collapse_without_any_matching_full_name():
    mapping = collapse_initials([("Doe", "Mary"), ("Doe", "J.")])
    assert mapping[("Doe", "J.")] == ("Doe", "J.")


def test_collapse_respects_first_name_count_cutoff():
    # 48 fillers + the full name + the initial itself: 50 distinct tokens.
    crowded = [("Big", f"f{i:02d}") for i in range(48)]
    crowded += [("Big", "John"), ("Big", "J.")]
    mapping = collapse_initials(crowded)
    assert mapping[("Big", "J.")] == ("Big", "J.")  # F_L == 50 blocks the merge

    slim = crowded[1:]  # 49 distinct tokens now
    mapping = collapse_initials(slim)
    assert mapping[("Big", "J.")] == ("Big", "John")


def test_collapse_uses_first_seen_spelling():
    mapping = collapse_initials([("Doe", "JOHN"), ("Doe", "John"), ("Doe", "J.")])
    assert mapping[("Doe", "J.")] == ("Doe", "JOHN")


def test_collapse_is_idempotent_on_random_corpora():
    rnd = random.Random(12)
    lasts = [f"l{i}" for i in range(12)]
    firsts = ["alice", "adam", "bob", "beth", "carol", "a.", "b.", "c.", "a", "x."]
    for trial in range(200):
        names = list({(rnd.choice(lasts), rnd.choice(firsts)) for _ in range(rnd.randint(2, 25))})
        mapping = collapse_initials(names)
        canonical = list(dict.fromkeys(mapping.values()))
        again = collapse_initials(canonical)
        assert all(again[n] == n for n in canonical), f"trial {trial} not idempotent"


def test_kept_set_grows_with_threshold():
    rnd = random.Random(3)
    names = list({(f"l{rnd.randint(0, 30)}", f"f{rnd.randint(0, 8)}") for _ in range(120)})
    stats = build_name_stats(names)
    previous: set = set()
    for threshold in (1.0, 2.0, 4.0, 8.0, 100.0):
        kept = set(filter_ambiguous(names, stats, threshold))
        assert previous <= kept
        previous = kept
    assert previous == set(names)


def test_screen_names_scores_come_from_pre_collapse_stats():
    names = [("Ash", "X."), ("Ash", "Xavier"), ("Birch", "Xavier")]
    mapping, kept, rows = screen_names(names, threshold=100.0)
    assert mapping[("Ash", "X.")] == ("Ash", "Xavier")
    assert ("Ash", "Xavier") in kept
    by_name = {(r.last, r.first): r for r in rows}
    # Pre-collapse: "ash" is seen with both the initial and the full name.
    assert by_name[("Ash", "Xavier")].f_l == 2
    assert by_name[("Ash", "X.")].action == "merged_into"
    assert by_name[("Ash", "Xavier")].action == "kept"
    assert by_name[("Birch", "Xavier")].action == "kept"


def test_screen_names_excluded_action():
    names = [(f"l{i}", "omni") for i in range(30)] + [("l0", "solo")]
    _, kept, rows = screen_names(names, threshold=5.0)
    omni_rows = [r for r in rows if r.first == "omni"]
    # score = sqrt(F_L * 30) > 5 for every last name carrying "omni"
    assert all(r.action == "excluded" for r in omni_rows)
    assert ("l0", "solo") in kept


def test_report_file_format(tmp_path):
    names = [("Doe", "John"), ("Doe", "J.")]
    _, _, rows = screen_names(names, threshold=100.0)
    path = tmp_path / "report.csv"
    disambig.write_report(rows, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# order: stats,collapse,filter"
    assert lines[1] == "last,first,F_L,L_F,score,action"
    assert len(lines) == 2 + len(rows)
    first_row = lines[2].split(",")
    assert first_row[0] == "Doe"
    assert float(first_row[4]) == ambiguity_score(("Doe", "John"), build_name_stats(names))


def test_screen_names_deduplicates_input_order_preserved():
    names = [("B", "bob"), ("A", "ann"), ("B", "bob")]
    _, _, rows = screen_names(names, threshold=10.0)
    assert [(r.last, r.first) for r in rows] == [("B", "bob"), ("A", "ann")]
