"""Synthetic corpora with planted, recoverable structure.

Three latent traits per contributor (focus propensity, productivity,
ability) are drawn jointly Gaussian with configurable pairwise
correlations, then materialized into the corpus file formats so the
measurement pipeline can be validated end to end against known ground
truth.

The materialization keeps measurement noise low enough for correlation
recovery: each contributor works in one home category plus a fixed set
of side categories, with the home share solved so that the contributor's
identity-similarity concentration equals the planted focus target. With
``category_sampling="exact"`` the per-category record counts follow the
target proportions by largest-remainder apportionment; ``multinomial``
draws them instead, which restores natural sampling noise (useful as a
null model for temporal tests).

Ability feeds the medium quality channel: Poisson citation rates for
articles, best-answer odds for forums, word removal rates for wikis.
Outputs are byte-identical for identical configurations.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .corpus import CITATIONS_HEADER, CONTRIBUTIONS_HEADER, ITEMS_HEADER

_TS_BASE = 1_600_000_000
_QUALITY_MODELS = ("citations", "qa", "wiki")
_MEDIUM_OF = {"citations": "articles", "qa": "qa", "wiki": "wiki"}


@dataclass(frozen=True)
class SynthConfig:
    n_contributors: int = 200
    n_categories: int = 24
    hierarchy_depth: int = 2
    n_top_categories: int = 0  # 0 picks max(side_categories + 1, ceil(K / 3))
    rho_focus_quality: float = 0.0
    rho_quantity_quality: float = 0.0
    rho_quantity_focus: float = 0.0
    quality_model: str = "citations"
    temporal_drift: float = 0.0
    seed: int = 0
    category_sampling: str = "exact"  # "exact" or "multinomial"
    side_categories: int = 3
    mean_quantity: float = 40.0
    quantity_sigma: float = 0.4
    min_quantity: int = 12
    max_quantity: int = 400
    focus_mean: float = 0.55
    focus_sigma: float = 0.06
    quality_gain: float = 0.3
    base_citation_rate: float = 6.0
    answers_per_question: int = 4
    qa_ability_gain: float = 0.8
    wiki_pages: int = 0  # 0 picks max(n_categories, n_contributors // 3)
    wiki_words_per_revision: int = 6
    wiki_base_removal: float = 0.05
    wiki_recent_fraction: float = 0.0  # share of pages given recent edit bursts
    slot_gap_seconds: int = 21600  # wall-clock spacing between contribution slots

    @property
    def medium(self) -> str:
        return _MEDIUM_OF[self.quality_model]


@dataclass
class SynthResult:
    out_dir: Path
    medium: str
    paths: dict[str, Path]
    planted: dict


def _validate(config: SynthConfig) -> None:
    if config.n_contributors < 2:
        raise ValueError("n_contributors must be >= 2")
    if config.quality_model not in _QUALITY_MODELS:
        raise ValueError(f"unknown quality_model {config.quality_model!r}")
    if config.category_sampling not in ("exact", "multinomial"):
        raise ValueError(f"unknown category_sampling {config.category_sampling!r}")
    if config.side_categories < 1:
        raise ValueError("side_categories must be >= 1")
    if config.n_categories <= config.side_categories:
        raise ValueError("need more categories than side_categories")
    if config.hierarchy_depth < 1:
        raise ValueError("hierarchy_depth must be >= 1")
    if not (1 <= config.min_quantity <= config.max_quantity):
        raise ValueError("need 1 <= min_quantity <= max_quantity")
    for name in ("rho_focus_quality", "rho_quantity_quality", "rho_quantity_focus"):
        if abs(getattr(config, name)) >= 1.0:
            raise ValueError(f"{name} must lie strictly inside (-1, 1)")
    if not (0.0 <= config.temporal_drift < 1.0):
        raise ValueError("temporal_drift must lie in [0, 1)")


def correlation_matrix(config: SynthConfig) -> np.ndarray:
    """Target correlation of (focus, quantity, quality) latents."""
    r_fq = config.rho_focus_quality
    r_nq = config.rho_quantity_quality
    r_nf = config.rho_quantity_focus
    return np.array(
        [
            [1.0, r_nf, r_fq],
            [r_nf, 1.0, r_nq],
            [r_fq, r_nq, 1.0],
        ]
    )


def draw_latents(config: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """Correlated standard-normal latents, one row per contributor.

    Columns are (focus propensity, productivity, ability). Raises when
    the three pairwise targets are not jointly feasible (the correlation
    matrix must be positive definite).
    """
    sigma = correlation_matrix(config)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise ValueError("correlation targets are not jointly feasible (matrix not positive definite)")
    z = rng.standard_normal((config.n_contributors, 3))
    return z @ chol.T


def _lambda_for_focus(target: np.ndarray, m: int) -> np.ndarray:
    """Home-category share lambda with lambda^2 + (1-lambda)^2/m = target."""
    a = 1.0 + 1.0 / m
    disc = target * a - 1.0 / m
    if np.any(disc < 0.0):
        raise ValueError("focus target below the feasible minimum for this side count")
    return (1.0 / m + np.sqrt(disc)) / a


def _apportion(n: int, weights: np.ndarray) -> np.ndarray:
    """Largest-remainder integer split of n across weights."""
    raw = n * weights
    base = np.floor(raw).astype(np.int64)
    short = n - int(base.sum())
    if short > 0:
        frac = raw - base
        order = np.argsort(-frac, kind="stable")
        base[order[:short]] += 1
    return base


def _leaf_paths(config: SynthConfig, n_top: int) -> list[str]:
    k = config.n_categories
    depth = config.hierarchy_depth
    paths = []
    for i in range(k):
        if depth == 1:
            paths.append(f"c{i:03d}")
            continue
        top = i % n_top
        segments = [f"t{top:03d}"]
        for lvl in range(2, depth):
            segments.append(f"m{lvl}x{top:03d}")
        segments.append(f"c{i:03d}")
        paths.append(".".join(segments))
    return paths


def _effective_n_top(config: SynthConfig) -> int:
    if config.hierarchy_depth == 1:
        return config.n_categories
    n_top = config.n_top_categories
    if n_top == 0:
        n_top = max(config.side_categories + 1, math.ceil(config.n_categories / 3))
    n_top = min(n_top, config.n_categories)
    if n_top <= config.side_categories:
        raise ValueError("need more top-level categories than side_categories")
    return n_top


def _half_weights(lam: float, m: int) -> np.ndarray:
    return np.array([lam] + [(1.0 - lam) / m] * m)


def _category_slots(
    rng: np.random.Generator, config: SynthConfig, lam: float, cats: list[int], n: int
) -> list[int]:
    """Leaf index per contribution slot, first and second half generated apart."""
    m = config.side_categories
    drift = config.temporal_drift
    n_first = (n + 1) // 2
    slots: list[int] = []
    for n_half, lam_half in ((n_first, lam - drift / 2.0), (n - n_first, lam + drift / 2.0)):
        if n_half == 0:
            continue
        w = _half_weights(min(max(lam_half, 0.02), 0.98), m)
        if config.category_sampling == "exact":
            counts = _apportion(n_half, w)
        else:
            counts = rng.multinomial(n_half, w)
        for ci, c in enumerate(cats):
            slots.extend([c] * int(counts[ci]))
    return slots


def _planted_summary(config: SynthConfig) -> dict:
    planted = {
        "quality_model": config.quality_model,
        "rho_focus_quality": config.rho_focus_quality,
        "rho_quantity_quality": config.rho_quantity_quality,
        "rho_quantity_focus": config.rho_quantity_focus,
        "temporal_drift": config.temporal_drift,
    }
    if config.quality_model == "citations":
        # Quality reads as roughly 1 + gain * ability, focus as the target
        # itself, log quantity as its own latent; the implied population
        # regression coefficients follow from the standardized solve.
        r_nf = config.rho_quantity_focus
        cross = np.array([[1.0, r_nf], [r_nf, 1.0]])
        b = np.linalg.solve(cross, np.array([config.rho_focus_quality, config.rho_quantity_quality]))
        planted["beta_focus"] = config.quality_gain * b[0] / config.focus_sigma
        planted["beta_log_quantity"] = config.quality_gain * b[1] / config.quantity_sigma
        planted["intercept_note"] = "quality is centered near 1"
    return planted


def generate(config: SynthConfig, out_dir) -> SynthResult:
    """Write one synthetic corpus bundle into ``out_dir``.

    Always writes ``contributions.csv``, ``ground_truth.csv`` and
    ``planted.json``; adds ``citations.csv`` and ``items.csv`` for the
    citations model, ``answers.jsonl`` for qa, ``revisions.jsonl`` for
    wiki. Identical configurations produce byte-identical files.
    """
    _validate(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    n = config.n_contributors
    m = config.side_categories

    latents = draw_latents(config, rng)
    z_focus, z_quantity, z_quality = latents[:, 0], latents[:, 1], latents[:, 2]

    f_lo = 1.0 / (m + 1) + 0.02
    focus_target = np.clip(config.focus_mean + config.focus_sigma * z_focus, f_lo, 0.97)
    lam = _lambda_for_focus(focus_target, m)
    quantity = np.clip(
        np.rint(np.exp(math.log(config.mean_quantity) + config.quantity_sigma * z_quantity)),
        config.min_quantity,
        config.max_quantity,
    ).astype(np.int64)
    ability = z_quality

    n_top = _effective_n_top(config)
    leaves = _leaf_paths(config, n_top)
    k = config.n_categories
    if config.hierarchy_depth == 1:
        leaves_of_top = [[i] for i in range(k)]
        top_of_leaf = list(range(k))
    else:
        leaves_of_top = [[] for _ in range(n_top)]
        top_of_leaf = [i % n_top for i in range(k)]
        for i in range(k):
            leaves_of_top[i % n_top].append(i)

    # Home leaf plus side leaves drawn from distinct tops, so coarsening
    # to level 1 preserves each contributor's concentration structure.
    homes = rng.integers(0, k, size=n)
    cats_per_contributor: list[list[int]] = []
    for u in range(n):
        home = int(homes[u])
        order = rng.permutation(len(leaves_of_top))
        sides = []
        for top in order:
            if int(top) == top_of_leaf[home]:
                continue
            pool = leaves_of_top[int(top)]
            sides.append(int(pool[int(rng.integers(0, len(pool)))]))
            if len(sides) == m:
                break
        cats_per_contributor.append([home] + sides)

    slots: list[list[int]] = [
        _category_slots(rng, config, float(lam[u]), cats_per_contributor[u], int(quantity[u]))
        for u in range(n)
    ]

    if config.quality_model == "citations":
        contributor_ids = [f"L{u:05d}:F{u:05d}" for u in range(n)]
    else:
        contributor_ids = [f"U{u:05d}" for u in range(n)]

    paths = {
        "contributions": out_dir / "contributions.csv",
        "ground_truth": out_dir / "ground_truth.csv",
        "planted": out_dir / "planted.json",
    }
    medium = config.medium

    if config.quality_model == "citations":
        paths["citations"] = out_dir / "citations.csv"
        paths["items"] = out_dir / "items.csv"
        _write_citation_corpus(config, rng, contributor_ids, slots, leaves, ability, paths)
    elif config.quality_model == "qa":
        paths["answers"] = out_dir / "answers.jsonl"
        _write_qa_corpus(config, rng, contributor_ids, slots, leaves, ability, paths)
    else:
        paths["revisions"] = out_dir / "revisions.jsonl"
        _write_wiki_corpus(config, rng, contributor_ids, slots, leaves, ability, paths)

    with open(paths["ground_truth"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["contributor_id", "z_focus", "z_quantity", "z_quality",
             "focus_target", "home_share", "quantity", "ability"]
        )
        for u in range(n):
            writer.writerow(
                [contributor_ids[u], repr(float(z_focus[u])), repr(float(z_quantity[u])),
                 repr(float(z_quality[u])), repr(float(focus_target[u])), repr(float(lam[u])),
                 str(int(quantity[u])), repr(float(ability[u]))]
            )

    planted = _planted_summary(config)
    with open(paths["planted"], "w", encoding="utf-8") as fh:
        json.dump({"config": asdict(config), "planted": planted}, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return SynthResult(out_dir, medium, paths, planted)


def _slot_timestamp(u: int, j: int, n: int, gap: int) -> int:
    return _TS_BASE + (j * n + u) * gap


def _write_citation_corpus(config, rng, contributor_ids, slots, leaves, ability, paths):
    n = config.n_contributors
    item_ids: list[str] = []
    item_rate: list[float] = []
    gain = np.maximum(0.05, 1.0 + config.quality_gain * ability)
    with open(paths["contributions"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CONTRIBUTIONS_HEADER)
        with open(paths["items"], "w", newline="", encoding="utf-8") as ifh:
            iwriter = csv.writer(ifh, lineterminator="\n")
            iwriter.writerow(ITEMS_HEADER)
            for u in range(n):
                last_first = contributor_ids[u]  # already "Last:First"
                for j, leaf in enumerate(slots[u]):
                    item = f"i{u:05d}x{j:04d}"
                    year = 2000 + (u + j) % 3
                    cat = leaves[leaf]
                    ts = _slot_timestamp(u, j, n, config.slot_gap_seconds)
                    writer.writerow([contributor_ids[u], item, str(ts), "articles", cat, ""])
                    iwriter.writerow([item, str(year), cat, last_first])
                    cohort = 1.0 + 0.3 * ((((leaf * 3) + (year - 2000) * 5) % 11) / 5.0 - 1.0)
                    item_ids.append(item)
                    item_rate.append(config.base_citation_rate * cohort * float(gain[u]))
    rates = np.asarray(item_rate)
    counts = rng.poisson(rates)
    total = int(counts.sum())
    citing_draws = rng.integers(0, len(item_ids), size=total)
    with open(paths["citations"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CITATIONS_HEADER)
        pos = 0
        for i, c in enumerate(counts):
            c = int(c)
            if c == 0:
                continue
            block = np.unique(citing_draws[pos:pos + c])
            pos += c
            cited = item_ids[i]
            for t in block:
                if int(t) == i:
                    continue
                writer.writerow([item_ids[int(t)], cited])


def _write_qa_corpus(config, rng, contributor_ids, slots, leaves, ability, paths):
    n = config.n_contributors
    stream = np.repeat(np.arange(n), [len(s) for s in slots])
    rng.shuffle(stream)
    weights = np.exp(config.qa_ability_gain * ability)
    cursor = [0] * n
    a = config.answers_per_question
    with open(paths["contributions"], "w", newline="", encoding="utf-8") as cfh, \
            open(paths["answers"], "w", encoding="utf-8") as afh:
        writer = csv.writer(cfh, lineterminator="\n")
        writer.writerow(CONTRIBUTIONS_HEADER)
        qi = 0
        for start in range(0, len(stream), a):
            chunk = stream[start:start + a]
            answerers = list(dict.fromkeys(int(u) for u in chunk))
            qid = f"q{qi:06d}"
            qi += 1
            w = weights[answerers]
            best = answerers[int(rng.choice(len(answerers), p=w / w.sum()))]
            for u in answerers:
                j = cursor[u]
                cursor[u] += 1
                leaf = slots[u][j]
                ts = _slot_timestamp(u, j, n, config.slot_gap_seconds)
                cat = leaves[leaf]
                writer.writerow([contributor_ids[u], qid, str(ts), "qa", cat, ""])
                afh.write(
                    json.dumps(
                        {"question_id": qid, "answerer_id": contributor_ids[u],
                         "category_id": cat, "is_best": u == best, "timestamp": ts},
                        separators=(",", ":"),
                    )
                    + "\n"
                )


def _write_wiki_corpus(config, rng, contributor_ids, slots, leaves, ability, paths):
    n = config.n_contributors
    k = config.n_categories
    n_pages = config.wiki_pages or max(k, n // 3)
    if n_pages < k:
        raise ValueError("wiki_pages must cover every category at least once")
    removal = np.clip(config.wiki_base_removal * np.exp(-0.9 * ability), 0.003, 0.5)

    pages_of_cat: list[list[int]] = [[] for _ in range(k)]
    for p in range(n_pages):
        pages_of_cat[p % k].append(p)
    cat_cursor = [0] * k

    # Page state: ordered word -> owner (-1 anonymous). Text snapshots are
    # accumulated per page and written once at the end, page by page.
    page_words: dict[int, dict[str, int]] = {}
    page_rows: dict[int, list[tuple[int, str, str]]] = {}
    word_counter = 0

    max_n = max(len(s) for s in slots) if slots else 0
    for j in range(max_n):
        for u in range(n):
            if j >= len(slots[u]):
                continue
            leaf = slots[u][j]
            pool = pages_of_cat[leaf]
            page = pool[cat_cursor[leaf] % len(pool)]
            cat_cursor[leaf] += 1
            ts = _slot_timestamp(u, j, n, config.slot_gap_seconds)
            if page not in page_words:
                # Anonymous seeding revision so later edits face existing text.
                words: dict[str, int] = {}
                for _ in range(config.wiki_words_per_revision):
                    words[f"seedw{word_counter}"] = -1
                    word_counter += 1
                page_words[page] = words
                page_rows[page] = [(ts - 1, "", " ".join(words))]
            words = page_words[page]
            if words:
                keep_draw = rng.random(len(words))
                doomed = [
                    w for pos, (w, owner) in enumerate(words.items())
                    if keep_draw[pos] < (config.wiki_base_removal if owner < 0 else removal[owner])
                ]
                for w in doomed:
                    del words[w]
            for _ in range(config.wiki_words_per_revision):
                words[f"u{u:05d}w{word_counter}"] = u
                word_counter += 1
            page_rows[page].append((ts, contributor_ids[u], " ".join(words)))

    recent_pages = set(range(math.ceil(n_pages * config.wiki_recent_fraction)))
    last_ts = max((rows[-1][0] for rows in page_rows.values()), default=_TS_BASE)
    # The dump happens well after regular activity settles; pages marked
    # recent get their final revisions re-timed into the dump window.
    dump_time = last_ts + 120 * 86400
    with open(paths["contributions"], "w", newline="", encoding="utf-8") as cfh, \
            open(paths["revisions"], "w", encoding="utf-8") as rfh:
        writer = csv.writer(cfh, lineterminator="\n")
        writer.writerow(CONTRIBUTIONS_HEADER)
        for page in sorted(page_rows):
            rows = page_rows[page]
            burst = set()
            if page in recent_pages and len(rows) >= 2:
                n_burst = max(1, math.ceil(len(rows) * 0.10))
                burst = set(range(len(rows) - n_burst, len(rows)))
            cat = leaves[page % k]
            page_id = f"p{page:05d}"
            for index, (ts, user, text) in enumerate(rows):
                if index in burst:
                    ts = dump_time - 10 + index % 10
                rfh.write(
                    json.dumps(
                        {"page_id": page_id, "revision_index": index, "timestamp": ts,
                         "user_id": user, "text": text},
                        separators=(",", ":"),
                    )
                    + "\n"
                )
                if user:
                    writer.writerow([user, page_id, str(ts), "wiki", cat, ""])

    meta = {"dump_time": dump_time, "removal_rates": [float(r) for r in removal]}
    with open(paths["contributions"].parent / "wiki_meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
