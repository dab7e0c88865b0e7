import csv
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from focusq.corpus import ingest, records_by_contributor
from focusq.analysis import temporal_change
from focusq.metrics import stability_filter
from focusq.synth import SynthConfig, correlation_matrix, draw_latents, generate
from focusq.taxonomy import co_contribution_similarity


def load_dir(root: Path):
    corpus = ingest(root / "contributions.csv", "contributions")
    for fname, schema in (("citations.csv", "citations"), ("items.csv", "items"),
                          ("answers.jsonl", "answers"), ("revisions.jsonl", "revisions")):
        if (root / fname).exists():
            ingest(root / fname, schema, into=corpus)
    return corpus


def digest_tree(root: Path) -> dict[str, str]:
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            out[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


def test_generation_is_reproducible(tmp_path):
    cfg = SynthConfig(n_contributors=40, n_categories=9, seed=5)
    a = generate(cfg, tmp_path / "a")
    b = generate(cfg, tmp_path / "b")
    ha, hb = digest_tree(tmp_path / "a"), digest_tree(tmp_path / "b")
    assert ha == hb
    assert set(ha) == {"contributions.csv", "citations.csv", "items.csv",
                       "ground_truth.csv", "planted.json"}
    assert a.medium == b.medium == "articles"

    c = generate(SynthConfig(n_contributors=40, n_categories=9, seed=6), tmp_path / "c")
    assert digest_tree(tmp_path / "c") != ha


def test_latents_hit_correlation_targets():
    cfg = SynthConfig(
        n_contributors=40_000,
        rho_quantity_focus=-0.3,
        rho_focus_quality=0.4,
        rho_quantity_quality=0.2,
        seed=1,
    )
    sigma = correlation_matrix(cfg)
    assert sigma[0, 1] == sigma[1, 0] == -0.3
    z = draw_latents(cfg, np.random.default_rng(2))
    emp = np.corrcoef(z, rowvar=False)
    assert emp[1, 0] == pytest.approx(-0.3, abs=0.03)  # quantity ~ focus
    assert emp[0, 2] == pytest.approx(0.4, abs=0.03)  # focus ~ quality
    assert emp[1, 2] == pytest.approx(0.2, abs=0.03)


def test_infeasible_correlations_rejected():
    cfg = SynthConfig(rho_focus_quality=0.9, rho_quantity_quality=-0.9, rho_quantity_focus=0.9)
    with pytest.raises(ValueError, match="positive definite"):
        draw_latents(cfg, np.random.default_rng(0))


def test_ground_truth_solves_the_focus_equation(tmp_path):
    cfg = SynthConfig(n_contributors=60, n_categories=12, seed=9)
    generate(cfg, tmp_path)
    m = cfg.side_categories
    with open(tmp_path / "ground_truth.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 60
    for row in rows:
        lam = float(row["home_share"])
        target = float(row["focus_target"])
        # the planted mixture puts lambda on one leaf and splits the rest evenly
        assert lam * lam + (1 - lam) ** 2 / m == pytest.approx(target, abs=1e-12)
        assert 1.0 / (m + 1) < target <= 0.97
        assert cfg.min_quantity <= int(row["quantity"]) <= cfg.max_quantity


def test_planted_summary_carries_regression_targets(tmp_path):
    cfg = SynthConfig(n_contributors=30, seed=3, rho_focus_quality=0.5)
    res = generate(cfg, tmp_path)
    blob = json.loads((tmp_path / "planted.json").read_text(encoding="utf-8"))
    assert blob["config"]["n_contributors"] == 30
    planted = blob["planted"]
    assert planted == res.planted
    assert planted["beta_focus"] > 0.0
    assert "beta_log_quantity" in planted
    assert planted["rho_focus_quality"] == 0.5


@pytest.mark.parametrize("model", ["citations", "qa", "wiki"])
def test_all_corpora_ingest_cleanly(tmp_path, model):
    cfg = SynthConfig(n_contributors=36, n_categories=9, quality_model=model, seed=4)
    res = generate(cfg, tmp_path)
    corpus = load_dir(tmp_path)
    assert sum(corpus.skipped.values()) == 0
    assert len(corpus.contributions) > 0
    if model == "citations":
        assert len(corpus.citations) > 0
        assert len(corpus.items) > 0
    elif model == "qa":
        assert len(corpus.answers) > 0
        best = [a for a in corpus.answers if a.is_best]
        assert len(best) == len({a.question_id for a in corpus.answers})
    else:
        assert len(corpus.revisions) >= cfg.n_categories
        meta = json.loads((tmp_path / "wiki_meta.json").read_text(encoding="utf-8"))
        last = max(r.timestamp for revs in corpus.revisions.values() for r in revs)
        assert meta["dump_time"] >= last


def test_wiki_recent_fraction_breaks_stability(tmp_path):
    quiet = SynthConfig(n_contributors=30, n_categories=6, quality_model="wiki", seed=2)
    generate(quiet, tmp_path / "quiet")
    corpus = load_dir(tmp_path / "quiet")
    dump = json.loads((tmp_path / "quiet" / "wiki_meta.json").read_text(encoding="utf-8"))["dump_time"]
    stable = [p for p, revs in corpus.revisions.items() if stability_filter(revs, dump)]
    assert len(stable) == len(corpus.revisions)

    noisy = SynthConfig(n_contributors=30, n_categories=6, quality_model="wiki", seed=2,
                        wiki_recent_fraction=0.5)
    generate(noisy, tmp_path / "noisy")
    corpus = load_dir(tmp_path / "noisy")
    dump = json.loads((tmp_path / "noisy" / "wiki_meta.json").read_text(encoding="utf-8"))["dump_time"]
    stable = [p for p, revs in corpus.revisions.items() if stability_filter(revs, dump)]
    assert 0 < len(stable) < len(corpus.revisions)


def test_temporal_drift_narrows_late_halves(tmp_path):
    cfg = SynthConfig(n_contributors=80, n_categories=12, seed=13, temporal_drift=0.25)
    generate(cfg, tmp_path)
    corpus = load_dir(tmp_path)
    grouped = records_by_contributor(corpus.contributions)
    sim = co_contribution_similarity(corpus.contributions, level=2)
    res = temporal_change(grouped, sim, 2)
    assert res.n == 80
    assert res.mean_delta_focus > 0.0
    assert res.pct_increased_focus > 60.0


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        generate(SynthConfig(n_contributors=1), tmp_path)
    with pytest.raises(ValueError):
        generate(SynthConfig(quality_model="sonnets"), tmp_path)
    with pytest.raises(ValueError):
        generate(SynthConfig(category_sampling="bogus"), tmp_path)
    with pytest.raises(ValueError):
        generate(SynthConfig(n_categories=3, side_categories=8), tmp_path)
