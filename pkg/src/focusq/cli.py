"""Command line front end and end-to-end pipeline.

The ``run`` subcommand chains every stage over one input directory:

    ingest -> name screening -> activity threshold -> similarity
           -> profiles (focus, entropy, quality) -> analysis -> temporal

Intermediate stages are also exposed as their own subcommands so any
single artifact can be rebuilt or inspected in isolation. All outputs
are deterministic for a fixed input directory and configuration;
``manifest.json`` records content hashes so reruns can be compared.

Exit codes: 0 success, 1 usage or unexpected error, 2 malformed input
file, 3 validation failure (missing or inconsistent inputs, bad
configuration), 4 analysis failure (degenerate design, too little data).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import multiprocessing
import os
import sys
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, get_type_hints

import numpy as np

from . import __version__, analysis, corpus, disambig, metrics, synth, taxonomy, topics

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INGEST = 2
EXIT_VALIDATION = 3
EXIT_ANALYSIS = 4

_NAME_MEDIA = ("articles", "patents")  # media whose contributor ids are person names


class CliUsageError(Exception):
    pass


class PipelineError(Exception):
    """Stage failure with a stable exit code."""

    def __init__(self, stage: str, message: str, exit_code: int):
        super().__init__(message)
        self.stage = stage
        self.exit_code = exit_code


@dataclass(frozen=True)
class PipelineConfig:
    input_dir: str = "."
    out_dir: str = "out"
    medium: str = "articles"
    level: int = 2
    min_contributions: int = 0  # 0 picks the medium default
    disambiguate: bool = True  # applies to articles and patents only
    ambiguity_threshold: float = 0.0  # 0 picks the medium default
    similarity: str = "co_contributor"  # or "topic_cosine"
    symmetrize: bool = False
    topic_k: int = 100
    topic_iterations: int = 200
    topic_seed: int = 0
    self_citations: str = "keep"  # or "drop"
    aggregation: str = "mean_of_ratios"  # or "ratio_of_means"
    n_bins: int = 20
    min_count: int = 30
    standardize: bool = False
    stability_window_days: int = 30
    stability_max_fraction: float = 0.05
    dump_time: int = 0  # 0 uses the newest revision timestamp
    temporal: bool = True
    workers: int = 0  # 0 uses the CPU count
    ingest_errors: str = "raise"  # or "skip"


def _coerce_value(hints: dict, key: str, text: str, owner: str):
    if key not in hints:
        raise CliUsageError(f"unknown {owner} key {key!r}")
    target = hints[key]
    if target is bool:
        low = text.strip().lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise CliUsageError(f"{owner} key {key!r} expects a boolean, got {text!r}")
    try:
        return target(text)
    except ValueError:
        raise CliUsageError(f"{owner} key {key!r} expects {target.__name__}, got {text!r}")


def load_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; blank lines and ``#`` comments ignored."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise CliUsageError(f"{path}:{n}: expected key = value")
            out[key.strip()] = value.strip()
    return out


def build_pipeline_config(
    config_path=None, flag_overrides: dict | None = None, set_overrides: Sequence[str] = ()
) -> PipelineConfig:
    """Defaults, then the config file, then named flags, then --set pairs."""
    hints = get_type_hints(PipelineConfig)
    values: dict = {}
    if config_path is not None:
        for key, text in load_config_file(config_path).items():
            values[key] = _coerce_value(hints, key, text, "config")
    for key, val in (flag_overrides or {}).items():
        if val is not None:
            values[key] = val
    for pair in set_overrides:
        key, sep, text = pair.partition("=")
        if not sep:
            raise CliUsageError(f"--set expects key=value, got {pair!r}")
        values[key.strip()] = _coerce_value(hints, key.strip(), text.strip(), "config")
    return PipelineConfig(**values)


def _validate_config(config: PipelineConfig) -> None:
    def bad(message: str):
        raise PipelineError("config", message, EXIT_VALIDATION)

    if config.medium not in corpus.MEDIA:
        bad(f"unknown medium {config.medium!r}")
    if config.similarity not in ("co_contributor", "topic_cosine"):
        bad(f"unknown similarity mode {config.similarity!r}")
    if config.self_citations not in ("keep", "drop"):
        bad(f"self_citations must be 'keep' or 'drop', got {config.self_citations!r}")
    if config.aggregation not in ("mean_of_ratios", "ratio_of_means"):
        bad(f"unknown aggregation {config.aggregation!r}")
    if config.ingest_errors not in ("raise", "skip"):
        bad(f"ingest_errors must be 'raise' or 'skip', got {config.ingest_errors!r}")
    if config.level < 1:
        bad("level must be >= 1")
    if config.min_contributions < 0:
        bad("min_contributions must be >= 0")
    if config.ambiguity_threshold < 0:
        bad("ambiguity_threshold must be >= 0")
    if config.topic_k < 1 or config.topic_iterations < 1:
        bad("topic_k and topic_iterations must be >= 1")
    if config.n_bins < 1 or config.min_count < 1:
        bad("n_bins and min_count must be >= 1")
    if config.stability_window_days < 0 or not (0.0 < config.stability_max_fraction <= 1.0):
        bad("stability window must be >= 0 days and max fraction in (0, 1]")
    if config.dump_time < 0 or config.workers < 0:
        bad("dump_time and workers must be >= 0")


# ---------------------------------------------------------------------------
# Pipeline stages

def _read_documents(path) -> dict[str, str]:
    """documents.jsonl: one {"item_id": ..., "text": ...} object per line."""
    docs: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, start=1):
            if raw.strip() == "":
                continue
            try:
                obj = json.loads(raw)
                item = obj["item_id"]
                text = obj["text"]
                if not item or not isinstance(text, str):
                    raise ValueError("empty item_id or non-string text")
                if item in docs:
                    raise ValueError(f"duplicate document for item {item!r}")
            except (ValueError, KeyError, json.JSONDecodeError) as err:
                raise corpus.IngestError(str(err), path, n)
            docs[item] = text
    return docs


def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()


_WORKER_FN = None


def _worker_call(cid: str):
    return cid, _WORKER_FN(cid)


def _map_quality(cids: Sequence[str], fn, workers: int) -> dict:
    """Per-contributor quality map, optionally over a fork pool."""
    if workers <= 1 or len(cids) < 2:
        return {cid: fn(cid) for cid in cids}
    global _WORKER_FN
    try:
        ctx = multiprocessing.get_context("fork")
    except ValueError:
        return {cid: fn(cid) for cid in cids}
    _WORKER_FN = fn
    try:
        with ctx.Pool(workers) as pool:
            chunk = max(1, math.ceil(len(cids) / (workers * 4)))
            pairs = pool.map(_worker_call, cids, chunksize=chunk)
    finally:
        _WORKER_FN = None
    return dict(pairs)


def _ingest_input_dir(config: PipelineConfig, input_dir: Path):
    contrib_path = input_dir / "contributions.csv"
    if not contrib_path.exists():
        raise PipelineError("ingest", f"missing {contrib_path}", EXIT_VALIDATION)
    loaded = corpus.Corpus()
    input_files = {"contributions.csv": contrib_path}
    try:
        corpus.ingest(contrib_path, "contributions", into=loaded, on_error=config.ingest_errors)
        for schema, fname in (
            ("citations", "citations.csv"),
            ("items", "items.csv"),
            ("answers", "answers.jsonl"),
            ("revisions", "revisions.jsonl"),
        ):
            path = input_dir / fname
            if path.exists():
                corpus.ingest(path, schema, into=loaded, on_error=config.ingest_errors)
                input_files[fname] = path
    except corpus.IngestError as err:
        raise PipelineError("ingest", str(err), EXIT_INGEST)
    documents = None
    docs_path = input_dir / "documents.jsonl"
    if docs_path.exists():
        try:
            documents = _read_documents(docs_path)
        except corpus.IngestError as err:
            raise PipelineError("ingest", str(err), EXIT_INGEST)
        input_files["documents.jsonl"] = docs_path
    return loaded, documents, input_files


def _screen_contributor_names(config, records, out_dir, outputs):
    """Collapse initials, drop ambiguous names, rewrite contributor ids."""
    threshold = config.ambiguity_threshold or disambig.DEFAULT_AMBIGUITY_THRESHOLDS[config.medium]
    parsed: dict[str, disambig.Name] = {}
    for r in records:
        cid = r.contributor_id
        if cid and cid not in parsed and ":" in cid:
            last, _, first = cid.partition(":")
            if last:
                parsed[cid] = (last, first)
    if not parsed:
        return records
    mapping, kept, rows = disambig.screen_names(parsed.values(), threshold)
    disambig.write_report(rows, out_dir / "disambig_report.csv")
    outputs["disambig_report.csv"] = len(rows)
    screened = []
    for r in records:
        name = parsed.get(r.contributor_id)
        if name is None:
            screened.append(r)
            continue
        canonical = mapping[name]
        if canonical not in kept:
            continue
        cid = f"{canonical[0]}:{canonical[1]}"
        screened.append(r if cid == r.contributor_id else dataclasses.replace(r, contributor_id=cid))
    return screened


def _retopic(records, grouped, items, dominant):
    """Swap category labels for each item's dominant topic."""

    def convert(r):
        try:
            cat = dominant[r.item_id]
        except KeyError:
            raise PipelineError(
                "similarity", f"no document for item {r.item_id!r}", EXIT_VALIDATION
            )
        return dataclasses.replace(r, categories=((cat, 1.0),))

    new_records = [convert(r) for r in records]
    regrouped = corpus.records_by_contributor(new_records)
    new_grouped = {cid: regrouped[cid] for cid in grouped}
    new_items = {}
    for item_id, meta in items.items():
        try:
            cat = dominant[item_id]
        except KeyError:
            raise PipelineError("similarity", f"no document for item {item_id!r}", EXIT_VALIDATION)
        new_items[item_id] = dataclasses.replace(meta, categories=(cat,))
    return new_records, new_grouped, new_items


def run_pipeline(
    config: PipelineConfig, stop_after: str = "temporal", run_analysis: bool = True
) -> dict:
    """Execute the pipeline and return the manifest dictionary.

    ``stop_after`` is ``"metrics"`` or ``"temporal"``; analysis outputs
    are skipped when ``run_analysis`` is false. The manifest is always
    written last, covering exactly the stages that ran.
    """
    _validate_config(config)
    if stop_after not in ("metrics", "temporal"):
        raise ValueError(f"stop_after must be 'metrics' or 'temporal', got {stop_after!r}")
    input_dir = Path(config.input_dir)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    medium = config.medium
    stages_run: list[str] = []
    outputs: dict[str, int] = {}

    loaded, documents, input_files = _ingest_input_dir(config, input_dir)
    records = [r for r in loaded.contributions if r.medium == medium]
    if not records:
        raise PipelineError("ingest", f"no contribution records for medium {medium!r}", EXIT_VALIDATION)
    stages_run.append("ingest")

    if medium in _NAME_MEDIA and config.disambiguate:
        records = _screen_contributor_names(config, records, out_dir, outputs)
        if not records:
            raise PipelineError("disambig", "name screening removed every record", EXIT_VALIDATION)
        stages_run.append("disambig")

    min_required = config.min_contributions or corpus.default_threshold(medium)
    counts = Counter(r.contributor_id for r in records if r.contributor_id)
    retained = {cid for cid, n in counts.items() if n >= min_required}
    grouped_all = corpus.records_by_contributor(records)
    grouped = {cid: grouped_all[cid] for cid in retained}
    if not grouped:
        raise PipelineError(
            "threshold", f"no contributor reaches {min_required} contributions", EXIT_VALIDATION
        )
    stages_run.append("threshold")

    items_effective = loaded.items
    if config.similarity == "co_contributor":
        similarity = taxonomy.co_contribution_similarity(records, config.level)
    else:
        if documents is None:
            raise PipelineError(
                "similarity", "topic_cosine similarity needs documents.jsonl", EXIT_VALIDATION
            )
        doc_ids = list(documents)
        topic_config = topics.TopicModelConfig(
            n_topics=config.topic_k, iterations=config.topic_iterations, seed=config.topic_seed
        )
        try:
            dtm = topics.fit_lda([topics.tokenize(documents[i]) for i in doc_ids],
                                 topic_config, doc_ids=doc_ids)
        except ValueError as err:
            raise PipelineError("similarity", str(err), EXIT_VALIDATION)
        topics.write_doc_topics(dtm, out_dir / "doc_topics.csv")
        outputs["doc_topics.csv"] = len(dtm.doc_ids)
        similarity = taxonomy.topic_cosine_similarity(dtm.matrix)
        dominant = {
            doc_id: similarity.categories[int(np.argmax(dtm.matrix[i]))]
            for i, doc_id in enumerate(dtm.doc_ids)
        }
        records, grouped, items_effective = _retopic(records, grouped, loaded.items, dominant)
    if config.symmetrize:
        similarity = similarity.symmetrized()
    taxonomy.write_similarity(similarity, out_dir / "similarity.csv")
    outputs["similarity.csv"] = len(similarity.categories)
    stages_run.append("similarity")

    if medium in _NAME_MEDIA:
        if "citations.csv" not in input_files or "items.csv" not in input_files:
            raise PipelineError(
                "metrics", "citation quality needs citations.csv and items.csv", EXIT_VALIDATION
            )
        edges = loaded.citations
        if config.self_citations == "drop":
            edges = metrics.filter_self_citations(edges, items_effective)
        cite_counts = metrics.citation_counts(edges)
        cohort_means = metrics.build_cohort_means(items_effective, cite_counts)

        def full_quality(cid):
            return metrics.citation_quality(
                [r.item_id for r in grouped[cid]], cite_counts, items_effective,
                cohort_means, config.aggregation,
            )

        def half_quality(cid, recs):
            return metrics.citation_quality(
                [r.item_id for r in recs], cite_counts, items_effective,
                cohort_means, config.aggregation,
            )

    elif medium == "qa":
        if "answers.jsonl" not in input_files:
            raise PipelineError("metrics", "best-answer quality needs answers.jsonl", EXIT_VALIDATION)
        question_counts = metrics.answerer_counts(loaded.answers)
        answers_by_user: dict[str, list] = {}
        for a in loaded.answers:
            answers_by_user.setdefault(a.answerer_id, []).append(a)

        def full_quality(cid):
            return metrics.gamma_score(answers_by_user.get(cid, ()), question_counts)

        def half_quality(cid, recs):
            wanted = {r.item_id for r in recs}
            events = [a for a in answers_by_user.get(cid, ()) if a.question_id in wanted]
            return metrics.gamma_score(events, question_counts)

    else:  # wiki
        if "revisions.jsonl" not in input_files:
            raise PipelineError("metrics", "word-survival quality needs revisions.jsonl", EXIT_VALIDATION)
        dump_time = config.dump_time or max(
            r.timestamp for revs in loaded.revisions.values() for r in revs
        )
        stable_pages = {
            page: revs
            for page, revs in loaded.revisions.items()
            if metrics.stability_filter(
                revs, dump_time, config.stability_window_days * 86400,
                config.stability_max_fraction,
            )
        }
        survival_index = metrics.SurvivalIndex(stable_pages)

        def full_quality(cid):
            return survival_index.quality(cid)

        def half_quality(cid, recs):
            lo = min(r.timestamp for r in recs)
            hi = max(r.timestamp for r in recs)
            return survival_index.quality(cid, lambda rev: lo <= rev.timestamp <= hi)

    workers = config.workers or (os.cpu_count() or 1)
    try:
        quality = _map_quality(sorted(grouped), full_quality, workers)
        profiles = metrics.build_profiles(grouped, similarity, config.level, quality, medium)
    except ValueError as err:
        raise PipelineError("metrics", str(err), EXIT_VALIDATION)
    metrics.write_profiles(profiles, out_dir / "profiles.csv")
    outputs["profiles.csv"] = len(profiles)
    stages_run.append("metrics")

    if stop_after == "temporal" and run_analysis:
        try:
            report = analysis.build_report(
                profiles, config.n_bins, config.min_count, config.standardize
            )
        except ValueError as err:
            raise PipelineError("analysis", str(err), EXIT_ANALYSIS)
        analysis.write_correlations(report.correlations, out_dir / "report.csv")
        outputs["report.csv"] = len(report.correlations)
        analysis.write_regression(report.regression, out_dir / "regression.csv")
        outputs["regression.csv"] = len(report.regression.terms) + 2
        for key, rows in report.bins.items():
            analysis.write_bins(rows, out_dir / f"bins_{key}.csv")
            outputs[f"bins_{key}.csv"] = len(rows)
        stages_run.append("analysis")

    if stop_after == "temporal" and config.temporal:
        try:
            shift = analysis.temporal_change(grouped, similarity, config.level, half_quality)
        except ValueError as err:
            raise PipelineError("temporal", str(err), EXIT_VALIDATION)
        analysis.write_temporal(shift, out_dir / "temporal.csv")
        outputs["temporal.csv"] = 1
        stages_run.append("temporal")

    schema_of = {
        "contributions.csv": "contributions",
        "citations.csv": "citations",
        "items.csv": "items",
        "answers.jsonl": "answers",
        "revisions.jsonl": "revisions",
    }
    loaded_counts = loaded.counts()
    inputs = {}
    for fname, path in sorted(input_files.items()):
        rows = len(documents) if fname == "documents.jsonl" else loaded_counts[schema_of[fname]]
        inputs[fname] = {"sha256": _sha256_file(path), "rows": rows}
    manifest = {
        "version": __version__,
        "medium": medium,
        # directory locations are not part of the analytic configuration
        "config_sha256": hashlib.sha256(
            json.dumps(
                {k: v for k, v in dataclasses.asdict(config).items()
                 if k not in ("input_dir", "out_dir")},
                sort_keys=True,
            ).encode("utf-8")
        ).hexdigest(),
        "stages": stages_run,
        "inputs": inputs,
        "outputs": {name: {"rows": rows} for name, rows in sorted(outputs.items())},
        "skipped_lines": dict(sorted(loaded.skipped.items())),
        "retained_contributors": len(grouped),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# ---------------------------------------------------------------------------
# Subcommands

def _cmd_synth(args) -> int:
    hints = get_type_hints(synth.SynthConfig)
    values: dict = {}
    for key in hints:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    for pair in args.set or ():
        key, sep, text = pair.partition("=")
        if not sep:
            raise CliUsageError(f"--set expects key=value, got {pair!r}")
        values[key.strip()] = _coerce_value(hints, key.strip(), text.strip(), "synth")
    try:
        config = synth.SynthConfig(**values)
        result = synth.generate(config, args.out)
    except ValueError as err:
        raise PipelineError("synth", str(err), EXIT_VALIDATION)
    for name in sorted(result.paths):
        print(f"{name}: {result.paths[name]}")
    print(f"medium: {result.medium}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    config = PipelineConfig(input_dir=args.input, medium=args.medium, ingest_errors=args.on_error)
    loaded, documents, _ = _ingest_input_dir(config, Path(args.input))
    for schema, n in loaded.counts().items():
        print(f"{schema}: {n}")
    if documents is not None:
        print(f"documents: {len(documents)}")
    for schema, n in sorted(loaded.skipped.items()):
        print(f"skipped[{schema}]: {n}")
    return EXIT_OK


def _cmd_disambig(args) -> int:
    path = Path(args.input) / "contributions.csv"
    if not path.exists():
        raise PipelineError("disambig", f"missing {path}", EXIT_VALIDATION)
    try:
        loaded = corpus.ingest(path, "contributions")
    except corpus.IngestError as err:
        raise PipelineError("ingest", str(err), EXIT_INGEST)
    names: dict[disambig.Name, None] = {}
    for r in loaded.contributions:
        if r.medium == args.medium and ":" in r.contributor_id:
            last, _, first = r.contributor_id.partition(":")
            if last:
                names.setdefault((last, first))
    if not names:
        raise PipelineError("disambig", "no Last:First contributor ids found", EXIT_VALIDATION)
    threshold = args.threshold or disambig.DEFAULT_AMBIGUITY_THRESHOLDS.get(args.medium)
    if threshold is None:
        raise PipelineError("disambig", f"no default threshold for medium {args.medium!r}", EXIT_VALIDATION)
    mapping, kept, rows = disambig.screen_names(names, threshold)
    disambig.write_report(rows, args.out)
    merged = sum(1 for name, canon in mapping.items() if canon != name)
    excluded = sum(1 for r in rows if r.action == "excluded")
    print(f"names: {len(rows)} kept: {len(kept)} excluded: {excluded} merged: {merged}")
    return EXIT_OK


def _cmd_similarity(args) -> int:
    if args.mode == "co_contributor":
        path = Path(args.input) / "contributions.csv"
        if not path.exists():
            raise PipelineError("similarity", f"missing {path}", EXIT_VALIDATION)
        try:
            loaded = corpus.ingest(path, "contributions")
        except corpus.IngestError as err:
            raise PipelineError("ingest", str(err), EXIT_INGEST)
        records = [r for r in loaded.contributions if r.medium == args.medium]
        try:
            similarity = taxonomy.co_contribution_similarity(records, args.level)
        except ValueError as err:
            raise PipelineError("similarity", str(err), EXIT_VALIDATION)
    else:
        if not args.doc_topics:
            raise CliUsageError("topic_cosine mode needs --doc-topics")
        dtm = topics.read_doc_topics(args.doc_topics)
        similarity = taxonomy.topic_cosine_similarity(dtm.matrix)
    if args.symmetrize:
        similarity = similarity.symmetrized()
    taxonomy.write_similarity(similarity, args.out)
    print(f"categories: {len(similarity.categories)} provenance: {similarity.provenance}")
    return EXIT_OK


def _cmd_topics(args) -> int:
    try:
        documents = _read_documents(args.input)
    except corpus.IngestError as err:
        raise PipelineError("ingest", str(err), EXIT_INGEST)
    doc_ids = list(documents)
    config = topics.TopicModelConfig(
        n_topics=args.k, alpha=args.alpha, beta=args.beta, iterations=args.iters, seed=args.seed
    )
    try:
        dtm = topics.fit_lda(
            [topics.tokenize(documents[i]) for i in doc_ids], config, doc_ids=doc_ids
        )
    except ValueError as err:
        raise PipelineError("topics", str(err), EXIT_VALIDATION)
    topics.write_doc_topics(dtm, args.out)
    print(f"documents: {len(doc_ids)} topics: {dtm.n_topics}")
    return EXIT_OK


def _pipeline_args_config(args) -> PipelineConfig:
    flags = {"input_dir": args.input, "out_dir": args.out, "medium": args.medium}
    return build_pipeline_config(args.config, flags, args.set or ())


def _cmd_metrics(args) -> int:
    run_pipeline(_pipeline_args_config(args), stop_after="metrics")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    profiles = metrics.read_profiles(args.profiles)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        report = analysis.build_report(profiles, args.bins, args.min_count, args.standardize)
    except ValueError as err:
        raise PipelineError("analysis", str(err), EXIT_ANALYSIS)
    analysis.write_correlations(report.correlations, out_dir / "report.csv")
    analysis.write_regression(report.regression, out_dir / "regression.csv")
    for key, rows in report.bins.items():
        analysis.write_bins(rows, out_dir / f"bins_{key}.csv")
    for entry in report.correlations:
        if entry.result is None:
            print(f"{entry.pair}: {entry.note}")
        else:
            print(f"{entry.pair}: rho={entry.result.rho:.4f} p={entry.result.p_value:.3g} n={entry.result.n}")
    return EXIT_OK


def _cmd_temporal(args) -> int:
    config = _pipeline_args_config(args)
    config = dataclasses.replace(config, temporal=True)
    manifest = run_pipeline(config, stop_after="temporal", run_analysis=False)
    print(json.dumps(manifest["outputs"], indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_run(args) -> int:
    manifest = run_pipeline(_pipeline_args_config(args), stop_after="temporal")
    if args.manifest:
        print(json.dumps(manifest, indent=2, sort_keys=True))
    else:
        print(f"retained {manifest['retained_contributors']} contributors; "
              f"outputs in {args.out or 'out'}")
    return EXIT_OK


def _cmd_manifest(args) -> int:
    path = Path(args.out) / "manifest.json"
    if not path.exists():
        raise PipelineError("manifest", f"missing {path}", EXIT_VALIDATION)
    print(path.read_text(encoding="utf-8"), end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); keep 2 for ingest errors
        raise CliUsageError(message)


def _add_pipeline_flags(parser) -> None:
    parser.add_argument("--input", help="input directory (default: current directory)")
    parser.add_argument("--out", help="output directory (default: out)")
    parser.add_argument("--medium", choices=corpus.MEDIA, help="contribution medium")
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="focusq", description="Contributor focus and quality pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic corpus with planted structure")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--model", dest="quality_model", choices=synth._QUALITY_MODELS)
    p.add_argument("--n", dest="n_contributors", type=int)
    p.add_argument("--categories", dest="n_categories", type=int)
    p.add_argument("--depth", dest="hierarchy_depth", type=int)
    p.add_argument("--seed", dest="seed", type=int)
    p.add_argument("--drift", dest="temporal_drift", type=float)
    p.add_argument("--sampling", dest="category_sampling", choices=("exact", "multinomial"))
    p.add_argument("--rho-focus-quality", dest="rho_focus_quality", type=float)
    p.add_argument("--rho-quantity-quality", dest="rho_quantity_quality", type=float)
    p.add_argument("--rho-quantity-focus", dest="rho_quantity_focus", type=float)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="set any generator field (repeatable)")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="load an input directory and print row counts")
    p.add_argument("--input", required=True)
    p.add_argument("--medium", choices=corpus.MEDIA, default="articles")
    p.add_argument("--on-error", choices=("raise", "skip"), default="raise")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("disambig", help="screen contributor names and write the report")
    p.add_argument("--input", required=True, help="directory holding contributions.csv")
    p.add_argument("--medium", choices=_NAME_MEDIA, default="articles")
    p.add_argument("--threshold", type=float, default=0.0, help="0 uses the medium default")
    p.add_argument("--out", required=True, help="report csv path")
    p.set_defaults(func=_cmd_disambig)

    p = sub.add_parser("similarity", help="build and write a category similarity matrix")
    p.add_argument("--input", help="directory holding contributions.csv")
    p.add_argument("--medium", choices=corpus.MEDIA, default="articles")
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--mode", choices=("co_contributor", "topic_cosine"), default="co_contributor")
    p.add_argument("--doc-topics", help="doc-topic csv (topic_cosine mode)")
    p.add_argument("--symmetrize", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_similarity)

    p = sub.add_parser("topics", help="topic model utilities")
    sub2 = p.add_subparsers(dest="topics_command", required=True, parser_class=_Parser)
    pf = sub2.add_parser("fit", help="fit the topic model on documents.jsonl")
    pf.add_argument("--input", required=True, help="documents.jsonl path")
    pf.add_argument("--out", required=True, help="doc-topic csv path")
    pf.add_argument("--k", type=int, required=True)
    pf.add_argument("--iters", type=int, default=200)
    pf.add_argument("--seed", type=int, default=0)
    pf.add_argument("--alpha", type=float, default=None)
    pf.add_argument("--beta", type=float, default=0.01)
    pf.set_defaults(func=_cmd_topics)

    p = sub.add_parser("metrics", help="run the pipeline through contributor profiles")
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("analyze", help="analyze an existing profiles.csv")
    p.add_argument("--profiles", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--min-count", type=int, default=30)
    p.add_argument("--standardize", action="store_true")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("temporal", help="run the pipeline for the temporal report only")
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_temporal)

    p = sub.add_parser("run", help="run the full pipeline")
    _add_pipeline_flags(p)
    p.add_argument("--manifest", action="store_true", help="print the manifest to stdout")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("manifest", help="print the manifest of a completed run")
    p.add_argument("--out", required=True, help="output directory of the run")
    p.set_defaults(func=_cmd_manifest)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CliUsageError as err:
        print(f"focusq: {err}", file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --version and --help exit through argparse
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliUsageError as err:
        print(f"focusq: {err}", file=sys.stderr)
        return EXIT_ERROR
    except PipelineError as err:
        print(f"focusq: [{err.stage}] {err}", file=sys.stderr)
        return err.exit_code
    except corpus.IngestError as err:
        print(f"focusq: [ingest] {err}", file=sys.stderr)
        return EXIT_INGEST
    except (ValueError, OSError) as err:
        print(f"focusq: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
