"""Latent Dirichlet allocation via collapsed Gibbs sampling.

The sampler is deterministic: corpus order, configuration and seed fix
the result bit for bit. Randomness comes from an inline xorshift64*
generator rather than a global RNG so the numba-compiled kernel and the
pure-Python fallback walk exactly the same sequence.

Document-topic rows are point estimates from the final sweep's counts,
(n_dk + alpha) / (N_d + K * alpha).
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is an optional speedup
    njit = None

_TOKEN = re.compile(r"[a-z0-9]+")

# Small closed-class list; tokens shorter than 2 characters are dropped anyway.
STOPWORDS = frozenset(
    """a about above after again all also am an and any are as at be because been
    before being below between both but by can could did do does doing down during
    each few for from further had has have having he her here hers him his how i
    if in into is it its itself just me more most my no nor not now of off on once
    only or other our ours out over own same she should so some such than that the
    their theirs them then there these they this those through to too under until
    up very was we were what when where which while who whom why will with would
    you your yours""".split()
)

_MASK = 0xFFFFFFFFFFFFFFFF
_MULT = 0x2545F4914F6CDD1D
_SCALE = 1.0 / 9007199254740992.0  # 2**-53


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric tokens, at least 2 characters, stop words dropped."""
    return [t for t in _TOKEN.findall(text.lower()) if len(t) >= 2 and t not in STOPWORDS]


@dataclass(frozen=True)
class TopicModelConfig:
    n_topics: int
    alpha: float | None = None  # defaults to 50 / n_topics
    beta: float = 0.01
    iterations: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.n_topics < 1:
            raise ValueError("n_topics must be >= 1")
        if self.alpha is not None and self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")

    def effective_alpha(self) -> float:
        return 50.0 / self.n_topics if self.alpha is None else self.alpha


@dataclass
class DocTopicMatrix:
    doc_ids: list[str]
    matrix: np.ndarray  # shape (n_docs, n_topics), rows sum to 1

    @property
    def n_topics(self) -> int:
        return int(self.matrix.shape[1])


def _splitmix64(seed: int) -> int:
    z = (seed + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _xorshift_next(state: int) -> tuple[int, float]:
    """Advance xorshift64*; returns (new state, uniform in [0, 1))."""
    x = state
    x ^= x >> 12
    x = (x ^ (x << 25)) & _MASK
    x ^= x >> 27
    r = ((x * _MULT) & _MASK) >> 11
    return x, np.float64(r) * _SCALE


def _gibbs_sweeps_py(doc_of, word_of, z, n_dk, n_kw, n_k, alpha, beta, iterations, state):
    """Reference sweep loop; bit-identical to the compiled kernel."""
    n_topics, vocab = n_kw.shape
    beta_vocab = beta * vocab
    probs = np.empty(n_topics, dtype=np.float64)
    s = int(state)
    for _ in range(iterations):
        for t in range(doc_of.shape[0]):
            d = doc_of[t]
            w = word_of[t]
            k = z[t]
            n_dk[d, k] -= 1
            n_kw[k, w] -= 1
            n_k[k] -= 1
            total = 0.0
            for kk in range(n_topics):
                pr = (n_kw[kk, w] + beta) / (n_k[kk] + beta_vocab) * (n_dk[d, kk] + alpha)
                probs[kk] = pr
                total += pr
            s, u01 = _xorshift_next(s)
            u = u01 * total
            acc = 0.0
            knew = n_topics - 1
            for kk in range(n_topics):
                acc += probs[kk]
                if u < acc:
                    knew = kk
                    break
            z[t] = knew
            n_dk[d, knew] += 1
            n_kw[knew, w] += 1
            n_k[knew] += 1
    return s


def _gibbs_sweeps_numba_impl(doc_of, word_of, z, n_dk, n_kw, n_k, alpha, beta, iterations, state):
    n_topics = n_kw.shape[0]
    vocab = n_kw.shape[1]
    beta_vocab = beta * vocab
    probs = np.empty(n_topics, dtype=np.float64)
    c12 = np.uint64(12)
    c25 = np.uint64(25)
    c27 = np.uint64(27)
    c11 = np.uint64(11)
    mult = np.uint64(_MULT)
    s = state
    for _ in range(iterations):
        for t in range(doc_of.shape[0]):
            d = doc_of[t]
            w = word_of[t]
            k = z[t]
            n_dk[d, k] -= 1
            n_kw[k, w] -= 1
            n_k[k] -= 1
            total = 0.0
            for kk in range(n_topics):
                pr = (n_kw[kk, w] + beta) / (n_k[kk] + beta_vocab) * (n_dk[d, kk] + alpha)
                probs[kk] = pr
                total += pr
            x = s
            x ^= x >> c12
            x ^= x << c25  # wraps modulo 2**64
            x ^= x >> c27
            s = x
            r = (x * mult) >> c11
            u = np.float64(r) * _SCALE * total
            acc = 0.0
            knew = n_topics - 1
            for kk in range(n_topics):
                acc += probs[kk]
                if u < acc:
                    knew = kk
                    break
            z[t] = knew
            n_dk[d, knew] += 1
            n_kw[knew, w] += 1
            n_k[knew] += 1
    return s


if njit is not None:
    _gibbs_sweeps_numba = njit(cache=True)(_gibbs_sweeps_numba_impl)
else:  # pragma: no cover
    _gibbs_sweeps_numba = None


def _run_sweeps(doc_of, word_of, z, n_dk, n_kw, n_k, alpha, beta, iterations, state, force_python=False):
    if _gibbs_sweeps_numba is not None and not force_python:
        return int(_gibbs_sweeps_numba(doc_of, word_of, z, n_dk, n_kw, n_k,
                                       alpha, beta, iterations, np.uint64(state)))
    return _gibbs_sweeps_py(doc_of, word_of, z, n_dk, n_kw, n_k, alpha, beta, iterations, state)


def fit_lda(
    docs: Sequence[Sequence[str]],
    config: TopicModelConfig,
    doc_ids: Sequence[str] | None = None,
    force_python: bool = False,
) -> DocTopicMatrix:
    """Fit the model on pre-tokenized documents.

    Every document must keep at least one token after filtering; an
    empty corpus or an empty document is an error rather than a silent
    skip, since a dropped document would shift all later doc ids.
    """
    if len(docs) == 0:
        raise ValueError("empty corpus")
    if doc_ids is None:
        doc_ids = [f"d{i:06d}" for i in range(len(docs))]
    elif len(doc_ids) != len(docs):
        raise ValueError("doc_ids length does not match docs")
    vocab: dict[str, int] = {}
    flat_docs: list[int] = []
    flat_words: list[int] = []
    lengths = np.zeros(len(docs), dtype=np.int64)
    for d, tokens in enumerate(docs):
        if len(tokens) == 0:
            raise ValueError(f"document {doc_ids[d]!r} has no tokens after filtering")
        lengths[d] = len(tokens)
        for tok in tokens:
            w = vocab.setdefault(tok, len(vocab))
            flat_docs.append(d)
            flat_words.append(w)
    if not vocab:
        raise ValueError("empty vocabulary")

    k = config.n_topics
    alpha = config.effective_alpha()
    n_docs = len(docs)
    if k == 1:
        return DocTopicMatrix(list(doc_ids), np.ones((n_docs, 1), dtype=np.float64))

    doc_of = np.asarray(flat_docs, dtype=np.int32)
    word_of = np.asarray(flat_words, dtype=np.int32)
    n_tokens = doc_of.shape[0]

    # Initial assignments come from the same stream the sweeps continue.
    state = _splitmix64(config.seed & _MASK) or 0x9E3779B97F4A7C15
    z = np.empty(n_tokens, dtype=np.int32)
    for t in range(n_tokens):
        state, u = _xorshift_next(state)
        z[t] = min(int(u * k), k - 1)

    n_dk = np.zeros((n_docs, k), dtype=np.int32)
    n_kw = np.zeros((k, len(vocab)), dtype=np.int32)
    np.add.at(n_dk, (doc_of, z), 1)
    np.add.at(n_kw, (z, word_of), 1)
    n_k = np.bincount(z, minlength=k).astype(np.int32)

    _run_sweeps(doc_of, word_of, z, n_dk, n_kw, n_k,
                float(alpha), float(config.beta), int(config.iterations),
                state, force_python=force_python)

    matrix = (n_dk + alpha) / (lengths[:, None] + k * alpha)
    return DocTopicMatrix(list(doc_ids), matrix)


def author_topic_distribution(
    doc_topic: DocTopicMatrix, authorship: Mapping[str, Iterable[str]]
) -> dict[str, np.ndarray]:
    """Unweighted mean of each author's document rows."""
    row_of = {doc_id: i for i, doc_id in enumerate(doc_topic.doc_ids)}
    out: dict[str, np.ndarray] = {}
    for author in authorship:
        ids = list(authorship[author])
        if not ids:
            raise ValueError(f"author {author!r} has no documents")
        try:
            rows = [row_of[i] for i in ids]
        except KeyError as missing:
            raise ValueError(f"author {author!r} references unknown document {missing}")
        out[author] = doc_topic.matrix[rows].mean(axis=0)
    return out


def write_doc_topics(dtm: DocTopicMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["doc_id"] + [f"topic{i:03d}" for i in range(dtm.n_topics)])
        for doc_id, row in zip(dtm.doc_ids, dtm.matrix):
            writer.writerow([doc_id] + [repr(float(v)) for v in row])


def read_doc_topics(path) -> DocTopicMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "doc_id":
            raise ValueError(f"{path}: not a doc-topic file")
        ids, rows = [], []
        for row in reader:
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    return DocTopicMatrix(ids, np.asarray(rows, dtype=np.float64))
