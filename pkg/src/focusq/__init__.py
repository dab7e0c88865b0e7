"""Contributor focus, output and quality measurement across media."""

__version__ = "0.1.0"

from .analysis import (
    binned_curve,
    build_report,
    ols_quality_regression,
    paired_ttest,
    pearson,
    spearman,
    temporal_change,
)
from .corpus import Corpus, ingest
from .disambig import ambiguity_score, collapse_initials, screen_names
from .metrics import (
    ContributorProfile,
    build_profiles,
    citation_quality,
    gamma_score,
    shannon_entropy,
    stirling_focus,
    word_survival_quality,
)
from .synth import SynthConfig, generate
from .taxonomy import (
    SimilarityMatrix,
    co_contribution_similarity,
    topic_cosine_similarity,
)
from .topics import TopicModelConfig, fit_lda

__all__ = [
    "__version__",
    "Corpus",
    "ingest",
    "ambiguity_score",
    "collapse_initials",
    "screen_names",
    "SimilarityMatrix",
    "co_contribution_similarity",
    "topic_cosine_similarity",
    "ContributorProfile",
    "build_profiles",
    "stirling_focus",
    "shannon_entropy",
    "citation_quality",
    "gamma_score",
    "word_survival_quality",
    "pearson",
    "spearman",
    "paired_ttest",
    "ols_quality_regression",
    "binned_curve",
    "build_report",
    "temporal_change",
    "TopicModelConfig",
    "fit_lda",
    "SynthConfig",
    "generate",
]
