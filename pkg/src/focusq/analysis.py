"""Correlation, regression, binned-curve and temporal-split analyses.

Everything here consumes contributor profiles (quantity, focus, entropy,
quality) and stays medium agnostic. P-values for correlation and paired
tests come from the t distribution evaluated through the regularized
incomplete beta function.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import betainc
from scipy.stats import rankdata

from .corpus import ContributionRecord, in_time_order
from .metrics import ContributorProfile, proportion_vector, stirling_focus
from .taxonomy import SimilarityMatrix

SIGNIFICANCE_LEVEL = 0.05


@dataclass(frozen=True)
class PearsonResult:
    rho: float
    p_value: float
    n: int


def _two_sided_p(t: float, df: int) -> float:
    """P(|T_df| >= |t|) via the regularized incomplete beta function."""
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if math.isinf(t):
        return 0.0
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def pearson(x: Sequence[float], y: Sequence[float]) -> PearsonResult:
    """Pearson correlation with a two-sided p-value.

    Requires n >= 3 and non-constant inputs; a zero-variance input makes
    the coefficient undefined and raises.
    """
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if xv.shape != yv.shape or xv.ndim != 1:
        raise ValueError("x and y must be 1d vectors of equal length")
    n = xv.size
    if n < 3:
        raise ValueError("need at least 3 observations")
    xc = xv - xv.mean()
    yc = yv - yv.mean()
    sx = float(xc @ xc)
    sy = float(yc @ yc)
    if sx == 0.0 or sy == 0.0:
        raise ValueError("zero variance makes the correlation undefined")
    rho = float(xc @ yc) / math.sqrt(sx * sy)
    rho = max(-1.0, min(1.0, rho))
    df = n - 2
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt(df / (1.0 - rho * rho))
        p = _two_sided_p(t, df)
    return PearsonResult(rho, p, n)


def spearman(x: Sequence[float], y: Sequence[float]) -> PearsonResult:
    """Rank correlation: Pearson on average ranks."""
    return pearson(rankdata(x), rankdata(y))


def paired_ttest(diffs: Sequence[float]) -> tuple[float, float]:
    """Paired t statistic and two-sided p for a vector of differences.

    A degenerate all-equal vector yields p = 1 when the common value is
    zero and p = 0 otherwise.
    """
    d = np.asarray(diffs, dtype=np.float64)
    if d.ndim != 1 or d.size < 2:
        raise ValueError("need at least 2 paired differences")
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        return (0.0, 1.0) if mean == 0.0 else (math.inf if mean > 0 else -math.inf, 0.0)
    t = mean / (sd / math.sqrt(d.size))
    return t, _two_sided_p(t, d.size - 1)


# ---------------------------------------------------------------------------
# Regression

@dataclass(frozen=True)
class RegressionResult:
    terms: tuple[str, ...]
    coef: np.ndarray
    stderr: np.ndarray
    r_squared: float
    n: int


def _check_full_rank(x: np.ndarray, terms: Sequence[str]) -> None:
    for j, name in enumerate(terms):
        if name != "intercept" and float(x[:, j].std()) == 0.0:
            raise ValueError(f"singular design matrix: column '{name}' is constant")
    r = np.linalg.qr(x, mode="r")
    diag = np.abs(np.diagonal(r))
    tol = max(x.shape) * np.finfo(np.float64).eps * (diag.max() if diag.size else 0.0)
    bad = np.flatnonzero(diag <= tol)
    if bad.size:
        raise ValueError(f"singular design matrix: column '{terms[int(bad[0])]}' is collinear")


def ols(x: np.ndarray, y: np.ndarray, terms: Sequence[str]) -> RegressionResult:
    """Ordinary least squares through the normal equations.

    Standard errors come from sigma2 * inv(X'X) with the unbiased
    residual variance estimate; R2 is measured against the mean model.
    """
    n, k = x.shape
    if n < k + 3:
        raise ValueError(f"need at least {k + 3} observations for {k} parameters")
    _check_full_rank(x, terms)
    xtx = x.T @ x
    coef = np.linalg.solve(xtx, x.T @ y)
    resid = y - x @ coef
    ssr = float(resid @ resid)
    sst = float(((y - y.mean()) ** 2).sum())
    sigma2 = ssr / (n - k)
    cov = sigma2 * np.linalg.inv(xtx)
    stderr = np.sqrt(np.diagonal(cov))
    r2 = 1.0 - ssr / sst if sst > 0.0 else 0.0
    return RegressionResult(tuple(terms), coef, stderr, r2, n)


def ols_quality_regression(
    focus: Sequence[float],
    quantity: Sequence[float],
    quality: Sequence[float],
    standardize: bool = False,
) -> RegressionResult:
    """Regress quality on focus and log quantity with an intercept.

    ``standardize`` rescales the two predictors to zero mean and unit
    sample standard deviation before fitting, which leaves t statistics
    unchanged but makes coefficients comparable across media.
    """
    f = np.asarray(focus, dtype=np.float64)
    q = np.asarray(quantity, dtype=np.float64)
    y = np.asarray(quality, dtype=np.float64)
    if not (f.shape == q.shape == y.shape) or f.ndim != 1:
        raise ValueError("focus, quantity and quality must be 1d vectors of equal length")
    if np.any(q <= 0.0):
        raise ValueError("quantity must be positive to take logs")
    logq = np.log(q)
    cols = [f, logq]
    if standardize:
        cols = [(c - c.mean()) / c.std(ddof=1) if c.std(ddof=1) > 0 else c - c.mean() for c in cols]
    x = np.column_stack([np.ones_like(f)] + cols)
    return ols(x, y, ("intercept", "focus", "log_quantity"))


# ---------------------------------------------------------------------------
# Binned curves

@dataclass(frozen=True)
class BinRow:
    center: float
    mean: float
    stderr: float
    count: int


def binned_curve(
    x: Sequence[float],
    y: Sequence[float],
    n_bins: int = 20,
    min_count: int = 30,
) -> list[BinRow]:
    """Equal-width bins of x with the mean and standard error of y.

    Bins with fewer than ``min_count`` points are suppressed. The last
    bin is closed on the right; a degenerate x range yields one bin.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if xv.shape != yv.shape or xv.ndim != 1 or xv.size == 0:
        raise ValueError("x and y must be non-empty 1d vectors of equal length")
    lo = float(xv.min())
    hi = float(xv.max())
    if hi == lo:
        idx = np.zeros(xv.size, dtype=np.int64)
        centers = np.array([lo])
        n_bins = 1
    else:
        width = (hi - lo) / n_bins
        idx = np.minimum(((xv - lo) / width).astype(np.int64), n_bins - 1)
        centers = lo + (np.arange(n_bins) + 0.5) * width
    rows = []
    for b in range(n_bins):
        members = yv[idx == b]
        if members.size < max(min_count, 1):
            continue
        se = float(members.std(ddof=1) / math.sqrt(members.size)) if members.size > 1 else 0.0
        rows.append(BinRow(float(centers[b]), float(members.mean()), se, int(members.size)))
    return rows


# ---------------------------------------------------------------------------
# Temporal split

@dataclass
class TemporalResult:
    n: int
    excluded_untimestamped: int
    pct_increased_focus: float
    mean_delta_focus: float
    p_delta_focus: float
    n_quality: int
    mean_delta_quality: float | None
    p_delta_quality: float | None
    delta_focus: list[float] = field(default_factory=list)
    delta_quality: list[float] = field(default_factory=list)

    def focus_significant(self) -> bool:
        return self.p_delta_focus < SIGNIFICANCE_LEVEL

    def quality_significant(self) -> bool:
        return self.p_delta_quality is not None and self.p_delta_quality < SIGNIFICANCE_LEVEL


QualityFn = Callable[[str, Sequence[ContributionRecord]], float | None]


def temporal_change(
    grouped: Mapping[str, Sequence[ContributionRecord]],
    similarity: SimilarityMatrix,
    level: int,
    quality_fn: QualityFn | None = None,
) -> TemporalResult:
    """Early-half versus late-half focus (and optionally quality) shifts.

    Each contributor's records are ordered by timestamp (ties broken by
    item id) and split into a first half of ceil(n/2) records and a
    second half of floor(n/2). Both halves are scored against the same
    similarity matrix. Contributors with any untimestamped record are
    excluded and counted.
    """
    index = similarity.index()
    d_focus: list[float] = []
    d_quality: list[float] = []
    excluded = 0
    for cid in sorted(grouped):
        records = grouped[cid]
        if len(records) < 2 or any(r.timestamp is None for r in records):
            excluded += 1
            continue
        ordered = in_time_order(records)
        cut = (len(ordered) + 1) // 2
        first, second = ordered[:cut], ordered[cut:]
        f1 = stirling_focus(proportion_vector(first, index, level), similarity)
        f2 = stirling_focus(proportion_vector(second, index, level), similarity)
        d_focus.append(f2 - f1)
        if quality_fn is not None:
            q1 = quality_fn(cid, first)
            q2 = quality_fn(cid, second)
            if q1 is not None and q2 is not None:
                d_quality.append(q2 - q1)
    if not d_focus:
        return TemporalResult(0, excluded, 0.0, 0.0, 1.0, 0, None, None)
    arr = np.asarray(d_focus)
    _, p_focus = paired_ttest(arr) if arr.size >= 2 else (0.0, 1.0)
    pct = 100.0 * float((arr > 0.0).mean())
    if d_quality:
        qarr = np.asarray(d_quality)
        _, p_quality = paired_ttest(qarr) if qarr.size >= 2 else (0.0, 1.0)
        mean_q, n_q = float(qarr.mean()), int(qarr.size)
    else:
        mean_q, p_quality, n_q = None, None, 0
    return TemporalResult(
        n=len(d_focus),
        excluded_untimestamped=excluded,
        pct_increased_focus=pct,
        mean_delta_focus=float(arr.mean()),
        p_delta_focus=p_focus,
        n_quality=n_q,
        mean_delta_quality=mean_q,
        p_delta_quality=p_quality,
        delta_focus=d_focus,
        delta_quality=d_quality,
    )


# ---------------------------------------------------------------------------
# Report assembly and serialization

CORRELATION_PAIRS = (
    ("log_quantity", "focus"),
    ("log_quantity", "quality"),
    ("focus", "quality"),
    ("entropy", "focus"),
    ("log_quantity", "entropy"),
    ("entropy", "quality"),
)


@dataclass(frozen=True)
class CorrelationEntry:
    pair: str
    result: PearsonResult | None
    note: str = ""


@dataclass
class AnalysisReport:
    correlations: list[CorrelationEntry]
    regression: RegressionResult
    bins: dict[str, list[BinRow]]
    temporal: TemporalResult | None = None


def _profile_columns(profiles: Sequence[ContributorProfile]) -> dict[str, np.ndarray]:
    return {
        "log_quantity": np.array([math.log(p.quantity) for p in profiles]),
        "focus": np.array([p.focus for p in profiles]),
        "entropy": np.array([p.entropy for p in profiles]),
        "quality": np.array(
            [math.nan if p.quality is None else p.quality for p in profiles]
        ),
    }


def build_report(
    profiles: Sequence[ContributorProfile],
    n_bins: int = 20,
    min_count: int = 30,
    standardize: bool = False,
) -> AnalysisReport:
    """Correlations, the quality regression and plot-ready binned curves.

    Contributors with undefined quality are excluded from every pair and
    curve that involves quality, and from the regression.
    """
    if not profiles:
        raise ValueError("no profiles to analyze")
    cols = _profile_columns(profiles)
    correlations = []
    for xname, yname in CORRELATION_PAIRS:
        x, y = cols[xname], cols[yname]
        keep = ~(np.isnan(x) | np.isnan(y))
        pair = f"{xname}~{yname}"
        if int(keep.sum()) < 3:
            correlations.append(CorrelationEntry(pair, None, "undefined: fewer than 3 observations"))
            continue
        try:
            correlations.append(CorrelationEntry(pair, pearson(x[keep], y[keep])))
        except ValueError as err:
            correlations.append(CorrelationEntry(pair, None, f"undefined: {err}"))
    with_quality = [p for p in profiles if p.quality is not None]
    regression = ols_quality_regression(
        [p.focus for p in with_quality],
        [p.quantity for p in with_quality],
        [p.quality for p in with_quality],
        standardize=standardize,
    )
    bins = {}
    for xname, yname in (("focus", "quality"), ("quality", "focus"),
                         ("entropy", "quality"), ("quality", "entropy")):
        x, y = cols[xname], cols[yname]
        keep = ~(np.isnan(x) | np.isnan(y))
        if int(keep.sum()) > 0:
            bins[f"{xname}_{yname}"] = binned_curve(x[keep], y[keep], n_bins, min_count)
    return AnalysisReport(correlations, regression, bins)


def _write_rows(path, header: list[str], rows: Iterable[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_correlations(entries: Iterable[CorrelationEntry], path) -> None:
    rows = []
    for e in entries:
        if e.result is None:
            rows.append([e.pair, "", "", "0"])
        else:
            rows.append([e.pair, repr(e.result.rho), repr(e.result.p_value), str(e.result.n)])
    _write_rows(path, ["pair", "rho", "p", "n"], rows)


def write_regression(result: RegressionResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["term", "coef", "stderr"])
        for term, c, se in zip(result.terms, result.coef, result.stderr):
            writer.writerow([term, repr(float(c)), repr(float(se))])
        writer.writerow(["R2", repr(result.r_squared)])
        writer.writerow(["N", str(result.n)])


def write_bins(rows: Iterable[BinRow], path) -> None:
    _write_rows(
        path,
        ["bin_center", "mean", "stderr", "count"],
        [[repr(r.center), repr(r.mean), repr(r.stderr), str(r.count)] for r in rows],
    )


def _label(mean: float | None, p: float | None) -> str:
    if mean is None or p is None:
        return "undefined"
    return repr(mean) if p < SIGNIFICANCE_LEVEL else "not significant"


def write_temporal(result: TemporalResult, path) -> None:
    """One-row summary; means are masked when the paired test is not significant."""
    _write_rows(
        path,
        [
            "n", "excluded_untimestamped", "pct_increased_focus",
            "mean_delta_focus", "p_delta_focus", "label_delta_focus",
            "n_quality", "mean_delta_quality", "p_delta_quality", "label_delta_quality",
        ],
        [[
            str(result.n),
            str(result.excluded_untimestamped),
            repr(result.pct_increased_focus),
            repr(result.mean_delta_focus),
            repr(result.p_delta_focus),
            _label(result.mean_delta_focus, result.p_delta_focus),
            str(result.n_quality),
            "" if result.mean_delta_quality is None else repr(result.mean_delta_quality),
            "" if result.p_delta_quality is None else repr(result.p_delta_quality),
            _label(result.mean_delta_quality, result.p_delta_quality),
        ]],
    )
