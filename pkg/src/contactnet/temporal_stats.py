"""Temporal homogeneity of clusters, Monte Carlo tests and growth regressions."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .clustering import Partition, _labels_for, intra_mask
from .graph_core import Snapshot
from .metrics.attributes import lower_median

__all__ = [
    "HomogeneityReport",
    "cluster_date_spread",
    "mc_cluster_randomization",
    "intra_inter_detection_distance",
    "mc_edge_subset",
    "RegressionFit",
    "ols",
    "dpl_fit",
    "local_slopes",
    "chow_test",
    "chow_scan",
    "replicate_rng",
    "segment_fit",
]


# -- cluster date spread ------------------------------------------------------


@dataclass
class HomogeneityReport:
    cluster_std: dict[int, float]  # clusters of size >= 2 only
    global_std: float
    median_std: float | None
    n_below_global: int
    n_clusters: int
    null_medians: list[float] | None = None
    null_percentile: float | None = None  # % of replicates with median <= observed

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cluster_std"] = {str(k): v for k, v in self.cluster_std.items()}
        if self.null_medians is not None:
            arr = np.asarray(self.null_medians)
            d["null_summary"] = {
                "replicates": len(arr),
                "min": float(arr.min()),
                "median": float(np.median(arr)),
                "max": float(arr.max()),
            }
            del d["null_medians"]
        return d


def _cluster_days(s: Snapshot, p) -> tuple[np.ndarray, np.ndarray]:
    """Detection days and labels of the vertices the partition covers."""
    if isinstance(p, Partition):
        idx = np.array([s.index_of(v) for v in p.ids], dtype=np.int64)
        return s.detect_day[idx].astype(np.float64), np.asarray(p.labels)
    labels = _labels_for(s, p)
    return s.detect_day.astype(np.float64), labels


def _cluster_stds(days: np.ndarray, labels: np.ndarray) -> dict[int, float]:
    """Population standard deviation of days per cluster with at least two members."""
    _, lab = np.unique(labels, return_inverse=True)
    k = lab.max() + 1
    cnt = np.bincount(lab, minlength=k).astype(np.float64)
    mean = np.bincount(lab, weights=days, minlength=k) / cnt
    var = np.bincount(lab, weights=(days - mean[lab]) ** 2, minlength=k) / cnt
    keys = np.unique(labels)
    return {int(keys[c]): float(math.sqrt(var[c])) for c in range(k) if cnt[c] >= 2}


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    """Generator for Monte Carlo replicate ``replicate``, independent of evaluation order."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replicate)]))


def _median_std(days: np.ndarray, labels: np.ndarray) -> float | None:
    sd = _cluster_stds(days, labels)
    return lower_median(np.array(sorted(sd.values()))) if sd else None


def cluster_date_spread(s: Snapshot, p) -> HomogeneityReport:
    """Spread of detection days within each cluster.

    Single-member clusters are left out; the median over clusters uses the
    lower-median convention.
    """
    days, labels = _cluster_days(s, p)
    sd = _cluster_stds(days, labels)
    global_std = float(days.std()) if len(days) else 0.0
    vals = np.array([sd[c] for c in sorted(sd)])
    return HomogeneityReport(
        cluster_std=dict(sorted(sd.items())),
        global_std=global_std,
        median_std=lower_median(vals) if len(vals) else None,
        n_below_global=int((vals < global_std).sum()),
        n_clusters=len(np.unique(labels)),
    )


def _size_multiset(labels: np.ndarray) -> np.ndarray:
    return np.sort(np.unique(labels, return_counts=True)[1])


def mc_cluster_randomization(s: Snapshot, p, replicates: int = 1000, seed: int = 0) -> HomogeneityReport:
    """Null distribution of the median cluster spread under size-preserving label shuffles."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    report = cluster_date_spread(s, p)
    days, labels = _cluster_days(s, p)
    sizes = _size_multiset(labels)
    nulls = np.empty(replicates)
    for r in range(replicates):
        shuffled = replicate_rng(seed, r).permutation(labels)
        assert np.array_equal(_size_multiset(shuffled), sizes)
        med = _median_std(days, shuffled)
        nulls[r] = med if med is not None else math.nan
    report.null_medians = [float(x) for x in nulls]
    obs = report.median_std
    report.null_percentile = (
        100.0 * float(np.sum(nulls <= obs)) / replicates if obs is not None else None
    )
    return report


# -- detection distance inside and across clusters ----------------------------


def _edge_distances(s: Snapshot) -> np.ndarray:
    if s.m == 0:
        return np.zeros(0, dtype=np.int64)
    return np.abs(s.detect_day[s.edges[:, 0]] - s.detect_day[s.edges[:, 1]])


def intra_inter_detection_distance(s: Snapshot, p) -> dict:
    """Lower medians of detection distance over intra- and inter-cluster edges."""
    d = _edge_distances(s)
    mask = intra_mask(s, p)
    return {
        "median_intra": lower_median(d[mask]),
        "median_inter": lower_median(d[~mask]),
        "n_intra": int(mask.sum()),
        "n_inter": int((~mask).sum()),
        "median_all": lower_median(d),
    }


def mc_edge_subset(s: Snapshot, p, replicates: int = 1000, seed: int = 0) -> dict:
    """Compare the intra-cluster median detection distance with random edge subsets of equal size.

    Returns both tail counts: replicates whose median is at or below the
    observed intra median (few means intra edges are unusually close in
    time), and at or above it.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    d = _edge_distances(s)
    mask = intra_mask(s, p)
    k = int(mask.sum())
    observed = lower_median(d[mask])
    meds = np.empty(replicates)
    for r in range(replicates):
        pick = replicate_rng(seed, r).choice(len(d), size=k, replace=False)
        meds[r] = lower_median(d[pick]) if k else math.nan
    if observed is None:
        n_le = n_ge = 0
    else:
        n_le = int(np.sum(meds <= observed))
        n_ge = int(np.sum(meds >= observed))
    return {
        "observed_intra_median": observed,
        "subset_size": k,
        "replicates": replicates,
        "n_at_or_below": n_le,
        "n_at_or_above": n_ge,
        "fraction_at_or_below": n_le / replicates,
        "null_medians": [float(x) for x in meds],
    }


# -- regressions --------------------------------------------------------------


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    r2: float
    slope_ci: tuple[float, float]
    residual_variance: float
    n: int
    ssr: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["slope_ci"] = list(self.slope_ci)
        return d


def ols(x, y, level: float = 0.95) -> RegressionFit:
    """Simple linear regression of ``y`` on ``x`` with a t-based slope interval."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise ValueError("zero variance in the regressor")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    ssr = float(np.sum(resid**2))
    sst = float(np.sum((y - ym) ** 2))
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    r2 = min(1.0, max(0.0, r2))
    s2 = ssr / (n - 2)
    se = math.sqrt(s2 / sxx)
    half = float(stats.t.ppf(0.5 + level / 2.0, n - 2)) * se
    return RegressionFit(slope, intercept, r2, (slope - half, slope + half), s2, n, ssr)


def dpl_fit(series: Sequence[tuple[float, float]]) -> RegressionFit:
    """Densification exponent: OLS of ``log|E|`` on ``log|V|``.

    Points with ``|V| < 1`` or ``|E| < 1`` are dropped.
    """
    pts = np.array([(v, e) for v, e in series if v >= 1 and e >= 1], dtype=np.float64).reshape(-1, 2)
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points with |V|, |E| >= 1, got {len(pts)}")
    return ols(np.log(pts[:, 0]), np.log(pts[:, 1]))


def local_slopes(series: Sequence[tuple[float, float]], window: int = 8) -> list[dict]:
    """Densification exponent over a sliding window of ``window`` points."""
    pts = [(v, e) for v, e in series if v >= 1 and e >= 1]
    out = []
    for i in range(len(pts) - window + 1):
        chunk = pts[i : i + window]
        try:
            fit = dpl_fit(chunk)
        except ValueError:
            continue
        out.append({"start": i, "end": i + window - 1, "slope": fit.slope, "r2": fit.r2})
    return out


def _ssr(x: np.ndarray, y: np.ndarray) -> float:
    xm = x.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        return float(np.sum((y - y.mean()) ** 2))
    b = float(np.sum((x - xm) * (y - y.mean())) / sxx)
    a = y.mean() - b * xm
    return float(np.sum((y - a - b * x) ** 2))


def _series(series) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(series, dtype=np.float64).reshape(-1, 2)
    order = np.argsort(arr[:, 0], kind="stable")
    return arr[order, 0], arr[order, 1]


def chow_test(series: Sequence[tuple[float, float]], break_t: float) -> tuple[float, float]:
    """Chow F statistic and p-value for a break between ``t < break_t`` and ``t >= break_t``.

    Each side is fitted by its own intercept and slope (``k = 2``).  When all
    sums of squares vanish the statistic is defined as 0 (p-value 1).
    """
    t, y = _series(series)
    return _chow(t, y, t < break_t)


def _chow(t: np.ndarray, y: np.ndarray, left: np.ndarray) -> tuple[float, float]:
    n1, n2 = int(left.sum()), int((~left).sum())
    if n1 < 3 or n2 < 3:
        raise ValueError(f"need at least 3 points each side of the break, got {n1} and {n2}")
    k = 2
    n = n1 + n2
    pooled = _ssr(t, y)
    s1 = _ssr(t[left], y[left])
    s2 = _ssr(t[~left], y[~left])
    # sums of squares below rounding noise of the data count as zero
    tiny = 1e-20 * max(float(np.sum((y - y.mean()) ** 2)), float(np.sum(y**2)), 1.0)
    within = s1 + s2 if s1 + s2 > tiny else 0.0
    between = pooled - s1 - s2 if pooled - s1 - s2 > tiny else 0.0
    num = between / k
    den = within / (n - 2 * k)
    if den == 0.0:
        if num == 0.0:
            return 0.0, 1.0
        return math.inf, 0.0
    f = num / den
    return f, float(stats.f.sf(f, k, n - 2 * k))


def chow_scan(series: Sequence[tuple[float, float]], trim: float = 0.15) -> dict:
    """Break maximizing the Chow F over the interior after trimming each end.

    Candidate breaks sit at the sorted sample positions; the break at index
    ``i`` puts the first ``i`` points on the left.  Ties keep the earliest.
    """
    t, y = _series(series)
    n = len(t)
    cut = int(math.ceil(trim * n))
    lo, hi = max(3, cut), min(n - 3, n - cut)
    if lo > hi:
        raise ValueError("series too short for a trimmed break scan")
    idx = np.arange(n)
    scores = []
    best = None
    for i in range(lo, hi + 1):
        f, p = _chow(t, y, idx < i)
        scores.append({"index": i, "t": float(t[i]), "F": f, "p": p})
        if best is None or f > best["F"]:
            best = scores[-1]
    return {"break_index": best["index"], "break_t": best["t"], "F": best["F"], "p": best["p"], "scan": scores}


def segment_fit(series: Sequence[tuple[float, float]], break_t: float) -> tuple[RegressionFit, RegressionFit]:
    """Separate straight-line fits before and after ``break_t``."""
    t, y = _series(series)
    left = t < break_t
    n1, n2 = int(left.sum()), int((~left).sum())
    if n1 < 2 or n2 < 2:
        raise ValueError(f"need at least 2 points each side of the break, got {n1} and {n2}")
    return _fit2(t[left], y[left]), _fit2(t[~left], y[~left])


def _fit2(x, y) -> RegressionFit:
    if len(x) >= 3:
        return ols(x, y)
    if x[1] == x[0]:
        raise ValueError("zero variance in the regressor")
    slope = float((y[1] - y[0]) / (x[1] - x[0]))
    intercept = float(y[0] - slope * x[0])
    return RegressionFit(slope, intercept, 1.0, (slope, slope), 0.0, 2, 0.0)
