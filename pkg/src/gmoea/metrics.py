"""
Quality indicators and the significance test behind the comparison tables.

IGD is the mean distance from each reference point to its nearest front
member. HV is exact for two and three objectives (a sweep in 2-D, slicing
along the last objective in 3-D). The rank-sum test is the two-sided
normal approximation with tie and continuity correction.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import mannwhitneyu

from gmoea.core import nondominated_mask
from gmoea.errors import DimensionError, PreconditionError, UnsupportedError

logger = logging.getLogger(__name__)

BETTER = "+"
WORSE = "−"
SIMILAR = "≈"
HV_REFERENCE = 1.1


@dataclass(frozen=True)
class IndicatorResult:
    value: float
    reference: str

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class RankSumResult:
    symbol: str
    p_value: float
    statistic: float
    median_a: float
    median_b: float

    @property
    def significant(self):
        return self.symbol != SIMILAR


def _point_set(values, name):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :] if arr.size else arr.reshape(0, 0)
    if arr.shape[0] == 0:
        raise PreconditionError(f"{name} is empty")
    return arr


def igd(ref_set, front):
    """Mean over ref_set of the Euclidean distance to the closest front member."""
    R = _point_set(ref_set, "reference set")
    F = _point_set(front, "front")
    if R.shape[1] != F.shape[1]:
        raise DimensionError(f"reference set has M={R.shape[1]}, front has M={F.shape[1]}")
    return float(cdist(R, F).min(axis=1).mean())


def _hv_2d(P, ref):
    # P is non-dominated and inside the reference box
    P = P[np.argsort(P[:, 0], kind="stable")]
    volume = 0.0
    prev_f2 = ref[1]
    for f1, f2 in P:
        if f2 < prev_f2:
            volume += (ref[0] - f1) * (prev_f2 - f2)
            prev_f2 = f2
    return volume


def _hv_3d(P, ref):
    P = P[np.argsort(P[:, 2], kind="stable")]
    levels = np.append(P[:, 2], ref[2])
    volume = 0.0
    for i in range(P.shape[0]):
        depth = levels[i + 1] - levels[i]
        if depth <= 0.0:
            continue
        below = P[: i + 1, :2]
        volume += depth * _hv_2d(below[nondominated_mask(below)], ref[:2])
    return volume


def hv(front, ref_point):
    """Exact hypervolume dominated by front and bounded by ref_point."""
    ref = np.asarray(ref_point, dtype=np.float64)
    F = np.asarray(front, dtype=np.float64)
    if F.size == 0:
        return 0.0
    F = np.atleast_2d(F)
    if F.shape[1] != ref.size:
        raise DimensionError(f"front has M={F.shape[1]}, reference point has {ref.size}")
    M = ref.size
    if M > 3:
        raise UnsupportedError(f"exact hypervolume implemented for M <= 3, got M={M}")
    if M < 2:
        raise UnsupportedError("hypervolume needs at least two objectives")
    inside = F[np.all(F < ref, axis=1)]
    if inside.shape[0] == 0:
        return 0.0
    P = inside[nondominated_mask(inside)]
    return float(_hv_2d(P, ref) if M == 2 else _hv_3d(P, ref))


def normalize(F, pf):
    """Map objective vectors with the PF sample's ideal and nadir points."""
    ideal = pf.min(axis=0)
    span = pf.max(axis=0) - ideal
    span = np.where(span > 0.0, span, 1.0)
    return (np.asarray(F, dtype=np.float64) - ideal) / span


def normalized_hv(front, pf):
    """HV in PF-normalised objective space against (1.1, ..., 1.1)."""
    F = np.atleast_2d(np.asarray(front, dtype=np.float64))
    if F.size == 0:
        return 0.0
    return hv(normalize(F, pf), np.full(pf.shape[1], HV_REFERENCE))


def measure(front, pf):
    """IGD and normalised HV of a front against a PF sample."""
    return (
        IndicatorResult(igd(pf, front), f"pf[{pf.shape[0]}]"),
        IndicatorResult(normalized_hv(front, pf), f"normalized ref={HV_REFERENCE}"),
    )


def wilcoxon_rank_sum(a, b, alpha=0.05, lower_is_better=True):
    """Two-sided rank-sum test of a against b.

    The symbol is from a's point of view: '+' when a is significantly better,
    '−' when significantly worse, '≈' otherwise. Better means lower unless
    ``lower_is_better`` is False.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size < 2 or b.size < 2:
        raise PreconditionError(f"rank-sum test needs two samples of size >= 2, got {a.size} and {b.size}")
    med_a, med_b = float(np.median(a)), float(np.median(b))
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return RankSumResult(SIMILAR, 1.0, a.size * b.size / 2.0, med_a, med_b)

    res = mannwhitneyu(a, b, use_continuity=True, alternative="two-sided", method="asymptotic")
    p_value = float(res.pvalue)
    statistic = float(res.statistic)
    if p_value >= alpha:
        return RankSumResult(SIMILAR, p_value, statistic, med_a, med_b)

    if med_a != med_b:
        a_lower = med_a < med_b
    else:
        # U counts pairs with a > b, so a small U means a ranks low
        a_lower = statistic < a.size * b.size / 2.0
    a_better = a_lower if lower_is_better else not a_lower
    return RankSumResult(BETTER if a_better else WORSE, p_value, statistic, med_a, med_b)
