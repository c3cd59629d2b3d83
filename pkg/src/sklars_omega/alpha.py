"""Krippendorff's alpha from the coincidence matrix, with a unit-resampling
bootstrap interval.

``alpha = 1 - D_o / D_e`` where, over pairable values (units with at least
two scores),

* ``D_o = sum_ck o_ck d2(c, k) / n`` with coincidences ``o_ck``,
* ``D_e = sum_ck n_c n_k d2(c, k) / (n (n - 1))``.
"""

from dataclasses import dataclass

import numpy as np

from ._parallel import spawn_generators
from .data import LEVELS, DegenerateDataError
from .uncertainty import quantile_mcse

__all__ = ["krippendorff_alpha", "alpha_bootstrap", "AlphaResult", "coincidence_matrix",
           "metric_matrix"]


def metric_matrix(values, level, counts=None):
    """Squared difference function ``d2`` between sorted distinct ``values``.

    The ordinal metric needs the marginal ``counts`` of each value.
    """
    v = np.asarray(values, float)
    if level == "nominal":
        return 1.0 - np.eye(v.size)
    if level == "interval":
        return (v[:, None] - v[None, :]) ** 2
    if level == "ratio":
        s = v[:, None] + v[None, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            d = np.where(s != 0, (v[:, None] - v[None, :]) / s, 0.0)
        return d ** 2
    if level == "ordinal":
        if counts is None:
            raise ValueError("the ordinal metric needs value counts")
        c = np.asarray(counts, float)
        cum = np.concatenate([[0.0], np.cumsum(c)])
        lo = np.minimum.outer(np.arange(v.size), np.arange(v.size))
        hi = np.maximum.outer(np.arange(v.size), np.arange(v.size))
        between = cum[hi + 1] - cum[lo]
        return np.where(lo == hi, 0.0, (between - (c[lo] + c[hi]) / 2.0) ** 2)
    raise ValueError(f"level must be one of {LEVELS}")


class _Pairs:
    """Ordered within-unit value pairs with coincidence weights ``1/(m_u - 1)``."""

    def __init__(self, data):
        values = np.asarray(data.values, float)
        mask = ~np.isnan(values)
        m = mask.sum(axis=1)
        pairable = m >= 2
        if pairable.sum() < 1:
            raise DegenerateDataError("no unit has two or more scores")
        self.distinct = np.unique(values[mask & pairable[:, None]])
        a, b, w, unit = [], [], [], []
        for u in np.flatnonzero(pairable):
            idx = np.searchsorted(self.distinct, values[u, mask[u]])
            i, j = np.meshgrid(idx, idx, indexing="ij")
            off = ~np.eye(idx.size, dtype=bool)
            a.append(i[off])
            b.append(j[off])
            w.append(np.full(off.sum(), 1.0 / (idx.size - 1)))
            unit.append(np.full(off.sum(), u))
        self.a, self.b = np.concatenate(a), np.concatenate(b)
        self.w, self.unit = np.concatenate(w), np.concatenate(unit)
        self.n_units = values.shape[0]
        self.n_pairable = int(pairable.sum())

    def coincidences(self, multiplicity=None):
        w = self.w if multiplicity is None else self.w * multiplicity[self.unit]
        V = self.distinct.size
        return np.bincount(self.a * V + self.b, weights=w, minlength=V * V).reshape(V, V)


def _alpha_from(o, distinct, level):
    n_c = o.sum(axis=1)
    n = n_c.sum()
    d2 = metric_matrix(distinct, level, n_c)
    d_o = np.sum(o * d2) / n
    d_e = n_c @ d2 @ n_c / (n * (n - 1))
    if not d_e > 0:
        raise DegenerateDataError("expected disagreement is zero; alpha is undefined")
    return 1.0 - d_o / d_e


def coincidence_matrix(data):
    """``(distinct values, coincidence matrix)`` of an :class:`AgreementData`."""
    p = _Pairs(data)
    return p.distinct, p.coincidences()


def krippendorff_alpha(data, level=None):
    """Krippendorff's alpha with the metric of ``level`` (default ``data.level``).

    Every column, including a gold standard, counts as a coder.
    """
    level = level or data.level
    data.check_informative()
    p = _Pairs(data)
    return float(_alpha_from(p.coincidences(), p.distinct, level))


@dataclass
class AlphaResult:
    """Point estimate, bootstrap sample and interval for alpha."""

    alpha: float
    level: str
    sample: np.ndarray
    lower: float
    upper: float
    confidence: float
    mcse: tuple
    n_b: int
    n_skipped: int


def alpha_bootstrap(data, level=None, n_b=1000, seed=None, confidence=0.95):
    """Resample units with replacement and recompute alpha.

    The interval uses median-unbiased sample quantiles, with the upper end
    truncated at 1. Resamples with zero expected disagreement are skipped
    and counted. ``mcse`` holds the endpoint standard errors.
    """
    level = level or data.level
    alpha = krippendorff_alpha(data, level)
    p = _Pairs(data)
    out = []
    for rng in spawn_generators(seed, n_b):
        units = rng.integers(0, p.n_units, p.n_units)
        mult = np.bincount(units, minlength=p.n_units).astype(float)
        o = p.coincidences(mult)
        if o.sum() < 2:
            out.append(np.nan)
            continue
        try:
            out.append(_alpha_from(o, p.distinct, level))
        except DegenerateDataError:
            out.append(np.nan)
    sample = np.array(out)
    skipped = int(np.isnan(sample).sum())
    sample = sample[~np.isnan(sample)]
    if sample.size < 2:
        raise DegenerateDataError("too few non-degenerate bootstrap resamples")
    a = (1 - confidence) / 2
    lo, hi = np.quantile(sample, [a, 1 - a], method="median_unbiased")
    hi = min(hi, 1.0)
    mcse = (quantile_mcse(sample, a, lo), quantile_mcse(sample, 1 - a, hi))
    return AlphaResult(alpha, level, sample, float(lo), float(hi), confidence, mcse,
                       int(sample.size), skipped)
