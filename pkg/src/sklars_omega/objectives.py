"""Fit criteria: exact ML, distributional-transform (DT), pairwise composite
marginal likelihood (CML) and the second stage of the semiparametric (SMP)
method.

All four are log-likelihoods (larger is better) and return ``-inf`` for
infeasible parameters instead of raising.
"""

import numpy as np
from scipy.special import ndtri

from .data import DataError
from .kernels import InfeasibleError, batched_logdet_quadform, bvn_cdf
from .marginals import Categorical, EmpiricalCdf
from .structures import pack

__all__ = ["METHODS", "ObjectiveContext", "loglik_ml", "loglik_dt", "loglik_cml",
           "loglik_smp"]

METHODS = ("ML", "DT", "CML", "SMP")


class _Group:
    """Units sharing one missingness pattern."""

    __slots__ = ("cols", "units", "Y", "slot", "z")

    def __init__(self, cols, units, Y, slot):
        self.cols, self.units, self.Y, self.slot = cols, units, Y, slot
        self.z = None


class ObjectiveContext:
    """Data, templates and precomputed layout for one fit criterion.

    Parameters
    ----------
    data : AgreementData
    structure : CorrelationStructure
        Template; its parameter values are ignored by the objective.
    margin : MarginalFamily, optional
        Template for ML/DT/CML. Not used by SMP.
    method : {"ML", "DT", "CML", "SMP"}
    ecdf : EmpiricalCdf, optional
        First-stage margin estimate for SMP; defaults to a winsorized ECDF
        of all observed scores.
    """

    def __init__(self, data, structure, margin=None, method="ML", ecdf=None):
        method = method.upper()
        if method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        structure.check_roles(data.roles)
        if method == "ML":
            if margin is None or margin.discrete:
                raise DataError("ML needs a continuous marginal family")
            if data.is_categorical:
                raise DataError("ML needs interval or ratio data")
        elif method in ("DT", "CML"):
            if not isinstance(margin, Categorical):
                raise DataError(f"{method} needs a categorical margin")
            if not data.is_categorical:
                raise DataError(f"{method} needs nominal or ordinal data")
            if data.n_categories > margin.K:
                raise DataError("data contain categories beyond the margin's K")
        else:
            if data.is_categorical:
                raise DataError("SMP needs interval or ratio data")
            margin = None
            if ecdf is None:
                ecdf = EmpiricalCdf(data.observed(), "winsorized")

        self.data = data
        self.method = method
        self.layout = pack(structure, margin)
        self.ecdf = ecdf

        patterns, inverse = np.unique(data.mask, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).ravel()
        self.groups = []
        for g, pat in enumerate(patterns):
            cols = np.flatnonzero(pat)
            units = np.flatnonzero(inverse == g)
            Y = data.values[np.ix_(units, cols)]
            slot = structure.slot_index([data.roles[c] for c in cols])
            grp = _Group(cols, units, Y, slot)
            if method == "SMP":
                grp.z = ecdf.normal_scores(Y)
                if not np.all(np.isfinite(grp.z)):
                    raise DataError("first-stage scores are infinite; use a winsorized "
                                    "or smoothed ECDF")
            self.groups.append(grp)
        if method == "CML":
            self._prepare_pairs()

    def _prepare_pairs(self):
        rows = []
        for grp in self.groups:
            m = len(grp.cols)
            for a in range(m):
                for b in range(a + 1, m):
                    s = grp.slot[a, b]
                    if s == 0:
                        continue
                    ya = grp.Y[:, a].astype(int)
                    yb = grp.Y[:, b].astype(int)
                    lo, hi = np.minimum(ya, yb), np.maximum(ya, yb)
                    rows.append(np.column_stack([np.full(len(ya), s), lo, hi]))
        if rows:
            table, counts = np.unique(np.vstack(rows), axis=0, return_counts=True)
        else:
            table, counts = np.empty((0, 3), int), np.empty(0, int)
        self.pair_table = table
        self.pair_counts = counts

    @property
    def n_params(self):
        return self.layout.theta.size

    @property
    def names(self):
        return self.layout.names

    def start(self):
        return self.layout.theta.copy()

    def loglik(self, theta):
        return _DISPATCH[self.method](self, theta)

    __call__ = loglik

    def negloglik(self, theta):
        return -self.loglik(theta)

    def unpack(self, theta):
        return self.layout.unpack(theta)


def _gaussian_part(ctx, slot_values, zs):
    """``sum_units -0.5 log|Omega_i| - 0.5 z_i' Omega_i^{-1} z_i``."""
    total = 0.0
    for grp, z in zip(ctx.groups, zs):
        block = slot_values[grp.slot]
        logdet, q = batched_logdet_quadform(block, z)
        total += -0.5 * len(grp.units) * logdet - 0.5 * q.sum()
    return total


def loglik_ml(ctx, theta):
    """Exact Gaussian-copula log-likelihood for continuous margins."""
    if not ctx.layout.feasible(theta):
        return -np.inf
    structure, margin = ctx.unpack(theta)
    if not margin.valid():
        return -np.inf
    vals = structure.slot_values()
    total = 0.0
    zs = []
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for grp in ctx.groups:
            z = margin.normal_scores(grp.Y)
            logf = margin.logpdf(grp.Y)
            if not (np.all(np.isfinite(z)) and np.all(np.isfinite(logf))):
                return -np.inf
            total += logf.sum() + 0.5 * np.sum(z * z)
            zs.append(z)
    try:
        total += _gaussian_part(ctx, vals, zs)
    except InfeasibleError:
        return -np.inf
    return float(total)


def loglik_dt(ctx, theta):
    """ML formula with ``F(y)`` replaced by ``(F(y-1) + F(y)) / 2``."""
    if not ctx.layout.feasible(theta):
        return -np.inf
    structure, margin = ctx.unpack(theta)
    vals = structure.slot_values()
    total = 0.0
    zs = []
    for grp in ctx.groups:
        z = ndtri(margin.dt_cdf(grp.Y))
        total += np.log(margin.pmf(grp.Y)).sum() + 0.5 * np.sum(z * z)
        zs.append(z)
    try:
        total += _gaussian_part(ctx, vals, zs)
    except InfeasibleError:
        return -np.inf
    return float(total)


def pair_probabilities(margin, rho, ya, yb):
    """``P(Y_a = ya, Y_b = yb)`` under a bivariate Gaussian copula with
    correlation ``rho`` and a shared categorical margin."""
    with np.errstate(divide="ignore"):
        zc = ndtri(margin._cum)
    zc[0], zc[-1] = -np.inf, np.inf
    ya, yb = np.asarray(ya, int), np.asarray(yb, int)
    a_hi, a_lo = zc[ya], zc[ya - 1]
    b_hi, b_lo = zc[yb], zc[yb - 1]
    a = np.concatenate([a_hi, a_lo, a_hi, a_lo])
    b = np.concatenate([b_hi, b_hi, b_lo, b_lo])
    r = np.tile(np.broadcast_to(rho, ya.shape), 4)
    v = bvn_cdf(a, b, r).reshape(4, -1)
    return v[0] - v[1] - v[2] + v[3]


def loglik_cml(ctx, theta):
    """Sum of log bivariate rectangle probabilities over within-unit pairs."""
    if not ctx.layout.feasible(theta):
        return -np.inf
    structure, margin = ctx.unpack(theta)
    vals = structure.slot_values()
    for grp in ctx.groups:
        if len(grp.cols) > 1:
            try:
                batched_logdet_quadform(vals[grp.slot], np.zeros((1, len(grp.cols))))
            except InfeasibleError:
                return -np.inf
    t = ctx.pair_table
    if t.shape[0] == 0:
        return 0.0
    p = pair_probabilities(margin, vals[t[:, 0]], t[:, 1], t[:, 2])
    if np.any(p <= 0):
        return -np.inf
    return float(ctx.pair_counts @ np.log(p))


def loglik_smp(ctx, theta):
    """Copula log-likelihood of first-stage normal scores (no margin terms)."""
    if not ctx.layout.feasible(theta):
        return -np.inf
    structure, _ = ctx.unpack(theta)
    try:
        return float(_gaussian_part(ctx, structure.slot_values(), [g.z for g in ctx.groups]))
    except InfeasibleError:
        return -np.inf


_DISPATCH = {"ML": loglik_ml, "DT": loglik_dt, "CML": loglik_cml, "SMP": loglik_smp}
