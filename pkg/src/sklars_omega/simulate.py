"""Sampling from the Gaussian copula model.

Scores are drawn as ``Z ~ N(0, Omega)`` per unit (block Cholesky), mapped
through the standard normal cdf and then through the marginal quantile
function.
"""

import numpy as np
from scipy.linalg import cholesky, LinAlgError

from .data import AgreementData, ColumnRole
from .kernels import InfeasibleError

__all__ = ["simulate_data", "simulate_like", "draw_scores", "level_for"]


def level_for(margin):
    if getattr(margin, "discrete", False):
        return "nominal"
    return "ratio" if getattr(margin, "tag", None) == "beta" else "interval"


def draw_scores(structure, margin, roles, mask, rng):
    """Fill a ``mask``-shaped array with draws; ``nan`` where ``mask`` is False.

    Units sharing a missingness pattern share one Cholesky factor.
    """
    mask = np.asarray(mask, bool)
    out = np.full(mask.shape, np.nan)
    vals = structure.slot_values()
    patterns, inverse = np.unique(mask, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    for g, pat in enumerate(patterns):
        cols = np.flatnonzero(pat)
        if cols.size == 0:
            continue
        units = np.flatnonzero(inverse == g)
        block = vals[structure.slot_index([roles[c] for c in cols])]
        try:
            L = cholesky(block, lower=True)
        except LinAlgError:
            raise InfeasibleError("correlation block is not positive definite") from None
        z = rng.standard_normal((units.size, cols.size)) @ L.T
        out[np.ix_(units, cols)] = margin.from_normal(z)
    return out


def simulate_data(structure, margin, n_u=None, n_c=None, mask=None, roles=None,
                  level=None, n_categories=None, seed=None):
    """Simulate an agreement dataset.

    Parameters
    ----------
    structure : CorrelationStructure
        Evaluated at its current parameter values.
    margin : MarginalFamily or EmpiricalCdf
    n_u, n_c : int, optional
        Complete design of ``n_u`` units by ``n_c`` coders; ignored when a
        ``mask`` is given.
    mask : array-like of bool, optional
        Observed cells; missing cells stay missing.
    roles : sequence of ColumnRole, optional
        Defaults to ``c.1.1, c.2.1, ...``.
    level : str, optional
        ``nominal`` for discrete margins, ``ratio`` for beta margins and
        ``interval`` otherwise.
    n_categories : int, optional
        Category count for discrete margins; defaults to the margin's ``K``.
    seed : int, SeedSequence or Generator
    """
    rng = np.random.default_rng(seed)
    if mask is None:
        if n_u is None or n_c is None:
            raise ValueError("give either a mask or both n_u and n_c")
        mask = np.ones((n_u, n_c), bool)
    mask = np.asarray(mask, bool)
    if roles is None:
        roles = [ColumnRole(coder=j + 1) for j in range(mask.shape[1])]
    level = level or level_for(margin)
    if n_categories is None and getattr(margin, "discrete", False):
        n_categories = margin.K
    values = draw_scores(structure, margin, roles, mask, rng)
    return AgreementData(values, roles, level, n_categories)


def simulate_like(fit, rng, theta=None):
    """Parametric-bootstrap dataset from a fit: same units, roles and missing
    cells as the fitted data, scores drawn at ``theta`` (default the estimate).

    SMP fits draw from the first-stage empirical quantile function.
    """
    theta = fit.theta if theta is None else theta
    structure, margin = fit.context.unpack(theta)
    if margin is None:
        margin = fit.context.ecdf
    data = fit.fit_data
    values = draw_scores(structure, margin, data.roles, data.mask, rng)
    return data.with_values(values)
