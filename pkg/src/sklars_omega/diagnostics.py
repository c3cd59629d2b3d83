"""Case-deletion influence: DFBETAs by unit and by coder, and relative
changes of the agreement estimate."""

from dataclasses import dataclass, field

import numpy as np

from .alpha import krippendorff_alpha

__all__ = ["InfluenceReport", "influence", "alpha_influence", "AlphaInfluence"]


@dataclass
class InfluenceReport:
    """Leave-out refits of one base fit.

    ``dfbeta_units[i]`` is ``estimate - estimate_without(unit i)`` on the
    reported scale (one column per name); likewise ``dfbeta_coders``.
    ``delta_*`` hold ``|omega_drop - omega| / omega`` for every agreement
    parameter (columns ``omega_names``).
    """

    names: tuple
    omega_names: tuple
    units: tuple
    coders: tuple
    dfbeta_units: np.ndarray
    dfbeta_coders: np.ndarray
    delta_units: np.ndarray
    delta_coders: np.ndarray
    refits: dict = field(default_factory=dict, repr=False)

    def leave_out_estimates(self, base):
        """Reported estimates of the leave-out fits, ``base - dfbeta``."""
        est = base.reported()
        return est - self.dfbeta_units, est - self.dfbeta_coders


def _relative(base, other):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(base != 0, np.abs(other - base) / np.abs(base),
                        np.where(other == base, 0.0, np.inf))


def influence(fit, drop_units=(), drop_coders=()):
    """Refit without each listed unit and each listed coder.

    Parameters
    ----------
    fit : Fit
    drop_units : iterable of int
        0-based row indices into ``fit.data`` (the data passed to ``fit``).
    drop_coders : iterable of int or (method, coder)
        Coder numbers (method 1) or keys; every replicate of a coder is
        removed together.

    Leave-out fits reuse the base fit's settings and starting recipe.
    """
    units = tuple(int(u) for u in drop_units)
    coders = tuple(drop_coders)
    base = fit.reported()
    k = fit.n_corr
    omega_rows = list(range(k))
    refits = {}

    def run(data):
        return fit.refit(data)

    rows_u, rows_c = [], []
    for u in units:
        if not 0 <= u < fit.data.n_units:
            raise IndexError(f"unit {u} out of range")
        r = run(fit.data.drop_units([u]))
        refits[("unit", u)] = r
        rows_u.append(base - r.reported())
    for c in coders:
        r = run(fit.data.drop_coders([c]))
        refits[("coder", c)] = r
        rows_c.append(base - r.reported())

    q = base.size
    du = np.array(rows_u).reshape(len(units), q)
    dc = np.array(rows_c).reshape(len(coders), q)
    w = base[omega_rows]
    return InfluenceReport(
        fit.reported_names, tuple(fit.reported_names[:k]), units, coders, du, dc,
        _relative(w, (base - du)[:, omega_rows]) if units else np.empty((0, k)),
        _relative(w, (base - dc)[:, omega_rows]) if coders else np.empty((0, k)),
        refits)


@dataclass
class AlphaInfluence:
    alpha: float
    units: tuple
    alpha_without: np.ndarray
    delta: np.ndarray


def alpha_influence(data, level=None, drop_units=()):
    """``delta = |alpha_without_unit - alpha| / alpha`` for each listed unit."""
    a = krippendorff_alpha(data, level)
    units = tuple(int(u) for u in drop_units)
    without = np.array([krippendorff_alpha(data.drop_units([u]), level) for u in units])
    return AlphaInfluence(a, units, without, _relative(np.array(a), without))
