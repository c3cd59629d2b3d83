"""Point estimation: bound-constrained optimization of a fit criterion,
default method choice, AIC model comparison and agreement labels."""

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .data import CATEGORICAL_LEVELS, DataError, DegenerateDataError
from .marginals import FAMILIES, Categorical, EmpiricalCdf, make_margin
from .objectives import ObjectiveContext
from .structures import make_structure

__all__ = ["FitOptions", "Fit", "FitError", "fit", "default_method", "default_family",
           "aic", "model_probabilities", "ModelComparison", "interpret",
           "finite_difference_gradient"]

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps
# value for points with no feasible neighbour toward the start
_PENALTY = 1e10
# restarts after a converged run that still admits a descent step
_MAX_ESCAPES = 10
# quadratic penalty weight outside the feasible set, relative to |objective|
_PENALTY_SLOPE = 1e4


class FitError(RuntimeError):
    """Optimization could not start or failed outright."""


@dataclass(frozen=True)
class FitOptions:
    """Optimizer and preprocessing settings.

    ``drop_singletons`` removes units with fewer than two observed scores
    before fitting; such units carry no information about agreement.
    """

    max_iter: int = 500
    gtol: float = 1e-6
    ftol: float = 1e-10
    drop_singletons: bool = True
    multistart: bool = False


def default_method(level, n_categories=None):
    """ML for interval/ratio, CML for up to four categories, DT for five or more."""
    if level not in CATEGORICAL_LEVELS:
        return "ML"
    if n_categories is None or n_categories <= 4:
        return "CML"
    return "DT"


def default_family(level):
    return {"nominal": "categorical", "ordinal": "categorical",
            "interval": "gaussian", "ratio": "beta"}[level]


def finite_difference_gradient(f, x, f0=None, lower=None, upper=None, feasible=None):
    """Central-difference gradient with relative step ``eps^(1/3) max(|x|, 1)``.

    Falls back to a one-sided difference where a central stencil would leave
    the bounds or hit an infeasible point.
    """
    x = np.asarray(x, float)
    n = x.size
    lower = np.full(n, -np.inf) if lower is None else lower
    upper = np.full(n, np.inf) if upper is None else upper
    h = np.cbrt(_EPS) * np.maximum(np.abs(x), 1.0)
    g = np.empty(n)
    for i in range(n):
        xp, xm = x.copy(), x.copy()
        xp[i] = x[i] + h[i]
        xm[i] = x[i] - h[i]
        up_ok = xp[i] <= upper[i] and (feasible is None or feasible(xp))
        dn_ok = xm[i] >= lower[i] and (feasible is None or feasible(xm))
        fp = f(xp) if up_ok else np.nan
        fm = f(xm) if dn_ok else np.nan
        up_ok = up_ok and np.isfinite(fp)
        dn_ok = dn_ok and np.isfinite(fm)
        if up_ok and dn_ok:
            g[i] = (fp - fm) / (2 * h[i])
        else:
            if f0 is None:
                f0 = f(x)
            if up_ok:
                g[i] = (fp - f0) / h[i]
            elif dn_ok:
                g[i] = (f0 - fm) / h[i]
            else:
                g[i] = 0.0
    return g


def _pull_back(f, theta, anchor, steps=40):
    """Largest ``t`` with ``f(anchor + t (theta - anchor))`` finite, by bisection."""
    lo, hi = 0.0, 1.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if np.isfinite(f(anchor + mid * (theta - anchor))):
            lo = mid
        else:
            hi = mid
    return anchor + lo * (theta - anchor)


class _Coordinates:
    """Optimizer coordinates.

    Correlation and continuous margin parameters are used as is. Free
    category probabilities are replaced by stick-breaking fractions
    ``v in [0, 1]^(K-1)`` with ``p_k = lo + (1 - K lo) v_k prod_{j<k}(1 - v_j)``,
    which turns the probability simplex (every ``p_k >= lo``) into a box.
    """

    def __init__(self, layout):
        self.k = layout.n_corr
        self.categorical = isinstance(layout.margin, Categorical)
        self.lower, self.upper = layout.lower.copy(), layout.upper.copy()
        if self.categorical:
            self.lo = layout.lower[self.k]
            self.K = layout.theta.size - self.k + 1
            self.lower[self.k:], self.upper[self.k:] = 0.0, 1.0

    def to_theta(self, x):
        if not self.categorical:
            return x
        v = x[self.k:]
        left = np.concatenate([[1.0], np.cumprod(1.0 - v)[:-1]])
        p = self.lo + (1.0 - self.K * self.lo) * v * left
        return np.concatenate([x[:self.k], p])

    def from_theta(self, theta):
        if not self.categorical:
            return theta.copy()
        s = (theta[self.k:] - self.lo) / (1.0 - self.K * self.lo)
        left = 1.0 - np.concatenate([[0.0], np.cumsum(s)[:-1]])
        v = np.divide(s, left, out=np.ones_like(s), where=left > 0)
        return np.concatenate([theta[:self.k], np.clip(v, 0.0, 1.0)])

    def bounds(self):
        return [(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi)
                for lo, hi in zip(self.lower, self.upper)]


def _minimize(ctx, theta0, options):
    coords = _Coordinates(ctx.layout)
    x0 = np.clip(coords.from_theta(np.asarray(theta0, float)), coords.lower, coords.upper)

    def raw(x):
        return -ctx.loglik(coords.to_theta(x))

    def fun(x):
        v = raw(x)
        if np.isfinite(v):
            return v
        # infeasible correlation blocks: continue the objective from the last
        # feasible point toward the start, plus a quadratic penalty
        inside = _pull_back(raw, x, x0)
        v = raw(inside)
        if not np.isfinite(v):
            return _PENALTY
        return v + _PENALTY_SLOPE * (1.0 + abs(v)) * np.sum((x - inside) ** 2)

    def fun_and_grad(x):
        f0 = fun(x)
        return f0, finite_difference_gradient(fun, x, f0, coords.lower, coords.upper)

    def run(start, maxiter):
        return minimize(fun_and_grad, start, jac=True, method="L-BFGS-B",
                        bounds=coords.bounds(),
                        options={"maxiter": maxiter, "gtol": options.gtol,
                                 "ftol": options.ftol})

    res = run(x0, options.max_iter)
    for _ in range(_MAX_ESCAPES):
        if not res.success or res.nit >= options.max_iter:
            break
        # a first step into a near-singular region can end the line search
        # with a negligible move that passes the ftol test
        f0, g = fun_and_grad(res.x)
        step = _armijo_escape(fun, g, res.x, f0, coords.lower, coords.upper)
        if step is None:
            break
        nit = res.nit
        res = run(step, max(options.max_iter - nit, 1))
        res.nit += nit
    if not res.success and "ABNORMAL" in str(res.message):
        # a stalled line search often recovers once the curvature memory is reset
        nit = res.nit
        res = run(res.x, max(options.max_iter - nit, 1))
        res.nit += nit
        if not res.success and "ABNORMAL" in str(res.message):
            # kinks (Laplace location) defeat gradient steps; polish without them
            pol = minimize(fun, res.x, method="Powell", bounds=coords.bounds(),
                           options={"xtol": 1e-10, "ftol": 1e-14, "maxiter": options.max_iter})
            if pol.fun <= res.fun:
                res.x, res.fun = pol.x, pol.fun
            if _no_descent(fun, res.x, res.fun, coords.lower, coords.upper):
                res.success = True
                res.message = "CONVERGENCE: NO DESCENT ALONG COORDINATE PROBES"
    res.x = np.clip(coords.to_theta(res.x), ctx.layout.lower, ctx.layout.upper)
    return res


def _armijo_escape(fun, grad, x, f0, lower, upper, min_gain=1e-8, halvings=24):
    """Backtracking step along the projected negative gradient, or ``None``
    when no step lowers ``fun`` by more than ``min_gain (1 + |f0|)``."""
    d = -grad
    d[(x <= lower) & (d < 0)] = 0.0
    d[(x >= upper) & (d > 0)] = 0.0
    norm = np.linalg.norm(d)
    if not norm > 0:
        return None
    gain = min_gain * (1.0 + abs(f0))
    t = 1.0 / norm
    for _ in range(halvings):
        trial = np.clip(x + t * d, lower, upper)
        ft = fun(trial)
        if ft < f0 - max(gain, 1e-4 * t * norm * norm):
            return trial
        t *= 0.5
    return None


def _no_descent(f, x, f0, lower, upper, rel_steps=(1e-3, 1e-5, 1e-7)):
    """True when no single-coordinate move of the given relative sizes lowers
    ``f`` by more than ``sqrt(eps) (1 + |f0|)``.

    Used to accept a stalled line search at a kink of a non-smooth objective
    (the Laplace likelihood in its location, for example).
    """
    tol = np.sqrt(_EPS) * (1.0 + abs(f0))
    scale = np.maximum(np.abs(x), 1.0)
    for r in rel_steps:
        for i in range(x.size):
            for sign in (1.0, -1.0):
                t = x.copy()
                t[i] = np.clip(x[i] + sign * r * scale[i], lower[i], upper[i])
                if t[i] != x[i] and f(t) < f0 - tol:
                    return False
    return True


@dataclass
class Fit:
    """Result of :func:`fit`.

    ``loglik`` is the criterion at the optimum (larger is better); ``theta``
    the packed estimate whose names are in ``names``. ``coef`` additionally
    reports the derived last category probability for categorical margins.
    """

    method: str
    theta: np.ndarray
    names: tuple
    loglik: float
    n_iter: int
    converged: bool
    message: str
    context: ObjectiveContext = field(repr=False)
    data: object = field(repr=False)
    settings: dict = field(repr=False)
    options: FitOptions = field(repr=False)

    @property
    def fit_data(self):
        return self.context.data

    @property
    def q(self):
        return self.theta.size

    @property
    def n_corr(self):
        return self.context.layout.n_corr

    @property
    def structure(self):
        return self.context.unpack(self.theta)[0]

    @property
    def margin(self):
        return self.context.unpack(self.theta)[1]

    @property
    def bounds(self):
        return self.context.layout.lower, self.context.layout.upper

    @property
    def reported_names(self):
        names = list(self.names[:self.n_corr])
        m = self.margin
        if m is not None:
            names += list(m.names)
        return tuple(names)

    def reported(self, theta=None):
        """Estimates on the reporting scale (all ``K`` probabilities)."""
        theta = self.theta if theta is None else np.asarray(theta, float)
        if isinstance(self.context.layout.margin, Categorical):
            return np.append(theta, 1.0 - theta[self.n_corr:].sum())
        return theta.copy()

    def reported_jacobian(self):
        q = self.q
        J = np.eye(q)
        if isinstance(self.context.layout.margin, Categorical):
            last = np.zeros(q)
            last[self.n_corr:] = -1.0
            J = np.vstack([J, last])
        return J

    @property
    def coef(self):
        return dict(zip(self.reported_names, self.reported().tolist()))

    @property
    def omega(self):
        """Correlation (agreement) estimates by name."""
        return dict(zip(self.names[:self.n_corr], self.theta[:self.n_corr].tolist()))

    def refit(self, data, start=None):
        """Fit new data with the same settings and options."""
        return fit(data, options=self.options, start=start, **self.settings)

    def loglik_at(self, theta, data=None):
        """Criterion value at ``theta`` for the fitted data or for ``data``."""
        ctx = self.context if data is None else self.make_context(data)
        return ctx.loglik(theta)

    def make_context(self, data):
        """Objective context for ``data`` with this fit's templates (no refit)."""
        layout = self.context.layout
        return ObjectiveContext(data, layout.structure, layout.margin, self.method,
                                ecdf=self._ecdf_for(data))

    def _ecdf_for(self, data):
        if self.method != "SMP":
            return None
        return EmpiricalCdf(data.observed(), self.settings.get("ecdf", "winsorized"))


def _prepare(data, options):
    if options.drop_singletons:
        keep = data.informative_units(2)
        if keep.size < data.n_units:
            logger.info("dropping %d unit(s) with a single observed score",
                        data.n_units - keep.size)
            if keep.size == 0:
                raise DegenerateDataError("no unit has two or more observed scores")
            data = data.subset_units(keep)
    return data.check_informative()


def fit(data, structure="inter", family=None, method=None, options=None, start=None,
        covariates=None, link="probit", gold_methods=(1,), ecdf="winsorized"):
    """Estimate agreement parameters.

    Parameters
    ----------
    data : AgreementData
    structure : str
        One of ``inter``, ``gold``, ``gold-regression``, ``intra-inter``,
        ``multi-method``.
    family : str, optional
        Marginal family tag; defaults by measurement level. Ignored by SMP.
    method : {"ML", "DT", "CML", "SMP"}, optional
        Defaults by level and number of categories.
    options : FitOptions, optional
    start : array-like, optional
        Starting value for the packed parameter vector; by default every
        correlation starts at 0.5 and the margin at its moment estimate.
    covariates, link, gold_methods
        Passed to the structure template.
    ecdf : {"standard", "winsorized", "smoothed"}
        First-stage margin estimator for SMP.
    """
    options = options or FitOptions()
    method = (method or default_method(data.level, data.n_categories)).upper()
    family = family or default_family(data.level)
    if method in ("DT", "CML") and family != "categorical":
        raise DataError(f"{method} requires the categorical family")
    if method == "ML" and (family == "categorical" or data.is_categorical):
        raise DataError("ML requires interval or ratio data with a continuous family")
    settings = dict(structure=structure, family=family, method=method,
                    covariates=covariates, link=link, gold_methods=gold_methods, ecdf=ecdf)

    fdata = _prepare(data, options)
    template = make_structure(structure, fdata, covariates=covariates, link=link,
                              gold_methods=gold_methods)
    sample = fdata.observed()
    if method == "SMP":
        margin, ecdf_obj = None, EmpiricalCdf(sample, ecdf)
    else:
        cls = FAMILIES[family]
        try:
            margin = make_margin(cls, sample, K=fdata.n_categories)
        except ValueError:
            raise DataError(f"cannot initialize the {family} family from these scores") from None
        if not np.all(margin.in_support(sample)):
            raise DataError(f"scores fall outside the support of the {family} family")
        ecdf_obj = None
    ctx = ObjectiveContext(fdata, template, margin, method, ecdf=ecdf_obj)

    theta0 = ctx.start() if start is None else np.asarray(start, float)
    if not np.isfinite(ctx.loglik(theta0)):
        raise FitError("objective is not finite at the starting value")

    res = _minimize(ctx, theta0, options)
    if options.multistart:
        for w0 in (0.2, 0.8):
            alt = theta0.copy()
            alt[:ctx.layout.n_corr] = np.where(
                ctx.layout.lower[:ctx.layout.n_corr] == 0, w0, alt[:ctx.layout.n_corr])
            if np.isfinite(ctx.loglik(alt)):
                r2 = _minimize(ctx, alt, options)
                if r2.fun < res.fun:
                    res = r2

    theta = res.x
    ll = ctx.loglik(theta)
    converged = bool(res.success) and np.isfinite(ll)
    if not converged:
        warnings.warn(f"optimizer did not converge: {res.message}")
    out = Fit(method, theta, ctx.names, float(ll), int(res.nit), converged,
              str(res.message), ctx, data, settings, options)
    return out


def aic(fit_result):
    """Akaike information criterion ``2q - 2 loglik`` of an ML fit."""
    if fit_result.method != "ML":
        raise ValueError("AIC is defined for maximum-likelihood fits only")
    return 2.0 * fit_result.q - 2.0 * fit_result.loglik


@dataclass
class ModelComparison:
    aic: np.ndarray
    probability: np.ndarray

    @property
    def best(self):
        return int(np.argmin(self.aic))


def model_probabilities(fits):
    """Evidence weights ``exp((AIC_min - AIC_i) / 2)`` relative to the best model.

    Accepts ML fits of the same data or raw AIC values.
    """
    fits = list(fits)
    if not fits:
        raise ValueError("no models to compare")
    if all(isinstance(f, Fit) for f in fits):
        first = fits[0].fit_data
        if any(f.fit_data != first for f in fits[1:]):
            raise ValueError("models were fitted to different data")
        values = np.array([aic(f) for f in fits])
    else:
        values = np.asarray(fits, dtype=float)
    return ModelComparison(values, np.exp((values.min() - values) / 2.0))


_LABELS = ((0.2, "Slight Agreement"), (0.4, "Fair Agreement"),
           (0.6, "Moderate Agreement"), (0.8, "Substantial Agreement"))


def interpret(omega):
    """Verbal label for an agreement coefficient."""
    for cut, label in _LABELS:
        if omega <= cut:
            return label
    return "Near-Perfect Agreement"


def with_options(options, **changes):
    return replace(options, **changes)
