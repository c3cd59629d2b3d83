"""Inference for fitted models.

* ``asymptotic``: inverse observed information (ML and SMP second stage).
* ``sandwich``: ``I^-1 J I^-1`` with ``J`` the mean outer product of scores of
  datasets simulated at the estimate (DT and CML).
* ``bootstrap``: full parametric bootstrap with refitting, reported with
  Gaussian-method or quantile-method intervals.
"""

import logging
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import chi2, gaussian_kde, norm

from ._parallel import run_replicates
from .data import DataError
from .estimation import FitError, finite_difference_gradient
from .kernels import InfeasibleError
from .simulate import simulate_like
from .structures import OMEGA_UPPER

__all__ = ["UncertaintySummary", "BootstrapSample", "hessian_fd", "observed_information",
           "score", "sandwich_variance", "full_bootstrap", "smp_bootstrap", "confint",
           "wald_interval", "bootstrap_interval", "quantile_mcse", "in_confidence_ellipsoid",
           "MAX_FAILED_FRACTION", "MIN_QUANTILE_REPLICATES"]

logger = logging.getLogger(__name__)

MAX_FAILED_FRACTION = 0.02
MIN_QUANTILE_REPLICATES = 30
_HESS_STEP = 1e-4


def hessian_fd(f, x, lower=None, upper=None, feasible=None):
    """Symmetrized Hessian of ``f`` by differencing finite-difference gradients.

    Near a bound the outer stencil becomes one-sided.
    """
    x = np.asarray(x, float)
    q = x.size
    lower = np.full(q, -np.inf) if lower is None else np.asarray(lower, float)
    upper = np.full(q, np.inf) if upper is None else np.asarray(upper, float)

    def grad(t):
        return finite_difference_gradient(f, t, None, lower, upper, feasible)

    def ok(t):
        return np.all(t >= lower) and np.all(t <= upper) and (feasible is None or feasible(t))

    H = np.empty((q, q))
    g0 = None
    h = _HESS_STEP * np.maximum(np.abs(x), 1.0)
    for i in range(q):
        xp, xm = x.copy(), x.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        up, dn = ok(xp), ok(xm)
        if up and dn:
            H[:, i] = (grad(xp) - grad(xm)) / (2 * h[i])
        elif up or dn:
            sgn = 1.0 if up else -1.0
            pts = [x.copy() for _ in range(3)]
            for k, t in enumerate(pts, start=1):
                t[i] += sgn * k * h[i]
            if all(ok(t) for t in pts):
                # derivative at x of the quadratic through x+h, x+2h, x+3h;
                # avoids the one-sided gradient at the bound itself
                g1, g2, g3 = (grad(t) for t in pts)
                H[:, i] = sgn * (-2.5 * g1 + 4.0 * g2 - 1.5 * g3) / h[i]
            else:
                g0 = grad(x) if g0 is None else g0
                H[:, i] = (grad(xp) - g0) / h[i] if up else (g0 - grad(xm)) / h[i]
        else:
            raise InfeasibleError(f"no feasible stencil for parameter {i}")
    return 0.5 * (H + H.T)


def observed_information(fit):
    """Negative Hessian of the fit criterion at the estimate."""
    lo, hi = fit.bounds
    return -hessian_fd(fit.context.loglik, fit.theta, lo, hi, fit.context.layout.feasible)


def score(fit, data=None, theta=None):
    """Finite-difference gradient of the criterion for ``data`` at ``theta``."""
    ctx = fit.context if data is None else fit.make_context(data)
    theta = fit.theta if theta is None else np.asarray(theta, float)
    lo, hi = fit.bounds
    return finite_difference_gradient(ctx.loglik, theta, None, lo, hi, ctx.layout.feasible)


def _inverse(info):
    try:
        vals = np.linalg.eigvalsh(info)
    except np.linalg.LinAlgError:
        vals = np.array([-1.0])
    if np.min(vals) <= 0:
        warnings.warn("information matrix is not positive definite; using a pseudo-inverse")
        return np.linalg.pinv(info)
    return np.linalg.inv(info)


def sandwich_variance(fit, n_b=1000, seed=None, n_jobs=1, information=None):
    """Sandwich covariance ``I^-1 J I^-1`` on the packed parameter scale.

    ``J`` is the average outer product of the scores of ``n_b`` datasets
    simulated from the fitted model, each keeping the fitted data's missing
    cells.
    """
    if fit.method not in ("DT", "CML"):
        raise ValueError("the sandwich estimator applies to DT and CML fits")
    info = observed_information(fit) if information is None else information

    def one(rng):
        return score(fit, simulate_like(fit, rng))

    S = np.asarray(run_replicates(one, n_b, seed, n_jobs))
    J = S.T @ S / S.shape[0]
    Iinv = _inverse(info)
    C = Iinv @ J @ Iinv
    return 0.5 * (C + C.T)


@dataclass
class BootstrapSample:
    """Refitted estimates (rows) from a parametric bootstrap."""

    theta: np.ndarray
    n_requested: int
    n_failed: int

    @property
    def n_b(self):
        return self.theta.shape[0]


def _refit_replicate(fit, rng):
    data = simulate_like(fit, rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            rep = fit.refit(data)
        except (FitError, DataError, InfeasibleError):
            return None
    return rep.theta if rep.converged else None


def full_bootstrap(fit, n_b=1000, seed=None, n_jobs=1):
    """Simulate at the estimate and refit, ``n_b`` times.

    Replicates that fail to converge are dropped with a warning when they are
    fewer than 2% of ``n_b``; more failures raise :class:`FitError`.
    """
    out = run_replicates(lambda rng: _refit_replicate(fit, rng), n_b, seed, n_jobs)
    ok = [t for t in out if t is not None]
    failed = n_b - len(ok)
    if failed:
        if failed > MAX_FAILED_FRACTION * n_b:
            raise FitError(f"{failed} of {n_b} bootstrap replicates failed")
        warnings.warn(f"dropped {failed} non-convergent bootstrap replicate(s)")
    theta = np.array(ok).reshape(len(ok), fit.q)
    return BootstrapSample(theta, n_b, failed)


def smp_bootstrap(fit, n_b=1000, seed=None, n_jobs=1):
    """Bootstrap for semiparametric fits: copula draws at the estimate mapped
    through the empirical quantile function, then re-estimation."""
    if fit.method != "SMP":
        raise ValueError("smp_bootstrap needs an SMP fit")
    return full_bootstrap(fit, n_b, seed, n_jobs)


def wald_interval(estimate, se, level=0.95):
    z = norm.ppf(0.5 + level / 2)
    estimate, se = np.asarray(estimate, float), np.asarray(se, float)
    return estimate - z * se, estimate + z * se


def quantile_mcse(sample, p, q):
    """Standard error ``sqrt(p (1 - p) / n) / f(q)`` of a sample ``p``-quantile ``q``."""
    sample = np.asarray(sample, float)
    n = sample.size
    if np.ptp(sample) == 0:
        return 0.0
    try:
        dens = gaussian_kde(sample)(q)[0]
    except np.linalg.LinAlgError:
        return np.nan
    return float(np.sqrt(p * (1 - p) / n) / dens) if dens > 0 else np.inf


def bootstrap_interval(estimate, sample, level=0.95, method="gaussian"):
    """Interval and endpoint MCSEs from a bootstrap sample of one quantity.

    Gaussian method: ``estimate +/- z sd*`` with endpoint MCSE
    ``z sd* / sqrt(2 (n_b - 1))``. Quantile method: median-unbiased sample
    quantiles with the asymptotic quantile standard error
    ``sqrt(p (1 - p) / n_b) / f(q_p)`` (kernel density ``f``).

    Returns ``(lower, upper, mcse_lower, mcse_upper)``.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    sample = np.asarray(sample, float)
    n = sample.size
    if n < 2:
        raise ValueError("need at least two bootstrap replicates")
    if method == "gaussian":
        z = norm.ppf(0.5 + level / 2)
        sd = sample.std(ddof=1)
        m = z * sd / np.sqrt(2 * (n - 1))
        return estimate - z * sd, estimate + z * sd, m, m
    if method == "quantile":
        if n < MIN_QUANTILE_REPLICATES:
            raise ValueError(f"quantile intervals need n_b >= {MIN_QUANTILE_REPLICATES}")
        a = (1 - level) / 2
        lo, hi = np.quantile(sample, [a, 1 - a], method="median_unbiased")
        return lo, hi, quantile_mcse(sample, a, lo), quantile_mcse(sample, 1 - a, hi)
    raise ValueError(f"unknown interval method {method!r}")


@dataclass
class UncertaintySummary:
    """Per-parameter intervals on the reporting scale.

    ``covariance`` is set for asymptotic and sandwich summaries, ``sample``
    (reported scale, one row per replicate) for bootstrap summaries.
    ``mcse`` has one row per parameter holding the MCSEs of the lower and
    upper endpoints; it is ``None`` when no Monte Carlo error applies.
    """

    kind: str
    names: tuple
    estimate: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float
    covariance: np.ndarray = None
    sample: np.ndarray = None
    mcse: np.ndarray = None
    n_b: int = 0
    n_failed: int = 0
    truncated: bool = False
    omega_rows: tuple = ()

    @property
    def se(self):
        if self.covariance is not None:
            return np.sqrt(np.clip(np.diag(self.covariance), 0, None))
        if self.sample is not None:
            return self.sample.std(axis=0, ddof=1)
        return None

    def interval(self, name):
        i = self.names.index(name)
        return float(self.lower[i]), float(self.upper[i])

    def truncate(self):
        """Copy with agreement intervals clipped to ``[0, 1]``."""
        lo, hi = self.lower.copy(), self.upper.copy()
        rows = list(self.omega_rows)
        lo[rows] = np.clip(lo[rows], 0.0, 1.0)
        hi[rows] = np.clip(hi[rows], 0.0, 1.0)
        return replace(self, lower=lo, upper=hi, truncated=True)

    def max_mcse(self):
        return None if self.mcse is None else float(np.nanmax(self.mcse))


def _omega_rows(fit):
    lo, hi = fit.bounds
    return tuple(i for i in range(fit.n_corr) if lo[i] == 0.0 and hi[i] == OMEGA_UPPER)


def _from_covariance(fit, kind, cov, level, n_b=0):
    J = fit.reported_jacobian()
    rep_cov = J @ cov @ J.T
    est = fit.reported()
    se = np.sqrt(np.clip(np.diag(rep_cov), 0, None))
    lo, hi = wald_interval(est, se, level)
    return UncertaintySummary(kind, fit.reported_names, est, lo, hi, level,
                              covariance=rep_cov, n_b=n_b, omega_rows=_omega_rows(fit))


def summarize_bootstrap(fit, boot, level=0.95, method="gaussian"):
    est = fit.reported()
    sample = np.array([fit.reported(t) for t in boot.theta]).reshape(boot.n_b, est.size)
    rows = [bootstrap_interval(est[k], sample[:, k], level, method) for k in range(est.size)]
    lo, hi, m_lo, m_hi = (np.array(c, float) for c in zip(*rows))
    return UncertaintySummary(f"bootstrap-{method}", fit.reported_names, est, lo, hi, level,
                              sample=sample, mcse=np.column_stack([m_lo, m_hi]),
                              n_b=boot.n_b, n_failed=boot.n_failed,
                              omega_rows=_omega_rows(fit))


def confint(fit, kind="asymptotic", level=0.95, n_b=1000, seed=None, n_jobs=1,
            interval="gaussian", truncate=False):
    """Confidence intervals for every reported parameter.

    ``kind="asymptotic"`` uses the inverse observed information for ML and
    SMP fits and the sandwich for DT and CML fits. ``kind="bootstrap"`` runs
    a full parametric bootstrap and uses ``interval`` (``gaussian`` or
    ``quantile``).
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if kind == "asymptotic" and fit.method in ("DT", "CML"):
        kind = "sandwich"
    if kind == "asymptotic":
        out = _from_covariance(fit, "asymptotic", _inverse(observed_information(fit)), level)
    elif kind == "sandwich":
        cov = sandwich_variance(fit, n_b, seed, n_jobs)
        out = _from_covariance(fit, "sandwich", cov, level, n_b)
    elif kind == "bootstrap":
        out = summarize_bootstrap(fit, full_bootstrap(fit, n_b, seed, n_jobs), level, interval)
    else:
        raise ValueError(f"unknown interval kind {kind!r}")
    return out.truncate() if truncate else out


def in_confidence_ellipsoid(fit, theta, level=0.95, information=None):
    """Whether ``theta`` lies in ``{(t - est)' I (t - est) <= chi2_q(level)}``."""
    info = observed_information(fit) if information is None else information
    d = np.asarray(theta, float) - fit.theta
    return bool(d @ info @ d <= chi2.ppf(level, fit.q))
