"""scikit-learn style estimators wrapping the fitting and inference functions."""

import numpy as np
from scipy.special import ndtri
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .alpha import alpha_bootstrap, krippendorff_alpha
from .data import AgreementData, ColumnRole, DataError
from .diagnostics import influence
from .estimation import FitOptions, fit
from .report import fit_document, fit_summary
from .uncertainty import confint

__all__ = ["SklarsOmega", "KrippendorffAlpha", "check_agreement_data"]


def check_agreement_data(X, level="interval", columns=None, n_categories=None):
    """Coerce ``X`` to :class:`AgreementData`.

    ``X`` may already be agreement data (returned unchanged when its level
    matches) or a 2-D array of scores with ``nan`` for missing cells.
    ``columns`` gives header tokens such as ``["g", "c.1.1", "c.2.1"]``;
    by default every column is a separate coder.
    """
    if isinstance(X, AgreementData):
        if X.level != level:
            raise DataError(f"data have level {X.level!r}, estimator expects {level!r}")
        return X
    values = np.asarray(X, dtype=float)
    if values.ndim != 2:
        raise DataError(f"expected a 2-D score matrix, got shape {values.shape}")
    roles = None if columns is None else [ColumnRole.parse(c) for c in columns]
    return AgreementData(values, roles, level, n_categories)


class SklarsOmega(BaseEstimator):
    """Gaussian-copula agreement model.

    Parameters
    ----------
    level : {"nominal", "ordinal", "interval", "ratio"}
    structure : str
        Correlation structure keyword (``inter``, ``gold``, ...).
    dist : str, optional
        Marginal family; default depends on ``level``.
    method : {"ML", "DT", "CML", "SMP"}, optional
        Default depends on ``level`` and the number of categories.
    confint : {"asymptotic", "bootstrap", "none"}
        ``asymptotic`` gives Wald intervals from the observed information
        (ML, SMP) or the sandwich (DT, CML).
    bootit : int
        Bootstrap size for the sandwich or the full bootstrap.
    interval : {"gaussian", "quantile"}
        Bootstrap interval construction.
    n_jobs : int
        Worker processes for bootstrap replicates.
    random_state : int, optional
    columns : sequence of str, optional
        Header tokens when fitting a plain array.

    Attributes
    ----------
    fit_ : Fit
    coef_ : dict
    intervals_ : UncertaintySummary or None
    """

    def __init__(self, level="interval", structure="inter", dist=None, method=None,
                 confint="asymptotic", bootit=1000, interval="gaussian", conf_level=0.95,
                 truncate=False, n_jobs=1, random_state=None, columns=None,
                 covariates=None, link="probit", gold_methods=(1,), ecdf="winsorized",
                 max_iter=500, gtol=1e-6, ftol=1e-10, drop_singletons=True,
                 multistart=False):
        self.level = level
        self.structure = structure
        self.dist = dist
        self.method = method
        self.confint = confint
        self.bootit = bootit
        self.interval = interval
        self.conf_level = conf_level
        self.truncate = truncate
        self.n_jobs = n_jobs
        self.random_state = random_state
        self.columns = columns
        self.covariates = covariates
        self.link = link
        self.gold_methods = gold_methods
        self.ecdf = ecdf
        self.max_iter = max_iter
        self.gtol = gtol
        self.ftol = ftol
        self.drop_singletons = drop_singletons
        self.multistart = multistart

    def _options(self):
        return FitOptions(self.max_iter, self.gtol, self.ftol, self.drop_singletons,
                          self.multistart)

    def fit(self, X, y=None):
        data = check_agreement_data(X, self.level, self.columns)
        self.fit_ = fit(data, self.structure, family=self.dist, method=self.method,
                        options=self._options(), covariates=self.covariates, link=self.link,
                        gold_methods=self.gold_methods, ecdf=self.ecdf)
        self.coef_ = self.fit_.coef
        self.omega_ = self.fit_.omega
        self.objective_ = self.fit_.loglik
        self.n_iter_ = self.fit_.n_iter
        self.converged_ = self.fit_.converged
        self.intervals_ = None
        if self.confint != "none":
            self.intervals_ = confint(self.fit_, self.confint, self.conf_level, self.bootit,
                                      self.random_state, self.n_jobs, self.interval,
                                      self.truncate)
        return self

    def transform(self, X):
        """Latent normal scores ``Phi^-1(F(y))`` under the fitted margin
        (distributional-transform midpoints for categorical data)."""
        check_is_fitted(self, "fit_")
        data = check_agreement_data(X, self.level, self.columns or self.fit_.data.column_names)
        margin = self.fit_.margin or self.fit_.context.ecdf
        out = np.full(data.values.shape, np.nan)
        obs = data.values[data.mask]
        if getattr(margin, "discrete", False):
            out[data.mask] = ndtri(margin.dt_cdf(obs))
        else:
            out[data.mask] = margin.normal_scores(obs)
        return out

    def score(self, X, y=None):
        """Fit criterion of ``X`` at the fitted parameters."""
        check_is_fitted(self, "fit_")
        data = check_agreement_data(X, self.level, self.columns or self.fit_.data.column_names)
        if self.drop_singletons:
            data = data.subset_units(data.informative_units(2))
        return self.fit_.loglik_at(self.fit_.theta, data)

    def summary(self, call=None):
        check_is_fitted(self, "fit_")
        control = {"confint": self.confint}
        if self.confint != "none":
            control.update(bootit=self.bootit, nodes=self.n_jobs)
        return fit_summary(self.fit_, self.intervals_, call=call, control=control)

    def to_dict(self):
        check_is_fitted(self, "fit_")
        return fit_document(self.fit_, self.intervals_)

    def influence(self, units=(), coders=()):
        """DFBETAs for 0-based ``units`` and coder numbers ``coders``."""
        check_is_fitted(self, "fit_")
        return influence(self.fit_, units, coders)


class KrippendorffAlpha(BaseEstimator):
    """Krippendorff's alpha with an optional unit-resampling bootstrap.

    ``metric`` defaults to the data's level.
    """

    def __init__(self, level="nominal", metric=None, bootit=1000, conf_level=0.95,
                 random_state=None, columns=None):
        self.level = level
        self.metric = metric
        self.bootit = bootit
        self.conf_level = conf_level
        self.random_state = random_state
        self.columns = columns

    def fit(self, X, y=None):
        data = check_agreement_data(X, self.level, self.columns)
        metric = self.metric or self.level
        self.alpha_ = krippendorff_alpha(data, metric)
        self.result_ = None
        if self.bootit:
            self.result_ = alpha_bootstrap(data, metric, self.bootit, self.random_state,
                                           self.conf_level)
            self.interval_ = (self.result_.lower, self.result_.upper)
        return self

    def score(self, X, y=None):
        check_is_fitted(self, "alpha_")
        return krippendorff_alpha(check_agreement_data(X, self.level, self.columns),
                                  self.metric or self.level)
