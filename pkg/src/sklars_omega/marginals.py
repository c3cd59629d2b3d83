"""Marginal distributions F(y | psi) and empirical cdf estimators.

Every parametric family exposes ``cdf``, ``sf``, ``logpdf``, ``ppf`` and
``normal_scores`` (``Phi^{-1}(F(y))`` computed without losing the upper
tail). Parameters live in a flat vector so the optimizer can move them.
"""

import re

import numpy as np
from scipy import special
from scipy.special import ndtr, ndtri

__all__ = [
    "MarginalFamily", "Gaussian", "Laplace", "StudentT", "Gamma", "Beta",
    "Categorical", "GaussianMixture", "EmpiricalCdf", "dt_cdf", "init_params",
    "make_margin", "parse_margin_spec", "FAMILIES",
]

POS_LOWER = 1e-6
P_LOWER = 1e-3


class MarginalFamily:
    """Base class for parametric margins."""

    tag = None
    names = ()
    discrete = False

    def __init__(self, *params):
        self.params = np.asarray(params, dtype=float)
        if self.params.shape != (len(self.names),):
            raise ValueError(f"{self.tag} takes parameters {self.names}")
        if not self.valid():
            raise ValueError(f"invalid {self.tag} parameters {tuple(self.params)}")

    def __repr__(self):
        args = ", ".join(f"{n}={v:.6g}" for n, v in zip(self.names, self.params))
        return f"{type(self).__name__}({args})"

    def __eq__(self, other):
        return type(self) is type(other) and np.array_equal(self.params, other.params)

    __hash__ = None

    # -- optimizer interface -------------------------------------------------
    @property
    def free_params(self):
        return self.params.copy()

    @property
    def free_names(self):
        return self.names

    def bounds(self):
        return [(None, None)] * len(self.names)

    def with_free(self, vec):
        return type(self)(*vec)

    def valid(self):
        return bool(np.all(np.isfinite(self.params)))

    @classmethod
    def init_params(cls, sample):
        raise NotImplementedError

    @classmethod
    def from_sample(cls, sample):
        return cls(*cls.init_params(sample))

    # -- distribution --------------------------------------------------------
    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def sf(self, y):
        return 1.0 - self.cdf(y)

    def isf(self, q):
        return self.ppf(1.0 - np.asarray(q, float))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any((p <= 0) | (p >= 1)):
            raise ValueError("quantile requires p strictly inside (0, 1)")
        return self.ppf(p)

    def normal_scores(self, y):
        """``Phi^{-1}(F(y))`` using the survival function in the upper tail."""
        c = self.cdf(y)
        s = self.sf(y)
        return np.where(c < 0.5, ndtri(c), -ndtri(s))

    def from_normal(self, z):
        """``F^{-1}(Phi(z))`` without rounding ``Phi(z)`` to 1 in the upper tail."""
        z = np.asarray(z, dtype=float)
        lo = z <= 0
        out = np.empty_like(z)
        out[lo] = self.ppf(ndtr(z[lo]))
        out[~lo] = self.isf(ndtr(-z[~lo]))
        return out

    def in_support(self, y):
        return np.ones(np.shape(y), dtype=bool)


class Gaussian(MarginalFamily):
    tag = "gaussian"
    names = ("mu", "sigma")

    def valid(self):
        return super().valid() and self.params[1] > 0

    def bounds(self):
        return [(None, None), (POS_LOWER, None)]

    @classmethod
    def init_params(cls, sample):
        sample = np.asarray(sample, float)
        sd = sample.std(ddof=1) if sample.size > 1 else 0.0
        if not sd > 0:
            raise ValueError("sample variance is zero; cannot initialize")
        return np.array([sample.mean(), sd])

    def cdf(self, y):
        return ndtr((np.asarray(y, float) - self.params[0]) / self.params[1])

    def sf(self, y):
        return ndtr((self.params[0] - np.asarray(y, float)) / self.params[1])

    def logpdf(self, y):
        mu, sigma = self.params
        z = (np.asarray(y, float) - mu) / sigma
        return -0.5 * z * z - np.log(sigma) - 0.5 * np.log(2 * np.pi)

    def ppf(self, p):
        return self.params[0] + self.params[1] * ndtri(p)

    def isf(self, q):
        return self.params[0] - self.params[1] * ndtri(q)

    def normal_scores(self, y):
        return (np.asarray(y, float) - self.params[0]) / self.params[1]

    def from_normal(self, z):
        return self.params[0] + self.params[1] * np.asarray(z, float)


class Laplace(MarginalFamily):
    """Laplace with location ``mu`` and scale ``sigma`` (density ``exp(-|y-mu|/sigma)/(2 sigma)``)."""

    tag = "laplace"
    names = ("mu", "sigma")

    def valid(self):
        return super().valid() and self.params[1] > 0

    def bounds(self):
        return [(None, None), (POS_LOWER, None)]

    init_params = Gaussian.init_params

    def cdf(self, y):
        mu, b = self.params
        x = (np.asarray(y, float) - mu) / b
        return np.where(x < 0, 0.5 * np.exp(np.minimum(x, 0)), 1 - 0.5 * np.exp(-np.maximum(x, 0)))

    def sf(self, y):
        mu, b = self.params
        return Laplace(-mu, b).cdf(-np.asarray(y, float))

    def logpdf(self, y):
        mu, b = self.params
        return -np.abs(np.asarray(y, float) - mu) / b - np.log(2 * b)

    def ppf(self, p):
        mu, b = self.params
        p = np.asarray(p, float)
        return np.where(p < 0.5, mu + b * np.log(2 * p), mu - b * np.log(2 * (1 - p)))

    def isf(self, q):
        mu, b = self.params
        return 2 * mu - Laplace(mu, b).ppf(q)


class StudentT(MarginalFamily):
    """Student t shifted to location ``mu``, with ``nu`` degrees of freedom."""

    tag = "t"
    names = ("mu", "nu")

    def valid(self):
        return super().valid() and self.params[1] > 0

    def bounds(self):
        return [(None, None), (POS_LOWER, None)]

    @classmethod
    def init_params(cls, sample):
        sample = np.asarray(sample, float)
        med = np.median(sample)
        mad = np.median(np.abs(sample - med))
        if not mad > 0:
            raise ValueError("median absolute deviation is zero; cannot initialize")
        return np.array([med, mad])

    def cdf(self, y):
        return special.stdtr(self.params[1], np.asarray(y, float) - self.params[0])

    def sf(self, y):
        return special.stdtr(self.params[1], self.params[0] - np.asarray(y, float))

    def logpdf(self, y):
        mu, nu = self.params
        x = np.asarray(y, float) - mu
        return (special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2)
                - 0.5 * np.log(nu * np.pi) - (nu + 1) / 2 * np.log1p(x * x / nu))

    def ppf(self, p):
        return self.params[0] + special.stdtrit(self.params[1], p)

    def isf(self, q):
        return self.params[0] - special.stdtrit(self.params[1], q)


class Gamma(MarginalFamily):
    """Gamma with shape ``alpha`` and rate ``beta``."""

    tag = "gamma"
    names = ("alpha", "beta")

    def valid(self):
        return super().valid() and np.all(self.params > 0)

    def bounds(self):
        return [(POS_LOWER, None), (POS_LOWER, None)]

    @classmethod
    def init_params(cls, sample):
        sample = np.asarray(sample, float)
        m = sample.mean()
        s2 = sample.var(ddof=1) if sample.size > 1 else 0.0
        if not s2 > 0:
            raise ValueError("sample variance is zero; cannot initialize")
        return np.array([m * m / s2, m / s2])

    def in_support(self, y):
        return np.asarray(y, float) > 0

    def cdf(self, y):
        a, b = self.params
        return special.gammainc(a, b * np.maximum(np.asarray(y, float), 0))

    def sf(self, y):
        a, b = self.params
        return special.gammaincc(a, b * np.maximum(np.asarray(y, float), 0))

    def logpdf(self, y):
        a, b = self.params
        y = np.asarray(y, float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = a * np.log(b) + (a - 1) * np.log(y) - b * y - special.gammaln(a)
        return np.where(y > 0, out, -np.inf)

    def ppf(self, p):
        a, b = self.params
        return special.gammaincinv(a, p) / b

    def isf(self, q):
        a, b = self.params
        return special.gammainccinv(a, q) / b


class Beta(MarginalFamily):
    tag = "beta"
    names = ("alpha", "beta")

    def valid(self):
        return super().valid() and np.all(self.params > 0)

    def bounds(self):
        return [(POS_LOWER, None), (POS_LOWER, None)]

    @classmethod
    def init_params(cls, sample):
        sample = np.asarray(sample, float)
        m = sample.mean()
        s2 = sample.var(ddof=1) if sample.size > 1 else 0.0
        if not s2 > 0:
            raise ValueError("sample variance is zero; cannot initialize")
        common = m * (1 - m) / s2 - 1
        return np.array([m * common, (1 - m) * common])

    def in_support(self, y):
        y = np.asarray(y, float)
        return (y > 0) & (y < 1)

    def cdf(self, y):
        a, b = self.params
        return special.betainc(a, b, np.clip(np.asarray(y, float), 0, 1))

    def sf(self, y):
        a, b = self.params
        return special.betainc(b, a, 1 - np.clip(np.asarray(y, float), 0, 1))

    def logpdf(self, y):
        a, b = self.params
        y = np.asarray(y, float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (a - 1) * np.log(y) + (b - 1) * np.log1p(-y) - special.betaln(a, b)
        return np.where((y > 0) & (y < 1), out, -np.inf)

    def ppf(self, p):
        a, b = self.params
        return special.betaincinv(a, b, p)

    def isf(self, q):
        a, b = self.params
        return 1 - special.betaincinv(b, a, q)


class Categorical(MarginalFamily):
    """Categorical distribution on ``1..K`` with probabilities ``p``.

    The optimizer sees ``p_1..p_{K-1}``; ``p_K`` is their complement.
    """

    tag = "categorical"
    discrete = True

    def __init__(self, *p):
        p = np.asarray(p[0] if len(p) == 1 and np.ndim(p[0]) else p, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("categorical needs at least two probabilities")
        if np.any(p <= 0) or abs(p.sum() - 1) > 1e-9:
            raise ValueError("categorical probabilities must be positive and sum to 1")
        self.params = p / p.sum()
        self._cum = np.concatenate([[0.0], np.cumsum(self.params)])
        self._cum[-1] = 1.0

    @property
    def K(self):
        return self.params.size

    @property
    def names(self):
        return tuple(f"p{k}" for k in range(1, self.K + 1))

    @property
    def free_params(self):
        return self.params[:-1].copy()

    @property
    def free_names(self):
        return self.names[:-1]

    def bounds(self):
        return [(P_LOWER, 1 - P_LOWER)] * (self.K - 1)

    @classmethod
    def feasible_free(cls, vec):
        vec = np.asarray(vec, float)
        return bool(np.all(vec >= P_LOWER) and vec.sum() <= 1 - P_LOWER + 1e-12)

    def with_free(self, vec):
        vec = np.asarray(vec, float)
        return Categorical(np.append(vec, 1.0 - vec.sum()))

    @classmethod
    def init_params(cls, sample, K=None):
        sample = np.asarray(sample)
        K = int(sample.max()) if K is None else K
        counts = np.bincount(sample.astype(int), minlength=K + 1)[1:K + 1].astype(float)
        # twice the bound keeps an unobserved category strictly feasible
        p = np.maximum(counts / counts.sum(), 2 * P_LOWER)
        return p / p.sum()

    @classmethod
    def from_sample(cls, sample, K=None):
        return cls(cls.init_params(sample, K))

    def in_support(self, y):
        y = np.asarray(y, float)
        return (y == np.round(y)) & (y >= 1) & (y <= self.K)

    def cdf(self, y):
        idx = np.clip(np.floor(np.asarray(y, float)), 0, self.K).astype(int)
        return self._cum[idx]

    def sf(self, y):
        return 1.0 - self.cdf(y)

    def pmf(self, y):
        y = np.asarray(y, float)
        ok = self.in_support(y)
        return np.where(ok, self.params[np.clip(y, 1, self.K).astype(int) - 1], 0.0)

    def logpdf(self, y):
        with np.errstate(divide="ignore"):
            return np.log(self.pmf(y))

    pdf = pmf

    def ppf(self, p):
        p = np.asarray(p, float)
        k = np.searchsorted(self._cum[1:], p, side="left") + 1
        return np.minimum(k, self.K).astype(float)

    def isf(self, q):
        return self.ppf(1.0 - np.asarray(q, float))

    def from_normal(self, z):
        return self.ppf(ndtr(np.asarray(z, float)))

    def dt_cdf(self, y):
        y = np.asarray(y, float)
        return 0.5 * (self.cdf(y - 1) + self.cdf(y))


class GaussianMixture(MarginalFamily):
    """Two-component Gaussian mixture; a data-generating margin only."""

    tag = "mixture"
    names = ("w1", "mu1", "sigma1", "w2", "mu2", "sigma2")

    def valid(self):
        w1, _, s1, w2, _, s2 = self.params
        return super().valid() and s1 > 0 and s2 > 0 and w1 > 0 and w2 > 0 and abs(w1 + w2 - 1) < 1e-9

    def _parts(self):
        w1, m1, s1, w2, m2, s2 = self.params
        return ((w1, m1, s1), (w2, m2, s2))

    def cdf(self, y):
        y = np.asarray(y, float)
        return sum(w * ndtr((y - m) / s) for w, m, s in self._parts())

    def sf(self, y):
        y = np.asarray(y, float)
        return sum(w * ndtr((m - y) / s) for w, m, s in self._parts())

    def logpdf(self, y):
        y = np.asarray(y, float)
        dens = sum(w * np.exp(-0.5 * ((y - m) / s) ** 2) / (s * np.sqrt(2 * np.pi))
                   for w, m, s in self._parts())
        return np.log(dens)

    def _invert(self, target, fn, increasing):
        target = np.asarray(target, float)
        lo = np.full(target.shape, min(m - 40 * s for _, m, s in self._parts()))
        hi = np.full(target.shape, max(m + 40 * s for _, m, s in self._parts()))
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = fn(mid) < target if increasing else fn(mid) > target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo < 1e-13 * np.maximum(1, np.abs(mid))):
                break
        return 0.5 * (lo + hi)

    def ppf(self, p):
        return self._invert(p, self.cdf, True)

    def isf(self, q):
        return self._invert(q, self.sf, False)


FAMILIES = {cls.tag: cls for cls in (Gaussian, Laplace, StudentT, Gamma, Beta, Categorical)}


def dt_cdf(margin, y):
    """Distributional-transform cdf ``(F(y-1) + F(y)) / 2`` for integer support.

    Continuous margins pass through unchanged.
    """
    if margin.discrete:
        return margin.dt_cdf(y)
    return margin.cdf(y)


def init_params(sample, family, K=None):
    """Moment/robust starting values for ``family`` from observed scores."""
    cls = FAMILIES[family] if isinstance(family, str) else family
    sample = np.asarray(sample, float)
    if sample.size == 0:
        raise ValueError("empty sample")
    if cls is Categorical:
        return Categorical.init_params(sample, K)
    return cls.init_params(sample)


def make_margin(family, sample, K=None):
    """Instantiate ``family`` at its starting values for ``sample``."""
    cls = FAMILIES[family] if isinstance(family, str) else family
    if cls is Categorical:
        return Categorical(init_params(sample, cls, K))
    return cls(*init_params(sample, cls))


_SPEC_RE = re.compile(r"^\s*([a-z]+)\s*\(([^)]*)\)\s*$", re.IGNORECASE)


def parse_margin_spec(text):
    """Parse strings such as ``beta(1.5, 2)``, ``bernoulli(0.7)``,
    ``categorical(0.1,0.3,0.2,0.05,0.35)`` or ``mixture(0.3,0,1,0.7,3,0.5)``."""
    m = _SPEC_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse margin {text!r}")
    name = m.group(1).lower()
    args = [float(a) for a in m.group(2).split(",") if a.strip()]
    if name in ("bernoulli", "ber"):
        (p,) = args
        return Categorical([1 - p, p])
    if name in ("categorical", "cat"):
        return Categorical(args)
    if name in ("mixture", "gmm"):
        return GaussianMixture(*args)
    if name in ("normal", "gauss"):
        name = "gaussian"
    if name not in FAMILIES:
        raise ValueError(f"unknown margin {name!r}")
    return FAMILIES[name](*args)


class EmpiricalCdf:
    """Empirical cdf of a pooled sample.

    Parameters
    ----------
    sample : array-like
    variant : {"standard", "winsorized", "smoothed"}
    epsilon : float, optional
        Truncation for the winsorized variant; default ``0.5 / n``.
    bandwidth : float, optional
        Gaussian-kernel bandwidth for the smoothed variant; default is
        Silverman's rule.
    """

    def __init__(self, sample, variant="winsorized", epsilon=None, bandwidth=None):
        self.sample = np.sort(np.asarray(sample, dtype=float))
        n = self.sample.size
        if n == 0:
            raise ValueError("empty sample")
        if variant not in ("standard", "winsorized", "smoothed"):
            raise ValueError(f"unknown ECDF variant {variant!r}")
        self.variant = variant
        self.epsilon = 0.5 / n if epsilon is None else float(epsilon)
        if variant == "winsorized" and not 0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")
        if bandwidth is None and variant == "smoothed":
            sd = self.sample.std(ddof=1) if n > 1 else 0.0
            iqr = np.subtract(*np.percentile(self.sample, [75, 25]))
            spread = min(sd, iqr / 1.34) if iqr > 0 else sd
            bandwidth = 0.9 * spread * n ** (-0.2)
            if not bandwidth > 0:
                raise ValueError("cannot choose a bandwidth for a constant sample")
        self.bandwidth = bandwidth
        self.discrete = False

    @property
    def n(self):
        return self.sample.size

    def __call__(self, y):
        return self.cdf(y)

    def cdf(self, y):
        y = np.asarray(y, float)
        if self.variant == "smoothed":
            return ndtr((y[..., None] - self.sample) / self.bandwidth).mean(axis=-1)
        f = np.searchsorted(self.sample, y, side="right") / self.n
        if self.variant == "winsorized":
            f = np.clip(f, self.epsilon, 1 - self.epsilon)
        return f

    def normal_scores(self, y):
        return ndtri(self.cdf(y))

    def quantile(self, p):
        """Median-unbiased sample quantile (plotting position ``(n + 1/3) p + 1/3``)."""
        p = np.asarray(p, float)
        if np.any((p <= 0) | (p >= 1)):
            raise ValueError("quantile requires p strictly inside (0, 1)")
        if self.n < 2:
            raise ValueError("quantiles need at least two observations")
        return np.quantile(self.sample, p, method="median_unbiased")

    ppf = quantile

    def from_normal(self, z):
        # order statistics clamp the tails, so Phi(z) rounding to 0/1 is harmless
        return np.quantile(self.sample, ndtr(np.asarray(z, float)), method="median_unbiased")
