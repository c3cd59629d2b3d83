"""Copula correlation structures and parameter packing.

The correlation matrix is block diagonal with one block per unit. A
structure maps every pair of column roles to a *slot*: slot 0 is a
structural zero, slot 1 the unit diagonal, and the remaining slots hold
values derived from the structure's parameters. A block for any observed
pattern is then ``slot_values()[slot_index(roles)]``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, ndtr

from .data import DataError
from .marginals import Categorical

__all__ = [
    "CorrelationStructure", "InterCoder", "GoldStandard", "GoldRegression",
    "IntraInter", "MultiMethod", "make_structure", "build_block",
    "max_binary_correlation", "check_frechet_bound", "PackedParams", "pack",
    "unpack", "STRUCTURES", "OMEGA_UPPER",
]

OMEGA_UPPER = 1.0 - 1e-6
OMEGA_START = 0.5


class CorrelationStructure:
    keyword = None

    def __init__(self, params):
        self.params = np.atleast_1d(np.asarray(params, dtype=float)).copy()
        if self.params.shape != (len(self.names),):
            raise ValueError(f"{self.keyword} expects {len(self.names)} parameters")

    def __repr__(self):
        args = ", ".join(f"{n}={v:.6g}" for n, v in zip(self.names, self.params))
        return f"{type(self).__name__}({args})"

    @property
    def n_params(self):
        return len(self.names)

    def bounds(self):
        return [(0.0, OMEGA_UPPER)] * self.n_params

    def with_params(self, params):
        new = object.__new__(type(self))
        new.__dict__.update(self.__dict__)
        new.params = np.asarray(params, dtype=float).copy()
        return new

    def check_roles(self, roles):
        pass

    def slot_values(self):
        return np.concatenate([[0.0, 1.0], self.params])

    def pair_slot(self, ra, rb):
        raise NotImplementedError

    def slot_index(self, roles):
        m = len(roles)
        idx = np.ones((m, m), dtype=int)
        for a in range(m):
            for b in range(a + 1, m):
                idx[a, b] = idx[b, a] = self.pair_slot(roles[a], roles[b])
        return idx

    def block(self, roles):
        return self.slot_values()[self.slot_index(roles)]

    def correlation_names(self):
        return list(self.names)


def _no_gold(roles, keyword):
    if any(r.gold for r in roles):
        raise DataError(f"structure {keyword!r} does not use a gold-standard column; "
                        "use 'gold' or 'multi-method'")


def _single_method(roles, keyword):
    if len({r.method for r in roles if not r.gold}) > 1:
        raise DataError(f"structure {keyword!r} needs single-method data; use 'multi-method'")


class InterCoder(CorrelationStructure):
    """Compound symmetry: every pair of scores within a unit shares ``omega``."""

    keyword = "inter"
    names = ("inter",)

    def __init__(self, omega=OMEGA_START):
        super().__init__([omega])

    def check_roles(self, roles):
        _no_gold(roles, self.keyword)

    def pair_slot(self, ra, rb):
        return 2


class GoldStandard(CorrelationStructure):
    """Gold-vs-coder correlation ``omega_g`` and coder-vs-coder ``omega_c``."""

    keyword = "gold"
    names = ("gold", "inter")

    def __init__(self, omega_g=OMEGA_START, omega_c=OMEGA_START):
        super().__init__([omega_g, omega_c])

    def check_roles(self, roles):
        if not any(r.gold for r in roles):
            raise DataError("structure 'gold' needs a gold-standard column 'g'")

    def pair_slot(self, ra, rb):
        return 2 if (ra.gold or rb.gold) else 3


def _link(name):
    if name == "probit":
        return ndtr
    if name == "logit":
        return expit
    raise ValueError(f"link must be 'probit' or 'logit', got {name!r}")


class GoldRegression(CorrelationStructure):
    """Gold-standard structure whose gold-vs-coder correlations follow
    ``H(x_j' beta)`` for coder covariates ``x_j`` and a cdf link ``H``.

    Parameters are ordered ``(omega_c, beta_1, ..., beta_p)``.
    """

    keyword = "gold-regression"

    def __init__(self, covariates, coders=None, omega_c=OMEGA_START, beta=None, link="probit"):
        X = np.atleast_2d(np.asarray(covariates, dtype=float))
        self.X = X
        self.coders = list(coders) if coders is not None else [(1, j + 1) for j in range(len(X))]
        if len(self.coders) != len(X):
            raise ValueError("one covariate row per coder is required")
        self.link = link
        self._H = _link(link)
        beta = np.zeros(X.shape[1]) if beta is None else np.asarray(beta, float)
        self.names = ("inter",) + tuple(f"beta{k + 1}" for k in range(X.shape[1]))
        super().__init__(np.concatenate([[omega_c], beta]))

    def bounds(self):
        return [(0.0, OMEGA_UPPER)] + [(None, None)] * (self.n_params - 1)

    @property
    def beta(self):
        return self.params[1:]

    def gold_correlations(self):
        return self._H(self.X @ self.beta)

    def check_roles(self, roles):
        if not any(r.gold for r in roles):
            raise DataError("structure 'gold-regression' needs a gold-standard column 'g'")
        missing = {r.coder_key for r in roles if not r.gold} - set(self.coders)
        if missing:
            raise DataError(f"no covariates for coder(s) {sorted(missing)}")

    def slot_values(self):
        return np.concatenate([[0.0, 1.0, self.params[0]], self.gold_correlations()])

    def pair_slot(self, ra, rb):
        if ra.gold or rb.gold:
            coder = rb.coder_key if ra.gold else ra.coder_key
            return 3 + self.coders.index(coder)
        return 2

    def correlation_names(self):
        return ["inter"] + [f"gold.{c}" for _, c in self.coders]


class IntraInter(CorrelationStructure):
    """Per-coder intra-coder agreement across replicates plus one inter-coder
    parameter. Parameters are ``(intra.1, ..., intra.n, inter)``."""

    keyword = "intra-inter"

    def __init__(self, coders, params=None):
        self.coders = [c if isinstance(c, tuple) else (1, c) for c in coders]
        self.names = tuple(f"intra.{c}" for _, c in self.coders) + ("inter",)
        if params is None:
            params = np.full(len(self.names), OMEGA_START)
        super().__init__(params)

    def check_roles(self, roles):
        _no_gold(roles, self.keyword)
        _single_method(roles, self.keyword)

    def pair_slot(self, ra, rb):
        if ra.coder_key == rb.coder_key:
            return 2 + self.coders.index(ra.coder_key)
        return 2 + len(self.coders)


class MultiMethod(CorrelationStructure):
    """Gold standard, several methods, coders and replicates.

    Parameter groups, in order: ``gold.<m>`` for each method linked to the
    gold standard; ``intra.<m>.<c>`` for each coder with replicates;
    ``inter.<m>`` for each method with two or more coders; ``method`` for
    agreement across methods. Gold-standard pairs with unlinked methods are
    structural zeros.
    """

    keyword = "multi-method"

    def __init__(self, roles, gold_methods=(1,), params=None):
        roles = list(roles)
        methods = sorted({r.method for r in roles if not r.gold})
        has_gold = any(r.gold for r in roles)
        names = []
        if has_gold:
            self.gold_methods = [m for m in methods if m in set(gold_methods)]
            names += [f"gold.{m}" for m in self.gold_methods]
        else:
            self.gold_methods = []
        reps = {}
        for r in roles:
            if not r.gold:
                reps.setdefault(r.coder_key, set()).add(r.replicate)
        self.intra_keys = sorted(k for k, v in reps.items() if len(v) > 1)
        names += [f"intra.{m}.{c}" for m, c in self.intra_keys]
        coders_per = {m: {k for k in reps if k[0] == m} for m in methods}
        self.inter_methods = [m for m in methods if len(coders_per[m]) > 1]
        names += [f"inter.{m}" for m in self.inter_methods]
        self.cross = len(methods) > 1
        if self.cross:
            names.append("method")
        if not names:
            raise DataError("multi-method structure has no estimable correlation")
        self.names = tuple(names)
        self._slot = {n: 2 + i for i, n in enumerate(self.names)}
        if params is None:
            params = np.full(len(self.names), OMEGA_START)
        super().__init__(params)

    def pair_slot(self, ra, rb):
        if ra.gold or rb.gold:
            other = rb if ra.gold else ra
            return self._slot.get(f"gold.{other.method}", 0)
        if ra.method != rb.method:
            return self._slot["method"]
        if ra.coder == rb.coder:
            return self._slot[f"intra.{ra.method}.{ra.coder}"]
        return self._slot[f"inter.{ra.method}"]


STRUCTURES = {cls.keyword: cls for cls in
              (InterCoder, GoldStandard, GoldRegression, IntraInter, MultiMethod)}


def make_structure(keyword, data, covariates=None, link="probit", gold_methods=(1,)):
    """Structure template for ``data`` with every correlation starting at 0.5."""
    roles = data.roles
    if keyword == "inter":
        s = InterCoder()
    elif keyword == "gold":
        s = GoldStandard()
    elif keyword == "gold-regression":
        if covariates is None:
            raise ValueError("gold-regression needs a coder covariate matrix")
        s = GoldRegression(covariates, coders=data.coders, link=link)
    elif keyword == "intra-inter":
        s = IntraInter(data.coders)
    elif keyword == "multi-method":
        s = MultiMethod(roles, gold_methods=gold_methods)
    else:
        raise ValueError(f"unknown structure {keyword!r}; choose from {sorted(STRUCTURES)}")
    s.check_roles(roles)
    return s


def build_block(structure, roles):
    """Correlation block for one unit with the given observed column roles."""
    if len(roles) == 0:
        raise ValueError("pattern must be nonempty")
    return structure.block(list(roles))


def max_binary_correlation(p1, p2):
    """Largest Pearson correlation between Bernoulli(p1) and Bernoulli(p2)."""
    if not (0 < p1 < 1 and 0 < p2 < 1):
        raise ValueError("success probabilities must lie strictly inside (0, 1)")
    r = np.sqrt(p1 * (1 - p2) / (p2 * (1 - p1)))
    return float(min(r, 1.0 / r))


def check_frechet_bound(omega, p1, p2):
    """Warn when ``omega`` exceeds the attainable correlation of two binary margins."""
    if p1 == p2:
        return False
    bound = max_binary_correlation(p1, p2)
    if omega > bound:
        warnings.warn(f"correlation {omega:.4f} exceeds the Frechet-Hoeffding bound "
                      f"{bound:.4f} for binary margins ({p1:.3f}, {p2:.3f})")
        return True
    return False


@dataclass
class PackedParams:
    """Flat parameter vector ``(correlation part, margin part)`` with bounds.

    ``structure`` and ``margin`` are templates used for unpacking; ``margin``
    is ``None`` when only copula parameters are estimated.
    """

    theta: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    names: tuple
    n_corr: int
    structure: object = field(repr=False)
    margin: object = field(default=None, repr=False)

    def with_theta(self, theta):
        return PackedParams(np.asarray(theta, float).copy(), self.lower, self.upper,
                            self.names, self.n_corr, self.structure, self.margin)

    def unpack(self, theta=None):
        return unpack(self if theta is None else self.with_theta(theta))

    def in_bounds(self, theta):
        theta = np.asarray(theta, float)
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))

    def feasible(self, theta):
        """Box bounds plus the categorical simplex constraint."""
        if not self.in_bounds(theta):
            return False
        if isinstance(self.margin, Categorical):
            return Categorical.feasible_free(np.asarray(theta)[self.n_corr:])
        return True

    def scipy_bounds(self):
        return [(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi)
                for lo, hi in zip(self.lower, self.upper)]


def _as_arrays(bounds):
    lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds], float)
    hi = np.array([np.inf if b[1] is None else b[1] for b in bounds], float)
    return lo, hi


def pack(structure, margin=None):
    parts = [structure.params]
    bounds = list(structure.bounds())
    names = list(structure.names)
    if margin is not None:
        parts.append(margin.free_params)
        bounds += margin.bounds()
        names += list(margin.free_names)
    lo, hi = _as_arrays(bounds)
    return PackedParams(np.concatenate(parts), lo, hi, tuple(names),
                        structure.n_params, structure, margin)


def unpack(packed):
    k = packed.n_corr
    s = packed.structure.with_params(packed.theta[:k])
    m = None if packed.margin is None else packed.margin.with_free(packed.theta[k:])
    return s, m
