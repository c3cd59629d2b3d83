"""Monte Carlo comparison of the copula estimator and Krippendorff's alpha.

A :class:`Scenario` fixes the margin, true agreement, design and fitting
method; :func:`run_scenario` simulates, fits, builds 95% intervals for both
estimators and summarizes bias, variance, MSE and coverage of the true
agreement value.
"""

import csv
import io
import warnings
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from ._parallel import run_replicates
from .alpha import alpha_bootstrap
from .data import DataError
from .estimation import FitError, fit
from .kernels import InfeasibleError
from .marginals import GaussianMixture, parse_margin_spec
from .simulate import level_for, simulate_data
from .structures import InterCoder
from .uncertainty import confint

__all__ = ["Scenario", "ScenarioResult", "EstimatorSummary", "SCENARIOS", "run_scenario",
           "parse_scenario", "load_scenario", "results_to_csv", "MAX_FAILED_FRACTION"]

MAX_FAILED_FRACTION = 0.05
_INTERVALS = ("asymptotic", "sandwich", "bootstrap")


@dataclass(frozen=True)
class Scenario:
    """One simulation design.

    ``margin`` is a margin spec string such as ``beta(1.5,2)``; ``interval``
    is ``asymptotic`` (ML), ``bootstrap`` (Gaussian method) or ``sandwich``;
    ``n_boot`` sizes every inner bootstrap (sandwich score sample,
    semiparametric bootstrap, alpha bootstrap).
    """

    name: str
    margin: str
    omega: float
    n_u: int
    n_c: int
    method: str
    interval: str
    reps: int = 200
    seed: int = 0
    n_boot: int = 200
    alpha_level: str = ""

    def __post_init__(self):
        if not 0 <= self.omega < 1:
            raise ValueError("omega must lie in [0, 1)")
        if min(self.n_u, self.n_c, self.reps, self.n_boot) < 1:
            raise ValueError("sizes and counts must be positive")
        if self.interval not in _INTERVALS:
            raise ValueError(f"interval must be one of {_INTERVALS}")
        if self.method.upper() not in ("ML", "DT", "CML", "SMP"):
            raise ValueError(f"unknown method {self.method!r}")
        parse_margin_spec(self.margin)

    @property
    def margin_object(self):
        return parse_margin_spec(self.margin)

    @property
    def family(self):
        m = self.margin_object
        return None if isinstance(m, GaussianMixture) else m.tag

    @property
    def metric(self):
        return self.alpha_level or level_for(self.margin_object)


SCENARIOS = {s.name: s for s in (
    Scenario("beta-1.5-2", "beta(1.5,2)", 0.70, 30, 3, "ML", "asymptotic"),
    Scenario("beta-13-2", "beta(13,2)", 0.95, 10, 5, "ML", "asymptotic"),
    Scenario("laplace", "laplace(12,4)", 0.65, 40, 2, "ML", "asymptotic"),
    Scenario("mixture", "mixture(0.3,0,1,0.7,3,0.5)", 0.80, 100, 4, "SMP", "bootstrap"),
    Scenario("categorical", "categorical(0.1,0.3,0.2,0.05,0.35)", 0.90, 20, 10, "DT",
             "sandwich"),
    Scenario("bernoulli", "bernoulli(0.7)", 0.40, 300, 6, "CML", "sandwich", reps=100),
)}


_INT_KEYS = {"n_u", "n_c", "reps", "seed", "n_boot"}


def parse_scenario(text):
    """Parse ``key = value`` lines (``#`` starts a comment) into a Scenario."""
    kv = {}
    valid = {f.name for f in fields(Scenario)}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in valid:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        kv[key] = int(value) if key in _INT_KEYS else float(value) if key == "omega" else value
    kv.setdefault("name", "custom")
    missing = {"margin", "omega", "n_u", "n_c", "method", "interval"} - kv.keys()
    if missing:
        raise ValueError(f"scenario lacks {sorted(missing)}")
    return Scenario(**kv)


def load_scenario(name_or_path, **overrides):
    """Registered scenario by name, or a scenario file; ``overrides`` replace fields."""
    if name_or_path in SCENARIOS:
        sc = SCENARIOS[name_or_path]
    else:
        with open(name_or_path, encoding="utf-8") as fh:
            sc = parse_scenario(fh.read())
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(sc, **overrides) if overrides else sc


@dataclass
class EstimatorSummary:
    median: float
    bias: float
    variance: float
    mse: float
    coverage: float

    @classmethod
    def from_replicates(cls, est, lower, upper, truth):
        est = np.asarray(est, float)
        covered = (np.asarray(lower) <= truth) & (truth <= np.asarray(upper))
        return cls(float(np.median(est)), float((est.mean() - truth) / truth),
                   float(est.var()), float(np.mean((est - truth) ** 2)),
                   float(covered.mean()))


@dataclass
class ScenarioResult:
    """Summaries for omega and alpha; ``bias`` is relative to the true value."""

    scenario: Scenario
    omega: EstimatorSummary
    alpha: EstimatorSummary
    n_ok: int
    n_failed: int
    estimates: np.ndarray

    def rows(self):
        sc = self.scenario
        for label, s in (("omega", self.omega), ("alpha", self.alpha)):
            yield {"scenario": sc.name, "margin": sc.margin, "true": sc.omega,
                   "estimator": label, **asdict(s), "reps": self.n_ok,
                   "failed": self.n_failed}


def _replicate(sc, rng):
    margin = sc.margin_object
    data = simulate_data(InterCoder(sc.omega), margin, sc.n_u, sc.n_c, seed=rng)
    inner = int(rng.integers(2**63 - 1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            f = fit(data, "inter", family=sc.family, method=sc.method)
            if not f.converged:
                return None
            ci = confint(f, sc.interval, n_b=sc.n_boot, seed=inner)
            a = alpha_bootstrap(data, sc.metric, n_b=sc.n_boot, seed=inner + 1)
        except (FitError, DataError, InfeasibleError, np.linalg.LinAlgError):
            return None
    return (f.theta[0], ci.lower[0], ci.upper[0], a.alpha, a.lower, a.upper)


def run_scenario(scenario, n_jobs=1):
    """Run every replicate of ``scenario`` and summarize both estimators.

    Raises :class:`FitError` when more than 5% of replicates fail.
    """
    out = run_replicates(lambda rng: _replicate(scenario, rng), scenario.reps,
                         scenario.seed, n_jobs)
    ok = np.array([r for r in out if r is not None], float).reshape(-1, 6)
    failed = scenario.reps - ok.shape[0]
    if failed > MAX_FAILED_FRACTION * scenario.reps:
        raise FitError(f"{failed} of {scenario.reps} replicates failed")
    truth = scenario.omega
    return ScenarioResult(
        scenario,
        EstimatorSummary.from_replicates(ok[:, 0], ok[:, 1], ok[:, 2], truth),
        EstimatorSummary.from_replicates(ok[:, 3], ok[:, 4], ok[:, 5], truth),
        ok.shape[0], failed, ok)


_CSV_FIELDS = ("scenario", "margin", "true", "estimator", "median", "bias", "variance",
               "mse", "coverage", "reps", "failed")


def results_to_csv(results):
    """CSV table with one row per scenario and estimator."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=_CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in results:
        for row in r.rows():
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
