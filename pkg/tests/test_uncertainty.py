import numpy as np
import pytest
from scipy import stats

from sklars_omega.estimation import fit
from sklars_omega.marginals import parse_margin_spec
from sklars_omega.simulate import simulate_data
from sklars_omega.structures import InterCoder
from sklars_omega.uncertainty import (BootstrapSample, bootstrap_interval, summarize_bootstrap, confint, full_bootstrap, hessian_fd,
                                      in_confidence_ellipsoid, observed_information,
                                      quantile_mcse, sandwich_variance, smp_bootstrap,
                                      wald_interval)


@pytest.fixture(scope="module")
def normal_fit():
    d = simulate_data(InterCoder(0.5), parse_margin_spec("normal(0, 1)"), 400, 3, seed=21)
    return fit(d, family="gaussian")


def test_hessian_of_quadratic():
    A = np.array([[3.0, 1.0], [1.0, 2.0]])
    H = hessian_fd(lambda x: 0.5 * x @ A @ x, np.array([0.4, -0.2]))
    assert np.allclose(H, A, atol=1e-6)


def test_hessian_one_sided_at_bound():
    f = lambda x: np.exp(x[0]) + x[0] * x[1] ** 2
    x = np.array([0.0, 1.0])
    H = hessian_fd(f, x, lower=np.array([0.0, -5]), upper=np.array([1.0, 5]))
    assert np.allclose(H, [[1, 2], [2, 0]], atol=1e-3)


def test_asymptotic_se_matches_known_formula(normal_fit):
    # var(rho_hat) = 2 (1 - rho)^2 (1 + (m - 1) rho)^2 / (n m (m - 1)) for the
    # equicorrelated normal model with unknown mean and variance
    rho, n, m = normal_fit.theta[0], 400, 3
    expected = np.sqrt(2 * (1 - rho) ** 2 * (1 + (m - 1) * rho) ** 2 / (n * m * (m - 1)))
    ci = confint(normal_fit, "asymptotic")
    assert ci.kind == "asymptotic"
    assert ci.se[0] == pytest.approx(expected, rel=0.05)
    lo, hi = ci.interval("inter")
    assert lo < 0.5 < hi


def test_information_is_positive_definite(normal_fit):
    info = observed_information(normal_fit)
    assert np.all(np.linalg.eigvalsh(info) > 0)
    assert in_confidence_ellipsoid(normal_fit, normal_fit.theta, information=info)
    far = normal_fit.theta + np.array([0.3, 0, 0])
    assert not in_confidence_ellipsoid(normal_fit, far, information=info)


def test_wald_interval():
    lo, hi = wald_interval(1.0, 0.5, 0.9)
    assert hi - 1.0 == pytest.approx(0.5 * stats.norm.ppf(0.95))
    assert 1.0 - lo == pytest.approx(hi - 1.0)


def test_gaussian_bootstrap_interval_and_mcse(rng):
    s = rng.normal(2.0, 0.5, size=400)
    lo, hi, m_lo, m_hi = bootstrap_interval(2.1, s, 0.95, "gaussian")
    z = stats.norm.ppf(0.975)
    assert lo == pytest.approx(2.1 - z * s.std(ddof=1))
    assert m_lo == m_hi == pytest.approx(z * s.std(ddof=1) / np.sqrt(2 * 399))


def test_quantile_mcse_matches_normal_theory(rng):
    n = 4000
    s = rng.standard_normal(n)
    q = np.quantile(s, 0.025, method="median_unbiased")
    theory = np.sqrt(0.025 * 0.975 / n) / stats.norm.pdf(stats.norm.ppf(0.025))
    assert quantile_mcse(s, 0.025, q) == pytest.approx(theory, rel=0.15)
    assert quantile_mcse(np.ones(50), 0.5, 1.0) == 0.0


def test_quantile_mcse_tracks_replication_spread():
    # spread of the 2.5% quantile across independent samples
    qs = [np.quantile(np.random.default_rng(s).standard_normal(1000), 0.025,
                      method="median_unbiased") for s in range(300)]
    s = np.random.default_rng(999).standard_normal(1000)
    est = quantile_mcse(s, 0.025, np.quantile(s, 0.025, method="median_unbiased"))
    assert est == pytest.approx(np.std(qs), rel=0.3)


def test_bootstrap_interval_errors(rng):
    with pytest.raises(ValueError):
        bootstrap_interval(0, rng.normal(size=10), method="quantile")
    with pytest.raises(ValueError):
        bootstrap_interval(0, [1.0], method="gaussian")
    with pytest.raises(ValueError):
        bootstrap_interval(0, rng.normal(size=50), method="bca")
    with pytest.raises(ValueError):
        bootstrap_interval(0, rng.normal(size=50), level=1.0)


def test_sandwich_reproducible_and_parallel_invariant(figure1_dt):
    a = sandwich_variance(figure1_dt, n_b=40, seed=3)
    b = sandwich_variance(figure1_dt, n_b=40, seed=3, n_jobs=2)
    assert np.allclose(a, b, rtol=0, atol=0)
    assert np.all(np.linalg.eigvalsh(a) > 0)


def test_sandwich_rejects_ml(normal_fit):
    with pytest.raises(ValueError):
        sandwich_variance(normal_fit, n_b=5)
    with pytest.raises(ValueError):
        smp_bootstrap(normal_fit, n_b=5)


def test_reported_scale_includes_last_category(figure1_dt):
    ci = confint(figure1_dt, "sandwich", n_b=60, seed=1)
    assert ci.names[-1] == "p5"
    J = figure1_dt.reported_jacobian()
    assert np.all(J[-1, 1:] == -1)
    assert ci.covariance.shape == (6, 6)
    # the last category's variance equals the variance of minus the sum of the others
    C = ci.covariance
    assert C[-1, -1] == pytest.approx(C[1:5, 1:5].sum(), rel=1e-9)


def test_full_bootstrap_reproducible(normal_fit):
    a = full_bootstrap(normal_fit, n_b=12, seed=8)
    b = full_bootstrap(normal_fit, n_b=12, seed=8, n_jobs=2)
    assert a.n_failed == 0
    assert np.array_equal(a.theta, b.theta)


def test_bootstrap_confint_and_truncation(figure1_dt):
    ci = confint(figure1_dt, "bootstrap", n_b=30, seed=2, interval="quantile")
    assert ci.kind == "bootstrap-quantile"
    assert ci.sample.shape == (ci.n_b, 6)
    assert ci.mcse.shape == (6, 2)
    # same replicates, Gaussian construction
    g = summarize_bootstrap(figure1_dt, BootstrapSample(ci.sample[:, :-1], 30, 0))
    t = g.truncate()
    assert t.truncated and t.upper[0] == min(g.upper[0], 1.0)
    assert t.upper[1] == g.upper[1]


def test_confint_argument_checks(normal_fit):
    with pytest.raises(ValueError):
        confint(normal_fit, "jackknife")
    with pytest.raises(ValueError):
        confint(normal_fit, level=95)
