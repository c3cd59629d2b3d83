import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sklars_omega import KrippendorffAlpha, SklarsOmega, check_agreement_data
from sklars_omega.data import DataError

from conftest import FIGURE1


def test_params_roundtrip():
    est = SklarsOmega(level="nominal", method="DT", bootit=50)
    params = est.get_params()
    assert params["method"] == "DT" and params["bootit"] == 50
    c = clone(est)
    assert c.get_params() == params
    c.set_params(confint="none")
    assert c.confint == "none"


def test_fit_plain_array():
    est = SklarsOmega(level="nominal", method="DT", confint="none").fit(FIGURE1)
    assert est.converged_
    assert est.omega_["inter"] == pytest.approx(0.894, abs=0.005)
    assert est.objective_ == pytest.approx(-40.42, abs=0.05)
    assert est.intervals_ is None
    assert set(est.coef_) == {"inter", "p1", "p2", "p3", "p4", "p5"}


def test_fit_with_sandwich_and_summary():
    est = SklarsOmega(level="nominal", method="DT", bootit=30, random_state=0).fit(FIGURE1)
    text = est.summary(call="fit(FIGURE1)")
    assert "Optimization converged at -40.42" in text
    assert "Near-Perfect Agreement" in text
    assert "p5" in text
    doc = est.to_dict()
    assert doc["intervals"]["kind"] == "sandwich"
    assert doc["coefficients"]["inter"]["lower"] < 0.894


def test_transform_and_score():
    est = SklarsOmega(level="nominal", method="DT", confint="none").fit(FIGURE1)
    Z = est.transform(FIGURE1)
    assert Z.shape == FIGURE1.shape
    assert np.array_equal(np.isnan(Z), np.isnan(FIGURE1))
    # category 1 maps to Phi^-1(p1 / 2)
    from scipy.stats import norm
    assert Z[0, 0] == pytest.approx(norm.ppf(est.fit_.reported()[1] / 2))
    assert est.score(FIGURE1) == pytest.approx(est.objective_)


def test_continuous_estimator(rng):
    X = rng.normal(size=(60, 3)) + rng.normal(size=(60, 1))
    est = SklarsOmega(level="interval", dist="gaussian").fit(X)
    assert est.intervals_.kind == "asymptotic"
    assert 0.3 < est.omega_["inter"] < 0.7
    assert np.allclose(np.corrcoef(est.transform(X).T)[0, 1], np.corrcoef(X.T)[0, 1], atol=0.02)


def test_influence_method():
    est = SklarsOmega(level="nominal", method="DT", confint="none").fit(FIGURE1)
    rep = est.influence(units=[5])
    assert rep.dfbeta_units[0, 0] == pytest.approx(-0.0791, abs=0.002)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        SklarsOmega().transform(FIGURE1)
    with pytest.raises(NotFittedError):
        KrippendorffAlpha().score(FIGURE1)


def test_check_agreement_data(figure1):
    assert check_agreement_data(figure1, "nominal") is figure1
    with pytest.raises(DataError):
        check_agreement_data(figure1, "interval")
    with pytest.raises(DataError):
        check_agreement_data(np.zeros(3))
    d = check_agreement_data([[1.0, 2.0], [2.0, 2.5]], "interval", columns=["g", "c.1.1"])
    assert d.roles[0].gold


def test_krippendorff_estimator():
    ka = KrippendorffAlpha(level="nominal", bootit=200, random_state=1).fit(FIGURE1)
    assert ka.alpha_ == pytest.approx(0.743, abs=5e-4)
    assert ka.interval_[1] <= 1.0
    assert ka.score(FIGURE1) == ka.alpha_
    ka2 = KrippendorffAlpha(level="nominal", metric="interval", bootit=0).fit(FIGURE1)
    assert ka2.alpha_ == pytest.approx(0.849, abs=5e-4)
    assert ka2.result_ is None
