import numpy as np
import pytest

from sklars_omega.diagnostics import influence


@pytest.fixture(scope="module")
def report(figure1_dt):
    return influence(figure1_dt, drop_units=[5, 10], drop_coders=[2, 3])


def test_unit_dfbetas(report):
    # published DFBETAs for units 6 and 11
    assert report.dfbeta_units[0] == pytest.approx(
        [-0.0791, 0.0344, 0.0528, -0.0552, -0.0586, 0.0265], abs=0.002)
    assert report.dfbeta_units[1] == pytest.approx(
        [0.0110, 0.0455, -0.0076, -0.0163, -0.0151, -0.0064], abs=0.002)


def test_coder_dfbetas(report):
    # published DFBETAs for coders 2 and 3
    assert report.dfbeta_coders[0, 0] == pytest.approx(0.0580, abs=0.002)
    assert report.dfbeta_coders[1, 0] == pytest.approx(-0.0009, abs=0.002)


def test_relative_change(report, figure1_dt):
    w = figure1_dt.omega["inter"]
    assert report.delta_units[0, 0] == pytest.approx(abs(report.dfbeta_units[0, 0]) / w)
    assert report.delta_units[0, 0] == pytest.approx(0.09, abs=0.02)
    lo_u, lo_c = report.leave_out_estimates(figure1_dt)
    assert lo_u[0, 0] == pytest.approx(report.refits[("unit", 5)].omega["inter"])


def test_dfbetas_sum_to_zero_over_probabilities(report):
    # probabilities sum to one in every fit
    assert np.allclose(report.dfbeta_units[:, 1:].sum(axis=1), 0, atol=1e-9)


def test_bad_unit(figure1_dt):
    with pytest.raises(IndexError):
        influence(figure1_dt, drop_units=[12])
