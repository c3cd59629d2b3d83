import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sklars_omega.data import (AgreementData, ColumnRole, DataError, DegenerateDataError,
                               observed_pattern, parse_csv, read_csv, remap_categories, write_csv)


def test_column_grammar():
    assert ColumnRole.parse("g").gold
    r = ColumnRole.parse("c.3.2")
    assert (r.method, r.coder, r.replicate) == (1, 3, 2)
    r = ColumnRole.parse(" m.2.1.4 ")
    assert (r.method, r.coder, r.replicate) == (2, 1, 4)
    assert r.coder_key == (2, 1)
    assert ColumnRole.parse("g").coder_key is None
    for bad in ("c.1", "gold", "m.1.1", "c.0.1", "x.1.1"):
        with pytest.raises(DataError):
            ColumnRole.parse(bad)


def test_parse_missing_tokens_and_blank_lines():
    text = "c.1.1,c.2.1\n1,NA\n\n2,.\n,3\nna,1\n"
    d = parse_csv(text, "nominal")
    assert d.n_units == 4
    assert d.mask.sum() == 4
    assert observed_pattern(d, 1).tolist() == [0]


@pytest.mark.parametrize("text,msg", [
    ("", "empty"),
    ("c.1.1,c.2.1\n", "zero usable"),
    ("c.1.1,c.1.1\n1,2\n", "duplicate"),
    ("c.1.1,c.2.1\n1,2,3\n", "cells"),
    ("c.1.1,c.2.1\n1,abc\n", "non-numeric"),
    ("c.1.1,foo\n1,2\n", "malformed"),
    ("g,g\n1,2\n", "duplicate"),
    ("g\n1\n", "no coder"),
    ("c.1.1,c.2.1\n1,2\nNA,NA\n", "no observed"),
])
def test_parse_errors(text, msg):
    with pytest.raises(DataError, match=msg):
        parse_csv(text, "nominal")


def test_nonfinite_scores_rejected():
    with pytest.raises(DataError):
        parse_csv("c.1.1,c.2.1\n1,inf\n", "interval")


def test_categorical_validation():
    with pytest.raises(DataError):
        AgreementData([[1.5, 2]], level="nominal", n_categories=3)
    with pytest.raises(DataError):
        AgreementData([[1, 4]], level="nominal", n_categories=3)
    with pytest.raises(DegenerateDataError):
        AgreementData([[1, 1], [1, 1]], level="nominal")


def test_noncontiguous_labels_are_remapped():
    d = parse_csv("c.1.1,c.2.1\n10,20\n20,40\n", "ordinal")
    assert d.categories == (10.0, 20.0, 40.0)
    assert d.values.tolist() == [[1, 2], [2, 3]]
    vals, labels = remap_categories(np.array([[0.5, np.nan], [2.0, 0.5]]))
    assert labels == (0.5, 2.0)
    assert np.isnan(vals[0, 1]) and vals[1, 0] == 2


def test_degenerate_data():
    d = AgreementData([[1, np.nan], [2, 3], [4, np.nan]], level="interval")
    with pytest.raises(DegenerateDataError):
        d.check_informative()
    const = AgreementData([[1.0, 1.0], [1.0, 1.0]], level="interval")
    with pytest.raises(DegenerateDataError):
        const.check_informative()


def test_drop_units_and_coders(figure1):
    d = figure1.drop_units([0, 11])
    assert d.n_units == 10
    d = figure1.drop_coders([1])
    assert d.n_columns == 3
    assert d.n_units == 12
    with pytest.raises(DegenerateDataError):
        figure1.drop_coders([1, 2, 3, 4])
    with pytest.raises(DegenerateDataError):
        figure1.drop_units(range(12))
    assert figure1.informative_units(2).tolist() == list(range(11))


def test_immutable(figure1):
    with pytest.raises(ValueError):
        figure1.values[0, 0] = 3


def test_multi_method_names():
    roles = [ColumnRole(gold=True), ColumnRole(method=1, coder=1), ColumnRole(method=2, coder=1)]
    d = AgreementData([[1.0, 2.0, 3.0], [2.0, 2.5, 1.0]], roles, "interval")
    assert d.multi_method
    assert d.column_names == ("g", "m.1.1.1", "m.2.1.1")
    assert d.coders == [(1, 1), (2, 1)]


def test_read_csv(tmp_path, figure1):
    path = tmp_path / "x.csv"
    path.write_text(write_csv(figure1))
    assert read_csv(path, "nominal") == figure1


cells = st.one_of(st.none(), st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=False))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(cells, min_size=3, max_size=3), min_size=1, max_size=8))
def test_csv_roundtrip(rows):
    values = np.array([[np.nan if c is None else c for c in r] for r in rows], dtype=float)
    values = values[~np.all(np.isnan(values), axis=1)]
    if values.shape[0] == 0:
        return
    d = AgreementData(values, level="interval")
    back = parse_csv(write_csv(d), "interval")
    assert back == d
    assert np.array_equal(back.values[back.mask], d.values[d.mask])
