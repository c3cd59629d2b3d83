"""Agreement datasets: column roles, CSV grammar, validation.

Header tokens follow a small grammar:

``g``
    gold-standard column (at most one)
``c.<coder>.<replicate>``
    score from a coder of the (single) method
``m.<method>.<coder>.<replicate>``
    score in multi-method studies

Missing cells may be empty or one of ``NA``, ``na``, ``.``.
"""

import csv
import io
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ColumnRole", "AgreementData", "DataError", "DegenerateDataError",
    "parse_csv", "read_csv", "write_csv", "observed_pattern", "LEVELS",
]

LEVELS = ("nominal", "ordinal", "interval", "ratio")
CATEGORICAL_LEVELS = ("nominal", "ordinal")
MISSING_TOKENS = frozenset({"", "NA", "na", "."})

_GOLD_RE = re.compile(r"^g$")
_CODER_RE = re.compile(r"^c\.(\d+)\.(\d+)$")
_METHOD_RE = re.compile(r"^m\.(\d+)\.(\d+)\.(\d+)$")


class DataError(ValueError):
    """Malformed input data (header, cells, shape)."""


class DegenerateDataError(DataError):
    """Data are well formed but carry no information about agreement."""


@dataclass(frozen=True, order=True)
class ColumnRole:
    """Role of one score column.

    A gold-standard column has ``gold=True`` and ignores the other fields.
    """

    gold: bool = False
    method: int = 1
    coder: int = 1
    replicate: int = 1

    def __post_init__(self):
        if self.gold:
            object.__setattr__(self, "method", 0)
            object.__setattr__(self, "coder", 0)
            object.__setattr__(self, "replicate", 0)
        elif min(self.method, self.coder, self.replicate) < 1:
            raise DataError("method, coder and replicate indices must be >= 1")

    @classmethod
    def parse(cls, token):
        token = token.strip()
        if _GOLD_RE.match(token):
            return cls(gold=True)
        m = _CODER_RE.match(token)
        if m:
            return cls(coder=int(m.group(1)), replicate=int(m.group(2)))
        m = _METHOD_RE.match(token)
        if m:
            return cls(method=int(m.group(1)), coder=int(m.group(2)),
                       replicate=int(m.group(3)))
        raise DataError(f"malformed column name {token!r}")

    @property
    def coder_key(self):
        """``(method, coder)`` identifying the scorer, ``None`` for gold."""
        return None if self.gold else (self.method, self.coder)

    def name(self, multi_method=False):
        if self.gold:
            return "g"
        if multi_method:
            return f"m.{self.method}.{self.coder}.{self.replicate}"
        return f"c.{self.coder}.{self.replicate}"


class AgreementData:
    """Units-by-columns score matrix with column roles and a missingness mask.

    Parameters
    ----------
    values : array-like, shape (n_units, n_columns)
        Scores; ``nan`` marks a missing cell.
    roles : sequence of ColumnRole, optional
        Defaults to one replicate per coder, ``c.1.1, c.2.1, ...``.
    level : {"nominal", "ordinal", "interval", "ratio"}
    n_categories : int, optional
        Category count ``K`` for nominal/ordinal data; defaults to the
        largest observed category.
    categories : sequence, optional
        Original labels of categories ``1..K`` after a remapping pass.

    Instances are treated as immutable.
    """

    def __init__(self, values, roles=None, level="interval", n_categories=None,
                 categories=None):
        values = np.array(values, dtype=float)
        if values.ndim != 2:
            raise DataError("values must be a 2-D array (units x columns)")
        n_u, n_col = values.shape
        if roles is None:
            roles = [ColumnRole(coder=j + 1) for j in range(n_col)]
        roles = tuple(roles)
        if len(roles) != n_col:
            raise DataError("one role per column is required")
        if level not in LEVELS:
            raise DataError(f"level must be one of {LEVELS}, got {level!r}")
        if len(set(roles)) != len(roles):
            raise DataError("duplicate column roles")
        if sum(r.gold for r in roles) > 1:
            raise DataError("at most one gold-standard column is allowed")
        if not any(not r.gold for r in roles):
            raise DataError("no coder score columns")
        if n_u == 0:
            raise DataError("zero usable units")

        mask = ~np.isnan(values)
        if np.any(~np.isfinite(values[mask])):
            raise DataError("scores must be finite")
        empty = np.flatnonzero(mask.sum(axis=1) == 0)
        if empty.size:
            raise DataError(f"unit(s) {list(empty + 1)} have no observed scores")

        if level in CATEGORICAL_LEVELS:
            obs = values[mask]
            if np.any(obs != np.round(obs)) or np.any(obs < 1):
                raise DataError("categorical scores must be integers 1..K")
            top = int(obs.max())
            if n_categories is None:
                n_categories = top
            elif n_categories < top:
                raise DataError(f"n_categories={n_categories} but category {top} observed")
            if n_categories < 2:
                raise DegenerateDataError("categorical data need at least two categories")
        else:
            n_categories = None

        self.values = values
        self.values.setflags(write=False)
        self.mask = mask
        self.mask.setflags(write=False)
        self.roles = roles
        self.level = level
        self.n_categories = n_categories
        self.categories = tuple(categories) if categories is not None else None

    # -- basic shape --------------------------------------------------------
    @property
    def n_units(self):
        return self.values.shape[0]

    @property
    def n_columns(self):
        return self.values.shape[1]

    @property
    def is_categorical(self):
        return self.level in CATEGORICAL_LEVELS

    @property
    def multi_method(self):
        return len({r.method for r in self.roles if not r.gold}) > 1

    @property
    def column_names(self):
        mm = self.multi_method
        return tuple(r.name(mm) for r in self.roles)

    @property
    def coders(self):
        """Sorted ``(method, coder)`` keys of all scorers."""
        return sorted({r.coder_key for r in self.roles if not r.gold})

    def observed(self):
        """All observed scores, row-major."""
        return self.values[self.mask]

    def scores_per_unit(self):
        return self.mask.sum(axis=1)

    def __repr__(self):
        return (f"AgreementData(n_units={self.n_units}, columns={list(self.column_names)}, "
                f"level={self.level!r}, n_observed={int(self.mask.sum())})")

    def __eq__(self, other):
        if not isinstance(other, AgreementData):
            return NotImplemented
        return (self.roles == other.roles and self.level == other.level
                and self.n_categories == other.n_categories
                and np.array_equal(self.mask, other.mask)
                and np.array_equal(self.values[self.mask], other.values[other.mask]))

    __hash__ = None

    # -- validation ----------------------------------------------------------
    def check_informative(self):
        """Raise unless at least two units carry two or more scores."""
        if np.sum(self.scores_per_unit() >= 2) < 2:
            raise DegenerateDataError(
                "fewer than two units with two or more observed scores")
        if not self.is_categorical and np.ptp(self.observed()) == 0:
            raise DegenerateDataError("all observed scores are equal")
        return self

    # -- derived datasets ----------------------------------------------------
    def _replace(self, values, roles=None, n_categories="keep"):
        return AgreementData(
            values, self.roles if roles is None else roles, self.level,
            self.n_categories if n_categories == "keep" else n_categories,
            self.categories)

    def subset_units(self, units):
        return self._replace(self.values[np.asarray(units, dtype=int)])

    def drop_units(self, units):
        keep = np.setdiff1d(np.arange(self.n_units), np.asarray(list(units), dtype=int))
        if keep.size == 0:
            raise DegenerateDataError("dropping these units leaves no data")
        return self.subset_units(keep)

    def drop_columns(self, columns):
        keep = [j for j in range(self.n_columns) if j not in set(columns)]
        if not keep:
            raise DegenerateDataError("dropping these columns leaves no data")
        values = self.values[:, keep]
        rows = (~np.isnan(values)).any(axis=1)
        if not np.any(rows):
            raise DegenerateDataError("dropping these columns leaves no data")
        return AgreementData(values[rows], [self.roles[j] for j in keep], self.level,
                             self.n_categories, self.categories)

    def drop_coders(self, coders):
        """Drop every column (all replicates) of the given coders.

        Coders are ``(method, coder)`` tuples or plain coder numbers of
        method 1. Units left without scores are removed.
        """
        keys = {(1, c) if np.isscalar(c) else tuple(c) for c in coders}
        cols = [j for j, r in enumerate(self.roles) if r.coder_key in keys]
        return self.drop_columns(cols)

    def informative_units(self, min_scores=2):
        """Indices of units with at least ``min_scores`` observed scores."""
        return np.flatnonzero(self.scores_per_unit() >= min_scores)

    def with_values(self, values):
        """Same roles/level/K with new values (missing where ``nan``)."""
        return self._replace(values)


def observed_pattern(data, unit):
    """Observed column indices of one unit, in header order."""
    if not 0 <= unit < data.n_units:
        raise IndexError(f"unit {unit} out of range")
    return np.flatnonzero(data.mask[unit])


def remap_categories(values):
    """Map the distinct observed values onto 1..K; return ``(values, labels)``."""
    values = np.asarray(values, dtype=float)
    mask = ~np.isnan(values)
    labels = np.unique(values[mask])
    out = np.full(values.shape, np.nan)
    out[mask] = np.searchsorted(labels, values[mask]) + 1
    return out, tuple(labels.tolist())


def _parse_cell(token, row, col):
    token = token.strip()
    if token in MISSING_TOKENS:
        return np.nan
    try:
        return float(token)
    except ValueError:
        raise DataError(f"non-numeric cell {token!r} at row {row}, column {col}") from None


def parse_csv(text, level="nominal", n_categories=None):
    """Parse CSV text (or a text stream) into :class:`AgreementData`.

    Categorical scores that are not coded ``1..K`` contiguously are remapped;
    the original labels are kept in ``data.categories``.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    rows = [r for r in csv.reader(stream) if any(c.strip() for c in r)]
    if not rows:
        raise DataError("empty input")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise DataError("duplicate column name")
    roles = [ColumnRole.parse(h) for h in header]
    body = rows[1:]
    if not body:
        raise DataError("zero usable units")
    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=1):
        if len(row) != len(header):
            raise DataError(f"row {i} has {len(row)} cells, expected {len(header)}")
        for j, tok in enumerate(row):
            values[i - 1, j] = _parse_cell(tok, i, j + 1)

    categories = None
    if level in CATEGORICAL_LEVELS and n_categories is None:
        obs = values[~np.isnan(values)]
        if obs.size and np.all(obs == np.round(obs)):
            labels = np.unique(obs)
            if not np.array_equal(labels, np.arange(1, labels.size + 1)):
                values, categories = remap_categories(values)
        elif obs.size:
            values, categories = remap_categories(values)
    return AgreementData(values, roles, level, n_categories, categories)


def read_csv(path, level="nominal", n_categories=None):
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_csv(fh, level, n_categories)


def _format_value(v, categorical):
    if np.isnan(v):
        return "NA"
    if categorical:
        return str(int(v))
    return repr(float(v))


def write_csv(data):
    """Serialize with the same column grammar ``parse_csv`` reads."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(data.column_names)
    for row in data.values:
        writer.writerow([_format_value(v, data.is_categorical) for v in row])
    return buf.getvalue()
