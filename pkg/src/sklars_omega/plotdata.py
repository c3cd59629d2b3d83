"""Tabular data behind agreement plots (no drawing)."""

import csv
import io

import numpy as np

from .data import DataError

__all__ = ["bland_altman", "histogram_density", "table_to_csv"]


def bland_altman(data, columns=(0, 1)):
    """``(mean, difference)`` of two score columns for units scored by both.

    Differences are first column minus second.
    """
    if data.n_columns < 2:
        raise DataError("a Bland-Altman table needs two score columns")
    a, b = (int(c) for c in columns)
    if a == b or not (0 <= a < data.n_columns and 0 <= b < data.n_columns):
        raise DataError("choose two distinct existing columns")
    both = data.mask[:, a] & data.mask[:, b]
    x, y = data.values[both, a], data.values[both, b]
    return np.column_stack([(x + y) / 2.0, x - y])


def histogram_density(fit, bins="auto", grid_size=201):
    """Histogram of the fitted scores and the fitted marginal density on a grid.

    Returns ``(edges, counts, grid, density)``; counts are density-scaled
    so they overlay the curve. For location families the grid contains the
    fitted location.
    """
    margin = fit.margin
    if margin is None or margin.discrete:
        raise DataError("a density overlay needs a continuous parametric margin")
    y = fit.fit_data.observed()
    counts, edges = np.histogram(y, bins=bins, density=True)
    lo = min(y.min(), float(margin.quantile(1e-4)))
    hi = max(y.max(), float(margin.quantile(1 - 1e-4)))
    grid = np.linspace(lo, hi, grid_size)
    if margin.tag in ("gaussian", "laplace", "t"):
        grid = np.union1d(grid, [margin.params[0]])
    return edges, counts, grid, margin.pdf(grid)


def table_to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()
