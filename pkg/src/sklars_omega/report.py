"""Plain-text summaries and JSON-ready result documents."""

import json
import math

import numpy as np

from .estimation import interpret

__all__ = ["fit_summary", "fit_document", "to_json", "format_table"]


def _num(v):
    """JSON-safe float (non-finite values become ``None``)."""
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def format_table(rows, header, first=""):
    """Right-aligned text table; ``rows`` are ``(label, [cells])``."""
    cells = [[first] + list(header)] + [[label] + list(vals) for label, vals in rows]
    widths = [max(len(r[j]) for r in cells) for j in range(len(cells[0]))]
    lines = []
    for r in cells:
        left = r[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append(" ".join([left] + rest).rstrip())
    return "\n".join(lines)


def _fmt(v):
    return "NA" if v is None or not np.isfinite(v) else f"{v:.5g}" if abs(v) >= 1e4 else f"{v:.5f}"


def fit_summary(fit, intervals=None, call=None, control=None):
    """Multi-section summary: call, convergence, control parameters and the
    coefficient table (with interval bounds when available)."""
    out = []
    if call:
        out += ["Call:", "", call, ""]
    out += ["Convergence:", ""]
    if fit.converged:
        out.append(f"Optimization converged at {fit.loglik:.2f} after {fit.n_iter} iterations.")
    else:
        out.append(f"Optimization failed to converge after {fit.n_iter} iterations "
                   f"({fit.message}); objective {fit.loglik:.2f}.")
    out.append("")
    control = dict(control or {})
    control.setdefault("method", fit.method)
    control.setdefault("structure", fit.settings["structure"])
    if fit.method != "SMP":
        control.setdefault("dist", fit.settings["family"])
    width = max(len(k) for k in control)
    out += ["Control parameters:", ""]
    out += [f"{k.ljust(width)} {v}" for k, v in control.items()]
    out += ["", "Coefficients:", ""]
    est = fit.reported()
    if intervals is not None:
        rows = [(n, [_fmt(e), _fmt(lo), _fmt(hi)]) for n, e, lo, hi in
                zip(fit.reported_names, est, intervals.lower, intervals.upper)]
        out.append(format_table(rows, ["Estimate", "Lower", "Upper"]))
    else:
        out.append(format_table([(n, [_fmt(e)]) for n, e in zip(fit.reported_names, est)],
                                ["Estimate"]))
    out.append("")
    for name, w in fit.omega.items():
        if name.startswith("beta"):
            continue
        out.append(f"{name}: {interpret(w)}")
    return "\n".join(out) + "\n"


def fit_document(fit, intervals=None, config=None):
    """Dictionary with estimates, intervals, MCSEs and convergence metadata."""
    coefs = {}
    est = fit.reported()
    for k, name in enumerate(fit.reported_names):
        row = {"estimate": _num(est[k])}
        if intervals is not None:
            row["lower"] = _num(intervals.lower[k])
            row["upper"] = _num(intervals.upper[k])
            se = intervals.se
            row["se"] = None if se is None else _num(se[k])
            if intervals.mcse is not None:
                row["mcse_lower"] = _num(intervals.mcse[k, 0])
                row["mcse_upper"] = _num(intervals.mcse[k, 1])
        coefs[name] = row
    doc = {
        "method": fit.method,
        "structure": fit.settings["structure"],
        "dist": None if fit.method == "SMP" else fit.settings["family"],
        "convergence": {"converged": bool(fit.converged), "objective": _num(fit.loglik),
                        "iterations": int(fit.n_iter), "message": fit.message},
        "n_units": int(fit.data.n_units),
        "n_units_used": int(fit.fit_data.n_units),
        "coefficients": coefs,
        "interpretation": {n: interpret(w) for n, w in fit.omega.items()
                           if not n.startswith("beta")},
    }
    if intervals is not None:
        doc["intervals"] = {"kind": intervals.kind, "level": intervals.level,
                            "n_b": int(intervals.n_b), "n_failed": int(intervals.n_failed),
                            "truncated": bool(intervals.truncated)}
    if config is not None:
        doc["config"] = config
    return doc


def to_json(doc):
    """Deterministic JSON text (sorted keys, full float precision)."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
