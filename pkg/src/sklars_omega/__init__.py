"""Agreement analysis with Gaussian-copula models and Krippendorff's alpha."""

__version__ = "0.1.0"

from .alpha import AlphaResult, alpha_bootstrap, krippendorff_alpha
from .data import AgreementData, ColumnRole, DataError, DegenerateDataError, parse_csv, read_csv, write_csv
from .diagnostics import alpha_influence, influence
from .estimation import Fit, FitError, FitOptions, fit, interpret, model_probabilities
from .estimator import KrippendorffAlpha, SklarsOmega, check_agreement_data
from .marginals import parse_margin_spec
from .simulate import simulate_data
from .structures import make_structure
from .uncertainty import confint

__all__ = [
    "AgreementData", "AlphaResult", "ColumnRole", "DataError", "DegenerateDataError", "Fit",
    "FitError", "FitOptions", "KrippendorffAlpha", "SklarsOmega", "alpha_bootstrap",
    "alpha_influence", "check_agreement_data", "confint", "fit", "influence", "interpret",
    "krippendorff_alpha", "make_structure", "model_probabilities", "parse_csv",
    "parse_margin_spec", "read_csv", "simulate_data", "write_csv",
]
