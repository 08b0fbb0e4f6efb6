"""Budgeted surrogates for quantum algorithmic information.

Modules:
    codec        prefix-free codes for naturals, rationals, gaussian rationals and sparse objects
    linalg       matrix algebra on qubit spaces (partial traces, M-reduction, PSD checks)
    universal    the budgeted universal semi-density matrix, entropy, conditional models
    quantum      POVMs, elementary unitaries, Haar sampling, the cloning pipeline
    info         test families, deficiency, mutual information and test transport
    experiments  theorem harnesses producing verdict reports
"""
from .universal import DEFAULT_BUDGET, build_mu, entropy

__all__ = ["DEFAULT_BUDGET", "build_mu", "entropy"]
__version__ = "0.1.0"
