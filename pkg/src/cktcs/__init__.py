"""Trajectory-coherent states of the Caldirola-Kanai damped oscillator.

Closed-form classical and variational solutions, Fock and coherent states
built with time-dependent ladder operators, averages and uncertainty
products, and numerical oracles that check them.
"""

__version__ = "0.1.0"

from .core import (
    BranchError,
    FocalPointError,
    OscParams,
    ParameterError,
    Regime,
    classify_regime,
    kernels,
    make_params,
)
from .dynamics import PhaseState, action, integrate_oracle, phase_state, phase_states, trajectory, variational
from .observables import (
    expectations_cs,
    expectations_tcs,
    g_function,
    minimization_times,
    solve_mu_for_time,
    uncertainty_products,
    variance_closed_theta_mu,
)
from .states import (
    Grid,
    PolyGaussian,
    StateSpec,
    apply_lowering,
    apply_raising,
    coherent_tcs,
    evaluate,
    fock_tcs,
    ground_tcs,
    inner_product,
    norm,
)
from .verify import VerificationSummary, default_report, invariant_suite, schrodinger_residual

__all__ = [
    "BranchError", "FocalPointError", "Grid", "OscParams", "ParameterError", "PhaseState",
    "PolyGaussian", "Regime", "StateSpec", "VerificationSummary", "action", "apply_lowering",
    "apply_raising", "classify_regime", "coherent_tcs", "default_report", "evaluate",
    "expectations_cs", "expectations_tcs", "fock_tcs", "g_function", "ground_tcs",
    "inner_product", "integrate_oracle", "invariant_suite", "kernels", "make_params",
    "minimization_times", "norm", "phase_state", "phase_states", "schrodinger_residual",
    "solve_mu_for_time", "trajectory", "uncertainty_products", "variance_closed_theta_mu",
    "variational",
]
