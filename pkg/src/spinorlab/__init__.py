"""Numerical laboratory for the spinorial energy functional on the flat 3-torus.

The state of the lab is a pair (g, phi): a Riemannian metric and a unit
spinor field on T^3 = [0,1)^3, sampled on a periodic N^3 grid.  The package
provides the discrete energy, its exact gradient under the unit-norm
constraint, the gauged (DeTurck), volume-normalized and mapping flows, and
tooling to measure Lojasiewicz-type decay rates along trajectories.

All heavy numerics run in float64; jax is switched to 64-bit mode here,
before any submodule traces a computation.
"""

import jax as _jax

_jax.config.update("jax_enable_x64", True)

from .grid import (  # noqa: E402
    Grid,
    DefinitenessError,
    christoffel,
    divergence,
    killing_operator,
    lie_derivative_metric,
    volume_element,
    total_volume,
    l2_inner,
    l2_norm,
    sobolev_norm,
)
from .spin import (  # noqa: E402
    CliffordModel,
    Configuration,
    TangentSection,
    ChartDomainError,
    bg_operators,
    spin_covariant_derivative,
    clifford_two_form,
    chart_to,
    chart_from,
)
from .diffeo import DiffeoError, pushforward, pullback  # noqa: E402
from .energy import (  # noqa: E402
    GradientResult,
    GaugeContext,
    energy,
    gradient,
    gradient_scaling_q2_check,
    lie_derivative,
    lie_derivative_adjoint,
    gauge_vector,
    gauged_gradient,
    volume_normalized_gradient,
    loja_ratio,
)
from .flows import (  # noqa: E402
    FlowKind,
    IntegratorConfig,
    DiffeoState,
    FlowTrace,
    MetricTrajectory,
    step,
    run,
    mapping_rhs,
    reconstruct_gauged,
    project_to_slice,
)
from .decay import (  # noqa: E402
    DecayFit,
    ThetaEstimate,
    FitError,
    fit_energy_decay,
    fit_gradient_decay,
    estimate_theta,
    rate_laws,
    verify_decay_lemma,
)

__all__ = [
    "Grid",
    "DefinitenessError",
    "christoffel",
    "divergence",
    "killing_operator",
    "lie_derivative_metric",
    "volume_element",
    "total_volume",
    "l2_inner",
    "l2_norm",
    "sobolev_norm",
    "CliffordModel",
    "Configuration",
    "TangentSection",
    "ChartDomainError",
    "bg_operators",
    "spin_covariant_derivative",
    "clifford_two_form",
    "chart_to",
    "chart_from",
    "DiffeoError",
    "pushforward",
    "pullback",
    "GradientResult",
    "GaugeContext",
    "energy",
    "gradient",
    "gradient_scaling_q2_check",
    "lie_derivative",
    "lie_derivative_adjoint",
    "gauge_vector",
    "gauged_gradient",
    "volume_normalized_gradient",
    "loja_ratio",
    "FlowKind",
    "IntegratorConfig",
    "DiffeoState",
    "FlowTrace",
    "MetricTrajectory",
    "step",
    "run",
    "mapping_rhs",
    "reconstruct_gauged",
    "project_to_slice",
    "DecayFit",
    "ThetaEstimate",
    "FitError",
    "fit_energy_decay",
    "fit_gradient_decay",
    "estimate_theta",
    "rate_laws",
    "verify_decay_lemma",
]
