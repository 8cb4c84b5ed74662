"""Simulation and verification lab for the nondegenerate optical parametric
oscillator below and near threshold: positive-P and truncated-Wigner
trajectory ensembles, squeezing/entanglement spectra, triple correlations,
and the closed-form results they are checked against."""

from .core import (
    POSITIVE_P,
    WIGNER,
    CriticalParams,
    PhaseState,
    PhysicalParams,
    QuadratureSample,
    ScaledParams,
    classical_steady_state,
    critical_params,
    critical_rescale,
    derive_scaled,
    physical_from_scaled,
    quadratures_from_state,
)
from .errors import (
    EstimationError,
    FaultBudgetError,
    MissingRecordError,
    NopolabError,
    ParameterError,
    ScalingError,
    ThresholdDomainError,
)
from .sde import (
    IntegratorConfig,
    EnsembleResult,
    NoiseBlock,
    ObservablesPlan,
    gen_noise,
    run_critical_ensemble,
    run_ensemble,
    step_critical,
    step_plusp,
    step_wigner,
)
from .spectra import (
    SpectrumEstimate,
    TripleCorrEstimate,
    cross_spectrum,
    intracavity_moments,
    nonlinear_residual,
    squeezing_spectra,
    triple_spectrum,
)
from . import epr, oracle

__version__ = "0.1.0"
