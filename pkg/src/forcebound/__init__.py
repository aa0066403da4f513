"""Quantum limits to force estimation on a monitored harmonic oscillator.

Computes the quantum Cramer-Rao bound on waveform (force) estimation
error, simulates standard and quantum-noise-cancellation measurement
records, and runs optimal smoothing estimators that saturate the bound.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    FisherMatrices,
    SingularFisherError,
    SingularPriorError,
    bound_report,
    fisher_classical_matrix,
    fisher_matrices,
    fisher_quantum_matrix,
    matrix_point_bound,
    point_qcrb,
    probe_backaction_spectrum,
    spectral_qcrb,
    sql_spectrum,
    weighted_cost_bound,
)
from .estimate import (
    CovarianceError,
    EstimationResult,
    KalmanResult,
    SmootherResult,
    StateSpaceModel,
    UnsupportedPriorError,
    build_state_space,
    evaluate_estimate,
    kalman_filter,
    rts_smoother,
    smoother_error_spectrum,
    smoother_point_error,
    steady_state_filter_covariance,
    wiener_smoother,
)
from .grids import (
    ComplexResponse,
    FrequencyGrid,
    NonCirculantError,
    SampledSpectrum,
    TimeGrid,
    circulant_covariance,
    circulant_eigenvalues,
    periodogram,
    spectrum_integral,
)
from .models import (
    BandLimitedFlatPrior,
    NoiseModel,
    OrnsteinUhlenbeckPrior,
    OscillatorParams,
    PriorModel,
    ResonanceError,
    SensorModel,
    Topology,
    backaction_position_spectrum,
    observation_noise_spectrum,
    prior_spectrum,
    prior_variance,
    transfer_function,
)
from .sim import (
    SeedSpec,
    Trajectory,
    referred_noise,
    simulate_record,
    synthesize_stationary,
)
