"""Fourier-based deconvolution estimators for additive regression signals.

Observations follow Y = (psi * theta)(design point) + noise with a known
convolution kernel psi. The package recovers theta by frequency-domain
division with spectral-cutoff smoothing, for full-dimensional and additive
signals, on lattice (fixed) and random designs, together with the exact and
asymptotic variance normalizers, a Monte Carlo harness, and a CLI.
"""

from .asymptotics import (
    NormalizerRequest,
    empirical_cumulants,
    normalizer_iid,
    normalizer_ma,
    rate_diagnostics,
)
from .errors import (
    AccuracyError,
    ConfigError,
    DeconvoError,
    NumericalError,
    OutputError,
    SingularTransformError,
)
from .estimators import (
    EstimateField,
    estimate_fd,
    estimate_fd_additive,
    estimate_field,
    estimate_rd,
    estimate_rd_additive,
    fd_additive_block,
    fd_additive_weight_field,
    fd_weight_field,
    predict_variance,
    save_field,
)
from .fourier import (
    axis_weight_integrals,
    closed_form_oracles,
    fd_full_weight,
    fd_weight,
    l_functional,
    max_density,
    rd_additive_weight,
    rd_weight,
    tensor_quadrature,
    transform_eval,
)
from .harness import (
    McSummary,
    MiseTable,
    Scenario,
    mise_scan,
    misspecification_run,
    normality_diagnostics,
    run_monte_carlo,
)
from .model import (
    AdditiveSignal,
    ConvolutionKernel,
    Dataset,
    Design,
    DensitySpec,
    EstimatorConfig,
    NoiseSpec,
    Partition,
    SmoothingKernel,
    ValidationReport,
    WeightMeasure,
    density_from_id,
    kernel_from_id,
    signal_preset,
    smoothing_from_id,
    theta_eval,
    validate_scenario,
)
from .synth import (
    ForwardSignal,
    NoiseField,
    forward_convolve,
    gen_noise,
    load_dataset,
    marginal_kernel,
    sample_fixed_design,
    sample_random_design,
    save_dataset,
)

__version__ = "0.1.0"
