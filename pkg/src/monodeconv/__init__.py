"""Nonparametric estimation of monotone latent-variable matrices.

Observed entries ``Z(i, j) = g(x_i, y_j) + noise`` on a random subset of a
matrix, with ``g`` increasing in the column feature. The estimator ranks
columns, estimates each row's distribution (empirical or by kernel
deconvolution) and reads ``A(i, j)`` off the row quantile function.
"""
from .deconv import (
    CdfEstimate,
    KernelSpec,
    bandwidth,
    cdf_from_density,
    deconv_cdf,
    deconv_density,
    deconv_kernel,
    empirical_cdf,
    kernel_char_fn,
    quantile_function,
    ridge_for,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateDenominatorError,
    DomainError,
    EstimationError,
    InsufficientDataError,
    InsufficientTriplesError,
    InvalidBandwidthError,
    InvalidDimensionError,
    InvalidProbabilityError,
    MonoDeconvError,
    ParseError,
    ShapeError,
    UnobservedEntryError,
)
from .estimator import (
    EstimatedMatrix,
    EstimatorConfig,
    estimate,
    estimate_known_noise,
    estimate_noiseless,
    estimate_unknown_noise,
)
from .harness import SweepConfig, SweepResult, mse, run_sweep
from .matrix_io import load_matrix, save_matrix
from .model import (
    FeatureAssignment,
    LatentModel,
    NoiseSpec,
    ObservationSet,
    eval_latent,
    gaussian_noise,
    generate_truth,
    latent_model,
    no_noise,
    observe,
    sample_features,
)
from .noise_est import CharFnEstimate, CharFnTable, TripleSet, build_triple_set, estimate_char_fn
from .quantile import (
    QuantileEstimates,
    column_means,
    heaviside,
    marginal_quantile,
    noiseless_quantile,
    noiseless_quantiles,
    rowwise_quantile,
)

__version__ = "0.1.0"
