"""Reversible bit-to-Gaussian-noise codec with an invertible flow pipeline."""

from .codec import (
    CodecConfig,
    CorrectionReport,
    Mode,
    NoiseVector,
    bit_accuracy,
    decode_uniform,
    decrypt_and_unpad,
    encode_uniform,
    encode_variance_preserving,
    interval_geometry,
    noise_to_symbols,
    pack_bits,
    pad_and_encrypt,
    symbols_to_noise_plain,
    unpack_symbols,
)
from .errors import (
    CapacityError,
    CodecError,
    CorruptionError,
    DivergenceError,
    InfeasibleGeometryError,
    TensorFormatError,
)
from .normal import std_normal_cdf, std_normal_pdf, std_normal_ppf
from .ode import (
    Direction,
    GaussianMixtureSpec,
    Scheduler,
    TimeGrid,
    build_time_grid,
    default_scheduler,
    generate,
    heun_integrate,
    invert,
    mixture_score,
    quantize,
    zero_score,
)
from .stats import (
    KSReport,
    discrete_kl,
    histogram_csv,
    ks_p_value,
    ks_statistic,
    ks_test,
    normality_batch,
    sample_moments,
)

__version__ = "0.1.0"
