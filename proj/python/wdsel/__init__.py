"""Learned wavelet selection for IMU denoising (C++ core)."""

from ._wdsel import (
    Model,
    NoiseModel,
    WdselError,
    align_then_score,
    allan_deviation,
    bank_names,
    default_config,
    denoise,
    discrete_frechet,
    dwt,
    evaluate,
    idwt,
    inject_noise,
    noise_coefficients,
    renyi_entropy,
    run_cli,
    silhouette_score,
    simulate,
    static_capture,
    strapdown,
    train,
    trajectory,
    wavelet_filters,
)

__all__ = [name for name in dir() if not name.startswith("_")]
