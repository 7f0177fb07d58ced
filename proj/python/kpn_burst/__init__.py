"""Burst denoising with kernel prediction networks."""

from ._core import (
    FormatError,
    IoError,
    anneal_weight,
    apply_kernels,
    denoise,
    gain_level_params,
    init_checkpoint,
    invert_gamma,
    load_burst,
    make_burst,
    mini_source_extent,
    procedural_scene,
    psnr,
    sample_noise,
    save_burst,
    srgb,
    ssim,
)

__all__ = [
    "FormatError",
    "IoError",
    "anneal_weight",
    "apply_kernels",
    "denoise",
    "gain_level_params",
    "init_checkpoint",
    "invert_gamma",
    "load_burst",
    "make_burst",
    "mini_source_extent",
    "procedural_scene",
    "psnr",
    "sample_noise",
    "save_burst",
    "srgb",
    "ssim",
]
