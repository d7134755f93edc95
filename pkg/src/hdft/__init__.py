"""Frequency-domain restoration toolkit.

Library layout:

- :mod:`hdft.ops` / :mod:`hdft.kernels` -- dense numeric substrate (FFTs,
  windowing, convolution, pooling) with numba/numpy kernel lanes
- :mod:`hdft.autodiff` -- reverse-mode gradients and ADAM
- :mod:`hdft.pyramid` -- band decomposition with exact reconstruction
- :mod:`hdft.blocks` -- frequency attention / feed-forward blocks and the
  U-shaped restorer
- :mod:`hdft.fusion` -- two-exposure attention fusion
- :mod:`hdft.pipeline` -- the assembled multi-band model and weight files
- :mod:`hdft.losses`, :mod:`hdft.metrics` -- objectives and IQA metrics
- :mod:`hdft.training` -- desk-scale trainer and synthetic data
- :mod:`hdft.bench` -- cost models and wall-clock benchmarks
- :mod:`hdft.cli` -- the ``hdft`` command
"""

from . import config
from .autodiff import AdamState, GradCheckReport, Var, adam_step, backward, grad_check
from .losses import LossWeights, total_loss
from .metrics import MefSsimConfig, SsimConstants, mef_ssim, psnr, ssim
from .pipeline import (
    PipelineConfig,
    PipelineOutput,
    forward,
    forward_mef,
    init_params,
    load_model,
    save_model,
)
from .pyramid import Pyramid, decompose, gaussian_blur, pyr_down, pyr_up, reconstruct
from .training import TrainConfig, synth_dataset, train
from .weights import FormatError, load_params, save_params

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "FormatError",
    "GradCheckReport",
    "LossWeights",
    "MefSsimConfig",
    "PipelineConfig",
    "PipelineOutput",
    "Pyramid",
    "SsimConstants",
    "TrainConfig",
    "Var",
    "adam_step",
    "backward",
    "config",
    "decompose",
    "forward",
    "forward_mef",
    "gaussian_blur",
    "grad_check",
    "init_params",
    "load_model",
    "load_params",
    "mef_ssim",
    "psnr",
    "pyr_down",
    "pyr_up",
    "reconstruct",
    "save_model",
    "save_params",
    "ssim",
    "synth_dataset",
    "total_loss",
    "train",
]
