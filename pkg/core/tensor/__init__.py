"""
Tensor kernels for AMOS-VPR
"""

from core.tensor.kernels import (
    Tensor3,
    ConvKernelBank,
    PoolIndexMap,
    conv_output_size,
    pool_output_size,
    conv2d_forward,
    conv2d_backward,
    relu,
    relu_backward,
    maxpool_forward,
    maxpool_backward,
    maxpool_gather,
    fc_forward,
    fc_backward,
    softmax,
    cross_entropy_loss,
    softmax_ce_backward,
)

__all__ = [
    "Tensor3",
    "ConvKernelBank",
    "PoolIndexMap",
    "conv_output_size",
    "pool_output_size",
    "conv2d_forward",
    "conv2d_backward",
    "relu",
    "relu_backward",
    "maxpool_forward",
    "maxpool_backward",
    "maxpool_gather",
    "fc_forward",
    "fc_backward",
    "softmax",
    "cross_entropy_loss",
    "softmax_ce_backward",
]
