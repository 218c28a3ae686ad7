"""Closed-form operator norms of 2D convolutional layers."""

from ._convnorm import (
    Error,
    Geometry,
    Kernel,
    PowerIterationResult,
    bn_norm,
    decode_blob,
    dense_norms,
    encode_blob,
    frobenius_exact,
    index_classes,
    l1_norm,
    l2_upper_bound,
    linf_norm,
    materialize,
    norm_subgradient,
    power_iteration_l2,
)

__all__ = [
    "Error",
    "Geometry",
    "Kernel",
    "PowerIterationResult",
    "bn_norm",
    "decode_blob",
    "dense_norms",
    "encode_blob",
    "frobenius_exact",
    "index_classes",
    "l1_norm",
    "l2_upper_bound",
    "linf_norm",
    "materialize",
    "norm_subgradient",
    "power_iteration_l2",
]
