"""Neural-network layers over finite-dimensional algebras."""

from ._hypernn import (  # noqa: F401
    Algebra,
    AlgebraReport,
    ConvLayer,
    DenseLayer,
    builtin_algebra,
    builtin_algebra_names,
    contract,
    conv_kd,
    multiply,
    permute,
    report,
    reshape_merge,
    verify_layer,
)

__all__ = [
    "Algebra",
    "AlgebraReport",
    "ConvLayer",
    "DenseLayer",
    "builtin_algebra",
    "builtin_algebra_names",
    "contract",
    "conv_kd",
    "multiply",
    "permute",
    "report",
    "reshape_merge",
    "verify_layer",
]
