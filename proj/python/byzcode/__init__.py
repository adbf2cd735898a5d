"""Coded matrix-vector products that tolerate Byzantine workers."""

from ._core import (
    BasisVariant,
    ByzcodeError,
    Locator,
    NodeScheme,
    NullBasis,
    build_locator,
    coded_matvec,
    decode,
    encode,
    gen_dataset,
    joint_support,
    null_basis,
    recover_support,
    run_experiment,
    serial_pgd,
    verify_config,
    worker_product,
)

__all__ = [
    "BasisVariant",
    "ByzcodeError",
    "Locator",
    "NodeScheme",
    "NullBasis",
    "build_locator",
    "coded_matvec",
    "decode",
    "encode",
    "gen_dataset",
    "joint_support",
    "null_basis",
    "recover_support",
    "run_experiment",
    "serial_pgd",
    "verify_config",
    "worker_product",
]
