# SPDX-License-Identifier: MIT

from __future__ import annotations

from . import calculus, exceptions, learn, product, spectral, transform
from ._core import (
    KernelSequence,
    Signal,
    apply_time_domain,
    delay_kernel,
    identity_kernel,
    impulse,
    kernel_compose,
    kernel_from_taps,
)
from .calculus import (
    PhiSpec,
    apply_phi_contour,
    apply_phi_spectral,
    verify_covariance,
)
from .spectral import BranchSet, RegionSet, decompose_point, track_branches
from .transform import (
    FrequencyGrid,
    FrequencyTable,
    apply_frequency_domain,
    dtft,
    idtft,
    operator_norm,
    symbol,
)


__all__ = [
    "BranchSet",
    "FrequencyGrid",
    "FrequencyTable",
    "KernelSequence",
    "PhiSpec",
    "RegionSet",
    "Signal",
    "apply_frequency_domain",
    "apply_phi_contour",
    "apply_phi_spectral",
    "apply_time_domain",
    "calculus",
    "decompose_point",
    "delay_kernel",
    "dtft",
    "exceptions",
    "identity_kernel",
    "idtft",
    "impulse",
    "kernel_compose",
    "kernel_from_taps",
    "learn",
    "operator_norm",
    "product",
    "spectral",
    "symbol",
    "track_branches",
    "transform",
    "verify_covariance",
]
