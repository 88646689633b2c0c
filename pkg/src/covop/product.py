# SPDX-License-Identifier: MIT

from __future__ import annotations

import logging

from collections.abc import Sequence

import attrs
import numpy as np

from ._core import KernelSequence, kernel_from_taps
from .spectral import (
    BranchSet,
    RegionSet,
    SpectrumLocus,
    detect_regions,
    spectrum_locus,
    track_branches,
)
from .transform import FrequencyGrid, FrequencyTable, symbol


log = logging.getLogger("covop")

DEFAULT_CHECKPOINTS = (0.0, 0.25, 0.5, 0.75)


def product_generator(kernel: KernelSequence) -> KernelSequence:
    """
    Cartesian-product baseline: unit time delay plus the aggregated spatial
    adjacency ``W = sum_t K[t]``.

    Its symbol is ``exp(2 pi i w) I + W``. The delay acts on the integers
    rather than on a finite cycle, so both models live on the same grid.
    """
    n = kernel.n
    return kernel_from_taps(n, [(0, kernel.total()), (1, np.eye(n))])


@attrs.frozen(eq=False)
class ModelAnalysis:
    """
    Everything the spectral pipeline produces for one generator.
    """

    kernel: KernelSequence
    table: FrequencyTable
    branches: BranchSet
    locus: SpectrumLocus
    regions: RegionSet


def analyse_model(
    kernel: KernelSequence, grid: FrequencyGrid, delta: float
) -> ModelAnalysis:
    """
    Symbol, tracked branches, spectrum, and regions of *kernel*.
    """
    table = symbol(kernel, grid)
    branches = track_branches(table)
    locus = spectrum_locus(branches)
    return ModelAnalysis(
        kernel, table, branches, locus, detect_regions(locus, delta)
    )


def projection_variation(bs: BranchSet) -> float:
    """
    ``max_{k, w} ||P_k(w) - mean_w P_k||``: zero iff the modes don't depend
    on the frequency.
    """
    mean = bs.projections.mean(axis=0)
    return float(
        np.linalg.norm(bs.projections - mean, ord=2, axis=(-2, -1)).max()
    )


def projection_drift(bs: BranchSet) -> float:
    """
    ``max_{k, w} ||P_k(w) - P_k(0)||``.
    """
    return float(
        np.linalg.norm(
            bs.projections - bs.projections[0], ord=2, axis=(-2, -1)
        ).max()
    )


def _range_basis(p: np.ndarray) -> np.ndarray:
    u, _, _ = np.linalg.svd(p)
    rank = max(round(float(np.trace(p).real)), 1)
    return u[:, :rank]


def bandpass_drift(
    bs: BranchSet, checkpoints: Sequence[float] = DEFAULT_CHECKPOINTS
) -> float:
    """
    How much the ideal-bandpass direction of every branch turns between the
    checkpoint frequencies.

    Returns ``1 - cos`` of the largest principal angle between the range of
    ``P_k`` at the first checkpoint and at any other checkpoint, maximized
    over ``k``.
    A frequency-independent projection gives 0.
    """
    size = bs.grid.size
    idx = [round(f * size) % size for f in checkpoints]
    worst = 0.0
    for k in range(bs.m):
        ref = _range_basis(bs.projections[idx[0], k])
        for j in idx[1:]:
            cur = _range_basis(bs.projections[j, k])
            overlap = np.linalg.svd(ref.conj().T @ cur, compute_uv=False)
            worst = max(worst, 1 - float(overlap.min()))
    return worst


@attrs.frozen
class ModelSummary:
    """
    Comparison metrics of one generator.

    Attributes:
        clusters: Number of separable spectral regions.

        separation:
            Distance between the closest regions, None for a single one.

        projection_variation: See :func:`projection_variation`.

        projection_drift: See :func:`projection_drift`.

        bandpass_drift: See :func:`bandpass_drift`.

        monodromy: Branch permutation after a loop around the torus.
    """

    clusters: int
    separation: float | None
    projection_variation: float
    projection_drift: float
    bandpass_drift: float
    monodromy: tuple[int, ...]

    @classmethod
    def of(
        cls,
        analysis: ModelAnalysis,
        checkpoints: Sequence[float] = DEFAULT_CHECKPOINTS,
    ) -> ModelSummary:
        bs = analysis.branches
        return cls(
            analysis.regions.count,
            analysis.regions.separation,
            projection_variation(bs),
            projection_drift(bs),
            bandpass_drift(bs, checkpoints),
            bs.monodromy,
        )


@attrs.frozen
class ComparisonReport:
    """
    Side-by-side metrics of a generator and its Cartesian-product baseline.

    A separable spectrum (more than one cluster) allows different functions
    on different modes; frequency-dependent projections mean the modes
    themselves change with frequency. The product model has neither for
    the worked example.
    """

    grid_size: int
    delta: float
    checkpoints: tuple[float, ...]
    generator: ModelSummary
    product: ModelSummary
    analyses: tuple[ModelAnalysis, ModelAnalysis] = attrs.field(
        eq=False, repr=False
    )


def compare_models(
    kernel: KernelSequence,
    grid: FrequencyGrid,
    delta: float,
    *,
    checkpoints: Sequence[float] = DEFAULT_CHECKPOINTS,
) -> ComparisonReport:
    """
    Run the spectral pipeline on *kernel* and on its product baseline.
    """
    ours = analyse_model(kernel, grid, delta)
    baseline = analyse_model(product_generator(kernel), grid, delta)
    report = ComparisonReport(
        grid.size,
        float(delta),
        tuple(float(p) for p in checkpoints),
        ModelSummary.of(ours, checkpoints),
        ModelSummary.of(baseline, checkpoints),
        (ours, baseline),
    )

    log.debug(
        "compared generator with its product baseline",
        extra={
            "covop_generator_clusters": report.generator.clusters,
            "covop_product_clusters": report.product.clusters,
        },
    )

    return report
