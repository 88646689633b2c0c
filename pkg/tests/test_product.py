# SPDX-License-Identifier: MIT

import numpy as np
import pytest

from covop import FrequencyGrid, identity_kernel, symbol, track_branches
from covop.product import (
    analyse_model,
    bandpass_drift,
    compare_models,
    product_generator,
    projection_drift,
    projection_variation,
)

from .helpers import AGGREGATE, PRODUCT_PROJECTIONS


@pytest.fixture(name="report", scope="module")
def _report(kernel):
    return compare_models(kernel, FrequencyGrid(512), 0.05)


class TestProductGenerator:
    def test_taps(self, product_kernel):
        """
        The baseline is the aggregated adjacency plus a unit delay.
        """
        assert (0, 1) == product_kernel.offsets
        assert np.allclose(AGGREGATE, product_kernel.tap(0))
        assert np.array_equal(np.eye(2), product_kernel.tap(1))

    def test_symbol(self, product_kernel, grid):
        """
        The symbol is exp(2 pi i w) I + W.
        """
        e = np.exp(2j * np.pi * grid.points)

        table = symbol(product_kernel, grid)

        assert np.allclose([[1.4, -0.4], [-0.2, 1.4]], table.at(0))
        assert np.allclose(
            e[:, None, None] * np.eye(2) + AGGREGATE, table.values
        )

    def test_identity(self, grid):
        """
        The baseline of the identity has one branch exp(2 pi i w) + 1.
        """
        k = product_generator(identity_kernel(2))

        bs = track_branches(symbol(k, grid))

        assert 1 == bs.m
        assert np.allclose(
            np.exp(2j * np.pi * grid.points) + 1, bs.eigenvalues[:, 0]
        )


class TestMetrics:
    def test_constant_projections(self, product_branches):
        """
        The baseline's projections don't depend on the frequency.
        """
        assert projection_variation(product_branches) < 1e-8
        assert projection_drift(product_branches) < 1e-8
        assert bandpass_drift(product_branches) < 1e-8
        assert np.abs(
            product_branches.projections.mean(axis=0) - PRODUCT_PROJECTIONS
        ).max() < 1e-8

    def test_varying_projections(self, branches):
        """
        The generator's projections turn with the frequency.
        """
        assert projection_variation(branches) > 0.1
        assert projection_drift(branches) > 0.1
        assert bandpass_drift(branches) > 0

    def test_analyse_model(self, kernel, grid):
        """
        The pipeline keeps every intermediate result.
        """
        analysis = analyse_model(kernel, grid, 0.05)

        assert 256 == analysis.table.grid.size
        assert 2 == analysis.branches.m
        assert 512 == len(analysis.locus.points)
        assert 2 == analysis.regions.count


class TestCompareModels:
    def test_cluster_counts(self, report):
        """
        The generator's spectrum separates into two regions, the product's
        doesn't.
        """
        assert 2 == report.generator.clusters
        assert 1 == report.product.clusters
        assert report.generator.separation > 0
        assert report.product.separation is None

    def test_projection_variation(self, report):
        """
        Only the generator has frequency-dependent modes.
        """
        assert report.generator.projection_variation > 0.1
        assert report.product.projection_variation < 1e-8
        assert report.product.bandpass_drift < 1e-8

    def test_no_monodromy(self, report):
        """
        Neither model permutes its branches.
        """
        assert (0, 1) == report.generator.monodromy
        assert (0, 1) == report.product.monodromy

    def test_settings(self, report):
        """
        The report records how it was computed.
        """
        assert 512 == report.grid_size
        assert 0.05 == report.delta
        assert (0.0, 0.25, 0.5, 0.75) == report.checkpoints
        assert 512 == report.analyses[1].branches.grid.size
