# SPDX-License-Identifier: MIT

import logging

import numpy as np
import pytest

from covop import (
    Signal,
    apply_time_domain,
    delay_kernel,
    identity_kernel,
    impulse,
    kernel_compose,
    kernel_from_taps,
)
from covop.exceptions import (
    CovopError,
    DimensionMismatchError,
    DuplicateOffsetError,
)

from .helpers import AGGREGATE, max_error, random_kernel, random_signal


class TestKernelFromTaps:
    def test_example(self, kernel):
        """
        The example taps are stored sorted with their support.
        """
        assert 2 == kernel.n
        assert (0, 1, 2, 3) == kernel.offsets
        assert (0, 3) == kernel.support
        assert 4 == kernel.support_length
        assert np.allclose(AGGREGATE, kernel.total())

    def test_identity(self):
        """
        A single identity tap at offset 0 is the identity operator.
        """
        k = identity_kernel(3)

        assert (0,) == k.offsets
        assert np.array_equal(np.eye(3), k.tap(0))

    def test_duplicate_offset(self):
        """
        The same offset twice is rejected.
        """
        with pytest.raises(DuplicateOffsetError):
            kernel_from_taps(2, [(0, np.eye(2)), (0, np.eye(2))])

    def test_dimension_mismatch(self):
        """
        Matrices must be n x n.
        """
        with pytest.raises(DimensionMismatchError) as ei:
            kernel_from_taps(2, [(0, np.eye(3))])

        assert isinstance(ei.value, CovopError)
        assert isinstance(ei.value, ValueError)

    def test_zero_taps_dropped(self):
        """
        Zero matrices are not stored and absent offsets read as zero.
        """
        k = kernel_from_taps(2, [(0, np.zeros((2, 2))), (2, np.eye(2))])

        assert (2,) == k.offsets
        assert np.array_equal(np.zeros((2, 2)), k.tap(0))

    def test_zero_operator_flagged(self, caplog):
        """
        A kernel without nonzero taps is representable, flagged, and logged.
        """
        k = kernel_from_taps(2, [(1, np.zeros((2, 2)))])

        assert k.is_zero
        assert (0, -1) == k.support
        assert (
            "constructed the zero operator on 2 nodes"
            == caplog.records[0].getMessage()
        )
        assert logging.WARNING == caplog.records[0].levelno
        assert 2 == caplog.records[0].covop_nodes

    def test_repr(self, kernel):
        """
        repr shows the node count and offsets.
        """
        assert "<KernelSequence(n=2, offsets=[0, 1, 2, 3])>" == repr(kernel)

    def test_block_toeplitz(self):
        """
        The truncated matrix has the taps on its block diagonals.
        """
        m = delay_kernel(1).block_toeplitz(0, 3)

        assert np.array_equal(np.eye(3, k=-1), m)


class TestSignal:
    def test_rejects_wrong_width(self):
        """
        Samples must have n columns.
        """
        with pytest.raises(DimensionMismatchError):
            Signal(2, 0, np.zeros((3, 3)))

    def test_window_zero_pads(self):
        """
        Samples outside of the stored support read as zero.
        """
        x = Signal(1, 2, [[1], [2]])

        assert [[0], [1], [2], [0]] == x.window(1, 4).real.tolist()

    def test_energy(self):
        """
        The energy is the sum of squared norms.
        """
        assert 7.0 == Signal(2, 0, [[1, 1j], [2, 1]]).energy()

    def test_arithmetic_on_union_of_supports(self):
        """
        Sums live on the union of supports, zero padded.
        """
        x = Signal(1, 0, [[1]])
        y = Signal(1, 2, [[1]])

        s = x + 2 * y

        assert 0 == s.start
        assert [[1], [0], [2]] == s.samples.real.tolist()
        assert 0 == max_error(s - s, Signal(1, 0, np.zeros((3, 1))))

    def test_readonly(self):
        """
        Stored arrays can't be mutated.
        """
        x = Signal(1, 0, [[1]])

        with pytest.raises(ValueError):
            x.samples[0, 0] = 2


class TestApplyTimeDomain:
    def test_identity(self, rng):
        """
        The identity kernel leaves signals unchanged.
        """
        x = random_signal(rng, 3, 5, start=-2)

        y = apply_time_domain(identity_kernel(3), x)

        assert -2 == y.start
        assert np.array_equal(x.samples, y.samples)

    def test_impulse_response(self, kernel):
        """
        The response to an impulse on node 0 is column 0 of every tap.
        """
        y = apply_time_domain(kernel, impulse(2))

        assert 0 == y.start
        assert [[0, -1], [0.4, 0], [0, 0.8], [0, 0]] == y.samples.real.tolist()

    def test_delay(self, rng):
        """
        The delay moves the start by one.
        """
        x = random_signal(rng, 2, 4)

        y = apply_time_domain(delay_kernel(2), x)

        assert 1 == y.start
        assert np.array_equal(x.samples, y.samples)

    def test_dimension_mismatch(self, kernel):
        """
        Node counts must agree.
        """
        with pytest.raises(DimensionMismatchError):
            apply_time_domain(kernel, impulse(3))

    def test_linear(self, rng):
        """
        A(ax + by) = aAx + bAy.
        """
        k = random_kernel(rng, 4, 5, start=-2)
        x = random_signal(rng, 4, 7)
        y = random_signal(rng, 4, 3, start=5)
        a, b = 2 - 1j, 0.5j

        lhs = apply_time_domain(k, a * x + b * y)
        rhs = a * apply_time_domain(k, x) + b * apply_time_domain(k, y)

        assert max_error(lhs, rhs) < 1e-12 * np.abs(lhs.samples).max()

    @pytest.mark.parametrize("d", [-3, 0, 5])
    def test_shift_covariance(self, rng, d):
        """
        Shifting then filtering equals filtering then shifting, exactly.
        """
        k = random_kernel(rng, 3, 4, start=-1)
        x = random_signal(rng, 3, 6)

        lhs = apply_time_domain(k, x.shift(d))
        rhs = apply_time_domain(k, x).shift(d)

        assert lhs.start == rhs.start
        assert np.array_equal(lhs.samples, rhs.samples)


class TestKernelCompose:
    def test_identity(self, kernel):
        """
        Composing with the identity changes nothing.
        """
        c = kernel_compose(identity_kernel(2), kernel)

        assert kernel.offsets == c.offsets
        assert np.array_equal(kernel.matrices, c.matrices)

    def test_delays(self):
        """
        Two unit delays make a delay by two.
        """
        c = kernel_compose(delay_kernel(2), delay_kernel(2))

        assert (2,) == c.offsets
        assert np.array_equal(np.eye(2), c.tap(2))

    def test_block_toeplitz_oracle(self, kernel):
        """
        The taps of S o S agree with the product of truncated block Toeplitz
        matrices; causal kernels truncate exactly.
        """
        c = kernel_compose(kernel, kernel)
        big = kernel.block_toeplitz(0, 20)

        assert np.allclose(c.block_toeplitz(0, 20), big @ big, atol=1e-14)

    def test_matches_sequential_application(self, rng):
        """
        (K o L) x = K (L x) for random kernels.
        """
        for _ in range(20):
            n = int(rng.integers(1, 7))
            k = random_kernel(rng, n, int(rng.integers(1, 9)), start=-3)
            m = random_kernel(rng, n, int(rng.integers(1, 9)), start=1)
            x = random_signal(rng, n, int(rng.integers(1, 33)))

            lhs = apply_time_domain(kernel_compose(k, m), x)
            rhs = apply_time_domain(k, apply_time_domain(m, x))

            assert max_error(lhs, rhs) < 1e-12 * np.abs(rhs.samples).max()

    def test_dimension_mismatch(self, kernel):
        """
        Node counts must agree.
        """
        with pytest.raises(DimensionMismatchError):
            kernel_compose(kernel, identity_kernel(3))
