# SPDX-License-Identifier: MIT

from __future__ import annotations

import logging

from collections.abc import Iterable

import attrs
import numpy as np

from numpy.typing import ArrayLike, NDArray

from .exceptions import DimensionMismatchError, DuplicateOffsetError


log = logging.getLogger("covop")

ComplexArray = NDArray[np.complex128]


def _readonly(value: ArrayLike) -> ComplexArray:
    """
    Copy *value* into a complex array that can't be written to anymore.
    """
    arr = np.array(value, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


def _check_node_count(n: int) -> None:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        msg = f"Node count must be a positive integer, got {n!r}."
        raise DimensionMismatchError(msg)


@attrs.frozen(eq=False)
class KernelSequence:
    """
    Finite-support kernel of a Laurent operator.

    The operator acts as ``(Ax)[t] = sum_s K[t - s] @ x[s]``, i.e. as a
    bi-infinite block Toeplitz matrix whose block diagonals are the taps.
    Offsets that are not stored are zero matrices.

    Use :func:`kernel_from_taps` to build one; it canonicalizes the taps.

    Attributes:
        n: Number of graph nodes.

        offsets: Sorted, distinct time offsets of the nonzero taps.

        matrices: ``(len(offsets), n, n)`` array of the tap matrices.
    """

    n: int
    offsets: tuple[int, ...] = attrs.field(converter=tuple)
    matrices: ComplexArray = attrs.field(converter=_readonly)

    def __attrs_post_init__(self) -> None:
        _check_node_count(self.n)
        if self.matrices.shape != (len(self.offsets), self.n, self.n):
            msg = (
                f"Expected {len(self.offsets)} taps of shape "
                f"{(self.n, self.n)}, got array of shape "
                f"{self.matrices.shape}."
            )
            raise DimensionMismatchError(msg)
        if list(self.offsets) != sorted(set(self.offsets)):
            msg = "Offsets must be sorted and distinct."
            raise DuplicateOffsetError(msg)

    def __repr__(self) -> str:
        return (
            f"<KernelSequence(n={self.n}, offsets={list(self.offsets)})>"
        )

    @property
    def is_zero(self) -> bool:
        """
        Whether this is the zero operator.
        """
        return not self.offsets

    @property
    def support(self) -> tuple[int, int]:
        """
        First and last stored offset; ``(0, -1)`` for the zero operator.
        """
        if self.is_zero:
            return 0, -1
        return self.offsets[0], self.offsets[-1]

    @property
    def support_length(self) -> int:
        lo, hi = self.support
        return hi - lo + 1

    @property
    def taps(self) -> dict[int, ComplexArray]:
        """
        A fresh ``offset -> matrix`` mapping.
        """
        return dict(zip(self.offsets, self.matrices))

    def tap(self, offset: int) -> ComplexArray:
        """
        Return ``K[offset]``, the zero matrix if it's not stored.
        """
        try:
            return self.matrices[self.offsets.index(offset)]
        except ValueError:
            return np.zeros((self.n, self.n), dtype=np.complex128)

    def total(self) -> ComplexArray:
        """
        Return ``W = sum_t K[t]``, the time-aggregated adjacency.
        """
        return self.matrices.sum(axis=0) if self.offsets else self.tap(0)

    def block_toeplitz(self, start: int, stop: int) -> ComplexArray:
        """
        Return the section of the bi-infinite block Toeplitz matrix for the
        time indices ``start <= t, s < stop``.
        """
        size = stop - start
        out = np.zeros((size * self.n, size * self.n), dtype=np.complex128)
        for i in range(size):
            for j in range(size):
                if (i - j) in self.offsets:
                    out[
                        i * self.n : (i + 1) * self.n,
                        j * self.n : (j + 1) * self.n,
                    ] = self.tap(i - j)
        return out


@attrs.frozen(eq=False)
class Signal:
    """
    Finite segment of a vector-valued process on the graph.

    Samples outside of ``[start, start + len(samples))`` are zero, so every
    signal is square summable.

    Attributes:
        n: Number of graph nodes.

        start: Time index of the first sample.

        samples: ``(length, n)`` array, row ``i`` is ``x[start + i]``.
    """

    n: int
    start: int
    samples: ComplexArray = attrs.field(converter=_readonly)

    def __attrs_post_init__(self) -> None:
        _check_node_count(self.n)
        if self.samples.ndim != 2 or self.samples.shape[1] != self.n:
            msg = (
                f"Samples must have shape (length, {self.n}), got "
                f"{self.samples.shape}."
            )
            raise DimensionMismatchError(msg)

    def __repr__(self) -> str:
        return (
            f"<Signal(n={self.n}, start={self.start}, length={len(self)})>"
        )

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def stop(self) -> int:
        return self.start + len(self)

    def energy(self) -> float:
        """
        Return ``sum_t ||x[t]||^2``.
        """
        return float(np.sum(np.abs(self.samples) ** 2))

    def shift(self, d: int) -> Signal:
        """
        Delay the signal by *d* time steps.
        """
        return Signal(self.n, self.start + d, self.samples)

    def window(self, start: int, length: int) -> ComplexArray:
        """
        Return the samples for ``start <= t < start + length``, zero where
        nothing is stored.
        """
        out = np.zeros((length, self.n), dtype=np.complex128)
        lo = max(start, self.start)
        hi = min(start + length, self.stop)
        if lo < hi:
            out[lo - start : hi - start] = self.samples[
                lo - self.start : hi - self.start
            ]
        return out

    def _combine(self, other: Signal, sign: complex) -> Signal:
        if not isinstance(other, Signal):
            return NotImplemented  # type: ignore[unreachable]
        _check_same_n(self.n, other.n)
        if not len(other):
            return self
        if not len(self):
            return Signal(other.n, other.start, sign * other.samples)

        start = min(self.start, other.start)
        length = max(self.stop, other.stop) - start
        return Signal(
            self.n,
            start,
            self.window(start, length) + sign * other.window(start, length),
        )

    def __add__(self, other: Signal) -> Signal:
        return self._combine(other, 1)

    def __sub__(self, other: Signal) -> Signal:
        return self._combine(other, -1)

    def __mul__(self, scalar: complex) -> Signal:
        return Signal(self.n, self.start, scalar * self.samples)

    __rmul__ = __mul__


def _check_same_n(n1: int, n2: int) -> None:
    if n1 != n2:
        msg = f"Node counts differ: {n1} != {n2}."
        raise DimensionMismatchError(msg)


def kernel_from_taps(
    n: int, taps: Iterable[tuple[int, ArrayLike]]
) -> KernelSequence:
    """
    Build a canonical kernel from ``(offset, matrix)`` pairs.

    All-zero matrices are dropped from storage. A kernel without any
    nonzero tap is the zero operator: it's representable, but flagged by
    :attr:`KernelSequence.is_zero` and logged.

    >>> import numpy as np
    >>> from covop import kernel_from_taps
    >>> delay = kernel_from_taps(2, [(1, np.eye(2)), (4, np.zeros((2, 2)))])
    >>> delay.support
    (1, 1)

    Raises:
        DimensionMismatchError: If a matrix isn't *n* x *n*.

        DuplicateOffsetError: If an offset appears more than once.
    """
    _check_node_count(n)

    seen: dict[int, ComplexArray] = {}
    for offset, m in taps:
        if int(offset) in seen:
            msg = f"Duplicate tap offset {offset}."
            raise DuplicateOffsetError(msg)
        arr = np.asarray(m, dtype=np.complex128)
        if arr.shape != (n, n):
            msg = f"Tap at offset {offset} has shape {arr.shape}, not {(n, n)}."
            raise DimensionMismatchError(msg)
        seen[int(offset)] = arr

    offsets = sorted(t for t, m in seen.items() if np.any(m))
    matrices = (
        np.stack([seen[t] for t in offsets])
        if offsets
        else np.zeros((0, n, n), dtype=np.complex128)
    )
    kernel = KernelSequence(n, tuple(offsets), matrices)

    if kernel.is_zero:
        log.warning(
            "constructed the zero operator on %d nodes",
            n,
            extra={"covop_nodes": n},
        )

    return kernel


def identity_kernel(n: int) -> KernelSequence:
    return kernel_from_taps(n, [(0, np.eye(n))])


def delay_kernel(n: int, d: int = 1) -> KernelSequence:
    return kernel_from_taps(n, [(d, np.eye(n))])


def impulse(n: int, node: int = 0, t: int = 0) -> Signal:
    """
    Return the unit impulse at *node* and time *t*.
    """
    samples = np.zeros((1, n), dtype=np.complex128)
    samples[0, node] = 1
    return Signal(n, t, samples)


def apply_time_domain(kernel: KernelSequence, x: Signal) -> Signal:
    """
    Apply the Laurent operator with *kernel* to *x* by direct summation.

    The output support is the Minkowski sum of both supports.

    Raises:
        DimensionMismatchError: If the node counts differ.
    """
    _check_same_n(kernel.n, x.n)
    if kernel.is_zero or not len(x):
        return Signal(x.n, x.start, np.zeros_like(x.samples))

    lo, _ = kernel.support
    out = np.zeros(
        (len(x) + kernel.support_length - 1, x.n), dtype=np.complex128
    )
    for t, m in zip(kernel.offsets, kernel.matrices):
        out[t - lo : t - lo + len(x)] += x.samples @ m.T

    return Signal(x.n, x.start + lo, out)


def kernel_compose(
    kernel: KernelSequence, other: KernelSequence
) -> KernelSequence:
    """
    Return the kernel of ``kernel @ other`` (apply *other* first).

    Raises:
        DimensionMismatchError: If the node counts differ.
    """
    _check_same_n(kernel.n, other.n)

    acc: dict[int, ComplexArray] = {}
    for s, k in zip(kernel.offsets, kernel.matrices):
        for u, m in zip(other.offsets, other.matrices):
            if s + u in acc:
                acc[s + u] = acc[s + u] + k @ m
            else:
                acc[s + u] = k @ m

    return kernel_from_taps(kernel.n, sorted(acc.items()))
