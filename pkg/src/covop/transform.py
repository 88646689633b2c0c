# SPDX-License-Identifier: MIT

"""
Fourier transforms on the unit torus and frequency-domain operator action.

The forward transform is ``x^(w) = sum_t exp(+2 pi i w t) x[t]``; note the
positive sign in the exponent. With it, the unit delay has the symbol
``exp(2 pi i w)``.
"""

from __future__ import annotations

import logging

import attrs
import numpy as np

from ._core import (
    ComplexArray,
    KernelSequence,
    Signal,
    _check_same_n,
    _readonly,
    apply_time_domain,
)
from .exceptions import DimensionMismatchError, GridError


log = logging.getLogger("covop")


def _is_power_of_two(m: int) -> bool:
    return m >= 1 and m & (m - 1) == 0


@attrs.frozen
class FrequencyGrid:
    """
    Uniform samples ``w_j = j / size`` of the torus, ``j = 0 .. size - 1``.

    >>> from covop import FrequencyGrid
    >>> FrequencyGrid(4).points.tolist()
    [0.0, 0.25, 0.5, 0.75]
    >>> FrequencyGrid.for_supports(4, 9).size
    16
    """

    size: int = attrs.field()

    @size.validator
    def _check_size(self, _attribute: attrs.Attribute, value: int) -> None:
        if isinstance(value, bool) or int(value) != value or value < 1:
            msg = f"Grid size must be a positive integer, got {value!r}."
            raise GridError(msg)

    @classmethod
    def for_supports(cls, *lengths: int, minimum: int = 8) -> FrequencyGrid:
        """
        Smallest power-of-two grid of at least *minimum* points on which a
        chain of linear convolutions of supports with *lengths* doesn't
        alias.
        """
        needed = max(sum(lengths) - max(len(lengths) - 1, 0), minimum, 1)
        size = 1 << (needed - 1).bit_length()
        log.debug(
            "selected grid size %d for supports %r",
            size,
            lengths,
            extra={"covop_grid_size": size},
        )
        return cls(size)

    @property
    def is_power_of_two(self) -> bool:
        return _is_power_of_two(self.size)

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.size) / self.size

    def index_of(self, omega: float) -> int:
        """
        Return the index of the grid point *omega* (taken modulo 1).

        Raises:
            GridError: If *omega* isn't a grid point.
        """
        scaled = omega * self.size
        j = round(scaled)
        if abs(scaled - j) > 1e-9:
            msg = f"Frequency {omega!r} is not on a grid of size {self.size}."
            raise GridError(msg)
        return j % self.size

    def phases(self, times: np.ndarray, sign: int = 1) -> ComplexArray:
        """
        Return ``exp(sign * 2 pi i w_j t)`` as a ``(size, len(times))`` array.

        The product ``j * t`` is reduced modulo the grid size in integer
        arithmetic before it hits the exponential.
        """
        jt = np.outer(np.arange(self.size), np.asarray(times, dtype=np.int64))
        return np.exp(sign * 2j * np.pi * ((jt % self.size) / self.size))


def _check_same_grid(a: FrequencyGrid, b: FrequencyGrid) -> None:
    if a != b:
        msg = f"Grid mismatch: {a.size} != {b.size}."
        raise GridError(msg)


@attrs.frozen(eq=False)
class FrequencyTable:
    """
    Matrix-valued function sampled on a grid, e.g. the symbol of a kernel.

    Attributes:
        grid: The sample points.

        values: ``(grid.size, n, n)`` array.
    """

    grid: FrequencyGrid
    values: ComplexArray = attrs.field(converter=_readonly)

    def __attrs_post_init__(self) -> None:
        v = self.values
        if v.ndim != 3 or v.shape[0] != self.grid.size or v.shape[1] != v.shape[2]:
            msg = (
                f"Expected ({self.grid.size}, n, n) values, got {v.shape}."
            )
            raise DimensionMismatchError(msg)

    def __repr__(self) -> str:
        return f"<FrequencyTable(size={self.grid.size}, n={self.n})>"

    @property
    def n(self) -> int:
        return int(self.values.shape[1])

    def at(self, omega: float) -> ComplexArray:
        return self.values[self.grid.index_of(omega)]


@attrs.frozen(eq=False)
class FrequencySignal:
    """
    Vector-valued function sampled on a grid, e.g. the transform of a signal.

    Attributes:
        grid: The sample points.

        values: ``(grid.size, n)`` array.
    """

    grid: FrequencyGrid
    values: ComplexArray = attrs.field(converter=_readonly)

    def __attrs_post_init__(self) -> None:
        if self.values.ndim != 2 or self.values.shape[0] != self.grid.size:
            msg = f"Expected ({self.grid.size}, n) values, got {self.values.shape}."
            raise DimensionMismatchError(msg)

    def __repr__(self) -> str:
        return f"<FrequencySignal(size={self.grid.size}, n={self.n})>"

    @property
    def n(self) -> int:
        return int(self.values.shape[1])


def symbol(kernel: KernelSequence, grid: FrequencyGrid) -> FrequencyTable:
    """
    Sample ``K^(w) = sum_t exp(2 pi i w t) K[t]`` on *grid*.
    """
    values = np.einsum(
        "mt,tij->mij", grid.phases(np.array(kernel.offsets)), kernel.matrices
    )
    return FrequencyTable(grid, values)


def dtft(x: Signal, grid: FrequencyGrid) -> FrequencySignal:
    """
    Sample ``x^(w) = sum_t exp(2 pi i w t) x[t]`` on *grid*.
    """
    times = x.start + np.arange(len(x))
    return FrequencySignal(grid, grid.phases(times) @ x.samples)


def idtft(xhat: FrequencySignal, support: tuple[int, int]) -> Signal:
    """
    Invert :func:`dtft` on the window *support*, a ``(start, length)`` pair
    as in :func:`apply_table`.

    The integral over the torus is replaced by the mean over the grid, which
    is exact as long as the signal lives inside a window of at most
    ``grid.size`` samples.

    Raises:
        GridError: If the window is longer than the grid (aliasing).
    """
    start, length = support
    grid = xhat.grid
    if length > grid.size:
        msg = (
            f"A grid of size {grid.size} aliases a window of {length} "
            "samples."
        )
        raise GridError(msg)

    times = start + np.arange(length)
    samples = grid.phases(times, sign=-1).T @ xhat.values / grid.size
    return Signal(xhat.n, start, samples)


def default_window(x: Signal, grid: FrequencyGrid) -> tuple[int, int]:
    """
    One full period of the grid, centered on the support of *x*.
    """
    return x.start - (grid.size - len(x)) // 2, grid.size


def apply_table(
    table: FrequencyTable,
    x: Signal,
    support: tuple[int, int] | None = None,
) -> Signal:
    """
    Multiply ``x^`` by *table* point-wise and transform back.

    Args:
        table: The frequency representation of the operator.

        x: Input signal; it must fit into one period of the grid.

        support:
            ``(start, length)`` of the output window. Defaults to
            :func:`default_window`.

    Raises:
        GridError: If *x* is longer than the grid.
    """
    _check_same_n(table.n, x.n)
    grid = table.grid
    if len(x) > grid.size:
        msg = f"A grid of size {grid.size} aliases a signal of {len(x)} samples."
        raise GridError(msg)

    xhat = dtft(x, grid)
    yhat = np.einsum("mij,mj->mi", table.values, xhat.values)

    return idtft(
        FrequencySignal(grid, yhat),
        support if support is not None else default_window(x, grid),
    )


def apply_frequency_domain(
    kernel: KernelSequence, x: Signal, grid: FrequencyGrid | None = None
) -> Signal:
    """
    Apply *kernel* to *x* by multiplication with its symbol.

    The result equals :func:`covop.apply_time_domain` up to rounding.

    Args:
        grid:
            Must have at least ``kernel.support_length + len(x) - 1``
            points so that the product realizes a linear convolution. The
            smallest admissible power of two is used if omitted.

    Raises:
        DimensionMismatchError: If the node counts differ.

        GridError: If *grid* is too small.
    """
    _check_same_n(kernel.n, x.n)
    if kernel.is_zero or not len(x):
        return apply_time_domain(kernel, x)

    needed = kernel.support_length + len(x) - 1
    if grid is None:
        grid = FrequencyGrid.for_supports(kernel.support_length, len(x))
    elif grid.size < needed:
        msg = (
            f"Grid of size {grid.size} is too small for a linear "
            f"convolution of length {needed}."
        )
        raise GridError(msg)

    lo, _ = kernel.support

    return apply_table(symbol(kernel, grid), x, (x.start + lo, needed))


def operator_norm(kernel: KernelSequence, grid: FrequencyGrid) -> float:
    """
    Grid proxy for the operator norm: the maximal spectral norm of the symbol.
    """
    values = symbol(kernel, grid).values
    if not values.size:
        return 0.0
    return float(np.linalg.svd(values, compute_uv=False)[:, 0].max())
