# SPDX-License-Identifier: MIT

from __future__ import annotations


class CovopError(Exception):
    """
    Base class for all errors raised by *covop*.
    """


class DimensionMismatchError(CovopError, ValueError):
    """
    Raised when matrices, vectors, or operators disagree on the node count.
    """


class DuplicateOffsetError(CovopError, ValueError):
    """
    Raised when a kernel receives the same time offset twice.
    """


class GridError(CovopError, ValueError):
    """
    Raised when a frequency grid is too small for an exact transform, when
    two objects live on different grids, or when a frequency is not a grid
    point.
    """


class TrackingError(CovopError):
    """
    Raised when eigenvalue branches can't be followed across the grid.

    Attributes:
        suggested_grid: A grid size that is worth trying instead.
    """

    def __init__(self, msg: str, suggested_grid: int) -> None:
        super().__init__(msg)
        self.suggested_grid = suggested_grid


class ContourError(CovopError):
    """
    Raised when a quadrature contour runs into the spectrum.
    """


class NonHolomorphicError(CovopError):
    """
    Raised when a function piece without a derivative is used where
    holomorphy is required.
    """


class DomainError(CovopError, ValueError):
    """
    Raised when a parameter lies outside of its admissible domain.
    """


class WireFormatError(CovopError, ValueError):
    """
    Raised when a JSON document doesn't match the expected wire format.
    """


class ClusteringAmbiguityWarning(UserWarning):
    """
    Two eigenvalue clusters were close enough that they have been merged
    conservatively.
    """


class MonodromyWarning(UserWarning):
    """
    Eigenvalue branches come back permuted after one loop around the torus.
    """
