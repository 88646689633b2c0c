# SPDX-License-Identifier: MIT

from __future__ import annotations

import logging

from collections.abc import Callable, Sequence
from typing import Union

import attrs
import numpy as np

from ._core import ComplexArray, Signal, _check_same_n, _readonly
from .exceptions import (
    ContourError,
    DomainError,
    GridError,
    NonHolomorphicError,
)
from .spectral import BranchSet, RegionSet
from .transform import (
    FrequencyTable,
    _check_same_grid,
    apply_table,
    default_window,
    dtft,
)


log = logging.getLogger("covop")

DEFAULT_QUADRATURE = 64
DEFAULT_CONTOUR_MARGIN = 0.1

ScalarFunction = Callable[[np.ndarray], np.ndarray]


@attrs.frozen
class Everywhere:
    """
    The whole complex plane.
    """

    def __str__(self) -> str:
        return "all"


@attrs.frozen
class ClusterRegion:
    """
    The neighborhood of the branches in cluster *index* of a
    :class:`covop.spectral.RegionSet`.

    Membership is decided by the branch's cluster, not by its position.
    """

    index: int

    def __str__(self) -> str:
        return f"cluster:{self.index}"


@attrs.frozen
class DiscRegion:
    """
    The open disc ``|z - center| < radius``.
    """

    center: complex = attrs.field(converter=complex)
    radius: float = attrs.field(converter=float)

    @radius.validator
    def _check_radius(self, _attribute: attrs.Attribute, value: float) -> None:
        if not value > 0:
            msg = f"Disc radius must be positive, got {value!r}."
            raise DomainError(msg)

    def __str__(self) -> str:
        return f"disc:{self.center}:{self.radius}"


Region = Union[Everywhere, ClusterRegion, DiscRegion]
EVERYWHERE = Everywhere()


@attrs.frozen
class PhiPiece:
    """
    A scalar function restricted to a region.

    Attributes:
        region: Where the piece applies; elsewhere it contributes 0.

        func: Vectorized ``z -> phi(z)``.

        derivative: Vectorized ``z -> phi'(z)`` or None.

        holomorphic:
            Whether the piece may be used on the contour path and on
            non-diagonalizable symbols. Requires a *derivative*.

        family: Name of the family that produced the piece.

        params: Family parameters.
    """

    region: Region
    func: ScalarFunction = attrs.field(eq=False, repr=False)
    derivative: ScalarFunction | None = attrs.field(eq=False, repr=False)
    holomorphic: bool
    family: str = "custom"
    params: tuple[complex, ...] = attrs.field(default=(), converter=tuple)

    def __attrs_post_init__(self) -> None:
        if self.holomorphic and self.derivative is None:
            msg = "Holomorphic pieces must supply a derivative."
            raise DomainError(msg)


@attrs.frozen
class PhiSpec:
    """
    Piecewise scalar function on the spectrum; zero outside of all regions.

    Specs add up piece-wise:

    >>> from covop.calculus import ClusterRegion, gaussian_phi
    >>> phi = gaussian_phi(1, 0.1, ClusterRegion(0)) + gaussian_phi(
    ...     0, 0.1, ClusterRegion(1)
    ... )
    >>> len(phi.pieces), phi.holomorphic
    (2, False)
    """

    pieces: tuple[PhiPiece, ...] = attrs.field(converter=tuple)

    def __add__(self, other: PhiSpec) -> PhiSpec:
        return PhiSpec(self.pieces + other.pieces)

    @property
    def holomorphic(self) -> bool:
        return all(p.holomorphic for p in self.pieces)

    def __call__(self, z: complex | np.ndarray) -> np.ndarray:
        """
        Evaluate by geometric region tests; cluster pieces count everywhere.
        """
        z = np.asarray(z, dtype=np.complex128)
        out = np.zeros_like(z)
        for p in self.pieces:
            out = out + np.where(_geometric_mask(p.region, z), p.func(z), 0)
        return out


def _geometric_mask(region: Region, z: np.ndarray) -> np.ndarray:
    if isinstance(region, DiscRegion):
        return np.abs(z - region.center) < region.radius
    return np.ones(z.shape, dtype=bool)


def poly_phi(
    coeffs: Sequence[complex], region: Region = EVERYWHERE
) -> PhiSpec:
    """
    ``phi(z) = sum_j coeffs[j] z**j``.
    """
    c = np.asarray(coeffs, dtype=np.complex128)
    dc = np.polynomial.polynomial.polyder(c) if len(c) > 1 else np.zeros(1)

    return PhiSpec(
        [
            PhiPiece(
                region,
                lambda z: np.polynomial.polynomial.polyval(z, c),
                lambda z: np.polynomial.polynomial.polyval(z, dc),
                True,
                "poly",
                tuple(c),
            )
        ]
    )


def exp_affine_phi(
    alpha: complex, beta: complex = 0, region: Region = EVERYWHERE
) -> PhiSpec:
    """
    ``phi(z) = exp(alpha z + beta)``.
    """
    return PhiSpec(
        [
            PhiPiece(
                region,
                lambda z: np.exp(alpha * z + beta),
                lambda z: alpha * np.exp(alpha * z + beta),
                True,
                "exp_affine",
                (alpha, beta),
            )
        ]
    )


def sqrt_shift_phi(gamma: complex, region: Region = EVERYWHERE) -> PhiSpec:
    """
    ``phi(z) = sqrt(z - gamma)`` on the principal branch.

    Holomorphic away from the cut ``z - gamma <= 0``; choose *region*
    accordingly.
    """
    return PhiSpec(
        [
            PhiPiece(
                region,
                lambda z: np.sqrt(z - gamma),
                lambda z: 0.5 / np.sqrt(z - gamma),
                True,
                "sqrt_shift",
                (gamma,),
            )
        ]
    )


def gaussian_phi(mu: complex, sigma: float, region: Region) -> PhiSpec:
    """
    Circular complex Gaussian ``exp(-|z - mu|**2 / sigma**2) / (2 pi sigma)``
    on *region*.

    It depends on ``|z - mu|`` and thus isn't holomorphic: it works on the
    spectral path for symbols without nilpotents only.

    Raises:
        DomainError: If *sigma* isn't positive.
    """
    if not sigma > 0:
        msg = f"Gaussian width must be positive, got {sigma!r}."
        raise DomainError(msg)

    return PhiSpec(
        [
            PhiPiece(
                region,
                lambda z: np.exp(-np.abs(z - mu) ** 2 / sigma**2)
                / (2 * np.pi * sigma),
                None,
                False,
                "gaussian",
                (mu, sigma),
            )
        ]
    )


@attrs.frozen(eq=False)
class SpectralMultipliers:
    """
    Per-branch scalar functions on the grid.

    Attributes:
        values: ``(M, m)`` array; must be finite.
    """

    values: ComplexArray = attrs.field(converter=_readonly)

    def __attrs_post_init__(self) -> None:
        if self.values.ndim != 2:
            msg = f"Expected (M, m) multipliers, got {self.values.shape}."
            raise DomainError(msg)
        if not np.all(np.isfinite(self.values)):
            msg = "Multipliers must be finite."
            raise DomainError(msg)


def _branch_mask(
    region: Region, bs: BranchSet, regions: RegionSet | None
) -> np.ndarray:
    if isinstance(region, ClusterRegion):
        if regions is None:
            msg = f"{region} needs a RegionSet."
            raise DomainError(msg)
        if not 0 <= region.index < regions.count:
            msg = f"{region} doesn't exist; there are {regions.count} clusters."
            raise DomainError(msg)
        members = np.array(
            [regions.cluster_of(k) == region.index for k in range(bs.m)]
        )
        return np.broadcast_to(members, bs.eigenvalues.shape)
    return _geometric_mask(region, bs.eigenvalues)


def phi_multipliers(
    bs: BranchSet, phi: PhiSpec, *, regions: RegionSet | None = None
) -> tuple[ComplexArray, ComplexArray]:
    """
    Return ``phi(lambda_k(w))`` and ``phi'(lambda_k(w))`` as ``(M, m)``
    arrays.

    Raises:
        NonHolomorphicError:
            If a piece without derivative is active on a nonzero nilpotent.
    """
    lam = bs.eigenvalues
    active_nilpotents = np.any(bs.nilpotents != 0, axis=(-2, -1))
    values = np.zeros(lam.shape, dtype=np.complex128)
    slopes = np.zeros(lam.shape, dtype=np.complex128)

    for p in phi.pieces:
        mask = _branch_mask(p.region, bs, regions)
        values += np.where(mask, p.func(lam), 0)
        if p.derivative is not None:
            slopes += np.where(mask, p.derivative(lam), 0)
        elif np.any(mask & active_nilpotents):
            msg = (
                f"The {p.family} piece on {p.region} has no derivative but "
                "the symbol isn't diagonalizable there."
            )
            raise NonHolomorphicError(msg)

    return values, slopes


def multiplier_table(bs: BranchSet, a: SpectralMultipliers) -> FrequencyTable:
    """
    Return ``sum_k a_k P_k + N_k``, nilpotents added without a multiplier.

    Raises:
        GridError: If *a* doesn't match the grid and branches of *bs*.
    """
    if a.values.shape != bs.eigenvalues.shape:
        msg = (
            f"Multipliers of shape {a.values.shape} don't match branches of "
            f"shape {bs.eigenvalues.shape}."
        )
        raise GridError(msg)

    return FrequencyTable(
        bs.grid,
        np.einsum("ak,akij->aij", a.values, bs.projections)
        + bs.nilpotents.sum(axis=1),
    )


def phi_table(
    bs: BranchSet, phi: PhiSpec, *, regions: RegionSet | None = None
) -> FrequencyTable:
    """
    Return ``sum_k phi(lambda_k) P_k + phi'(lambda_k) N_k``.
    """
    values, slopes = phi_multipliers(bs, phi, regions=regions)

    return FrequencyTable(
        bs.grid,
        np.einsum("ak,akij->aij", values, bs.projections)
        + np.einsum("ak,akij->aij", slopes, bs.nilpotents),
    )


def apply_multipliers(
    bs: BranchSet,
    a: SpectralMultipliers,
    x: Signal,
    *,
    support: tuple[int, int] | None = None,
) -> Signal:
    """
    Apply the covariant operator with frequency multipliers *a*.

    The output window defaults to :func:`covop.transform.default_window`.
    """
    return apply_table(multiplier_table(bs, a), x, support)


def apply_phi_spectral(
    bs: BranchSet,
    phi: PhiSpec,
    x: Signal,
    *,
    regions: RegionSet | None = None,
    support: tuple[int, int] | None = None,
) -> Signal:
    """
    Apply ``phi(S)`` along the eigenvalue branches of ``S``.

    Args:
        bs: Branches of the generator ``S``.

        phi: The function; cluster pieces need *regions*.

        x: Input signal, at most one grid period long.

        regions: Cluster assignment of the branches.

        support: ``(start, length)`` of the output window.

    Raises:
        NonHolomorphicError:
            If a piece without derivative meets a nonzero nilpotent.
    """
    return apply_table(phi_table(bs, phi, regions=regions), x, support)


def _contour_circles(
    region: Region,
    table: FrequencyTable,
    eigenvalues: np.ndarray,
    margin: float,
    branches: BranchSet | None,
    regions: RegionSet | None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Return per-frequency centers and radii of the circle for *region*.
    """
    size = table.grid.size
    if isinstance(region, Everywhere):
        center = eigenvalues.mean(axis=1)
        spread = np.abs(eigenvalues - center[:, None]).max(axis=1)
        return center, 2 * spread + margin

    if isinstance(region, DiscRegion):
        center = np.full(size, region.center)
        radius = np.full(size, region.radius)
        closest = np.abs(np.abs(eigenvalues - region.center) - region.radius)
        if closest.min() < margin:
            msg = (
                f"Spectrum comes within {closest.min():.3e} of the contour of "
                f"{region}, less than the margin {margin}."
            )
            raise ContourError(msg)
        return center, radius

    if branches is None or regions is None:
        msg = f"{region} needs branches and a RegionSet."
        raise DomainError(msg)
    _check_same_grid(branches.grid, table.grid)
    mask = _branch_mask(region, branches, regions)[0]
    inside = branches.eigenvalues[:, mask]
    outside = branches.eigenvalues[:, ~mask]
    center = inside.mean(axis=1)
    r_in = np.abs(inside - center[:, None]).max(axis=1)
    if not outside.shape[1]:
        return center, 2 * r_in + margin

    r_out = np.abs(outside - center[:, None]).min(axis=1)
    radius = (r_in + r_out) / 2
    if (radius - r_in).min() < margin:
        msg = (
            f"Clusters are too close for a contour around {region} with "
            f"margin {margin}."
        )
        raise ContourError(msg)
    return center, radius


def contour_table(
    table: FrequencyTable,
    phi: PhiSpec,
    quadrature: int = DEFAULT_QUADRATURE,
    *,
    margin: float = DEFAULT_CONTOUR_MARGIN,
    branches: BranchSet | None = None,
    regions: RegionSet | None = None,
) -> FrequencyTable:
    """
    Evaluate ``1/(2 pi i) \\oint phi(z) (zI - S^(w))^-1 dz`` at every grid
    point with the trapezoidal rule on one circle per piece.

    Whole-plane pieces use a circle around all eigenvalues at ``w``, disc
    pieces their disc's boundary, and cluster pieces a circle halfway
    between the cluster and the remaining eigenvalues.

    Raises:
        NonHolomorphicError: If a piece isn't holomorphic.

        ContourError: If a circle comes closer than *margin* to the spectrum.

        DomainError: If *quadrature* is less than 16.
    """
    if quadrature < 16:
        msg = f"Need at least 16 quadrature nodes, got {quadrature}."
        raise DomainError(msg)
    for p in phi.pieces:
        if not p.holomorphic:
            msg = f"The {p.family} piece on {p.region} isn't holomorphic."
            raise NonHolomorphicError(msg)

    n = table.n
    eigenvalues = np.linalg.eigvals(table.values)
    w = np.exp(2j * np.pi * np.arange(quadrature) / quadrature)
    out = np.zeros_like(table.values)

    for p in phi.pieces:
        center, radius = _contour_circles(
            p.region, table, eigenvalues, margin, branches, regions
        )
        steps = radius[:, None] * w[None, :]
        z = center[:, None] + steps
        shifted = z[..., None, None] * np.eye(n) - table.values[:, None]
        try:
            resolvents = np.linalg.inv(shifted)
        except np.linalg.LinAlgError:
            msg = "Resolvent is singular at a quadrature node."
            raise ContourError(msg) from None
        out += np.einsum("aq,aqij->aij", p.func(z) * steps, resolvents) / quadrature

    log.debug(
        "evaluated contour integrals",
        extra={
            "covop_quadrature": quadrature,
            "covop_pieces": len(phi.pieces),
        },
    )

    return FrequencyTable(table.grid, out)


def apply_phi_contour(
    table: FrequencyTable,
    phi: PhiSpec,
    quadrature: int,
    x: Signal,
    *,
    margin: float = DEFAULT_CONTOUR_MARGIN,
    branches: BranchSet | None = None,
    regions: RegionSet | None = None,
    support: tuple[int, int] | None = None,
) -> Signal:
    """
    Apply ``phi(S)`` defined by the Cauchy integral against the resolvent.

    See :func:`contour_table` for the contours and errors.
    """
    return apply_table(
        contour_table(
            table,
            phi,
            quadrature,
            margin=margin,
            branches=branches,
            regions=regions,
        ),
        x,
        support,
    )


def bandpass_reference(
    bs: BranchSet,
    branch: int,
    omega: float,
    x: Signal,
    *,
    support: tuple[int, int] | None = None,
) -> Signal:
    """
    Ideal bandpass ``exp(-2 pi i w t) P_k(w) x^(w)`` at the grid frequency
    *omega*.

    This is the limit that narrow Gaussians around ``lambda_k(omega)``
    converge to.

    Raises:
        DomainError: If *branch* doesn't exist.

        GridError: If *omega* isn't on the grid.
    """
    if not 0 <= branch < bs.m:
        msg = f"Branch {branch} doesn't exist; there are {bs.m} branches."
        raise DomainError(msg)
    _check_same_n(bs.n, x.n)

    grid = bs.grid
    j = grid.index_of(omega)
    direction = bs.projections[j, branch] @ dtft(x, grid).values[j]
    start, length = support if support is not None else default_window(x, grid)
    times = start + np.arange(length)
    phase = np.exp(-2j * np.pi * ((j * times) % grid.size) / grid.size)

    return Signal(x.n, start, phase[:, None] * direction[None, :])


def verify_covariance(a: FrequencyTable, s: FrequencyTable) -> float:
    """
    Return ``max_w ||A^(w) S^(w) - S^(w) A^(w)||``; zero iff the operators
    commute on the grid.

    Raises:
        GridError: If the grids differ.
    """
    _check_same_grid(a.grid, s.grid)
    _check_same_n(a.n, s.n)
    commutator = a.values @ s.values - s.values @ a.values

    return float(np.linalg.norm(commutator, ord=2, axis=(-2, -1)).max())
