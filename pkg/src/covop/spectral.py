# SPDX-License-Identifier: MIT

from __future__ import annotations

import logging
import warnings

import attrs
import numpy as np
import scipy.linalg

from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree

from ._core import ComplexArray, _readonly
from .exceptions import (
    ClusteringAmbiguityWarning,
    ContourError,
    DomainError,
    MonodromyWarning,
    TrackingError,
)
from .transform import FrequencyGrid, FrequencyTable


log = logging.getLogger("covop")

DEFAULT_PROJECTION_QUADRATURE = 64
# Eigenvector bases worse conditioned than this go through the contour path.
FAST_PATH_CONDITION = 1e6
RELATIVE_TOLERANCE = 1e-9
RELATIVE_NILPOTENT_CUTOFF = 1e-8
DEFAULT_REGION_DELTA = 0.05


def _spectral_norms(a: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a, ord=2, axis=(-2, -1))


@attrs.frozen(eq=False)
class PointDecomposition:
    """
    Jordan spectral representation ``S = sum_k lambda_k P_k + N_k`` of a
    single matrix.

    Attributes:
        eigenvalues: ``(m,)`` cluster means.

        projections: ``(m, n, n)`` spectral projections.

        nilpotents: ``(m, n, n)`` nilpotent parts.
    """

    eigenvalues: ComplexArray = attrs.field(converter=_readonly)
    projections: ComplexArray = attrs.field(converter=_readonly)
    nilpotents: ComplexArray = attrs.field(converter=_readonly)

    def __repr__(self) -> str:
        return f"<PointDecomposition(m={self.m}, n={self.n})>"

    @property
    def m(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def n(self) -> int:
        return int(self.projections.shape[-1])

    def reconstruct(self) -> ComplexArray:
        return np.einsum(
            "k,kij->ij", self.eigenvalues, self.projections
        ) + self.nilpotents.sum(axis=0)

    def residuals(self) -> dict[str, float]:
        """
        Largest violation of each defining condition, in spectral norm.
        """
        return _jordan_residuals(
            self.projections[None], self.nilpotents[None]
        )


def _jordan_residuals(
    projections: np.ndarray, nilpotents: np.ndarray
) -> dict[str, float]:
    """
    Check the four conditions on ``(M, m, n, n)`` stacks.
    """
    _, m, n, _ = projections.shape
    eye = np.eye(n)

    identity = _spectral_norms(projections.sum(axis=1) - eye).max()

    products = np.einsum("akij,aljh->aklih", projections, projections)
    expected = np.zeros_like(products)
    for k in range(m):
        expected[:, k, k] = projections[:, k]
    orthogonality = _spectral_norms(products - expected).max()

    confined = np.einsum("akij,akjh,akhl->akil", projections, nilpotents, projections)
    confinement = _spectral_norms(nilpotents - confined).max()

    nilpotency = _spectral_norms(np.linalg.matrix_power(nilpotents, n)).max()

    return {
        "identity": float(identity),
        "orthogonality": float(orthogonality),
        "confinement": float(confinement),
        "nilpotency": float(nilpotency),
    }


def group_projection(
    matrix: np.ndarray,
    center: complex,
    radius: float,
    quadrature: int = DEFAULT_PROJECTION_QUADRATURE,
) -> ComplexArray:
    """
    Spectral projection onto the eigenvalues inside a circle.

    Evaluates ``1/(2 pi i) \\oint (zI - S)^-1 dz`` with the trapezoidal rule
    on *quadrature* equispaced nodes, which converges geometrically.

    >>> import numpy as np
    >>> from covop.spectral import group_projection
    >>> p = group_projection(np.diag([0.0, 5.0]), 0, 1, 32)
    >>> bool(np.allclose(p, np.diag([1, 0])))
    True

    Raises:
        ContourError:
            If an eigenvalue lies on the circle or the resolvent is singular
            at a node.
    """
    if radius <= 0:
        msg = f"Contour radius must be positive, got {radius!r}."
        raise DomainError(msg)

    s = np.asarray(matrix, dtype=np.complex128)
    n = s.shape[0]
    gaps = np.abs(np.abs(scipy.linalg.eigvals(s) - center) - radius)
    if gaps.min() < 1e-6 * radius:
        msg = (
            f"Eigenvalue within {gaps.min():.3e} of the circle around "
            f"{center} with radius {radius}."
        )
        raise ContourError(msg)

    w = radius * np.exp(2j * np.pi * np.arange(quadrature) / quadrature)
    shifted = (center + w)[:, None, None] * np.eye(n) - s
    try:
        resolvents = np.linalg.inv(shifted)
    except np.linalg.LinAlgError:
        msg = "Resolvent is singular at a quadrature node."
        raise ContourError(msg) from None

    return np.einsum("q,qij->ij", w, resolvents) / quadrature


def _cluster(eigenvalues: np.ndarray, tol: float) -> list[list[int]]:
    """
    Single-linkage clustering of eigenvalues closer than *tol*.

    Clusters that are closer than ``2 * tol`` are merged as well, but that
    is ambiguous and warned about.
    """
    count = len(eigenvalues)
    parent = list(range(count))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    dist = np.abs(eigenvalues[:, None] - eigenvalues[None, :])
    for i in range(count):
        for j in range(i + 1, count):
            if dist[i, j] <= tol:
                parent[find(j)] = find(i)

    ambiguous = False
    for i in range(count):
        for j in range(i + 1, count):
            if find(i) != find(j) and dist[i, j] <= 2 * tol:
                parent[find(j)] = find(i)
                ambiguous = True

    if ambiguous:
        warnings.warn(
            "Eigenvalue clusters within twice the tolerance were merged.",
            ClusteringAmbiguityWarning,
            stacklevel=3,
        )

    groups: dict[int, list[int]] = {}
    for i in range(count):
        groups.setdefault(find(i), []).append(i)

    return sorted(
        groups.values(),
        key=lambda g: (
            -eigenvalues[g].mean().real,
            -eigenvalues[g].mean().imag,
        ),
    )


def decompose_point(
    matrix: np.ndarray,
    tol: float | None = None,
    *,
    quadrature: int = DEFAULT_PROJECTION_QUADRATURE,
) -> PointDecomposition:
    """
    Compute the Jordan spectral representation of *matrix*.

    Eigenvalues are grouped into clusters first; every cluster gets one
    projection. If the eigenvector basis is well conditioned, projections
    are assembled from eigenvectors. Otherwise they come from
    :func:`group_projection` around each cluster. Clusters are ordered by
    decreasing real part, then decreasing imaginary part.

    Args:
        matrix: Square complex matrix.

        tol:
            Clustering diameter. Defaults to ``1e-9`` times the spectral
            norm of *matrix*.

        quadrature: Nodes per contour on the contour path.

    Raises:
        DomainError: If *tol* isn't positive.
    """
    s = np.asarray(matrix, dtype=np.complex128)
    n = s.shape[0]
    scale = float(np.linalg.norm(s, ord=2))
    if tol is None:
        tol = RELATIVE_TOLERANCE * scale if scale > 0 else RELATIVE_TOLERANCE
    if tol <= 0:
        msg = f"Tolerance must be positive, got {tol!r}."
        raise DomainError(msg)

    eigenvalues, vectors = scipy.linalg.eig(s)
    clusters = _cluster(eigenvalues, tol)
    means = np.array([eigenvalues[c].mean() for c in clusters])

    if len(clusters) == 1:
        projections = np.eye(n, dtype=np.complex128)[None]
    elif np.linalg.cond(vectors) < FAST_PATH_CONDITION:
        inverse = np.linalg.inv(vectors)
        projections = np.stack(
            [vectors[:, c] @ inverse[c, :] for c in clusters]
        )
    else:
        projections = np.stack(
            [
                _contour_projection(s, eigenvalues, c, quadrature)
                for c in clusters
            ]
        )

    nilpotents = np.einsum(
        "kij,kjh->kih",
        s[None] - means[:, None, None] * np.eye(n),
        projections,
    )
    cutoff = RELATIVE_NILPOTENT_CUTOFF * scale
    nilpotents[_spectral_norms(nilpotents) < cutoff] = 0

    return PointDecomposition(means, projections, nilpotents)


def _contour_projection(
    s: np.ndarray,
    eigenvalues: np.ndarray,
    cluster: list[int],
    quadrature: int,
) -> ComplexArray:
    center = eigenvalues[cluster].mean()
    inside = np.abs(eigenvalues[cluster] - center).max()
    outside = np.delete(eigenvalues, cluster)
    radius = (inside + np.abs(outside - center).min()) / 2

    return group_projection(s, center, radius, quadrature)


@attrs.frozen(eq=False)
class BranchSet:
    """
    Eigenvalue branches with their projections and nilpotents, tracked
    continuously over a frequency grid.

    Branch ``k`` is the ``k``-th cluster of the decomposition at ``w = 0``.

    Attributes:
        grid: The frequency grid.

        eigenvalues: ``(M, m)`` array.

        projections: ``(M, m, n, n)`` array.

        nilpotents: ``(M, m, n, n)`` array.

        monodromy:
            ``monodromy[k]`` is the branch that branch ``k`` runs into
            after one loop around the torus.
    """

    grid: FrequencyGrid
    eigenvalues: ComplexArray = attrs.field(converter=_readonly)
    projections: ComplexArray = attrs.field(converter=_readonly)
    nilpotents: ComplexArray = attrs.field(converter=_readonly)
    monodromy: tuple[int, ...] = attrs.field(converter=tuple)

    def __repr__(self) -> str:
        return (
            f"<BranchSet(size={self.grid.size}, m={self.m}, n={self.n}, "
            f"monodromy={list(self.monodromy)})>"
        )

    @property
    def m(self) -> int:
        return int(self.eigenvalues.shape[1])

    @property
    def n(self) -> int:
        return int(self.projections.shape[-1])

    @property
    def has_monodromy(self) -> bool:
        return self.monodromy != tuple(range(self.m))

    @property
    def has_nilpotents(self) -> bool:
        return bool(np.any(self.nilpotents))

    def at(self, j: int) -> PointDecomposition:
        return PointDecomposition(
            self.eigenvalues[j], self.projections[j], self.nilpotents[j]
        )

    def reconstruct(self) -> FrequencyTable:
        """
        Return the table ``sum_k lambda_k P_k + N_k``.
        """
        return FrequencyTable(
            self.grid,
            np.einsum("ak,akij->aij", self.eigenvalues, self.projections)
            + self.nilpotents.sum(axis=1),
        )

    def jordan_residuals(self) -> dict[str, float]:
        """
        Largest violation of each defining condition over the grid.
        """
        return _jordan_residuals(self.projections, self.nilpotents)


def _min_gap(eigenvalues: np.ndarray) -> float:
    if len(eigenvalues) < 2:
        return np.inf
    dist = np.abs(eigenvalues[:, None] - eigenvalues[None, :])
    return float(dist[~np.eye(len(eigenvalues), dtype=bool)].min())


def _match(
    prev: PointDecomposition, nxt: PointDecomposition, tie_weight: float
) -> np.ndarray:
    """
    Optimal assignment of the branches of *prev* to those of *nxt*.

    The cost is the eigenvalue distance; a small multiple of the projection
    mismatch breaks ties.
    """
    dist = np.abs(prev.eigenvalues[:, None] - nxt.eigenvalues[None, :])
    ranks = np.rint(np.einsum("kii->k", prev.projections).real)
    overlap = np.abs(
        np.einsum("kij,lji->kl", prev.projections, nxt.projections)
    ) / np.maximum(ranks, 1)[:, None]
    _, cols = linear_sum_assignment(dist + tie_weight * (1 - overlap))

    return cols


def track_branches(
    table: FrequencyTable,
    tol: float | None = None,
    *,
    quadrature: int = DEFAULT_PROJECTION_QUADRATURE,
) -> BranchSet:
    """
    Decompose every grid point of *table* and follow the branches along it.

    Consecutive grid points are matched by an optimal assignment. A step is
    accepted only if every branch moves less than half of the smallest
    eigenvalue gap at both ends of the step. After closing the loop from the
    last grid point back to the first, the resulting permutation is recorded
    as monodromy and warned about if it isn't the identity.

    Raises:
        TrackingError:
            If the number of clusters changes along the grid or a step is
            too large; retry with twice the grid size.
    """
    grid = table.grid
    size = grid.size
    points = [
        decompose_point(v, tol, quadrature=quadrature) for v in table.values
    ]
    counts = {p.m for p in points}
    if len(counts) > 1:
        msg = (
            f"Branch count varies over the grid ({sorted(counts)}); "
            f"try a grid of size {2 * size}."
        )
        raise TrackingError(msg, 2 * size)

    scale = max(float(_spectral_norms(table.values).max()), 1.0)
    tie_weight = RELATIVE_TOLERANCE * scale

    def step(prev: PointDecomposition, nxt: PointDecomposition, j: int) -> np.ndarray:
        cols = _match(prev, nxt, tie_weight)
        jumps = np.abs(prev.eigenvalues - nxt.eigenvalues[cols])
        bound = 0.5 * min(_min_gap(prev.eigenvalues), _min_gap(nxt.eigenvalues))
        if jumps.max() >= bound:
            msg = (
                f"Eigenvalue branch jumps by {jumps.max():.3e} after grid "
                f"point {j}, at least half the eigenvalue gap; try a grid of "
                f"size {2 * size}."
            )
            raise TrackingError(msg, 2 * size)
        return cols

    tracked = [points[0]]
    for j in range(1, size):
        cols = step(tracked[-1], points[j], j - 1)
        p = points[j]
        tracked.append(
            PointDecomposition(
                p.eigenvalues[cols], p.projections[cols], p.nilpotents[cols]
            )
        )

    monodromy = tuple(int(c) for c in step(tracked[-1], tracked[0], size - 1))
    bs = BranchSet(
        grid,
        np.stack([p.eigenvalues for p in tracked]),
        np.stack([p.projections for p in tracked]),
        np.stack([p.nilpotents for p in tracked]),
        monodromy,
    )

    log.debug(
        "tracked %d branches over %d grid points",
        bs.m,
        size,
        extra={"covop_branches": bs.m, "covop_grid_size": size},
    )
    if bs.has_monodromy:
        log.warning(
            "branches permute after a loop around the torus: %r",
            monodromy,
            extra={"covop_monodromy": monodromy},
        )
        warnings.warn(
            f"Branches permute after one loop around the torus: {monodromy}.",
            MonodromyWarning,
            stacklevel=2,
        )

    return bs


@attrs.frozen(eq=False)
class SpectrumLocus:
    """
    All branch samples ``lambda_k(w_j)``, one per grid point and branch, in
    grid-major order.

    Every branch traces a closed curve: its last sample is joined to the
    first sample of ``closing[k]``, the branch it runs into after one loop.
    ``None`` closes every branch onto itself.
    """

    points: ComplexArray = attrs.field(converter=_readonly)
    branch: np.ndarray
    omega: np.ndarray
    branches: int
    closing: tuple[int, ...] | None = attrs.field(
        default=None, converter=attrs.converters.optional(tuple)
    )

    def __repr__(self) -> str:
        return (
            f"<SpectrumLocus(points={len(self.points)}, "
            f"branches={self.branches})>"
        )

    def of_branch(self, k: int) -> ComplexArray:
        return self.points[self.branch == k]

    def segments(self, k: int) -> tuple[ComplexArray, ComplexArray]:
        """
        Start and end points of the segments that join branch *k*'s samples
        into a closed polyline.
        """
        start = self.of_branch(k)
        following = k if self.closing is None else self.closing[k]
        end = np.append(start[1:], self.of_branch(following)[:1])
        return start, end


def spectrum_locus(bs: BranchSet) -> SpectrumLocus:
    """
    Collect the spectrum of the generator: the union of the eigenvalues over
    all frequencies, tagged by branch and frequency.
    """
    size, m = bs.eigenvalues.shape
    return SpectrumLocus(
        bs.eigenvalues.reshape(-1),
        np.tile(np.arange(m), size),
        np.repeat(bs.grid.points, m),
        m,
        bs.monodromy,
    )


@attrs.frozen
class RegionSet:
    """
    Partition of the branches into clusters with disjoint neighborhoods.

    Every cluster's region is the tube of radius *delta* around the locus of
    its branches.

    Attributes:
        clusters: Branch indices per cluster, ordered by their first branch.

        delta: Tube radius.

        separation:
            Smallest distance between the loci of two different clusters;
            ``None`` if there is only one cluster.
    """

    clusters: tuple[tuple[int, ...], ...]
    delta: float
    separation: float | None

    @property
    def count(self) -> int:
        return len(self.clusters)

    def cluster_of(self, branch: int) -> int:
        for i, c in enumerate(self.clusters):
            if branch in c:
                return i
        msg = f"Branch {branch} is not part of any cluster."
        raise DomainError(msg)


def _plane(z: ComplexArray) -> np.ndarray:
    return np.column_stack([z.real, z.imag])


def _cross(u: ComplexArray, v: ComplexArray) -> np.ndarray:
    return (u.conj() * v).imag


def _point_segment(
    p: ComplexArray, a: ComplexArray, b: ComplexArray
) -> np.ndarray:
    ab = b - a
    length2 = np.abs(ab) ** 2
    t = np.divide(
        ((p - a) * ab.conj()).real,
        length2,
        out=np.zeros_like(length2),
        where=length2 > 0,
    )
    return np.abs(p - a - np.clip(t, 0, 1) * ab)


def _segment_distances(
    a: ComplexArray, b: ComplexArray, c: ComplexArray, d: ComplexArray
) -> np.ndarray:
    """
    Distances between the segments ``a[i]b[i]`` and ``c[i]d[i]``.
    """
    crossing = (_cross(b - a, c - a) * _cross(b - a, d - a) < 0) & (
        _cross(d - c, a - c) * _cross(d - c, b - c) < 0
    )
    ends = np.minimum.reduce(
        [
            _point_segment(a, c, d),
            _point_segment(b, c, d),
            _point_segment(c, a, b),
            _point_segment(d, a, b),
        ]
    )
    return np.where(crossing, 0.0, ends)


def _polyline_distance(
    first: tuple[ComplexArray, ComplexArray],
    second: tuple[ComplexArray, ComplexArray],
) -> float:
    (a, b), (c, d) = first, second
    near, _ = cKDTree(_plane(c)).query(_plane(a))
    bound = float(near.min())
    if bound == 0:
        return 0.0

    # Segments closer than *bound* have midpoints within *radius*.
    radius = bound + (np.abs(b - a).max() + np.abs(d - c).max()) / 2
    pairs = cKDTree(_plane((a + b) / 2)).sparse_distance_matrix(
        cKDTree(_plane((c + d) / 2)), radius, output_type="ndarray"
    )
    if len(pairs) == 0:
        return bound
    i, j = pairs["i"], pairs["j"]
    return min(bound, float(_segment_distances(a[i], b[i], c[j], d[j]).min()))


def detect_regions(locus: SpectrumLocus, delta: float) -> RegionSet:
    """
    Merge branches whose loci come within ``2 * delta`` of each other.

    Loci are compared as closed polylines through the branch samples, so
    curves that cross between two grid points are at distance zero.

    >>> import numpy as np
    >>> from covop.spectral import SpectrumLocus, detect_regions
    >>> locus = SpectrumLocus(np.array([0, 1]), np.array([0, 1]), np.zeros(2), 2)
    >>> regions = detect_regions(locus, 0.1)
    >>> regions.clusters, regions.separation
    (((0,), (1,)), 1.0)

    Raises:
        DomainError: If *delta* isn't positive.
    """
    if delta <= 0:
        msg = f"Region radius must be positive, got {delta!r}."
        raise DomainError(msg)

    m = locus.branches
    lines = [locus.segments(k) for k in range(m)]
    dist = np.full((m, m), np.inf)
    for k in range(m):
        for j in range(k + 1, m):
            dist[k, j] = dist[j, k] = _polyline_distance(lines[k], lines[j])

    parent = list(range(m))

    def find(i: int) -> int:
        while parent[i] != i:
            i = parent[i]
        return i

    for k in range(m):
        for j in range(k + 1, m):
            if dist[k, j] <= 2 * delta:
                parent[max(find(k), find(j))] = min(find(k), find(j))

    groups: dict[int, list[int]] = {}
    for k in range(m):
        groups.setdefault(find(k), []).append(k)
    clusters = tuple(tuple(g) for _, g in sorted(groups.items()))

    cross = [
        dist[k, j]
        for k in range(m)
        for j in range(k + 1, m)
        if find(k) != find(j)
    ]
    separation = float(min(cross)) if cross else None

    log.debug(
        "detected %d spectral regions",
        len(clusters),
        extra={
            "covop_clusters": clusters,
            "covop_separation": separation,
            "covop_delta": delta,
        },
    )

    return RegionSet(clusters, float(delta), separation)
