# SPDX-License-Identifier: MIT

from __future__ import annotations

import logging

from collections.abc import Callable, Sequence
from typing import Literal, Optional, Tuple

import attrs
import numpy as np
import scipy.optimize

from numpy.typing import ArrayLike, NDArray

from ._core import ComplexArray, Signal, _readonly
from .calculus import (
    EVERYWHERE,
    PhiSpec,
    Region,
    apply_phi_spectral,
    gaussian_phi,
    phi_multipliers,
    poly_phi,
)
from .exceptions import DimensionMismatchError, DomainError
from .spectral import BranchSet, RegionSet
from .transform import default_window, dtft


log = logging.getLogger("covop")

RealArray = NDArray[np.float64]
Bounds = Tuple[Tuple[Optional[float], Optional[float]], ...]
FitMethod = Literal["lbfgsb", "descent"]

RELATIVE_STOP = 1e-10
MAX_HALVINGS = 20
# Gaussian widths below this are numerically a point mass.
SIGMA_FLOOR = 1e-8
# Length of the first quasi-Newton step relative to the largest parameter.
INITIAL_STEP = 1e-2


@attrs.frozen
class PhiFamily:
    """
    A parameterized :class:`covop.calculus.PhiSpec`.

    Complex parameters are split into real and imaginary part, so *theta* is
    always a real vector.

    Attributes:
        name: Family name.

        size: Length of *theta*.

        build: ``theta -> PhiSpec``; raises DomainError outside the domain.

        linear: Whether the operator depends linearly on *theta*.

        bounds:
            Per-coordinate ``(low, high)`` limits of the domain, ``None``
            for unbounded.
    """

    name: str
    size: int
    build: Callable[[RealArray], PhiSpec] = attrs.field(eq=False, repr=False)
    linear: bool = False
    bounds: Bounds | None = None

    def __call__(self, theta: ArrayLike) -> PhiSpec:
        t = np.asarray(theta, dtype=np.float64)
        if t.shape != (self.size,):
            msg = f"{self.name} takes {self.size} parameters, got {t.shape}."
            raise DomainError(msg)
        if not np.all(np.isfinite(t)):
            msg = f"Parameters must be finite, got {t}."
            raise DomainError(msg)
        return self.build(t)


def _pairs_to_complex(theta: RealArray) -> ComplexArray:
    return theta[0::2] + 1j * theta[1::2]


def complex_to_theta(values: Sequence[complex]) -> RealArray:
    """
    Interleave real and imaginary parts: ``[re0, im0, re1, im1, ...]``.
    """
    c = np.asarray(values, dtype=np.complex128)
    return np.column_stack([c.real, c.imag]).reshape(-1)


def polynomial_family(degree: int, region: Region = EVERYWHERE) -> PhiFamily:
    """
    ``phi(z) = sum_j a_j z**j`` with complex ``a_0 .. a_degree``.
    """
    return PhiFamily(
        f"poly{degree}",
        2 * (degree + 1),
        lambda t: poly_phi(_pairs_to_complex(t), region),
        linear=True,
    )


def gaussian_family(region: Region) -> PhiFamily:
    """
    Gaussian with ``theta = (mu.real, mu.imag, sigma)``.
    """
    return PhiFamily(
        "gaussian",
        3,
        lambda t: gaussian_phi(complex(t[0], t[1]), float(t[2]), region),
        bounds=((None, None), (None, None), (SIGMA_FLOOR, None)),
    )


def gaussian_pair_family(
    sigma: float, region_plus: Region, region_minus: Region
) -> PhiFamily:
    """
    Two Gaussians of fixed width on two regions, with
    ``theta = (mu_plus.real, mu_plus.imag, mu_minus.real, mu_minus.imag)``.
    """
    return PhiFamily(
        "gaussian-pair",
        4,
        lambda t: gaussian_phi(complex(t[0], t[1]), sigma, region_plus)
        + gaussian_phi(complex(t[2], t[3]), sigma, region_minus),
    )


@attrs.frozen(eq=False)
class Dataset:
    """
    Observed ``(input, target)`` signal pairs.

    Attributes:
        pairs: Nonempty; all signals share the node count.

        seed: Seed of the generator that produced the data, if synthetic.
    """

    pairs: tuple[tuple[Signal, Signal], ...] = attrs.field(
        converter=lambda ps: tuple((x, y) for x, y in ps)
    )
    seed: int | None = None

    def __attrs_post_init__(self) -> None:
        if not self.pairs:
            msg = "A dataset needs at least one pair."
            raise DomainError(msg)
        n = self.pairs[0][0].n
        if any(x.n != n or y.n != n for x, y in self.pairs):
            msg = "All signals of a dataset must have the same node count."
            raise DimensionMismatchError(msg)

    def __repr__(self) -> str:
        return f"<Dataset(pairs={len(self.pairs)}, seed={self.seed})>"

    @property
    def n(self) -> int:
        return self.pairs[0][0].n


@attrs.frozen(eq=False)
class _Design:
    """
    Data projected on the fixed spectral basis: per pair, ``P_k x^``,
    ``N_k x^``, the target inside the output window, and the target energy
    outside of it.
    """

    components: ComplexArray
    nilpotent_components: ComplexArray
    targets: ComplexArray
    outside: RealArray

    @classmethod
    def build(cls, bs: BranchSet, data: Dataset) -> _Design:
        grid = bs.grid
        comps, nils, targets, outside = [], [], [], []
        for x, y in data.pairs:
            xhat = dtft(x, grid).values
            comps.append(np.einsum("akij,aj->aki", bs.projections, xhat))
            nils.append(np.einsum("akij,aj->aki", bs.nilpotents, xhat))
            start, length = default_window(x, grid)
            inside = Signal(y.n, start, y.window(start, length))
            targets.append(dtft(inside, grid).values)
            outside.append(y.energy() - inside.energy())

        return cls(
            np.stack(comps), np.stack(nils), np.stack(targets), np.array(outside)
        )

    def loss(self, values: ComplexArray, slopes: ComplexArray) -> float:
        size = self.targets.shape[1]
        out = np.einsum("ak,pakj->paj", values, self.components) + np.einsum(
            "ak,pakj->paj", slopes, self.nilpotent_components
        )
        inside = np.sum(np.abs(out - self.targets) ** 2, axis=(1, 2)) / size
        return float(np.mean(inside + self.outside))


def _evaluate(
    design: _Design,
    bs: BranchSet,
    family: PhiFamily,
    theta: RealArray,
    regions: RegionSet | None,
) -> float:
    values, slopes = phi_multipliers(bs, family(theta), regions=regions)
    return design.loss(values, slopes)


def loss(
    bs: BranchSet,
    family: PhiFamily,
    theta: ArrayLike,
    data: Dataset,
    *,
    regions: RegionSet | None = None,
) -> float:
    """
    Mean over *data* of ``sum_t ||(A_theta x)[t] - y[t]||**2`` where
    ``A_theta`` is :func:`covop.calculus.apply_phi_spectral` with
    ``family(theta)``.

    Raises:
        DomainError: If *theta* is outside the family's domain.
    """
    return _evaluate(
        _Design.build(bs, data),
        bs,
        family,
        np.asarray(theta, dtype=np.float64),
        regions,
    )


@attrs.frozen(eq=False)
class FitResult:
    """
    Outcome of :func:`fit`.

    Attributes:
        theta: Best parameters seen.

        loss: Loss at *theta*.

        trace: Loss after every accepted step, starting with the initial one.

        converged: Whether the fit stopped before running out of budget.
    """

    theta: RealArray = attrs.field(
        converter=lambda t: np.array(t, dtype=np.float64)
    )
    loss: float
    trace: tuple[float, ...] = attrs.field(converter=tuple)
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1


def _gradient(
    f: Callable[[RealArray], float], theta: RealArray
) -> RealArray:
    grad = np.zeros_like(theta)
    for i in range(len(theta)):
        h = 1e-6 * (1 + abs(theta[i]))
        e = np.zeros_like(theta)
        e[i] = h
        up, down = f(theta + e), f(theta - e)
        if np.isfinite(up) and np.isfinite(down):
            grad[i] = (up - down) / (2 * h)
        elif np.isfinite(up):
            grad[i] = (up - f(theta)) / h
        else:
            grad[i] = (f(theta) - down) / h
    return grad


def _scale_bounds(bounds: Bounds | None, scale: float) -> Bounds | None:
    if bounds is None:
        return None
    return tuple(
        (
            None if low is None else low / scale,
            None if high is None else high / scale,
        )
        for low, high in bounds
    )


def _descend(
    f: Callable[[RealArray], float],
    theta: RealArray,
    current: float,
    budget: int,
) -> tuple[RealArray, list[float], bool]:
    """
    Steepest descent along ``-grad f`` with a halving line search.

    Every line search starts from twice the previously accepted step.
    """
    trace = [current]
    step = 1.0
    for it in range(budget):
        grad = _gradient(f, theta)
        if current == 0 or not np.any(grad):
            return theta, trace, True

        for _ in range(MAX_HALVINGS + 1):
            candidate = theta - step * grad
            value = f(candidate)
            if value < current:
                break
            step /= 2
        else:
            log.debug(
                "line search found no decrease after %d iterations",
                it,
                extra={"covop_loss": current},
            )
            return theta, trace, True

        improvement = (current - value) / current
        theta, current = candidate, value
        trace.append(current)
        if improvement < RELATIVE_STOP:
            return theta, trace, True
        step *= 2

    return theta, trace, False


def _quasi_newton(
    f: Callable[[RealArray], float],
    theta: RealArray,
    current: float,
    budget: int,
    bounds: Bounds | None,
) -> tuple[RealArray, list[float], bool]:
    """
    L-BFGS-B from :func:`scipy.optimize.minimize` with our gradients and
    stopping rule.

    The search runs in coordinates scaled down by *scale* so that the first
    step, which L-BFGS-B takes with unit length, stays close to *theta*.
    """
    scale = INITIAL_STEP * (1 + float(np.abs(theta).max()))
    trace = [current]
    best = [theta]
    stopped = False

    def scaled(u: RealArray) -> float:
        return f(scale * u)

    def scaled_gradient(u: RealArray) -> RealArray:
        return scale * _gradient(f, scale * u)

    def record(intermediate_result: scipy.optimize.OptimizeResult) -> None:
        nonlocal stopped
        value = float(intermediate_result.fun)
        if value >= trace[-1]:
            stopped = True
            raise StopIteration
        improvement = (trace[-1] - value) / trace[-1]
        trace.append(value)
        best.append(scale * np.array(intermediate_result.x, dtype=np.float64))
        if value == 0 or improvement < RELATIVE_STOP:
            stopped = True
            raise StopIteration

    result = scipy.optimize.minimize(
        scaled,
        theta / scale,
        jac=scaled_gradient,
        method="L-BFGS-B",
        bounds=_scale_bounds(bounds, scale),
        callback=record,
        options={"maxiter": budget, "ftol": 0.0, "gtol": 0.0},
    )
    if result.status == 2 and not stopped:
        log.debug(
            "line search found no decrease after %d iterations",
            len(trace) - 1,
            extra={"covop_loss": trace[-1]},
        )

    return best[-1], trace, stopped or result.status != 1


def fit(
    bs: BranchSet,
    family: PhiFamily,
    data: Dataset,
    init: ArrayLike,
    budget: int,
    *,
    regions: RegionSet | None = None,
    method: FitMethod = "lbfgsb",
) -> FitResult:
    """
    Fit *family* to *data* by minimizing :func:`loss`.

    Gradients are central finite differences, one coordinate at a time, with
    steps of ``1e-6 * (1 + |theta_i|)``; one-sided next to the border of the
    family's domain.

    Args:
        method:
            ``"lbfgsb"`` runs :func:`scipy.optimize.minimize` with L-BFGS-B
            inside the family's bounds. ``"descent"`` steps along the
            negative gradient and halves each step until the loss decreases,
            at most 20 times. Gaussian centers move the loss only to second
            order across a branch, which leaves plain descent crawling there.

    Both methods record the loss after every accepted step and stop after
    *budget* iterations, when the relative improvement drops below 1e-10, or
    when no decrease can be found. The spectral decomposition in *bs* is
    computed once by the caller and reused for every evaluation.

    Raises:
        DomainError: If *budget* is less than 1, the method is unknown, or
            the initial loss isn't finite.
    """
    if budget < 1:
        msg = f"Budget must be at least 1, got {budget}."
        raise DomainError(msg)
    if method not in ("lbfgsb", "descent"):
        msg = f"Unknown fit method {method!r}."
        raise DomainError(msg)

    design = _Design.build(bs, data)

    def f(t: RealArray) -> float:
        try:
            return _evaluate(design, bs, family, t, regions)
        except DomainError:
            return np.inf

    theta = np.asarray(init, dtype=np.float64).copy()
    current = f(theta)
    if not np.isfinite(current):
        msg = f"Loss at the initial parameters {theta} isn't finite."
        raise DomainError(msg)

    if method == "descent":
        theta, trace, converged = _descend(f, theta, current, budget)
    else:
        theta, trace, converged = _quasi_newton(
            f, theta, current, budget, family.bounds
        )
    current = trace[-1]

    if not converged:
        log.warning(
            "fit ran out of budget after %d iterations",
            budget,
            extra={"covop_loss": current, "covop_family": family.name},
        )
    log.debug(
        "fitted %s",
        family.name,
        extra={
            "covop_family": family.name,
            "covop_iterations": len(trace) - 1,
            "covop_loss": current,
            "covop_method": method,
        },
    )

    return FitResult(theta, current, trace, converged)


def least_squares_polynomial(
    bs: BranchSet, degree: int, data: Dataset
) -> ComplexArray:
    """
    Closed-form coefficients ``a_0 .. a_degree`` of the polynomial that
    minimizes :func:`loss` on the whole plane.

    The loss is quadratic in the coefficients, so this solves the normal
    equations of the frequency-domain design directly.
    """
    design = _Design.build(bs, data)
    lam = bs.eigenvalues
    columns = []
    for j in range(degree + 1):
        values = lam**j
        slopes = j * lam ** (j - 1) if j else np.zeros_like(lam)
        columns.append(
            (
                np.einsum("ak,pakj->paj", values, design.components)
                + np.einsum("ak,pakj->paj", slopes, design.nilpotent_components)
            ).reshape(-1)
        )
    matrix = np.column_stack(columns)
    gram = matrix.conj().T @ matrix
    rhs = matrix.conj().T @ design.targets.reshape(-1)

    return np.linalg.solve(gram, rhs)


def synthesize_dataset(
    bs: BranchSet,
    family: PhiFamily,
    theta: ArrayLike,
    *,
    pairs: int = 16,
    length: int = 16,
    seed: int = 0,
    regions: RegionSet | None = None,
) -> Dataset:
    """
    Generate *pairs* random inputs and their images under
    ``family(theta)``.

    Inputs are circular complex white noise of unit variance per entry,
    starting at ``t = 0``, drawn from :func:`numpy.random.default_rng`
    (PCG64) seeded with *seed*.
    """
    rng = np.random.default_rng(seed)
    phi = family(theta)
    n = bs.n
    out = []
    for _ in range(pairs):
        samples = (
            rng.standard_normal((length, n))
            + 1j * rng.standard_normal((length, n))
        ) / np.sqrt(2)
        x = Signal(n, 0, samples)
        out.append((x, apply_phi_spectral(bs, phi, x, regions=regions)))

    log.debug(
        "synthesized %d pairs",
        pairs,
        extra={"covop_seed": seed, "covop_family": family.name},
    )

    return Dataset(out, seed)
