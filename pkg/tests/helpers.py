# SPDX-License-Identifier: MIT

"""
Closed-form oracles for the two-node example generator and its product
baseline.

The example symbol is ``[[a, b], [c, a]]`` with ``a = 0.4 e(w)``,
``b = -1 + 0.6 e(3w)``, and ``c = -1 + 0.8 e(2w)`` where
``e(w) = exp(2 pi i w)``. With ``r`` the principal root of ``bc`` its
eigenvalues are ``a + r`` and ``a - r`` and its projections
``1/2 [[1, +-r/c], [+-r/b, 1]]``. ``bc = (1 - 0.6 e(3w)) (1 - 0.8 e(2w))``
stays off the negative real axis, so the principal root is continuous along
the torus.
"""

import numpy as np

from covop import Signal, kernel_from_taps


EXAMPLE_TAPS = [
    (0, [[0, -1], [-1, 0]]),
    (1, [[0.4, 0], [0, 0.4]]),
    (2, [[0, 0], [0.8, 0]]),
    (3, [[0, 0.6], [0, 0]]),
]
AGGREGATE = np.array([[0.4, -0.4], [-0.2, 0.4]])


def example_kernel():
    return kernel_from_taps(2, EXAMPLE_TAPS)


def _e(omega):
    return np.exp(2j * np.pi * np.asarray(omega, dtype=float))


def _abcr(omega):
    e = _e(omega)
    a = 0.4 * e
    b = -1 + 0.6 * e**3
    c = -1 + 0.8 * e**2
    return a, b, c, np.sqrt(b * c)


def example_symbol(omega):
    a, b, c, _ = _abcr(omega)
    return np.moveaxis(np.array([[a, b], [c, a]]), (0, 1), (-2, -1))


def example_eigenvalues(omega):
    """
    ``(..., 2)`` array of ``(lambda_plus, lambda_minus)``.
    """
    a, _, _, r = _abcr(omega)
    return np.stack([a + r, a - r], axis=-1)


def example_projections(omega):
    """
    ``(..., 2, 2, 2)`` array of ``(P_plus, P_minus)``.
    """
    _, b, c, r = _abcr(omega)
    one = np.ones_like(r)
    out = []
    for sign in (1, -1):
        p = 0.5 * np.array([[one, sign * r / c], [sign * r / b, one]])
        out.append(np.moveaxis(p, (0, 1), (-2, -1)))
    return np.stack(out, axis=-3)


def product_eigenvalues(omega):
    e = _e(omega)
    shifts = np.array([(2 + np.sqrt(2)) / 5, (2 - np.sqrt(2)) / 5])
    return e[..., None] + shifts


PRODUCT_PROJECTIONS = 0.5 * np.array(
    [
        [[1, -2 / np.sqrt(2)], [-1 / np.sqrt(2), 1]],
        [[1, 2 / np.sqrt(2)], [1 / np.sqrt(2), 1]],
    ]
)


def random_kernel(rng, n, support, start=0):
    taps = [
        (
            start + t,
            rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)),
        )
        for t in range(support)
    ]
    return kernel_from_taps(n, taps)


def random_signal(rng, n, length, start=0):
    samples = rng.standard_normal((length, n)) + 1j * rng.standard_normal(
        (length, n)
    )
    return Signal(n, start, samples)


def max_error(a, b):
    """
    Largest entry-wise deviation of two signals on the union of supports.
    """
    diff = a - b
    return float(np.abs(diff.samples).max()) if len(diff) else 0.0


def relative_error(a, b):
    scale = max(float(np.abs(b.samples).max()), 1e-300)
    return max_error(a, b) / scale
