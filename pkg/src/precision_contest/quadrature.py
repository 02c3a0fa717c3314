"""Vectorized adaptive Gauss-Kronrod quadrature.

The integrators here work on array-valued integrands and share one interval
mesh across every output component, so a whole batch of related integrals
(for instance an inner integral evaluated at all outer nodes at once) costs a
handful of numpy calls rather than thousands of Python callbacks.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

__all__ = ["QuadratureError", "gauss_kronrod", "iterated_square"]


class QuadratureError(RuntimeError):
    """Raised when the refinement budget is exhausted before convergence."""


# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (x[1], x[3], ...).
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[[9, 11, 13]] = _WG[2::-1]


def _rule(f, left, right):
    """Apply the 15-point rule on each interval ``[left[k], right[k]]``.

    Returns Kronrod estimates and error estimates with shape ``(k, *out)``.
    """
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    vals = np.asarray(f(x.ravel()), dtype=float)
    vals = vals.reshape((left.size, 15) + vals.shape[1:])
    kron = np.tensordot(KRONROD_WEIGHTS, vals, axes=(0, 1))
    gauss = np.tensordot(GAUSS_WEIGHTS, vals, axes=(0, 1))
    scale = half.reshape((-1,) + (1,) * (kron.ndim - 1))
    return kron * scale, np.abs(kron - gauss) * scale


def gauss_kronrod(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    atol: float = 1e-10,
    rtol: float = 1e-10,
    points: Sequence[float] = (),
    max_intervals: int = 2000,
) -> tuple[np.ndarray, np.ndarray]:
    """Globally adaptive integral of a vectorized, array-valued integrand.

    Parameters
    ----------
    f
        Maps a 1-D array of abscissae of length ``n`` to an array of shape
        ``(n, *out)``. Scalar integrands return shape ``(n,)``.
    a, b
        Finite integration limits.
    atol, rtol
        Convergence requires, for every output component, the summed error
        estimate to fall below ``max(atol, rtol * |integral|)``.
    points
        Interior break points (kinks, discontinuities) the mesh must respect.
    max_intervals
        Refinement budget; exceeding it raises :class:`QuadratureError`.

    Returns
    -------
    value, error
        Arrays of shape ``out``.
    """
    if a == b:
        probe = np.asarray(f(np.array([a])), dtype=float)
        zero = np.zeros(probe.shape[1:])
        return zero, zero.copy()
    inner = sorted(p for p in points if a < p < b)
    edges = np.array([a, *inner, b], dtype=float)
    left, right = edges[:-1], edges[1:]
    est, err = _rule(f, left, right)

    while True:
        total = est.sum(axis=0)
        total_err = err.sum(axis=0)
        tol = np.maximum(atol, rtol * np.abs(total))
        if np.all(total_err <= tol):
            return total, total_err
        if left.size >= max_intervals:
            raise QuadratureError(
                f"no convergence after {left.size} intervals "
                f"(error {np.max(total_err):.3e})"
            )
        # Normalised error per interval, worst component.
        flat = (err / tol).reshape(left.size, -1).max(axis=1)
        cutoff = max(flat.max() * 0.25, 1.0 / left.size)
        split = flat >= cutoff
        mids = 0.5 * (left[split] + right[split])
        new_left = np.concatenate([left[split], mids])
        new_right = np.concatenate([mids, right[split]])
        new_est, new_err = _rule(f, new_left, new_right)
        keep = ~split
        left = np.concatenate([left[keep], new_left])
        right = np.concatenate([right[keep], new_right])
        est = np.concatenate([est[keep], new_est])
        err = np.concatenate([err[keep], new_err])


def iterated_square(
    g: Callable[[np.ndarray, np.ndarray], np.ndarray],
    *,
    atol: float = 1e-10,
    rtol: float = 1e-10,
    outer_points: Sequence[float] = (),
    max_intervals: int = 2000,
) -> tuple[np.ndarray, np.ndarray]:
    """Iterated adaptive integral of ``g(x, w)`` over the unit square.

    ``g`` receives broadcastable arrays ``x`` of shape ``(n, 1)`` and ``w``
    of shape ``(1, m)`` and must return shape ``(n, m, *out)``. The inner
    (``w``) integral for all outer nodes of a pass shares one adaptive mesh.
    """
    inner_atol = atol * 1e-2
    inner_rtol = rtol * 1e-2

    def outer(x):
        def inner(w):
            vals = np.asarray(g(x[:, None], w[None, :]), dtype=float)
            return np.moveaxis(vals, 1, 0)

        value, _ = gauss_kronrod(
            inner, 0.0, 1.0, atol=inner_atol, rtol=inner_rtol,
            max_intervals=max_intervals,
        )
        return value

    return gauss_kronrod(
        outer, 0.0, 1.0, atol=atol, rtol=rtol, points=outer_points,
        max_intervals=max_intervals,
    )
