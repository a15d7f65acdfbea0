"""Thin adaptive-quadrature helpers on top of :mod:`scipy.integrate`."""

from __future__ import annotations

import warnings
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

DEFAULT_ABS_TOL = 1e-10
DEFAULT_REL_TOL = 1e-12


class QuadratureError(ArithmeticError):
    """Raised when adaptive quadrature misses its tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error estimate {achieved:.3e})")
        self.achieved = achieved


def integrate_scalar(
    func: Callable[[float], float],
    lower: float,
    upper: float,
    abs_tol: float = DEFAULT_ABS_TOL,
    rel_tol: float = DEFAULT_REL_TOL,
    points: Sequence[float] | None = None,
    limit: int = 400,
) -> float:
    """Integrate a scalar function with adaptive Gauss-Kronrod panels.

    Raises:
        QuadratureError: if the error estimate exceeds ``max(abs_tol, rel_tol*|I|)``.
    """
    if upper == lower:
        return 0.0
    pts = None
    if points is not None:
        pts = [p for p in points if lower < p < upper] or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err = integrate.quad(
            func, lower, upper, epsabs=abs_tol, epsrel=rel_tol, limit=limit, points=pts
        )
    if not np.isfinite(value):
        raise QuadratureError("non-finite integral", float("inf"))
    if err > max(abs_tol, rel_tol * abs(value)) * 10.0:
        raise QuadratureError("quadrature did not converge", err)
    return float(value)


def integrate_vector(
    func: Callable[[float], np.ndarray],
    lower: float,
    upper: float,
    abs_tol: float = DEFAULT_ABS_TOL,
    rel_tol: float = DEFAULT_REL_TOL,
) -> np.ndarray:
    """Integrate a vector-valued function, sharing one adaptive mesh."""
    if upper == lower:
        return np.zeros_like(np.asarray(func(lower), dtype=float))
    value, err = integrate.quad_vec(func, lower, upper, epsabs=abs_tol, epsrel=rel_tol, norm="max")
    if not np.all(np.isfinite(value)):
        raise QuadratureError("non-finite integral", float("inf"))
    if err > max(abs_tol, rel_tol * float(np.max(np.abs(value)))) * 10.0:
        raise QuadratureError("vector quadrature did not converge", err)
    return np.asarray(value, dtype=float)


def gauss_legendre_panels(edges: np.ndarray, order: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite Gauss-Legendre rule over consecutive panels.

    Returns arrays of shape ``(n_panels, order)``.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, dtype=float)
    left, right = edges[:-1, None], edges[1:, None]
    half = 0.5 * (right - left)
    nodes = left + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return nodes, weights
