"""Special functions, Gauss-Hermite quadrature and a complex Newton solver."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import kernels

__all__ = [
    "QuadratureRule",
    "NewtonConvergenceError",
    "hermite_eval",
    "erfcx",
    "gauss_hermite_rule",
    "complex_newton",
]


# sector of the continued-fraction branch
ERFCX_MAX_ARG = 1.5


class NewtonConvergenceError(ArithmeticError):
    """Raised when :func:`complex_newton` does not reach its tolerance.

    The last iterate and its residual are kept for diagnostics.
    """

    def __init__(self, message, z, residual, iterations):
        super().__init__(message)
        self.z = z
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for the weight ``exp(-u**2)``.

    ``scaled_weights`` are ``weights * exp(nodes**2)``; they stay representable
    for the outermost nodes of large rules where ``weights`` underflow.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    scaled_weights: np.ndarray

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]):
        """``sum_i w_i f(u_i)``, i.e. the integral of ``exp(-u^2) f(u)``."""
        return np.sum(self.weights * f(self.nodes))


def hermite_eval(n: int, z: complex) -> complex:
    """Physicists' Hermite polynomial H_n(z) by the three-term recurrence.

    Raises ``OverflowError`` when the value leaves the double range; callers
    should then switch to the normalised oscillator recurrence.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    z = complex(z)
    if not cmath.isfinite(z):
        raise ValueError("z must be finite")
    h_prev, h = 0j, 1.0 + 0j
    for k in range(n):
        h_prev, h = h, 2.0 * z * h - 2.0 * k * h_prev
        if not cmath.isfinite(h):
            raise OverflowError(f"H_{n}({z}) overflows at degree {k + 1}")
    return h


def erfcx(z):
    """Scaled complementary error function ``exp(z**2) * erfc(z)``.

    Accepts scalars or arrays.  Supported: ``|z| < 2`` with ``Re z >= 0``
    (series), or the sector ``|arg z| <= 1.5`` (continued fraction, whose
    convergence degrades on the imaginary axis).  Real input gives real
    output.
    """
    arr = np.asarray(z)
    bad = (np.real(arr) < 0) | ((np.abs(arr) >= kernels.ERFCX_SERIES_RADIUS)
                                & (np.abs(np.angle(arr)) > ERFCX_MAX_ARG))
    if np.any(bad):
        raise ValueError("erfcx is only supported for Re(z) >= 0 and, beyond |z| = 2, "
                         f"|arg z| <= {ERFCX_MAX_ARG}")
    out = kernels.erfcx_array(arr)
    if not np.iscomplexobj(arr):
        out = out.real
    if arr.ndim == 0:
        return out.reshape(()).item()
    return out.reshape(arr.shape)


@lru_cache(maxsize=64)
def gauss_hermite_rule(n: int) -> QuadratureRule:
    """n-point Gauss-Hermite rule, 1 <= n <= 512."""
    if not 1 <= n <= 512:
        raise ValueError("Gauss-Hermite order must lie in [1, 512]")
    nodes, scaled, ok = kernels.gauss_hermite_raw(n, tol=1e-14)
    if not ok:
        raise ArithmeticError(f"Gauss-Hermite node refinement failed for n={n}")
    weights = scaled * np.exp(-nodes * nodes)
    for a in (nodes, weights, scaled):
        a.setflags(write=False)
    return QuadratureRule(n, nodes, weights, scaled)


def complex_newton(f: Callable[[complex], complex], z0: complex, tol: float,
                   maxiter: int = 100) -> complex:
    """Root of an analytic ``f`` by Newton steps with a central-difference
    derivative (step ``1e-6 * max(1, |z|)``).

    Raises :class:`NewtonConvergenceError` if ``|f(z)| < tol`` is not reached
    within ``maxiter`` iterations.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    z = complex(z0)
    fz = complex(f(z))
    for it in range(maxiter):
        if abs(fz) < tol:
            return z
        h = 1e-6 * max(1.0, abs(z))
        df = (complex(f(z + h)) - complex(f(z - h))) / (2.0 * h)
        if df == 0 or not cmath.isfinite(df):
            raise NewtonConvergenceError("vanishing derivative", z, abs(fz), it)
        z = z - fz / df
        fz = complex(f(z))
        if not cmath.isfinite(fz):
            raise NewtonConvergenceError("iterate left the domain", z, math.inf, it)
    if abs(fz) < tol:
        return z
    raise NewtonConvergenceError("Newton iteration did not converge", z, abs(fz), maxiter)
