"""Biorthonormal harmonic-oscillator basis with complex frequency.

Right functions are ``psi_j(x) = (sqrt(W)/(sqrt(pi) 2^j j!))^(1/2) H_j(sqrt(W) x)
exp(-W x^2 / 2)`` for complex frequency ``W`` (``Re W > 0``); the left partners
are their complex conjugates, so the ordinary scalar product with the left
set is the bilinear c-product ``(f, g) = int f(x) g(x) dx`` with the right set.

The complex frequency carries both the oscillator length and the complex
rotation: ``W = exp(-2 i theta) / A**2``.  Resonances in the lower half plane
are exposed for ``arg W < 0`` (``theta > 0``).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .numerics import QuadratureRule, gauss_hermite_rule

__all__ = [
    "BasisSpec",
    "BasisFunction",
    "QuadratureAccuracyWarning",
    "ExceptionalPointError",
    "default_quad_order",
    "eval_right",
    "eval_left",
    "basis_table",
    "real_axis_grid",
    "c_product",
    "overlap_matrix",
    "cross_overlap",
    "check_biorthonormality",
]

EXCEPTIONAL_THRESHOLD = 1e-10


class QuadratureAccuracyWarning(UserWarning):
    pass


class ExceptionalPointError(ArithmeticError):
    """A c-norm ``(v, v)`` vanished: eigenvectors coalesce, no biorthonormal
    pairing exists."""


def default_quad_order(omega: complex, m_size: int) -> int:
    # the phase factor exp(-i tan(arg W) u^2) needs extra nodes beyond 2M + 16
    c = math.cos(cmath.phase(omega))
    n = max(64, int(math.ceil((2 * m_size + 16) / (c * c))) + 8)
    return min(n, 512)


@dataclass(frozen=True)
class BasisSpec:
    omega: complex
    m_size: int
    quad_order: int = field(default=0)

    def __post_init__(self):
        om = complex(self.omega)
        object.__setattr__(self, "omega", om)
        if not cmath.isfinite(om) or om.real <= 0:
            raise ValueError(f"basis frequency needs Re(omega) > 0, got {om}")
        if self.m_size < 1:
            raise ValueError("m_size must be >= 1")
        if not self.quad_order:
            object.__setattr__(self, "quad_order", default_quad_order(om, self.m_size))
        if self.quad_order < 2 * self.m_size:
            raise ValueError("quad_order must be at least 2 * m_size")
        if self.quad_order > 512:
            raise ValueError("quad_order above 512 is not supported")

    @property
    def theta(self) -> float:
        """Complex-rotation angle carried by the frequency, ``-arg(W)/2``."""
        return -0.5 * cmath.phase(self.omega)

    @property
    def scale(self) -> float:
        """Real oscillator length ``A = |W|**-1/2``."""
        return abs(self.omega) ** -0.5

    def conjugate(self) -> "BasisSpec":
        return BasisSpec(self.omega.conjugate(), self.m_size, self.quad_order)

    def with_omega(self, omega: complex) -> "BasisSpec":
        return BasisSpec(omega, self.m_size)

    @property
    def rule(self) -> QuadratureRule:
        return gauss_hermite_rule(self.quad_order)


def _check_index(j, spec):
    if not 0 <= j < spec.m_size:
        raise IndexError(f"basis index {j} outside [0, {spec.m_size})")


def _eval(j, omega, x):
    xa = np.atleast_1d(np.asarray(x, dtype=np.complex128))
    if np.all(xa.imag == 0):
        row = kernels.ho_table(omega, xa.real, j + 1)[j]
    else:
        row = _ho_table_complex(omega, xa, j + 1)[j]
    if np.ndim(x) == 0:
        return complex(row[0])
    return row.reshape(np.shape(x))


def _ho_table_complex(omega, x, m):
    # complex-coordinate evaluation (used for contour-rotated c-products)
    s = np.sqrt(complex(omega))
    z = s * x
    out = np.empty((m, x.size), dtype=np.complex128)
    out[0] = np.sqrt(s) / math.pi ** 0.25 * np.exp(-0.5 * omega * x * x)
    if m > 1:
        out[1] = math.sqrt(2.0) * z * out[0]
    for k in range(1, m - 1):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * z * out[k] - math.sqrt(k / (k + 1.0)) * out[k - 1]
    return out


def eval_right(j: int, spec: BasisSpec, x):
    """``psi_j(x)`` for real (or complex) ``x``; scalar in, scalar out."""
    _check_index(j, spec)
    return _eval(j, spec.omega, x)


def eval_left(j: int, spec: BasisSpec, x):
    """Left partner ``chi_j(x) = conj(psi_j(x))``, i.e. ``psi_j`` at ``conj(W)``."""
    _check_index(j, spec)
    return _eval(j, spec.omega.conjugate(), x)


def basis_table(spec: BasisSpec, x) -> np.ndarray:
    """Array ``T[j, i] = psi_j(x_i)`` for all ``j < M``."""
    return kernels.ho_table(spec.omega, np.asarray(x, dtype=np.float64), spec.m_size)


@dataclass(frozen=True)
class BasisFunction:
    """One right basis function; callable on real or complex coordinates."""

    j: int
    spec: BasisSpec
    analytic = True

    def __post_init__(self):
        _check_index(self.j, self.spec)

    def __call__(self, x):
        return eval_right(self.j, self.spec, x)

    def left(self, x):
        return eval_left(self.j, self.spec, x)


def real_axis_grid(spec: BasisSpec, order=None):
    """Nodes ``x_i`` and weights ``W_i`` with ``int f dx ~ sum W_i f(x_i)`` for
    integrands carrying the envelope ``exp(-Re(W) x^2)``."""
    rule = spec.rule if order is None else gauss_hermite_rule(order)
    s = math.sqrt(spec.omega.real)
    return rule.nodes / s, rule.scaled_weights / s


def _is_analytic(f):
    return bool(getattr(f, "analytic", False))


def c_product(f: Callable, g: Callable, rule: QuadratureRule | None = None,
              spec: BasisSpec | None = None, check: bool = False):
    """Bilinear product ``int f(x) g(x) dx`` (no conjugation).

    Generic integrands are sampled at real Gauss-Hermite nodes in
    ``u = sqrt(Re W) x``.  When both factors are analytic (``f.analytic``,
    e.g. :class:`BasisFunction`) the contour is rotated onto ``x = t / sqrt(W)``,
    which removes the cancellation that the real-axis sum suffers at large
    ``|arg W|``.  ``check=True`` repeats with a doubled order and warns
    when the two disagree by more than 1e-10 relative.
    """
    if spec is None:
        spec = getattr(f, "spec", None) or getattr(g, "spec", None)
        if spec is None:
            raise ValueError("a BasisSpec is needed to place the quadrature")
    if rule is None:
        rule = spec.rule
    rotate = _is_analytic(f) and _is_analytic(g)

    def _sum(r):
        if rotate:
            s = cmath.sqrt(spec.omega)
            x = r.nodes / s
            return complex(np.sum(r.scaled_weights * f(x) * g(x)) / s)
        s = math.sqrt(spec.omega.real)
        x = r.nodes / s
        return complex(np.sum(r.scaled_weights * f(x) * g(x)) / s)

    val = _sum(rule)
    if check:
        finer = gauss_hermite_rule(min(2 * rule.order, 512))
        val2 = _sum(finer)
        if abs(val2 - val) > 1e-10 * max(1.0, abs(val2)):
            warnings.warn(f"c-product not converged at order {rule.order}: "
                          f"|delta| = {abs(val2 - val):.3e}", QuadratureAccuracyWarning)
    return val


def overlap_matrix(spec: BasisSpec, contour: str = "rotated") -> np.ndarray:
    """All c-products ``(psi_n, psi_k)`` for ``n, k < M``.

    ``contour='real'`` samples the real axis (the engine used for potentials);
    ``'rotated'`` integrates along ``arg x = -arg(W)/2``.
    """
    rule = spec.rule
    if contour == "rotated":
        s = cmath.sqrt(spec.omega)
        t = _ho_table_complex(spec.omega, rule.nodes / s, spec.m_size)
        return (t * (rule.scaled_weights / s)) @ t.T
    if contour == "real":
        x, w = real_axis_grid(spec)
        t = basis_table(spec, x)
        return (t * w) @ t.T
    raise ValueError(f"unknown contour {contour!r}")


def cross_overlap(spec_a: BasisSpec, spec_b: BasisSpec) -> np.ndarray:
    """``S[j, k] = (psi_j^{W_a}, psi_k^{W_b})`` between two basis sets.

    The integrand decays like ``exp(-(W_a + W_b) x^2 / 2)``; the contour is
    rotated onto that mean frequency.
    """
    wm = 0.5 * (spec_a.omega + spec_b.omega)
    m = max(spec_a.m_size, spec_b.m_size)
    rule = gauss_hermite_rule(default_quad_order(wm, m))
    s = cmath.sqrt(wm)
    x = rule.nodes / s
    ta = _ho_table_complex(spec_a.omega, x, spec_a.m_size)
    tb = _ho_table_complex(spec_b.omega, x, spec_b.m_size)
    return (ta * (rule.scaled_weights / s)) @ tb.T


def check_biorthonormality(spec: BasisSpec, contour: str = "rotated") -> float:
    """``max |(psi_n, psi_k) - delta_nk|`` over the truncated basis.

    Raises :class:`ExceptionalPointError` if some ``|(psi_k, psi_k)|`` falls
    below 1e-10.
    """
    s = overlap_matrix(spec, contour)
    d = np.abs(np.diag(s))
    if np.any(d < EXCEPTIONAL_THRESHOLD):
        k = int(np.argmin(d))
        raise ExceptionalPointError(f"c-norm of basis function {k} vanishes ({d[k]:.2e})")
    return float(np.max(np.abs(s - np.eye(spec.m_size))))
