"""Schmidt spectra and entanglement entropies of two-particle states.

For a two-particle eigenvector ``Psi = sum_nm C_nm psi_n(x1) psi_m(x2)`` in the
c-orthonormal basis, the reduced density matrix is ``C C^T`` (divided by the
c-norm ``sum C_nm^2``).  Its eigenvalues ``mu_i = k_i^2`` give two occupancy
families:

* complex occupancies ``lambda_i = mu_i / sum mu`` (c-product density), and
* real occupancies ``|mu_i| / sum |mu|`` (density of the associated state).

Entropies are functions of ``mu`` only; the Schmidt coefficients ``k_i`` are
never taken out of the square root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import hamiltonian as ham
from .basis import EXCEPTIONAL_THRESHOLD, BasisSpec, ExceptionalPointError
from .solver import EigenPair, eig_general

__all__ = [
    "CoefficientMatrix",
    "SchmidtSpectrum",
    "EntropyReport",
    "coefficient_matrix",
    "schmidt_spectrum",
    "linear_entropy_c",
    "linear_entropy_r",
    "renyi_entropy",
    "von_neumann",
    "natural_orbitals",
    "analyse_state",
]

SCHMIDT_CUTOFF = 1e-12
_LOG_FLOOR = 1e-15


@dataclass(frozen=True)
class CoefficientMatrix:
    c: np.ndarray
    norm: complex          # c-norm sum C_nm^2
    sector: str | None = None

    @property
    def m_size(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class SchmidtSpectrum:
    mu: np.ndarray
    lambda_c: np.ndarray
    lambda_r: np.ndarray
    schmidt_number: int
    exceptional: bool = False


@dataclass(frozen=True)
class EntropyReport:
    linear_c: complex
    linear_r: float
    von_neumann: float
    renyi: dict = field(default_factory=dict)
    spectrum: SchmidtSpectrum | None = None


def coefficient_matrix(ground: EigenPair | np.ndarray, spec: BasisSpec | int,
                       sector: str = ham.SYMMETRIC) -> CoefficientMatrix:
    """Unfold a symmetry-adapted coefficient vector into the ``M x M`` matrix.

    ``spec`` may be a :class:`BasisSpec` or the one-particle size ``M``.  Off
    diagonal pair amplitudes are split as ``c / sqrt 2`` onto ``(n, m)`` and
    ``+-c / sqrt 2`` onto ``(m, n)``.
    """
    m = spec.m_size if isinstance(spec, BasisSpec) else int(spec)
    vec = ground.right if isinstance(ground, EigenPair) else np.asarray(ground)
    s = ham.symmetrizer(m, sector)
    if vec.shape != (s.shape[1],):
        raise ValueError(f"coefficient vector of length {vec.shape} does not match "
                         f"the {sector} sector of M={m}")
    c = (s @ vec).reshape(m, m)
    norm = complex(np.sum(c * c))
    if abs(norm) < EXCEPTIONAL_THRESHOLD:
        raise ExceptionalPointError(f"c-norm of the state vanishes ({abs(norm):.2e})")
    return CoefficientMatrix(c, norm, sector)


def schmidt_spectrum(cm: CoefficientMatrix | np.ndarray) -> SchmidtSpectrum:
    """Eigenvalues of ``C C^T`` and both occupancy families."""
    c = cm.c if isinstance(cm, CoefficientMatrix) else np.asarray(cm, dtype=np.complex128)
    rho = c @ c.T
    pairs = eig_general(rho)
    mu = np.array([p.epsilon for p in pairs], dtype=np.complex128)
    top = float(np.max(np.abs(mu)))
    # defective clusters among numerically vanishing mu are irrelevant
    exceptional = any("exceptional" in p.flags and abs(p.epsilon) > SCHMIDT_CUTOFF * top
                      for p in pairs)
    mu = mu[np.argsort(-np.abs(mu), kind="stable")]
    lam_c = mu / np.sum(mu)
    a = np.abs(mu)
    lam_r = a / np.sum(a)
    n_s = int(np.sum(a > SCHMIDT_CUTOFF * a[0])) if a[0] > 0 else 0
    return SchmidtSpectrum(mu, lam_c, lam_r, n_s, exceptional)


def linear_entropy_c(s: SchmidtSpectrum) -> complex:
    """``1 - sum lambda_i^2`` over complex occupancies."""
    return complex(1.0 - np.sum(s.lambda_c ** 2))


def linear_entropy_r(s: SchmidtSpectrum) -> float:
    """``1 - sum lambda_i^2`` over real occupancies."""
    return float(1.0 - np.sum(s.lambda_r ** 2))


def renyi_entropy(s: SchmidtSpectrum, q: int) -> float:
    """Renyi entropy of order ``q >= 2`` on the real branch."""
    if q < 2 or int(q) != q:
        raise ValueError("Renyi order must be an integer >= 2")
    return float(math.log(np.sum(s.lambda_r ** q)) / (1.0 - q))


def von_neumann(s: SchmidtSpectrum) -> float:
    lam = s.lambda_r[s.lambda_r >= _LOG_FLOOR]
    return float(max(0.0, -np.sum(lam * np.log(lam))))


def natural_orbitals(cm: CoefficientMatrix, k: int) -> list[np.ndarray]:
    """Leading ``k`` eigenvectors of ``C C^T`` (c-normalised coefficient vectors
    over the one-particle basis), by descending ``|mu|``."""
    if not 0 < k <= cm.m_size:
        raise ValueError("k must lie in [1, M]")
    pairs = eig_general(cm.c @ cm.c.T)
    order = np.argsort([-abs(p.epsilon) for p in pairs], kind="stable")[:k]
    if any("exceptional" in pairs[i].flags for i in order):
        raise ExceptionalPointError("natural orbital with vanishing c-norm")
    return [pairs[i].right for i in order]


def analyse_state(pair: EigenPair, spec: BasisSpec, sector: str = ham.SYMMETRIC,
                  orders=(2, 3, 4)) -> EntropyReport:
    """All entropies of a two-particle eigenpair."""
    s = schmidt_spectrum(coefficient_matrix(pair, spec, sector))
    return EntropyReport(linear_entropy_c(s), linear_entropy_r(s), von_neumann(s),
                         {q: renyi_entropy(s, q) for q in orders}, s)
