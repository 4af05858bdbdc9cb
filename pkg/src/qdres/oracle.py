"""Brute-force finite-difference references.

* one particle: complex-scaled ``-exp(-2 i theta) d^2/dx^2 / 2 + V(x exp(i theta))``
  with the 3-point Laplacian in a Dirichlet box (sparse shift-invert);
* two particles (real, bound regime): 3-point Laplacian on an ``n x n`` grid,
  lowest eigenpair by shift-invert Lanczos;
* entropies of grid wavefunctions from singular values.

Second-order grids are Richardson-extrapolated (``h`` and ``h/2``) where a
tolerance below the raw discretisation error is required.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hamiltonian import ModelParams, v_eff

__all__ = [
    "GridSpec",
    "BoxSizeError",
    "grid_axis",
    "grid_one_particle",
    "theta_trajectory",
    "grid_two_particle_bound",
    "grid_entropy",
    "grid_linear_entropy",
]


class BoxSizeError(ArithmeticError):
    """Tracked eigenvalues moved by more than the tolerance when the box
    half-width was doubled."""


@dataclass(frozen=True)
class GridSpec:
    x_max: float
    n_points: int
    theta: float = 0.0

    def __post_init__(self):
        if self.n_points < 64:
            raise ValueError("n_points must be >= 64")
        if not self.x_max > 0:
            raise ValueError("x_max must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.x_max / (self.n_points + 1)

    def refined(self) -> "GridSpec":
        return GridSpec(self.x_max, 2 * self.n_points + 1, self.theta)

    def doubled_box(self) -> "GridSpec":
        return GridSpec(2.0 * self.x_max, 2 * self.n_points + 1, self.theta)


def grid_axis(grid: GridSpec) -> np.ndarray:
    """Interior nodes of the Dirichlet box."""
    return -grid.x_max + grid.h * np.arange(1, grid.n_points + 1)


def _potential_of(target):
    return target.well if isinstance(target, ModelParams) else target


def _one_particle_matrix(potential, grid):
    x = grid_axis(grid)
    rot = cmath.exp(1j * grid.theta)
    lap = sp.diags([np.ones(grid.n_points - 1), -2.0 * np.ones(grid.n_points),
                    np.ones(grid.n_points - 1)], [-1, 0, 1], format="csc")
    kin = -0.5 * cmath.exp(-2j * grid.theta) / grid.h ** 2 * lap
    v = np.asarray(potential(x * rot), dtype=np.complex128)
    return (kin + sp.diags(v, 0, format="csc")).tocsc()


def _raw_eigs(potential, grid, k, sigma):
    mat = _one_particle_matrix(potential, grid)
    k = min(k, grid.n_points - 2)
    vals = spla.eigs(mat, k=k, sigma=sigma, which="LM", return_eigenvectors=False)
    return vals[np.argsort(np.abs(vals - sigma))]


def _match(ref, other):
    return np.array([other[np.argmin(np.abs(other - z))] for z in ref])


def grid_one_particle(target, grid: GridSpec, k: int = 6, sigma: complex | None = None,
                      richardson: bool = True, check_box: bool = False,
                      box_tol: float = 1e-6) -> np.ndarray:
    """``k`` eigenvalues of the complex-scaled one-particle grid Hamiltonian
    nearest to ``sigma`` (default: the potential minimum on the grid).

    ``target`` is :class:`ModelParams` (Gaussian well) or a potential callable
    that accepts complex coordinates.  ``richardson`` combines ``h`` and
    ``h/2`` as ``(4 E_{h/2} - E_h) / 3``.  ``check_box`` repeats with a doubled
    half-width and raises :class:`BoxSizeError` beyond ``box_tol``.
    """
    potential = _potential_of(target)
    if sigma is None:
        sigma = complex(np.min(np.real(potential(grid_axis(grid))))) - 1e-3
    vals = _raw_eigs(potential, grid, k, sigma)
    if richardson:
        fine = _match(vals, _raw_eigs(potential, grid.refined(), k + 2, sigma))
        vals = (4.0 * fine - vals) / 3.0
    if check_box:
        big = grid_one_particle(potential, grid.doubled_box(), k + 2, sigma, richardson)
        shift = np.abs(_match(vals, big) - vals)
        if np.max(shift) > box_tol:
            raise BoxSizeError(f"eigenvalues move by {np.max(shift):.2e} on doubling x_max; "
                               "enlarge the box")
    return vals


def theta_trajectory(target, x_max: float, n_points: int, thetas, sigma: complex,
                     richardson: bool = True):
    """Follow the grid eigenvalue nearest ``sigma`` through rotation angles.

    Returns ``(thetas, eps, k_star)`` where ``k_star`` indexes the segment of
    smallest ``|d eps / d theta|`` (the stagnation point).
    """
    thetas = np.asarray(thetas, dtype=float)
    eps = []
    cur = complex(sigma)
    for th in thetas:
        vals = grid_one_particle(target, GridSpec(x_max, n_points, float(th)), k=4,
                                 sigma=cur, richardson=richardson)
        cur = complex(vals[np.argmin(np.abs(vals - cur))])
        eps.append(cur)
    eps = np.asarray(eps)
    speed = np.abs(np.diff(eps)) / np.diff(thetas)
    return thetas, eps, int(np.argmin(speed))


# --------------------------------------------------------------------------
# two particles, bound regime
# --------------------------------------------------------------------------

def _two_particle_matrix(params, grid):
    n = grid.n_points
    x = grid_axis(grid)
    lap = sp.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1],
                   format="csr") * (-0.5 / grid.h ** 2)
    eye = sp.identity(n, format="csr")
    v1 = params.well(x)
    pot = (v1[:, None] + v1[None, :])
    if params.interacting:
        pot = pot + v_eff(np.abs(x[:, None] - x[None, :]), params.l_perp)
    return (sp.kron(lap, eye) + sp.kron(eye, lap) + sp.diags(pot.ravel())).tocsc()


def _lowest_two(params, grid, sigma):
    mat = _two_particle_matrix(params, grid)
    vals, vecs = spla.eigsh(mat, k=1, sigma=sigma, which="LM", tol=1e-12)
    psi = vecs[:, 0].reshape(grid.n_points, grid.n_points)
    psi = 0.5 * (psi + psi.T)           # the spatially symmetric ground state
    psi = psi / math.sqrt(np.sum(psi * psi) * grid.h ** 2)
    if psi[grid.n_points // 2, grid.n_points // 2] < 0:
        psi = -psi
    return float(vals[0]), psi


def grid_two_particle_bound(params: ModelParams, grid: GridSpec, richardson: bool = True,
                            sigma: float | None = None):
    """Ground energy and wavefunction of the real two-particle grid problem.

    Returns ``(E, psi, x)`` with ``psi`` normalised so that
    ``sum psi^2 h^2 = 1``.  With ``richardson`` the energy is extrapolated
    from ``h`` and ``h/2``; the wavefunction is the coarse-grid one.
    """
    if grid.theta != 0:
        raise ValueError("the two-particle oracle is restricted to theta = 0")
    if sigma is None:
        sigma = -2.0 * params.v0 - 1.0
    try:
        e, psi = _lowest_two(params, grid, sigma)
        if richardson:
            e2, _ = _lowest_two(params, grid.refined(), sigma)
            e = (4.0 * e2 - e) / 3.0
    except spla.ArpackNoConvergence as exc:
        raise ArithmeticError(f"grid eigensolver did not converge: {exc}") from exc
    return e, psi, grid_axis(grid)


def grid_entropy(psi: np.ndarray, h: float, tol: float = 1e-8) -> float:
    """Linear entropy ``1 - sum lambda^2`` from the singular values of the
    sampled wavefunction (``lambda = (sigma h)^2``)."""
    psi = np.asarray(psi, dtype=float)
    norm = float(np.sum(psi * psi) * h * h)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"wavefunction normalisation drifted to {norm:.10f}")
    s = np.linalg.svd(psi * h, compute_uv=False)
    lam = s * s
    return float(1.0 - np.sum(lam * lam))


def grid_linear_entropy(params: ModelParams, grid: GridSpec, richardson: bool = True,
                        sigma: float | None = None) -> tuple[float, float]:
    """``(E, L)`` of the two-particle grid ground state; with ``richardson``
    both are extrapolated from ``h`` and ``h/2``."""
    if sigma is None:
        sigma = -2.0 * params.v0 - 1.0
    e, psi = _lowest_two(params, grid, sigma)
    ent = grid_entropy(psi, grid.h)
    if richardson:
        fine = grid.refined()
        e2, psi2 = _lowest_two(params, fine, sigma)
        ent2 = grid_entropy(psi2, fine.h)
        e = (4.0 * e2 - e) / 3.0
        ent = (4.0 * ent2 - ent) / 3.0
    return e, ent
