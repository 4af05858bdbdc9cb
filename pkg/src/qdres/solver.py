"""Non-Hermitian eigenproblems in the biorthonormal basis.

Dense diagonalisation with c-normalised eigenvectors, trace-stationary choice
of the complex basis frequency, labelling of bound / resonant / rotated
continuum eigenvalues, and frequency trajectories of a tracked state.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from . import hamiltonian as ham
from .basis import EXCEPTIONAL_THRESHOLD, BasisSpec, cross_overlap
from .hamiltonian import ModelParams, OperatorMatrix
from .numerics import NewtonConvergenceError, complex_newton

log = logging.getLogger(__name__)

__all__ = [
    "BOUND",
    "RESONANCE",
    "ROTATED_CONTINUUM",
    "UNCONVERGED",
    "EigenPair",
    "OmegaOptimum",
    "OmegaOptimizationError",
    "ClassifierConfig",
    "eig_general",
    "optimize_omega",
    "trace_function",
    "classify_states",
    "Trajectory",
    "alpha_trajectory",
    "convergence_study",
]

BOUND = "bound"
RESONANCE = "resonance"
ROTATED_CONTINUUM = "rotated_continuum"
UNCONVERGED = "unconverged"


@dataclass(frozen=True)
class EigenPair:
    """``epsilon = E - i Gamma/2`` with right coefficients ``right`` and left
    coefficients ``left = conj(right)`` normalised to ``sum(right**2) = 1``."""

    epsilon: complex
    right: np.ndarray
    left: np.ndarray
    norm_ratio: float
    label: str = UNCONVERGED
    flags: frozenset = frozenset()

    @property
    def energy(self) -> float:
        return self.epsilon.real

    @property
    def gamma(self) -> float:
        g = -2.0 * self.epsilon.imag
        return 0.0 if abs(self.epsilon.imag) < 1e-10 else g

    def with_label(self, label, *flags) -> "EigenPair":
        return EigenPair(self.epsilon, self.right, self.left, self.norm_ratio,
                         label, self.flags | frozenset(flags))


@dataclass(frozen=True)
class OmegaOptimum:
    omega_opt: complex
    residual: float
    trace_value: complex
    used_fallback: bool = False


class OmegaOptimizationError(ArithmeticError):
    """No stationary point of the trace was found; ``scan`` holds the
    coarse-grid table ``(omega, |dTr/dW|)`` that was searched."""

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = scan if scan is not None else []


# --------------------------------------------------------------------------
# diagonalisation
# --------------------------------------------------------------------------

def _fix_phase(v):
    # sign of a c-normalised vector is free; make the largest entry have Re > 0
    k = int(np.argmax(np.abs(v)))
    if v[k].real < 0 or (v[k].real == 0 and v[k].imag < 0):
        return -v
    return v


def _is_hermitian(a):
    scale = max(1.0, float(np.max(np.abs(a))))
    return float(np.max(np.abs(a - a.conj().T))) <= 1e-14 * scale


def eig_general(matrix, degeneracy_tol: float = 1e-9) -> list[EigenPair]:
    """All eigenpairs of a complex symmetric matrix, c-normalised.

    Hermitian (hence real symmetric) input goes through ``eigh``; otherwise
    LAPACK's Hessenberg-QR routine.  Left vectors are the conjugates of the
    right ones.  Eigenvectors of (near-)degenerate eigenvalues are
    c-orthogonalised by bilinear Gram-Schmidt.  Pairs whose c-norm
    ``|sum c_k^2|`` falls below 1e-10 before normalisation are labelled
    ``unconverged`` with flag ``"exceptional"``.  Output sorted by ``Re``.
    """
    a = matrix.entries if isinstance(matrix, OperatorMatrix) else np.asarray(matrix)
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError("need a non-empty square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if _is_hermitian(a):
        w, v = sla.eigh(a if np.any(a.imag) else a.real)
        w = w.astype(np.complex128)
        v = v.astype(np.complex128)
    else:
        try:
            w, v = sla.eig(a, check_finite=False)
        except sla.LinAlgError as exc:
            raise ArithmeticError(f"QR iteration failed: {exc}") from exc
    order = np.lexsort((w.imag, w.real))
    w = w[order]
    v = v[:, order]
    scale = max(1.0, float(np.max(np.abs(w))))
    pairs = []
    i = 0
    n = len(w)
    while i < n:
        j = i + 1
        while j < n and abs(w[j] - w[i]) <= degeneracy_tol * scale:
            j += 1
        block = [v[:, k].copy() for k in range(i, j)]
        done = []
        for k, vec in enumerate(block):
            for u in done:
                vec = vec - (u @ vec) * u
            cn = vec @ vec
            flags = ()
            if abs(cn) < EXCEPTIONAL_THRESHOLD * float(np.vdot(vec, vec).real):
                flags = ("exceptional",)
                vec = vec / math.sqrt(float(np.vdot(vec, vec).real))
                done.append(vec)
                pairs.append(EigenPair(complex(w[i + k]), vec, vec.conj(), math.inf,
                                       UNCONVERGED, frozenset(flags)))
                continue
            vec = _fix_phase(vec / np.sqrt(cn))
            done.append(vec)
            r = float(np.vdot(vec, vec).real)
            pairs.append(EigenPair(complex(w[i + k]), vec, vec.conj(), r))
        i = j
    return pairs


# --------------------------------------------------------------------------
# trace stationarity
# --------------------------------------------------------------------------

def trace_function(params: ModelParams | None, m_size: int, particles: int = 2,
                   potential=None):
    """``W -> Tr H(W)`` from diagonal entries only (no diagonalisation)."""

    def tr(omega):
        spec = BasisSpec(omega, m_size)
        if particles == 1:
            return ham.one_particle_trace(spec, potential if potential is not None
                                          else params.well)
        return ham.two_particle_trace(spec, params, potential=potential)

    return tr


def _dtrace(tr, omega):
    # 5-point central difference; analytic in W, so a real step suffices
    h = 1e-3 * abs(omega)
    return (-tr(omega + 2 * h) + 8 * tr(omega + h) - 8 * tr(omega - h)
            + tr(omega - 2 * h)) / (12.0 * h)


def _valid_omega(z):
    return cmath.isfinite(z) and z.real > 1e-3 and abs(cmath.phase(z)) < 1.2


def optimize_omega(params: ModelParams | None, m_size: int, omega_seed: complex,
                   particles: int = 2, potential=None, tol: float = 1e-8,
                   fallback: bool = True) -> OmegaOptimum:
    """Stationary point of ``Tr H(W)`` with respect to the complex frequency.

    Newton from ``omega_seed`` until ``|dTr/dW| < tol``; on failure a coarse scan over
    ``|W| in [0.2, 5]``, ``arg W in [-0.7, 0]`` seeds a second attempt.
    Raises :class:`OmegaOptimizationError` (with the scan table) otherwise.
    """
    tr = trace_function(params, m_size, particles, potential)

    def grad(z):
        if not _valid_omega(z):
            return complex(math.inf)
        return _dtrace(tr, z)

    def attempt(seed):
        # absolute tolerance on |dTr/dW|, floored at the finite-difference noise
        noise = 10.0 * np.finfo(float).eps * abs(tr(seed)) / (1e-3 * abs(seed))
        z = complex_newton(grad, seed, max(tol, noise))
        if not _valid_omega(z):
            raise NewtonConvergenceError("left the basis domain", z, math.inf, 0)
        return OmegaOptimum(z, abs(grad(z)), tr(z))

    try:
        return attempt(complex(omega_seed))
    except NewtonConvergenceError as exc:
        if not fallback:
            raise OmegaOptimizationError(f"Newton failed: {exc}") from exc
        log.info("trace Newton failed from %s (%s); scanning", omega_seed, exc)

    table = []
    for mod in np.geomspace(0.2, 5.0, 12):
        for ph in np.linspace(-0.7, 0.0, 8):
            z = mod * cmath.exp(1j * ph)
            table.append((z, abs(grad(z))))
    best = sorted(table, key=lambda t: t[1])[:4]
    for z, _ in best:
        try:
            opt = attempt(z)
            return OmegaOptimum(opt.omega_opt, opt.residual, opt.trace_value, True)
        except NewtonConvergenceError:
            continue
    raise OmegaOptimizationError("no stationary point of the trace found", table)


# --------------------------------------------------------------------------
# classification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassifierConfig:
    tol_bound: float = 1e-6
    angle_tol: float = 0.1
    stability_tol: float = 1e-4
    # eigenvalues this close to a threshold are counted as continuum
    threshold_radius: float = 1e-8


def classify_states(pairs: Sequence[EigenPair], spec: BasisSpec, threshold_energy,
                    perturbed: Sequence[complex] | None = None,
                    config: ClassifierConfig = ClassifierConfig()) -> list[EigenPair]:
    """Label eigenpairs as bound, rotated continuum, resonance or unconverged.

    ``threshold_energy`` may be a single value or a sequence of thresholds;
    continua are rays from each threshold at angle ``arg W = -2 theta``.
    ``perturbed`` are eigenvalues of the same problem at a nearby frequency:
    an off-ray eigenvalue is a resonance only if one of them lies within
    ``stability_tol`` (relative to ``max(1, |eps|)``).  Without ``perturbed``
    off-ray eigenvalues are labelled resonance with flag
    ``"stability_unchecked"``.
    """
    thresholds = np.atleast_1d(np.asarray(threshold_energy, dtype=float))
    lowest = float(np.min(thresholds))
    ray = cmath.phase(spec.omega)
    pert = None if perturbed is None else np.asarray(perturbed, dtype=np.complex128)
    out = []
    for p in pairs:
        if p.label == UNCONVERGED and "exceptional" in p.flags:
            out.append(p)
            continue
        e = p.epsilon
        if e.imag > -config.tol_bound and e.real < lowest:
            out.append(p.with_label(BOUND))
            continue
        on_ray = False
        for t in thresholds:
            d = e - t
            if abs(d) < config.threshold_radius:
                on_ray = True
                break
            if d.real > 0 or abs(d) > 0:
                ang = cmath.phase(d)
                if abs(ang - ray) < config.angle_tol:
                    on_ray = True
                    break
        if on_ray:
            out.append(p.with_label(ROTATED_CONTINUUM))
            continue
        if pert is None:
            out.append(p.with_label(RESONANCE, "stability_unchecked"))
            continue
        shift = float(np.min(np.abs(pert - e))) if pert.size else math.inf
        if shift < config.stability_tol * max(1.0, abs(e)):
            out.append(p.with_label(RESONANCE))
        else:
            out.append(p.with_label(UNCONVERGED, "unstable"))
    return out


# --------------------------------------------------------------------------
# frequency trajectories
# --------------------------------------------------------------------------

@dataclass
class Trajectory:
    omegas: list
    epsilons: list
    overlaps: list = field(default_factory=list)
    ambiguous: list = field(default_factory=list)   # (step, alternative eps)

    def speeds(self) -> np.ndarray:
        """``|d eps / d W|`` between consecutive points."""
        e = np.asarray(self.epsilons)
        w = np.asarray(self.omegas)
        return np.abs(np.diff(e)) / np.abs(np.diff(w))

    def stagnation(self):
        """``(min speed, eps estimate)`` at the slowest segment."""
        s = self.speeds()
        k = int(np.argmin(s))
        e = self.epsilons
        return float(s[k]), 0.5 * (e[k] + e[k + 1])

    def spread(self) -> float:
        e = np.asarray(self.epsilons)
        return float(np.max(np.abs(e - e[0])))


def _solve(spec, params, particles, potential):
    if particles == 1:
        m = ham.assemble_one_particle(spec, params, potential=potential, check=False)
    else:
        m = ham.assemble_two_particle(spec, params, check=False, potential=potential)
    return eig_general(m)


def _pair_overlap(spec_a, spec_b, particles, sector):
    s = cross_overlap(spec_a, spec_b)
    if particles == 1:
        return s
    sym = ham.symmetrizer(spec_a.m_size, sector)
    return sym.T @ np.kron(s, s) @ sym


def alpha_trajectory(params: ModelParams | None, m_size: int, omega_path: Sequence[complex],
                     target: complex, particles: int = 1, potential=None) -> Trajectory:
    """Follow the eigenvalue nearest ``target`` at the first frequency along
    ``omega_path``, matching states by maximal ``|c-overlap|`` of their
    wavefunctions between consecutive frequencies.

    A step where the runner-up overlap is within 10 % of the best is recorded
    in ``ambiguous`` together with the runner-up eigenvalue.
    """
    path = [complex(z) for z in omega_path]
    if len(path) < 2:
        raise ValueError("need at least two frequencies")
    sector = params.sector if params is not None else ham.SYMMETRIC
    spec = BasisSpec(path[0], m_size)
    pairs = _solve(spec, params, particles, potential)
    k = int(np.argmin([abs(p.epsilon - target) for p in pairs]))
    cur = pairs[k]
    traj = Trajectory([path[0]], [cur.epsilon], [1.0])
    for i, om in enumerate(path[1:], start=1):
        nspec = BasisSpec(om, m_size)
        npairs = _solve(nspec, params, particles, potential)
        s = _pair_overlap(spec, nspec, particles, sector)
        vecs = np.array([p.right for p in npairs]).T
        ov = np.abs(cur.right @ s @ vecs)
        order = np.argsort(ov)[::-1]
        best = int(order[0])
        if len(order) > 1 and ov[order[1]] > 0.9 * ov[best]:
            traj.ambiguous.append((i, npairs[int(order[1])].epsilon))
        cur = npairs[best]
        spec = nspec
        traj.omegas.append(om)
        traj.epsilons.append(cur.epsilon)
        traj.overlaps.append(float(ov[best]))
    return traj


# --------------------------------------------------------------------------
# convergence in the basis size
# --------------------------------------------------------------------------

def convergence_study(params: ModelParams, m_list: Sequence[int], omega=None,
                      omega_seed: complex = 1.0) -> list[dict]:
    """Ground-state energy and entropies for increasing basis size.

    With ``omega=None`` each size uses its own real variational frequency
    (seeded by the previous size); ``omega='trace'`` uses trace stationarity.
    Rows carry ``delta_eps`` / ``delta_linear_r`` relative to the previous
    size (``nan`` for the first row).
    """
    from .entanglement import analyse_state

    if list(m_list) != sorted(m_list):
        raise ValueError("m_list must be increasing")
    rows = []
    prev = None
    seed = omega_seed
    for m in m_list:
        if omega is None:
            from .model import variational_omega

            om = complex(variational_omega(params, m, 2, seed=abs(seed))[0])
            seed = om
        elif isinstance(omega, str) and omega == "trace":
            om = optimize_omega(params, m, seed).omega_opt
            seed = om
        else:
            om = complex(omega)
        spec = BasisSpec(om, m)
        pairs = eig_general(ham.assemble_two_particle(spec, params, check=False))
        ground = pairs[0]
        rep = analyse_state(ground, spec, params.sector)
        row = {"m": m, "omega": om, "epsilon": ground.epsilon,
               "linear_c": rep.linear_c, "linear_r": rep.linear_r,
               "von_neumann": rep.von_neumann}
        if prev is None:
            row["delta_eps"] = math.nan
            row["delta_linear_r"] = math.nan
        else:
            row["delta_eps"] = abs(row["epsilon"] - prev["epsilon"])
            row["delta_linear_r"] = abs(row["linear_r"] - prev["linear_r"])
        rows.append(row)
        prev = row
    return rows
