"""Workflows for the quasi-1D Gaussian dot: ionization threshold, beta scans,
validity checks and resonance phenomenology.

Frequency policies
------------------
``"variational"`` (default)
    ``W_r`` minimises the lowest real-axis eigenvalue (a Rayleigh-Ritz bound).
    Bound points use ``W_r`` itself; points above the ionization threshold
    use ``W_r * exp(i * resonance_arg)`` so that the continuum is rotated
    away and the autoionizing state acquires a width.
``"trace"``
    trace-stationary frequency from :func:`qdres.solver.optimize_omega`.
complex number
    fixed frequency.
"""

from __future__ import annotations

import cmath
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

from . import hamiltonian as ham
from .basis import BasisSpec
from .entanglement import EntropyReport, analyse_state
from .hamiltonian import ModelParams
from .solver import (BOUND, RESONANCE, UNCONVERGED, ClassifierConfig, EigenPair,
                     classify_states, eig_general, optimize_omega)

log = logging.getLogger(__name__)

__all__ = [
    "Quasi1DValidityWarning",
    "ScanRow",
    "PointResult",
    "one_particle_ground",
    "threshold_energy",
    "variational_omega",
    "solve_point",
    "find_threshold",
    "scan_beta",
    "survival_probability",
    "breit_wigner",
    "check_quasi1d_validity",
]

OMEGA_BOUNDS = (0.05, 20.0)
DEFAULT_RESONANCE_ARG = -0.3
ONE_PARTICLE_M = 60


class Quasi1DValidityWarning(UserWarning):
    pass


# --------------------------------------------------------------------------
# one-particle threshold
# --------------------------------------------------------------------------

def one_particle_ground(params: ModelParams, spec: BasisSpec) -> complex:
    """Lowest one-particle eigenvalue in the Gaussian well, or 0 (the
    continuum edge) when nothing lies below it."""
    pairs = eig_general(ham.assemble_one_particle(spec, params, check=False))
    bound = [p.epsilon for p in pairs if p.epsilon.real < 0 and abs(p.epsilon.imag) < 1e-6]
    if not bound:
        return 0j
    return min(bound, key=lambda z: z.real)


def _lowest_real(params, m_size, omega, particles):
    spec = BasisSpec(omega, m_size)
    if particles == 1:
        h = ham.assemble_one_particle(spec, params, check=False).entries
    else:
        h = ham.assemble_two_particle(spec, params, check=False).entries
    return float(sla.eigvalsh(h.real, subset_by_index=[0, 0])[0])


def variational_omega(params: ModelParams, m_size: int, particles: int = 2,
                      seed: float | None = None, bounds=OMEGA_BOUNDS) -> tuple[float, float]:
    """Real frequency minimising the lowest eigenvalue; returns ``(W, E)``.

    A coarse logarithmic grid (around ``seed`` when given) picks the basin,
    bounded Brent refines it.
    """
    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    if seed is not None and seed > 0:
        c = math.log(min(max(float(seed), bounds[0]), bounds[1]))
        grid = np.linspace(max(lo, c - 1.2), min(hi, c + 1.2), 7)
    else:
        grid = np.linspace(lo, hi, 13)
    vals = [_lowest_real(params, m_size, math.exp(g), particles) for g in grid]
    k = int(np.argmin(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda g: _lowest_real(params, m_size, math.exp(g), particles),
                          bounds=(a, b), method="bounded", options={"xatol": 1e-4})
    if res.fun <= vals[k]:
        return math.exp(res.x), float(res.fun)
    return math.exp(grid[k]), float(vals[k])


def threshold_energy(params: ModelParams, m_size: int = ONE_PARTICLE_M) -> tuple[float, list]:
    """Ionization threshold ``E1`` and all one-particle bound levels
    (converged one-particle calculation, real frequency)."""
    om, _ = variational_omega(params, m_size, particles=1)
    pairs = eig_general(ham.assemble_one_particle(BasisSpec(om, m_size), params, check=False))
    levels = sorted(p.epsilon.real for p in pairs if p.epsilon.real < 0)
    if not levels:
        return 0.0, [0.0]
    return levels[0], levels


# --------------------------------------------------------------------------
# single point
# --------------------------------------------------------------------------

@dataclass
class PointResult:
    params: ModelParams
    omega: complex
    m_size: int
    ground: EigenPair
    pairs: list
    e1: float
    entropy: EntropyReport | None
    resonant: bool
    omega_real: float | None = None
    notes: list = field(default_factory=list)
    real_pair: tuple | None = None


def _two_particle_pairs(params, m_size, omega):
    spec = BasisSpec(omega, m_size)
    return spec, eig_general(ham.assemble_two_particle(spec, params, check=False))


def _follow(params, m_size, omega_from, omega_to, start, steps):
    """Continue eigenpair ``start`` from ``omega_from`` to ``omega_to`` along
    a circular arc, matching by maximal c-overlap."""
    from .solver import _pair_overlap

    r0, a0 = abs(omega_from), cmath.phase(omega_from)
    r1, a1 = abs(omega_to), cmath.phase(omega_to)
    cur = start
    spec = BasisSpec(omega_from, m_size)
    pairs = None
    for t in np.linspace(0.0, 1.0, steps + 1)[1:]:
        om = (r0 + t * (r1 - r0)) * cmath.exp(1j * (a0 + t * (a1 - a0)))
        nspec, pairs = _two_particle_pairs(params, m_size, om)
        s = _pair_overlap(spec, nspec, 2, params.sector)
        vecs = np.array([p.right for p in pairs]).T
        k = int(np.argmax(np.abs(cur.right @ s @ vecs)))
        cur = pairs[k]
        spec = nspec
    return cur, pairs


def _position_spread(spec, sector):
    """``x1^2 + x2^2`` in the symmetry-adapted pair basis (analytic band)."""
    m = spec.m_size
    j = np.arange(m)
    x2 = np.diag((2 * j + 1) / (2.0 * spec.omega)).astype(np.complex128)
    if m > 2:
        off = np.sqrt((j[:-2] + 1.0) * (j[:-2] + 2.0)) / (2.0 * spec.omega)
        x2[j[:-2], j[:-2] + 2] = off
        x2[j[:-2] + 2, j[:-2]] = off
    sym = ham.symmetrizer(m, sector)
    return sym.T @ ham._one_body_full(x2) @ sym


def _most_compact(pairs, spec, sector, k=8):
    x2 = _position_spread(spec, sector)
    cand = pairs[:k]
    spread = [(p.right @ x2 @ p.right).real for p in cand]
    return cand[int(np.argmin(spread))]


def _best_overlap(pairs, spec, ref_pair, ref_spec, sector):
    from .solver import _pair_overlap

    s = _pair_overlap(ref_spec, spec, 2, sector)
    vecs = np.array([p.right for p in pairs]).T
    return pairs[int(np.argmax(np.abs(ref_pair.right @ s @ vecs)))]


def well_frequency(params: ModelParams) -> float:
    """Harmonic frequency of the well bottom, ``sqrt(2 V0) / beta``."""
    return math.sqrt(2.0 * params.v0) / params.beta


def solve_point(params: ModelParams, m_size: int = 20, omega_policy="variational",
                seed=None, resonance_arg: float = DEFAULT_RESONANCE_ARG,
                thresholds=None, classifier: ClassifierConfig = ClassifierConfig(),
                follow_steps: int = 3, track=None) -> PointResult:
    """Two-particle ground (or lowest autoionizing) state with entropies.

    ``thresholds = (E1, levels)`` skips the one-particle calculation.
    ``track = (pair, spec)`` is the real-frequency state of a neighbouring
    scan point: above threshold the frequency modulus is then kept at
    ``seed`` and the state continued by maximal c-overlap.  Without it the
    most compact of the low-lying states at ``seed`` (or at the well
    frequency) is taken as the autoionizing state.
    """
    e1, levels = thresholds if thresholds is not None else threshold_energy(params)
    thr = sorted(set(list(levels) + [0.0]))
    notes = []
    omega_real = None
    real_pair = None
    if isinstance(omega_policy, str) and omega_policy == "variational":
        seed_r = None if seed is None else abs(seed)
        om_v, e_v = variational_omega(params, m_size, 2, seed=seed_r)
        resonant = e_v > e1 and params.interacting
        if not resonant:
            omega_real = om_v
            spec, pairs = _two_particle_pairs(params, m_size, omega_real)
            ground = pairs[0]
        else:
            omega_real = seed_r if seed_r is not None else well_frequency(params)
            spec, pairs = _two_particle_pairs(params, m_size, omega_real)
            if track is not None:
                ground = _best_overlap(pairs, spec, track[0], track[1], params.sector)
            else:
                ground = _most_compact(pairs, spec, params.sector)
        real_pair = (ground, spec)
        omega = complex(omega_real)
        if resonant:
            omega = omega_real * cmath.exp(1j * resonance_arg)
            ground, pairs = _follow(params, m_size, complex(omega_real), omega, ground,
                                    follow_steps)
            spec = BasisSpec(omega, m_size)
    elif isinstance(omega_policy, str) and omega_policy == "trace":
        omega = optimize_omega(params, m_size, 1.0 if seed is None else seed).omega_opt
        spec, pairs = _two_particle_pairs(params, m_size, omega)
        ground = pairs[0]
        resonant = ground.epsilon.real > e1
    elif isinstance(omega_policy, str):
        raise ValueError(f"unknown omega policy {omega_policy!r}")
    else:
        omega = complex(omega_policy)
        spec, pairs = _two_particle_pairs(params, m_size, omega)
        ground = pairs[0]
        resonant = ground.epsilon.real > e1
    # label the chosen state; a 10 % frequency change probes stability
    if abs(omega.imag) > 0:
        _, pp = _two_particle_pairs(params, m_size, omega * 1.1)
        perturbed = [p.epsilon for p in pp]
    else:
        perturbed = None
    labelled = classify_states([ground], spec, thr, perturbed, classifier)[0]
    if resonant and labelled.label == BOUND:
        labelled = labelled.with_label(UNCONVERGED, "above_threshold")
    if labelled.epsilon.imag > classifier.tol_bound and labelled.label != UNCONVERGED:
        labelled = labelled.with_label(UNCONVERGED, "positive_imaginary_part")
    try:
        ent = analyse_state(labelled, spec, params.sector)
    except ArithmeticError as exc:
        notes.append(f"entropy failed: {exc}")
        ent = None
    return PointResult(params, omega, m_size, labelled, pairs, e1, ent, resonant,
                       omega_real, notes, real_pair)


# --------------------------------------------------------------------------
# threshold search and scans
# --------------------------------------------------------------------------

def _gap(params, m_size):
    e1, _ = threshold_energy(params)
    _, e2 = variational_omega(params, m_size, 2)
    return e2 - e1


def find_threshold(params: ModelParams, beta_lo: float, beta_hi: float, m_size: int = 20,
                   tol: float = 1e-4) -> float:
    """Width ``beta_th`` where the two-particle ground energy crosses ``E1``.

    Bisection on ``g(beta) = E2 - E1`` with both energies from real-frequency
    variational calculations.
    """
    if not 0 < beta_lo < beta_hi:
        raise ValueError("need 0 < beta_lo < beta_hi")
    g_lo = _gap(params.replace(beta=beta_lo), m_size)
    g_hi = _gap(params.replace(beta=beta_hi), m_size)
    if g_lo * g_hi > 0:
        raise ValueError(f"no sign change of E2 - E1 in [{beta_lo}, {beta_hi}] "
                         f"(g = {g_lo:.3e}, {g_hi:.3e})")
    a, b = beta_lo, beta_hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        g = _gap(params.replace(beta=mid), m_size)
        if (g > 0) == (g_lo > 0):
            a, g_lo = mid, g
        else:
            b = mid
    return 0.5 * (a + b)


@dataclass(frozen=True)
class ScanRow:
    beta: float
    l_perp: float
    epsilon0: complex
    gamma: float
    linear_c: complex
    linear_r: float
    label: str
    m_used: int
    omega_used: complex
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def _failed_row(beta, l_perp, m_size, msg):
    nan = float("nan")
    return ScanRow(beta, l_perp, complex(nan, nan), nan, complex(nan, nan), nan,
                   UNCONVERGED, m_size, complex(nan, nan), msg)


def scan_beta(params: ModelParams, betas: Sequence[float], m_size: int = 20,
              omega_policy="variational", resonance_arg: float = DEFAULT_RESONANCE_ARG,
              classifier: ClassifierConfig = ClassifierConfig()) -> list[ScanRow]:
    """One row per ``beta`` (ascending).  Points are solved from the widest
    well down, each seeding the next with its frequency and state.

    Failures are recorded in-row (``error``) and the scan continues.
    """
    betas = [float(b) for b in betas]
    if betas != sorted(betas):
        raise ValueError("betas must be increasing")
    rows = {}
    seed = None
    track = None
    # the chain runs from wide (bound) to narrow (autoionizing) wells so that
    # the resonance is reached by continuation of the bound ground state
    for beta in sorted(betas, reverse=True):
        p = params.replace(beta=beta)
        try:
            res = solve_point(p, m_size, omega_policy, seed, resonance_arg, None, classifier,
                              track=track)
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            log.warning("scan point beta=%g failed: %s", beta, exc)
            rows[beta] = _failed_row(beta, p.l_perp, m_size, str(exc))
            continue
        seed = res.omega_real if res.omega_real is not None else res.omega
        track = res.real_pair
        g = res.ground
        ent = res.entropy
        rows[beta] = ScanRow(beta, p.l_perp, g.epsilon, g.gamma,
                             ent.linear_c if ent else complex("nan"),
                             ent.linear_r if ent else float("nan"),
                             g.label, m_size, res.omega,
                             None if ent else "; ".join(res.notes))
    rows = [rows[b] for b in betas]
    return rows


# --------------------------------------------------------------------------
# phenomenology
# --------------------------------------------------------------------------

def survival_probability(gamma: float, t: float) -> float:
    """``exp(-gamma t)`` (hbar = 1)."""
    if gamma < 0 or t < 0:
        raise ValueError("gamma and t must be non-negative")
    return math.exp(-gamma * t)


def breit_wigner(e: float, gamma: float, eps) -> float:
    """Unit-normalised Lorentzian ``(G / 2 pi) / ((eps - E)^2 + (G/2)^2)``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    eps = np.asarray(eps, dtype=float)
    val = (gamma / (2.0 * math.pi)) / ((eps - e) ** 2 + 0.25 * gamma * gamma)
    return float(val) if val.ndim == 0 else val


def check_quasi1d_validity(params: ModelParams, limit: float = 0.5) -> float:
    """``l_perp / (beta^2 / (2 V0))^(1/4)``; warns above ``limit``."""
    ratio = params.quasi1d_ratio
    if ratio > limit:
        warnings.warn(f"lateral confinement {params.l_perp} is not small against the "
                      f"longitudinal length (ratio {ratio:.3f} > {limit})",
                      Quasi1DValidityWarning, stacklevel=2)
    return ratio
