"""One- and two-particle Hamiltonian matrices of the quasi-1D Gaussian dot.

All matrices are taken in the complex-frequency oscillator basis with the
c-product, so complex scaling enters only through the basis frequency and
the potentials are sampled at real coordinates.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .basis import BasisSpec, QuadratureAccuracyWarning, basis_table
from .numerics import erfcx, gauss_hermite_rule

__all__ = [
    "SYMMETRIC",
    "ANTISYMMETRIC",
    "ModelParams",
    "OperatorMatrix",
    "GaussianWell",
    "HarmonicTrap",
    "BarrierWell",
    "pair_states",
    "symmetrizer",
    "kinetic_matrix",
    "potential_matrix",
    "gaussian_well_matrix",
    "v_eff",
    "relative_interaction_matrix",
    "interaction_matrix",
    "assemble_one_particle",
    "assemble_two_particle",
    "one_particle_trace",
    "two_particle_trace",
]

SYMMETRIC = "symmetric"
ANTISYMMETRIC = "antisymmetric"
_SECTORS = (SYMMETRIC, ANTISYMMETRIC)

# relative tolerance of the order-doubling test on potential matrices
_DOUBLING_TOL = 1e-9


# --------------------------------------------------------------------------
# one-body potentials (callable on complex coordinates for the grid oracle)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianWell:
    """``-v0 * exp(-x^2 / beta^2)``."""

    v0: float
    beta: float

    def __call__(self, x):
        x = np.asarray(x)
        return -self.v0 * np.exp(-(x * x) / self.beta ** 2)

    @property
    def threshold(self) -> float:
        return 0.0

    # V = offset + g(x) exp(-envelope x^2) with smooth g; the quadrature is
    # placed on the combined Gaussian envelope of basis pair and potential
    offset = 0.0

    @property
    def envelope(self) -> float:
        return self.beta ** -2

    def localized(self, x):
        return self(x)


@dataclass(frozen=True)
class HarmonicTrap:
    """``omega^2 x^2 / 2`` (no continuum; used for exact-limit checks)."""

    omega: float

    def __call__(self, x):
        x = np.asarray(x)
        return 0.5 * self.omega ** 2 * x * x

    @property
    def threshold(self) -> float:
        return math.inf

    offset = 0.0
    envelope = 0.0

    def localized(self, x):
        return self(x)


@dataclass(frozen=True)
class BarrierWell:
    """``(x^2/2 - j) exp(-lam x^2) + j``: a well behind barriers, with
    shape resonances above the ``j`` threshold."""

    j: float = 0.8
    lam: float = 0.1

    def __call__(self, x):
        x = np.asarray(x)
        return (0.5 * x * x - self.j) * np.exp(-self.lam * x * x) + self.j

    @property
    def threshold(self) -> float:
        return self.j

    @property
    def offset(self) -> float:
        return self.j

    @property
    def envelope(self) -> float:
        return self.lam

    def localized(self, x):
        x = np.asarray(x)
        return (0.5 * x * x - self.j) * np.exp(-self.lam * x * x)


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the quasi-1D Gaussian quantum dot.

    Units are effective Bohr radii and effective hartrees.
    """

    v0: float
    beta: float
    l_perp: float
    sector: str = SYMMETRIC
    interacting: bool = True
    quasi1d_ratio: float = field(init=False)

    def __post_init__(self):
        for name in ("v0", "beta", "l_perp"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be a positive finite number, got {val}")
        if self.sector not in _SECTORS:
            raise ValueError(f"sector must be one of {_SECTORS}")
        object.__setattr__(self, "quasi1d_ratio",
                           self.l_perp / (self.beta ** 2 / (2.0 * self.v0)) ** 0.25)

    @property
    def well(self) -> GaussianWell:
        return GaussianWell(self.v0, self.beta)

    def replace(self, **changes) -> "ModelParams":
        kw = dict(v0=self.v0, beta=self.beta, l_perp=self.l_perp,
                  sector=self.sector, interacting=self.interacting)
        kw.update(changes)
        return ModelParams(**kw)


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense complex matrix of an operator in the c-orthonormal basis."""

    entries: np.ndarray
    basis: BasisSpec
    particle_count: int = 1
    sector: str | None = None

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.T)))

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.entries.shape != other.entries.shape:
            raise ValueError("matrix dimensions differ")
        return OperatorMatrix(self.entries + other.entries, self.basis,
                              self.particle_count, self.sector)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    # serialisation for oracle comparisons --------------------------------
    def save_npz(self, path):
        np.savez(path, entries=self.entries, omega=np.complex128(self.basis.omega),
                 m_size=self.basis.m_size, quad_order=self.basis.quad_order,
                 particle_count=self.particle_count, sector=str(self.sector))

    @classmethod
    def load_npz(cls, path) -> "OperatorMatrix":
        with np.load(path) as d:
            spec = BasisSpec(complex(d["omega"]), int(d["m_size"]), int(d["quad_order"]))
            sector = str(d["sector"])
            return cls(d["entries"].copy(), spec, int(d["particle_count"]),
                       None if sector == "None" else sector)

    def to_text(self) -> str:
        """Rows ``i j re im`` with a header, lossless (repr precision)."""
        out = io.StringIO()
        om = self.basis.omega
        out.write(f"# dim={self.dim} particles={self.particle_count} sector={self.sector} "
                  f"omega_re={float(om.real)!r} omega_im={float(om.imag)!r} m_size={self.basis.m_size}\n")
        for i in range(self.dim):
            for j in range(self.dim):
                v = self.entries[i, j]
                out.write(f"{i} {j} {float(v.real)!r} {float(v.imag)!r}\n")
        return out.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "OperatorMatrix":
        lines = text.splitlines()
        meta = dict(tok.split("=") for tok in lines[0].lstrip("# ").split())
        n = int(meta["dim"])
        a = np.zeros((n, n), dtype=np.complex128)
        for line in lines[1:]:
            i, j, re, im = line.split()
            a[int(i), int(j)] = complex(float(re), float(im))
        spec = BasisSpec(complex(float(meta["omega_re"]), float(meta["omega_im"])),
                         int(meta["m_size"]))
        sector = None if meta["sector"] == "None" else meta["sector"]
        return cls(a, spec, int(meta["particles"]), sector)


# --------------------------------------------------------------------------
# one-particle pieces
# --------------------------------------------------------------------------

def kinetic_matrix(spec: BasisSpec) -> OperatorMatrix:
    """``-1/2 d^2/dx^2``: diagonal ``W (2j+1)/4`` and ``-W sqrt(j(j-1))/4`` on
    the second off-diagonals."""
    m = spec.m_size
    j = np.arange(m)
    t = np.diag((2 * j + 1) * spec.omega / 4.0).astype(np.complex128)
    if m > 2:
        off = -spec.omega / 4.0 * np.sqrt((j[2:] * (j[2:] - 1)).astype(float))
        t[j[2:] - 2, j[2:]] = off
        t[j[2:], j[2:] - 2] = off
    return OperatorMatrix(t, spec)


def _potential_grid(spec, potential, order=None):
    """Real nodes ``x``, weights times the localized potential, and the
    constant offset (which contributes ``offset * identity`` exactly)."""
    env = float(getattr(potential, "envelope", 0.0))
    offset = float(getattr(potential, "offset", 0.0))
    local = getattr(potential, "localized", potential)
    rule = spec.rule if order is None else gauss_hermite_rule(order)
    s = math.sqrt(spec.omega.real + env)
    x = rule.nodes / s
    return x, rule.scaled_weights / s * local(x), offset


def _potential_entries(spec, potential, order=None):
    x, wv, offset = _potential_grid(spec, potential, order)
    tab = basis_table(spec, x)
    v = (tab * wv) @ tab.T
    if offset:
        v = v + offset * np.eye(spec.m_size)
    return v


def potential_matrix(spec: BasisSpec, potential, check: bool = True) -> OperatorMatrix:
    """c-product matrix of a multiplicative potential sampled at real nodes.

    With ``check`` the order is doubled once and a
    :class:`QuadratureAccuracyWarning` raised if an entry moves by more than
    1e-9 relative to the matrix scale.
    """
    v = _potential_entries(spec, potential)
    if check and spec.quad_order < 512:
        v2 = _potential_entries(spec, potential, min(2 * spec.quad_order, 512))
        delta = np.max(np.abs(v2 - v))
        if delta > _DOUBLING_TOL * max(1.0, np.max(np.abs(v2))):
            warnings.warn(f"potential matrix shifts by {delta:.2e} on doubling the "
                          f"quadrature order {spec.quad_order}", QuadratureAccuracyWarning)
    v = 0.5 * (v + v.T)
    return OperatorMatrix(v, spec)


def gaussian_well_matrix(spec: BasisSpec, v0: float, beta: float,
                         check: bool = True) -> OperatorMatrix:
    return potential_matrix(spec, GaussianWell(v0, beta), check=check)


def assemble_one_particle(spec: BasisSpec, params=None, potential=None,
                          check: bool = True) -> OperatorMatrix:
    """Kinetic plus trap.  Pass either :class:`ModelParams` (Gaussian well) or an
    explicit one-body ``potential`` callable."""
    if potential is None:
        if params is None:
            raise ValueError("need params or potential")
        potential = params.well
    return kinetic_matrix(spec) + potential_matrix(spec, potential, check=check)


def one_particle_trace(spec: BasisSpec, potential) -> complex:
    """Trace of the one-particle matrix from diagonal entries only."""
    x, wv, offset = _potential_grid(spec, potential)
    tab = basis_table(spec, x)
    m = spec.m_size
    kin = spec.omega * m * m / 4.0
    return complex(kin + m * offset + np.sum((tab * tab) @ wv))


# --------------------------------------------------------------------------
# effective interaction
# --------------------------------------------------------------------------

def v_eff(r, l_perp: float):
    """Transverse-averaged Coulomb kernel
    ``sqrt(pi/(2 l^2)) * erfcx(r / (l sqrt 2))`` for ``r >= 0``."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise ValueError("v_eff needs r >= 0")
    if l_perp <= 0:
        raise ValueError("l_perp must be positive")
    val = math.sqrt(math.pi / (2.0 * l_perp ** 2)) * erfcx(r / (l_perp * math.sqrt(2.0)))
    return float(val) if np.ndim(val) == 0 else val


def _half_line_rule(omega: complex, k_size: int, l_perp: float, npan: int = 24):
    """Composite Gauss-Legendre nodes on [0, R] refined near the cusp scale."""
    re = omega.real
    r_max = (math.sqrt(2.0 * k_size + 1.0) + 7.5) / math.sqrt(re)
    h = 0.35 / math.sqrt(abs(omega))
    edges = [0.0]
    e = min(l_perp, h) / 4.0
    while e < h and e < r_max:
        edges.append(e)
        e *= 2.0
    e = edges[-1]
    while e < r_max:
        e = min(e + h, r_max)
        edges.append(e)
    t, w = np.polynomial.legendre.leggauss(npan)
    a = np.asarray(edges[:-1])
    b = np.asarray(edges[1:])
    half = 0.5 * (b - a)
    nodes = (a[:, None] + half[:, None] * (t[None, :] + 1.0)).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def relative_interaction_matrix(spec: BasisSpec, l_perp: float, k_size: int | None = None,
                                npan: int = 24) -> np.ndarray:
    """``W[n, n'] = int psi_n(r) V_eff(sqrt(2) |r|) psi_n'(r) dr`` in the relative
    coordinate ``r = (x1 - x2)/sqrt 2``.

    The kernel is evaluated on the half line, where it is analytic, and the
    parity of the oscillator functions restores the full line.
    """
    if k_size is None:
        k_size = 2 * spec.m_size - 1
    r, w = _half_line_rule(spec.omega, k_size, l_perp, npan)
    tab = kernels.ho_table(spec.omega, r, k_size)
    vk = v_eff(math.sqrt(2.0) * r, l_perp)
    mat = 2.0 * (tab * (w * vk)) @ tab.T
    n = np.arange(k_size)
    mat[(n[:, None] + n[None, :]) % 2 == 1] = 0.0
    return 0.5 * (mat + mat.T)


def pair_states(m_size: int, sector: str = SYMMETRIC):
    """Ordered ``(n, m)`` pairs: ``n <= m`` (symmetric) or ``n < m``."""
    if sector == SYMMETRIC:
        return [(a, b) for a in range(m_size) for b in range(a, m_size)]
    if sector == ANTISYMMETRIC:
        return [(a, b) for a in range(m_size) for b in range(a + 1, m_size)]
    raise ValueError(f"unknown sector {sector!r}")


def symmetrizer(m_size: int, sector: str = SYMMETRIC) -> np.ndarray:
    """Real ``M^2 x D`` matrix whose columns are the symmetry-adapted product
    states in the full product basis (index ``a*M + b``)."""
    pairs = pair_states(m_size, sector)
    s = np.zeros((m_size * m_size, len(pairs)))
    sign = 1.0 if sector == SYMMETRIC else -1.0
    r2 = 1.0 / math.sqrt(2.0)
    for col, (a, b) in enumerate(pairs):
        if a == b:
            s[a * m_size + a, col] = 1.0
        else:
            s[a * m_size + b, col] = r2
            s[b * m_size + a, col] = sign * r2
    return s


def interaction_matrix(spec: BasisSpec, l_perp: float, sector: str | None = SYMMETRIC,
                       npan: int = 24) -> OperatorMatrix:
    """``V_eff(|x1 - x2|)`` between symmetry-adapted pair states.

    Product states are mapped to centre-of-mass/relative oscillator states by
    the (frequency-independent) 45-degree brackets; only the relative factor
    sees the interaction.  ``sector=None`` returns the full ``M^2`` product
    basis.
    """
    m = spec.m_size
    w = relative_interaction_matrix(spec, l_perp, 2 * m - 1, npan)
    full = kernels.pair_interaction(kernels.cm_brackets(m), w)
    if sector is None:
        return OperatorMatrix(full, spec, 2, None)
    s = symmetrizer(m, sector)
    v = s.T @ full @ s
    return OperatorMatrix(0.5 * (v + v.T), spec, 2, sector)


def _one_body_full(h: np.ndarray) -> np.ndarray:
    eye = np.eye(h.shape[0])
    return np.kron(h, eye) + np.kron(eye, h)


def assemble_two_particle(spec: BasisSpec, params: ModelParams, check: bool = True,
                          potential=None) -> OperatorMatrix:
    """``h x 1 + 1 x h`` (+ ``V_eff`` when interacting) in the sector of ``params``."""
    h1 = assemble_one_particle(spec, params, potential=potential, check=check).entries
    s = symmetrizer(spec.m_size, params.sector)
    mat = s.T @ _one_body_full(h1) @ s
    if params.interacting:
        mat = mat + interaction_matrix(spec, params.l_perp, params.sector).entries
    return OperatorMatrix(0.5 * (mat + mat.T), spec, 2, params.sector)


def two_particle_trace(spec: BasisSpec, params: ModelParams, potential=None) -> complex:
    """Trace of the two-particle matrix from diagonal entries only."""
    m = spec.m_size
    if potential is None:
        potential = params.well
    x, wv, offset = _potential_grid(spec, potential)
    tab = basis_table(spec, x)
    h_diag = spec.omega * (2 * np.arange(m) + 1) / 4.0 + offset + (tab * tab) @ wv
    # sum over pairs of h_aa + h_bb: every index appears M + 1 (sym) / M - 1 times
    mult = m + 1 if params.sector == SYMMETRIC else m - 1
    total = mult * np.sum(h_diag)
    if params.interacting:
        wrel = relative_interaction_matrix(spec, params.l_perp, 2 * m - 1)
        total += kernels.pair_interaction_trace(kernels.cm_brackets(m), np.diag(wrel).copy(),
                                                params.sector == SYMMETRIC)
    return complex(total)
