import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qdres import hamiltonian as H
from qdres.basis import BasisSpec
from qdres.hamiltonian import (BarrierWell, GaussianWell, HarmonicTrap, ModelParams,
                               OperatorMatrix)
from qdres.solver import eig_general

omegas = st.builds(lambda r, a: cmath.rect(r, a), st.floats(0.3, 4.0), st.floats(-0.6, 0.0))


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(v0=-1, beta=1, l_perp=0.1)
    with pytest.raises(ValueError):
        ModelParams(v0=1, beta=math.nan, l_perp=0.1)
    with pytest.raises(ValueError):
        ModelParams(v0=1, beta=1, l_perp=0.1, sector="mixed")
    p = ModelParams(v0=2, beta=4, l_perp=0.1)
    assert p.quasi1d_ratio == pytest.approx(0.1 / math.sqrt(2))
    assert p.replace(beta=2).beta == 2


def test_potentials():
    assert GaussianWell(5, 2)(0.0) == -5
    assert HarmonicTrap(2.0)(1.0) == 2.0
    bw = BarrierWell(0.8, 0.1)
    x = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(bw(x), bw.localized(x) + bw.offset)


@given(st.floats(0.3, 4.0), st.integers(1, 12))
def test_ho_spectrum_in_own_basis(w, m):
    spec = BasisSpec(w, m)
    h = H.assemble_one_particle(spec, potential=HarmonicTrap(w))
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(h.entries).real),
                               w * (np.arange(m) + 0.5), atol=1e-10)


@given(omegas, st.integers(2, 14))
def test_matrices_complex_symmetric(om, m):
    spec = BasisSpec(om, m)
    p = ModelParams(5.0, 2.0, 0.2)
    assert H.assemble_one_particle(spec, p, check=False).asymmetry() < 1e-13
    assert H.assemble_two_particle(spec, p, check=False).asymmetry() < 1e-12


@given(omegas, st.integers(1, 10))
def test_traces_from_diagonals(om, m):
    spec = BasisSpec(om, m)
    for p in (ModelParams(5.0, 2.0, 0.2), ModelParams(5.0, 2.0, 0.2, sector="antisymmetric")):
        full = H.assemble_two_particle(spec, p, check=False).trace()
        assert abs(H.two_particle_trace(spec, p) - full) < 1e-9 * max(1, abs(full))
    one = H.assemble_one_particle(spec, potential=BarrierWell(), check=False).trace()
    assert abs(H.one_particle_trace(spec, BarrierWell()) - one) < 1e-10 * max(1, abs(one))


def test_noninteracting_two_particle_spectrum_is_pairwise_sum():
    spec = BasisSpec(1.7, 8)
    p = ModelParams(5.0, 3.0, 0.3, interacting=False)
    e1 = np.sort(np.linalg.eigvalsh(H.assemble_one_particle(spec, p).entries.real))
    pairs = np.sort([e1[a] + e1[b] for a in range(8) for b in range(a, 8)])
    e2 = np.sort(np.linalg.eigvalsh(H.assemble_two_particle(spec, p).entries.real))
    np.testing.assert_allclose(e2, pairs, atol=1e-10)


def test_v_eff_limits():
    l = 0.2
    # contact value sqrt(pi / 2) / l and Coulomb tail 1 / r
    assert H.v_eff(0.0, l) == pytest.approx(math.sqrt(math.pi / 2) / l)
    assert H.v_eff(50.0, l) == pytest.approx(1 / 50.0, rel=1e-4)
    with pytest.raises(ValueError):
        H.v_eff(-1.0, l)
    with pytest.raises(ValueError):
        H.v_eff(1.0, 0.0)


def test_relative_interaction_against_direct_quadrature():
    from scipy import integrate

    spec = BasisSpec(1.3, 4)
    l = 0.3
    w = H.relative_interaction_matrix(spec, l, 4)
    from qdres.basis import eval_right

    for n, k in [(0, 0), (0, 2), (1, 1), (3, 3)]:
        f = lambda r: (eval_right(n, spec, r) * eval_right(k, spec, r)).real * H.v_eff(
            math.sqrt(2) * abs(r), l)
        ref = 2 * integrate.quad(f, 0, 12, limit=200, epsabs=1e-13)[0]
        assert w[n, k].real == pytest.approx(ref, abs=1e-10)


def test_interaction_full_and_sector_consistency():
    spec = BasisSpec(1.1, 5)
    full = H.interaction_matrix(spec, 0.2, None).entries
    for sector in ("symmetric", "antisymmetric"):
        s = H.symmetrizer(5, sector)
        np.testing.assert_allclose(H.interaction_matrix(spec, 0.2, sector).entries,
                                   s.T @ full @ s, atol=1e-12)
    # exchange symmetry of the product-basis matrix
    perm = np.arange(25).reshape(5, 5).T.ravel()
    np.testing.assert_allclose(full[np.ix_(perm, perm)], full, atol=1e-12)


def test_symmetrizer_is_isometry():
    for sector, d in (("symmetric", 15), ("antisymmetric", 10)):
        s = H.symmetrizer(5, sector)
        assert s.shape == (25, d)
        np.testing.assert_allclose(s.T @ s, np.eye(d), atol=1e-14)


def test_operator_serialisation_roundtrip(tmp_path):
    spec = BasisSpec(cmath.rect(1.2, -0.3), 4)
    op = H.assemble_one_particle(spec, ModelParams(5.0, 2.0, 0.2))
    back = OperatorMatrix.from_text(op.to_text())
    np.testing.assert_array_equal(back.entries, op.entries)
    op.save_npz(tmp_path / "op.npz")
    back = OperatorMatrix.load_npz(tmp_path / "op.npz")
    np.testing.assert_array_equal(back.entries, op.entries)
    assert back.basis == op.basis
    with pytest.raises(ValueError):
        op + H.assemble_two_particle(spec, ModelParams(5.0, 2.0, 0.2))


def test_narrow_well_matrix_accurate_at_small_frequency():
    # potential much narrower than the basis: entries must still converge
    spec = BasisSpec(0.2, 20)
    v = H.potential_matrix(spec, GaussianWell(5.0, 0.3), check=False).entries
    v2 = H._potential_entries(spec, GaussianWell(5.0, 0.3), 400)
    assert np.max(np.abs(v - v2)) < 1e-10


def test_barrier_well_resonance_is_complex_scaling_invariant():
    pot = BarrierWell()
    ev = []
    for om in (cmath.rect(1.0, -0.5), cmath.rect(1.3, -0.7)):
        pairs = eig_general(H.assemble_one_particle(BasisSpec(om, 50), potential=pot, check=False))
        ev.append(min((p.epsilon for p in pairs), key=lambda z: abs(z - 1.421)))
    assert abs(ev[0] - ev[1]) < 1e-5
    assert ev[0].imag < 0


def _closed_form_gaussian_entry(omega, j, k, beta):
    """``int psi_j psi_k exp(-x^2/beta^2) dx`` from Hermite coefficients
    and Gaussian moments ``int x^2n exp(-a x^2) = Gamma(n + 1/2) / a^(n + 1/2)``."""
    from numpy.polynomial import hermite, polynomial

    s = cmath.sqrt(omega)
    cj = hermite.herm2poly([0] * j + [1]) * s ** np.arange(j + 1)
    ck = hermite.herm2poly([0] * k + [1]) * s ** np.arange(k + 1)
    prod = polynomial.polymul(cj, ck)
    a = omega + beta ** -2
    norm = s / math.sqrt(math.pi) / math.sqrt(2 ** j * math.factorial(j) * 2 ** k * math.factorial(k))
    total = 0j
    for n2, c in enumerate(prod):
        if n2 % 2 == 0:
            total += c * math.gamma(n2 / 2 + 0.5) / a ** (n2 / 2 + 0.5)
    return norm * total


def test_gaussian_entry_matches_closed_form():
    om = 0.9 * cmath.exp(0.25j)
    spec = BasisSpec(om, 6)
    v = H.gaussian_well_matrix(spec, 4.0, 1.5).entries
    ref = -4.0 * _closed_form_gaussian_entry(om, 2, 4, 1.5)
    assert abs(v[2, 4] - ref) < 1e-9
    for j, k in [(0, 0), (1, 3), (5, 5)]:
        assert abs(v[j, k] + 4.0 * _closed_form_gaussian_entry(om, j, k, 1.5)) < 1e-9


@pytest.mark.xfail(reason="at the fixed frequency W=1 the M=12 basis is 9e-4 above the "
                          "converged energy; the 1e-4 agreement needs the variational W "
                          "and M >= 20", strict=True)
def test_fixed_frequency_small_basis_against_grid():
    from qdres.oracle import GridSpec, grid_linear_entropy

    p = ModelParams(5.0, 3.0, 0.3)
    e_basis = eig_general(H.assemble_two_particle(BasisSpec(1.0, 12), p))[0].epsilon.real
    e_grid, _ = grid_linear_entropy(p, GridSpec(7.0, 120))
    assert abs(e_basis - e_grid) < 1e-4
