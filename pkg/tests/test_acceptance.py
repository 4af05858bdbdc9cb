"""Acceptance suite: one PASS/FAIL line per criterion.

Lines are printed as they are decided and repeated in the terminal summary.
Criteria that the method does not attain at the stated desk-scale settings
are reported as FAIL and marked ``xfail`` with the measured numbers.
"""

import cmath
import math
import os
import subprocess
import sys
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE
from qdres import cli
from qdres import hamiltonian as H
from qdres.basis import BasisSpec, check_biorthonormality
from qdres.entanglement import (analyse_state, coefficient_matrix, linear_entropy_r,
                                renyi_entropy, schmidt_spectrum)
from qdres.hamiltonian import BarrierWell, HarmonicTrap, ModelParams
from qdres.model import find_threshold, scan_beta, solve_point, threshold_energy
from qdres.oracle import GridSpec, grid_linear_entropy, grid_one_particle, theta_trajectory
from qdres.solver import BOUND, alpha_trajectory, eig_general, optimize_omega

V0 = 5.0
L_PERP = (0.1, 0.2, 0.3)


def report(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    print(line)
    ACCEPTANCE.append(line)
    return ok


@pytest.fixture(scope="module")
def desk_scan():
    """The default desk-scale scan (M=20, 40 beta points) for each l_perp."""
    cfg = cli.build_config({})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return {lp: scan_beta(ModelParams(V0, 1.0, lp), cfg.betas(), cfg.m_size)
                for lp in L_PERP}


@pytest.fixture(scope="module")
def thresholds():
    return {lp: find_threshold(ModelParams(V0, 1.0, lp), 0.25, 1.0, 20) for lp in L_PERP}


# -- 1 ----------------------------------------------------------------------

def test_1_exact_limits():
    worst_e = 0.0
    for w in (0.3, 1.0, 2.5):
        for m in (1, 4, 12, 20):
            h = H.assemble_one_particle(BasisSpec(w, m), potential=HarmonicTrap(w)).entries
            e = np.sort(np.linalg.eigvals(h).real)
            worst_e = max(worst_e, float(np.max(np.abs(e - w * (np.arange(m) + 0.5)))))
    worst_o = 0.0
    for m in (1, 5, 10, 20, 30, 40):
        for mod in (0.3, 1.0, 3.0):
            for arg in (-0.6, -0.3, 0.0, 0.3, 0.6):
                worst_o = max(worst_o, check_biorthonormality(BasisSpec(cmath.rect(mod, arg), m)))
    ok = report("1 exact limits", worst_e < 1e-10 and worst_o < 1e-9,
                f"max HO level error {worst_e:.1e} (< 1e-10); max c-orthonormality "
                f"deviation {worst_o:.1e} (< 1e-9) for M<=40, |arg W|<=0.6")
    assert ok


# -- 2 ----------------------------------------------------------------------

def test_2_hermitian_limit(desk_scan):
    worst = dict(im_eps=0.0, norm=0.0, im_l=0.0, diff=0.0)
    n = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for lp in L_PERP:
            for beta in (0.8, 1.5, 3.0, 6.0):
                res = solve_point(ModelParams(V0, beta, lp), 20)
                assert res.ground.label == BOUND and res.omega.imag == 0
                worst["norm"] = max(worst["norm"], abs(res.ground.norm_ratio - 1))
    for rows in desk_scan.values():
        for r in rows:
            if r.label != BOUND:
                continue
            n += 1
            assert r.omega_used.imag == 0
            worst["im_eps"] = max(worst["im_eps"], abs(r.epsilon0.imag))
            worst["im_l"] = max(worst["im_l"], abs(r.linear_c.imag))
            worst["diff"] = max(worst["diff"], abs(r.linear_r - r.linear_c.real))
    ok = (worst["im_eps"] < 1e-8 and worst["norm"] < 1e-9 and worst["im_l"] < 1e-8
          and worst["diff"] < 1e-6)
    report("2 Hermitian limit", ok,
           f"{n} bound rows: max|Im eps| {worst['im_eps']:.1e}, max|norm_ratio-1| "
           f"{worst['norm']:.1e}, max|Im L| {worst['im_l']:.1e}, max|L~-Re L| {worst['diff']:.1e}")
    assert ok


# -- 3 ----------------------------------------------------------------------

def test_3a_oracle_one_particle_bound():
    worst = 0.0
    for beta in (0.5, 1.0, 2.0, 3.0):
        p = ModelParams(V0, beta, 0.2)
        _, levels = threshold_energy(p)
        deep = [e for e in levels if e < -0.5]          # well inside the grid box
        grid = np.sort(grid_one_particle(p, GridSpec(12.0, 2000), k=len(deep) + 1).real)
        worst = max(worst, max(abs(e - grid[i]) for i, e in enumerate(deep)))
    ok = report("3a oracle: one-particle bound energies", worst < 1e-6,
                f"max |basis - grid| {worst:.1e} (< 1e-6) over levels below -0.5")
    assert ok


def test_3b_oracle_one_particle_resonance():
    pot = BarrierWell()
    th, eps, k = theta_trajectory(pot, 30.0, 1500, np.linspace(0.2, 0.45, 6), 1.421 - 1e-4j)
    grid = eps[k]
    path = [cmath.rect(1.0, -a) for a in np.linspace(0.3, 0.8, 8)]
    _, basis = alpha_trajectory(None, 50, path, 1.421, particles=1, potential=pot).stagnation()
    d_re, d_im = abs(grid.real - basis.real), abs(grid.imag - basis.imag)
    ok = report("3b oracle: one-particle resonance", d_re < 1e-3 and d_im < 1e-3,
                f"grid {grid:.6f} vs basis {basis:.6f}: |dRe| {d_re:.1e}, |dIm| {d_im:.1e} (< 1e-3)")
    assert ok


def test_3c_oracle_two_particle_bound():
    details, ok = [], True
    # the grid needs h ~ 0.04 around the interaction cusp; see the ledger
    for beta, lp, grid in ((3.0, 0.3, GridSpec(7.0, 120)), (1.5, 0.2, GridSpec(5.0, 140))):
        p = ModelParams(V0, beta, lp)
        res = solve_point(p, 30)
        ge, gl = grid_linear_entropy(p, grid)
        de = abs(res.ground.epsilon.real - ge)
        dl = abs(res.entropy.linear_r - gl)
        ok &= de < 1e-4 and dl < 1e-3
        details.append(f"beta={beta}, l={lp}: |dE| {de:.1e} (< 1e-4), |dL~| {dl:.1e} (< 1e-3)")
    report("3c oracle: two-particle bound state", ok, "; ".join(details))
    assert ok


# -- 4 ----------------------------------------------------------------------

def test_4_balslev_combes():
    free = lambda x: 0 * x
    worst_phase = 0.0
    for theta in (0.2, 0.3):
        vals = grid_one_particle(free, GridSpec(20.0, 400, theta), k=20,
                                 sigma=2.0 * cmath.exp(-2j * theta), richardson=False)
        worst_phase = max(worst_phase, float(np.max(np.abs(np.angle(vals) + 2 * theta))))
    p = ModelParams(V0, 2.0, 0.2)
    bound = [grid_one_particle(p, GridSpec(12.0, 2000, th), k=3) for th in (0.2, 0.3)]
    move = float(np.max(np.abs(np.sort_complex(bound[0]) - np.sort_complex(bound[1]))))
    ok = report("4 Balslev-Combes", worst_phase < 0.05 and move < 1e-7,
                f"continuum phases within {worst_phase:.1e} rad of -2 theta (< 0.05); bound "
                f"eigenvalues move {move:.1e} between theta 0.2 and 0.3 (< 1e-7)")
    assert ok


# -- 5 ----------------------------------------------------------------------

def test_5_trace_stationarity():
    worst_w, worst_r = 0.0, 0.0
    for m in (1, 2, 5, 10, 20, 40):
        opt = optimize_omega(None, m, 1.0, particles=1, potential=HarmonicTrap(1.7))
        worst_w = max(worst_w, abs(opt.omega_opt - 1.7))
        worst_r = max(worst_r, opt.residual)
    qd = optimize_omega(ModelParams(V0, 3.0, 0.3), 12, 0.3)
    worst_r = max(worst_r, qd.residual)
    ok = report("5 trace stationarity", worst_w < 1e-7 and worst_r < 1e-8,
                f"HO target: max |W_opt - W_true| {worst_w:.1e} for M in 1..40; max residual "
                f"{worst_r:.1e} (< 1e-8), incl. the V0=5, beta=3, M=12 dot (W_opt={qd.omega_opt.real:.4f})")
    assert ok


# -- 6 ----------------------------------------------------------------------

def _sides(rows):
    bound = [r for r in rows if r.label == BOUND]
    res = [r for r in rows if r.label != BOUND]
    return bound, res


@pytest.mark.xfail(reason="L~ dips just above the threshold before rising with beta", strict=False)
def test_6a_bound_side_monotone(desk_scan):
    details, ok = [], True
    for lp, rows in desk_scan.items():
        bound, _ = _sides(rows)
        lr = np.array([r.linear_r for r in bound])
        drops = np.diff(lr) < -1e-12
        k = int(np.argmin(lr))
        ok &= not drops.any()
        details.append(f"l={lp}: {int(drops.sum())} decreasing steps, minimum "
                       f"{lr[k]:.4f} at beta={bound[k].beta:.3f} (lowest bound beta {bound[0].beta:.3f})")
    report("6a L~ nondecreasing in beta on the bound side", ok, "; ".join(details))
    assert ok


def test_6b_decreasing_in_l_perp(desk_scan):
    series = [np.array([r.linear_r for r in desk_scan[lp]]) for lp in L_PERP]
    margin = min(float(np.min(series[i] - series[i + 1])) for i in range(len(series) - 1))
    ok = report("6b L~ decreasing in l_perp at fixed beta", margin > 0,
                f"smallest gap L~(l) - L~(next l) over 40 betas: {margin:.2e} (> 0)")
    assert ok


@pytest.mark.xfail(reason="resonant-side entropies rise monotonically as beta shrinks",
                   strict=False)
def test_6c_resonant_side_minimum(desk_scan):
    details, ok = [], True
    for lp, rows in desk_scan.items():
        _, res = _sides(rows)          # ascending beta
        lr = np.array([r.linear_r for r in res])
        rl = np.array([r.linear_c.real for r in res])
        k = int(np.argmin(lr))
        interior = 0 < k < len(lr) - 1
        re_decreasing = bool(np.all(np.diff(rl) > 0))   # Re L falls as beta shrinks
        ok &= interior and re_decreasing
        details.append(f"l={lp}: {len(res)} resonant rows, L~ minimum at beta={res[k].beta:.3f} "
                       f"({'interior' if interior else 'edge'}), Re L "
                       f"{'decreases' if re_decreasing else 'increases'} as beta shrinks "
                       f"({rl[-1]:.4f} -> {rl[0]:.4f})")
    report("6c resonant-side L~ minimum and falling Re L", ok, "; ".join(details))
    assert ok


def test_6d_continuity_at_threshold(thresholds):
    details, ok = [], True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for lp, bt in thresholds.items():
            lo, hi = scan_beta(ModelParams(V0, 1.0, lp), [0.98 * bt, 1.02 * bt], 20)
            d_r = abs(lo.linear_r - hi.linear_r)
            d_c = abs(lo.linear_c.real - hi.linear_c.real)
            ok &= d_r < 0.02 and d_c < 0.02
            details.append(f"l={lp}: beta_th={bt:.4f}, |dL~| {d_r:.1e}, |dRe L| {d_c:.1e}")
    report("6d entropies continuous across beta_th (< 0.02 at 2%)", ok, "; ".join(details))
    assert ok


# -- 7 ----------------------------------------------------------------------

def test_7_identities(desk_scan):
    states = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for beta in (0.3, 0.4, 1.0, 3.0):
            res = solve_point(ModelParams(V0, beta, 0.2), 16)
            states.append((res.ground, BasisSpec(res.omega, 16)))
    rng = np.random.default_rng(11)
    worst_s2, worst_tr = 0.0, 0.0
    spectra = []
    for pair, spec in states:
        cm = coefficient_matrix(pair, spec)
        spectra.append((schmidt_spectrum(cm), cm))
    for _ in range(20):
        v = rng.normal(size=H.symmetrizer(8).shape[1]) + 0.3j * rng.normal(size=36)
        cm = coefficient_matrix(v / np.sqrt(v @ v), 8)
        spectra.append((schmidt_spectrum(cm), cm))
    for s, cm in spectra:
        worst_s2 = max(worst_s2, abs(renyi_entropy(s, 2) + math.log(1 - linear_entropy_r(s))))
        worst_tr = max(worst_tr, abs(np.sum(s.mu) - np.trace(cm.c @ cm.c.T)))
    prod = []
    for a in range(5):
        v = np.zeros(H.symmetrizer(5).shape[1])
        v[H.pair_states(5).index((a, a))] = 1.0
        rep = schmidt_spectrum(coefficient_matrix(v, 5))
        prod += [linear_entropy_r(rep), renyi_entropy(rep, 2), abs(1 - np.sum(rep.lambda_r ** 2))]
    exact_zero = all(x == 0.0 for x in prod)
    ok = report("7 identities", worst_s2 < 1e-12 and worst_tr < 1e-11 and exact_zero,
                f"max|S2 + ln(1-L~)| {worst_s2:.1e} (< 1e-12); max|sum mu - Tr CC^T| "
                f"{worst_tr:.1e} (< 1e-11); product states give exact zeros: {exact_zero}")
    assert ok


# -- 8 ----------------------------------------------------------------------

def _cli_scan(tmp_path, name, workers):
    env = dict(os.environ, QDRES_WORKERS=str(workers))
    args = [sys.executable, "-m", "qdres.cli", "scan", "l_perp=0.1,0.2,0.3", "beta_min=0.3",
            "beta_max=2", "beta_points=8", "m_size=20", f"output={tmp_path}/{name}"]
    proc = subprocess.run(args, env=env, capture_output=True)
    assert proc.returncode == 0, proc.stderr.decode()
    return (tmp_path / f"{name}.tsv").read_bytes(), (tmp_path / f"{name}.json").read_bytes(), proc.stdout


def test_8_determinism(tmp_path):
    runs = [_cli_scan(tmp_path, "out", w) for w in (1, 1, 3)]
    same = all(r == runs[0] for r in runs[1:])
    ok = report("8 determinism", same,
                f"3-series x 8-beta scan: TSV, JSON and stdout byte-identical across two "
                f"single-worker runs and a 3-worker run: {same}")
    assert ok
