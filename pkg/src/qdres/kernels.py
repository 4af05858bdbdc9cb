"""Hot numeric kernels with a numba path and a pure-NumPy path.

Each public kernel ``foo`` dispatches to ``_foo_nb`` (``@njit`` loops) or
``_foo_np`` (vectorised NumPy) depending on :data:`qdres._accel.HAVE_NUMBA`.
Both paths are importable directly so tests and the benchmark can compare
them regardless of the environment flag.
"""

import math

import numpy as np

from ._accel import HAVE_NUMBA, njit

SQRT_PI = math.sqrt(math.pi)
TWO_OVER_SQRT_PI = 2.0 / SQRT_PI

# below this modulus erfcx uses its Taylor series, above it the continued fraction
ERFCX_SERIES_RADIUS = 2.0
ERFCX_SERIES_TERMS = 90


# --------------------------------------------------------------------------
# harmonic-oscillator functions with complex frequency
# --------------------------------------------------------------------------

@njit
def _ho_table_nb(omega, x, m):
    n = x.shape[0]
    out = np.empty((m, n), dtype=np.complex128)
    s = np.sqrt(omega)
    pref = np.sqrt(s) / SQRT_PI ** 0.5
    for i in range(n):
        z = s * x[i]
        out[0, i] = pref * np.exp(-0.5 * omega * x[i] * x[i])
        if m > 1:
            out[1, i] = math.sqrt(2.0) * z * out[0, i]
        for j in range(1, m - 1):
            out[j + 1, i] = (math.sqrt(2.0 / (j + 1)) * z * out[j, i]
                             - math.sqrt(j / (j + 1.0)) * out[j - 1, i])
    return out


def _ho_table_np(omega, x, m):
    x = np.asarray(x, dtype=np.float64)
    omega = complex(omega)
    out = np.empty((m, x.size), dtype=np.complex128)
    s = np.sqrt(omega)
    z = s * x
    out[0] = np.sqrt(s) / SQRT_PI ** 0.5 * np.exp(-0.5 * omega * x * x)
    if m > 1:
        out[1] = math.sqrt(2.0) * z * out[0]
    for j in range(1, m - 1):
        out[j + 1] = (math.sqrt(2.0 / (j + 1)) * z * out[j]
                      - math.sqrt(j / (j + 1.0)) * out[j - 1])
    return out


def ho_table(omega, x, m):
    """Rows ``j = 0..m-1`` of the normalised oscillator functions at ``x``.

    Uses the normalised three-term recurrence, which stays finite where the
    bare Hermite polynomials would overflow.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if HAVE_NUMBA:
        return _ho_table_nb(complex(omega), x, int(m))
    return _ho_table_np(omega, x, int(m))


# --------------------------------------------------------------------------
# scaled complementary error function
# --------------------------------------------------------------------------

@njit
def _erfcx_scalar_nb(z):
    if abs(z) < ERFCX_SERIES_RADIUS:
        z2 = z * z
        even = 1.0 + 0.0j
        odd = -TWO_OVER_SQRT_PI * z
        total = even + odd
        for k in range(1, ERFCX_SERIES_TERMS):
            even = even * z2 / k
            odd = odd * 2.0 * z2 / (2 * k + 1)
            total += even + odd
        return total
    depth = _cf_depth(z)
    t = 0.0 + 0.0j
    for k in range(depth, 0, -1):
        t = (0.5 * k) / (z + t)
    return 1.0 / (SQRT_PI * (z + t))


@njit
def _cf_depth(z):
    # the Laplace fraction converges slower as z approaches the imaginary axis
    r = abs(z)
    c = z.real / r
    base = 60.0 + 200.0 / (r * r)
    return int(base / max(c, 0.05) ** 2)


@njit
def _erfcx_nb(z):
    out = np.empty(z.shape[0], dtype=np.complex128)
    for i in range(z.shape[0]):
        out[i] = _erfcx_scalar_nb(z[i])
    return out


def _erfcx_np(z):
    z = np.asarray(z, dtype=np.complex128)
    out = np.empty_like(z)
    small = np.abs(z) < ERFCX_SERIES_RADIUS
    if small.any():
        zs = z[small]
        z2 = zs * zs
        even = np.ones_like(zs)
        odd = -TWO_OVER_SQRT_PI * zs
        total = even + odd
        for k in range(1, ERFCX_SERIES_TERMS):
            even = even * z2 / k
            odd = odd * 2.0 * z2 / (2 * k + 1)
            total = total + even + odd
        out[small] = total
    big = ~small
    if big.any():
        zb = z[big]
        r = np.abs(zb)
        c = np.maximum(zb.real / r, 0.05)
        depth = int(np.max((60.0 + 200.0 / r ** 2) / c ** 2))
        t = np.zeros_like(zb)
        for k in range(depth, 0, -1):
            t = (0.5 * k) / (zb + t)
        out[big] = 1.0 / (SQRT_PI * (zb + t))
    return out


def erfcx_array(z):
    """Vectorised ``exp(z**2) * erfc(z)`` for ``Re z >= 0`` (no domain check)."""
    z = np.ascontiguousarray(np.atleast_1d(z), dtype=np.complex128)
    shape = z.shape
    flat = z.ravel()
    if HAVE_NUMBA:
        return _erfcx_nb(flat).reshape(shape)
    return _erfcx_np(flat).reshape(shape)


# --------------------------------------------------------------------------
# Gauss-Hermite nodes by Newton refinement
# --------------------------------------------------------------------------

def hermite_root_guesses(n):
    """Asymptotic (Tricomi / Airy-type) guesses for the positive roots of H_n,
    ascending.  Zero is excluded for odd ``n``."""
    if n % 2 == 1:
        m = (n - 1) // 2
        a = 0.5
    else:
        m = n // 2
        a = -0.5
    if m == 0:
        return np.zeros(0)
    k = np.arange(1, m + 1, dtype=np.float64)
    nu = 4.0 * m + 2.0 * a + 2.0
    # interior: solve T - sin T = rhs by a few Newton steps
    t = np.full(m, 0.5 * math.pi)
    rhs = (4.0 * m - 4.0 * k + 3.0) / nu * math.pi
    for _ in range(10):
        t = t - (t - np.sin(t) - rhs) / np.maximum(1.0 - np.cos(t), 1e-15)
    tnk = np.cos(0.5 * t) ** 2
    x_sin = np.sqrt(np.abs(nu * tnk - (5.0 / (4.0 * (1.0 - tnk) ** 2)
                                        - 1.0 / (1.0 - tnk) - 1.0 + 3.0 * a * a) / (3.0 * nu)))
    # edge: Airy-zero expansion
    s = 3.0 / 8.0 * math.pi * (4.0 * k - 1.0)
    ai = -s ** (2.0 / 3.0) * (1.0 + 5.0 / 48.0 * s ** -2 - 5.0 / 36.0 * s ** -4
                              + 77125.0 / 82944.0 * s ** -6
                              - 108056875.0 / 6967296.0 * s ** -8)
    x_airy = np.sqrt(np.abs(nu + 2.0 ** (2.0 / 3.0) * ai * nu ** (1.0 / 3.0)
                            + 0.2 * 2.0 ** (4.0 / 3.0) * ai ** 2 * nu ** (-1.0 / 3.0)
                            + (11.0 / 35.0 - a * a - 12.0 / 175.0 * ai ** 3) / nu
                            + (16.0 / 1575.0 * ai + 92.0 / 7875.0 * ai ** 4)
                            * 2.0 ** (2.0 / 3.0) * nu ** (-5.0 / 3.0)))[::-1]
    # the interior formula degrades towards the edge
    cut = int(math.floor(0.8 * m))
    return np.concatenate([x_sin[:cut], x_airy[cut:]])


@njit
def _refine_hermite_nb(z, n, tol, maxit):
    """Newton on psi_n; returns (roots, scaled weights w*exp(x^2), ok)."""
    pim4 = 1.0 / SQRT_PI ** 0.5
    ok = True
    ws = np.empty(z.shape[0])
    z = z.copy()
    for i in range(z.shape[0]):
        x = z[i]
        converged = False
        for _ in range(maxit):
            p1 = pim4 * math.exp(-0.5 * x * x)
            p2 = 0.0
            for j in range(1, n + 1):
                p3 = p2
                p2 = p1
                p1 = x * math.sqrt(2.0 / j) * p2 - math.sqrt((j - 1.0) / j) * p3
            # the Gaussian factor cancels in psi_n / psi_n'
            dx = p1 / (math.sqrt(2.0 * n) * p2)
            x = x - dx
            if abs(dx) <= tol * max(1.0, abs(x)):
                converged = True
                break
        if not converged:
            ok = False
        p1 = pim4 * math.exp(-0.5 * x * x)
        p2 = 0.0
        for j in range(1, n):
            p3 = p2
            p2 = p1
            p1 = x * math.sqrt(2.0 / j) * p2 - math.sqrt((j - 1.0) / j) * p3
        z[i] = x
        ws[i] = 1.0 / (n * p1 * p1)
    return z, ws, ok


def _psi_last_np(x, n):
    p1 = np.exp(-0.5 * x * x) / SQRT_PI ** 0.5
    p2 = np.zeros_like(x)
    for j in range(1, n + 1):
        p3 = p2
        p2 = p1
        p1 = x * math.sqrt(2.0 / j) * p2 - math.sqrt((j - 1.0) / j) * p3
    return p1, p2


def _refine_hermite_np(z, n, tol, maxit):
    z = np.array(z, dtype=np.float64)
    ok = False
    for _ in range(maxit):
        p1, p2 = _psi_last_np(z, n)
        dz = p1 / (math.sqrt(2.0 * n) * p2)
        z = z - dz
        if np.all(np.abs(dz) <= tol * np.maximum(1.0, np.abs(z))):
            ok = True
            break
    _, pnm1 = _psi_last_np(z, n)
    return z, 1.0 / (n * pnm1 * pnm1), ok


def gauss_hermite_raw(n, tol=1e-14, maxit=100):
    """Nodes (ascending), scaled weights ``w * exp(x**2)`` and a convergence flag."""
    n = int(n)
    guess = hermite_root_guesses(n)
    if guess.size:
        if HAVE_NUMBA:
            pos, wpos, ok = _refine_hermite_nb(guess, n, float(tol), int(maxit))
        else:
            pos, wpos, ok = _refine_hermite_np(guess, n, float(tol), int(maxit))
    else:
        pos, wpos, ok = guess, guess, True
    if n % 2 == 1:
        p0, _ = _psi_last_np(np.zeros(1), n - 1)
        w0 = 1.0 / (n * p0 * p0)
        x = np.concatenate([-pos[::-1], [0.0], pos])
        ws = np.concatenate([wpos[::-1], w0, wpos])
    else:
        x = np.concatenate([-pos[::-1], pos])
        ws = np.concatenate([wpos[::-1], wpos])
    return x, ws, bool(ok)


# --------------------------------------------------------------------------
# centre-of-mass / relative brackets for two equal-frequency oscillators
# --------------------------------------------------------------------------

@njit
def _cm_brackets_nb(m):
    """B[a, b, N, n] = <N_R n_r | a_1 b_2> for the 45-degree rotation.

    Only entries with N + n = a + b are non-zero; N, n < 2m - 1.
    """
    k = 2 * m - 1
    lf = np.zeros(2 * k + 2)
    for i in range(1, 2 * k + 2):
        lf[i] = lf[i - 1] + math.log(i)
    out = np.zeros((m, m, k, k))
    for a in range(m):
        for b in range(m):
            tot = a + b
            for n in range(tot + 1):
                big = tot - n
                s = 0.0
                for p in range(max(0, n - b), min(a, n) + 1):
                    q = n - p
                    c = math.exp(lf[a] - lf[p] - lf[a - p] + lf[b] - lf[q] - lf[b - q])
                    if q % 2 == 1:
                        s -= c
                    else:
                        s += c
                pref = math.exp(0.5 * (lf[big] + lf[n] - lf[a] - lf[b])
                                - 0.5 * tot * math.log(2.0))
                out[a, b, big, n] = pref * s
    return out


def _cm_brackets_np(m):
    from math import comb, factorial

    k = 2 * m - 1
    out = np.zeros((m, m, k, k))
    for a in range(m):
        for b in range(m):
            tot = a + b
            for n in range(tot + 1):
                big = tot - n
                s = sum((-1) ** (n - p) * comb(a, p) * comb(b, n - p)
                        for p in range(max(0, n - b), min(a, n) + 1))
                pref = math.sqrt(factorial(big) * factorial(n)
                                 / (factorial(a) * factorial(b))) / 2.0 ** (tot / 2)
                out[a, b, big, n] = pref * s
    return out


def cm_brackets(m):
    if HAVE_NUMBA:
        return _cm_brackets_nb(int(m))
    return _cm_brackets_np(int(m))


@njit
def _pair_interaction_nb(b, w):
    m = b.shape[0]
    out = np.zeros((m * m, m * m), dtype=np.complex128)
    for a1 in range(m):
        for a2 in range(m):
            p = a1 * m + a2
            s1 = a1 + a2
            for c1 in range(m):
                for c2 in range(m):
                    q = c1 * m + c2
                    if q < p:
                        continue
                    s2 = c1 + c2
                    if (s1 + s2) % 2 == 1:
                        continue
                    acc = 0.0 + 0.0j
                    for big in range(min(s1, s2) + 1):
                        acc += b[a1, a2, big, s1 - big] * b[c1, c2, big, s2 - big] * w[s1 - big, s2 - big]
                    out[p, q] = acc
                    out[q, p] = acc
    return out


def _pair_interaction_np(b, w):
    m = b.shape[0]
    k = b.shape[2]
    tot = (np.arange(m)[:, None] + np.arange(m)[None, :]).ravel()
    a1 = np.repeat(np.arange(m), m)
    a2 = np.tile(np.arange(m), m)
    out = np.zeros((m * m, m * m), dtype=np.complex128)
    for big in range(k):
        rel = tot - big
        ok = rel >= 0
        coef = np.where(ok, b[a1, a2, big, np.clip(rel, 0, k - 1)], 0.0)
        idx = np.clip(rel, 0, k - 1)
        out += (coef[:, None] * coef[None, :]) * w[idx[:, None], idx[None, :]]
    return out


def pair_interaction(b, w):
    """Product-basis matrix ``V[(a1 a2), (c1 c2)] = sum_N B B' W`` from the
    centre-of-mass brackets ``b`` and the relative-coordinate matrix ``w``."""
    w = np.ascontiguousarray(w, dtype=np.complex128)
    if HAVE_NUMBA:
        return _pair_interaction_nb(b, w)
    return _pair_interaction_np(b, w)


def pair_interaction_trace(b, wdiag, symmetric=True):
    """Trace of the pair-sector interaction using only ``diag(W)``.

    With bracket symmetry ``B[b, a, N, n] = (-1)^n B[a, b, N, n]`` the
    sector-adapted diagonal is ``sum_N B^2 W_nn (1 +/- (-1)^n)`` for a != b.
    """
    m = b.shape[0]
    k = b.shape[2]
    n = np.arange(k)
    parity = np.where(n % 2 == 0, 1.0, -1.0)
    # d[a, b, N, n] = b^2 * w_nn
    bsq = b * b
    direct = np.einsum("abNn,n->ab", bsq, wdiag)
    exch = np.einsum("abNn,n->ab", bsq, wdiag * parity)
    total = 0.0 + 0.0j
    sign = 1.0 if symmetric else -1.0
    for a1 in range(m):
        if symmetric:
            total += direct[a1, a1]
        for a2 in range(a1 + 1, m):
            total += direct[a1, a2] + sign * exch[a1, a2]
    return total
