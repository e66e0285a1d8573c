"""Shared independent oracles for the test suite.

Divided-difference Taylor oracles for the contravariant RHD fluxes along
polynomial state paths, in float64 (fast, noise floor ~1e-5 of the flux
scale at m=3, h=1e-3) and in 40-digit mpmath arithmetic (slow, certifies
1e-6).  These never call the jet code they are used to check.
"""

import numpy as np

from lwsrhd import eos as E

FACT = np.array([1.0, 1.0, 2.0, 6.0])


def contravariant_flux(eos, u, met):
    """Pointwise ftilde, gtilde of a conservative state (float path)."""
    pr = E.cons_to_prim(eos, E.ConsState(*u))
    D, m1, m2, Ee = u
    f = np.array([D * pr.v1, m1 * pr.v1 + pr.p, m2 * pr.v1, m1])
    g = np.array([D * pr.v2, m1 * pr.v2, m2 * pr.v2 + pr.p, m2])
    yeta, xeta, yxi, xxi = met
    return yeta * f - xeta * g, -yxi * f + xxi * g


def admissible_path(rng, margin=0.2):
    """Degree-3 conservative path, admissible for |t| <= few*1e-3."""
    rho = 10.0 ** rng.uniform(-2, 1)
    p = 10.0 ** rng.uniform(-2, 1)
    vmag = rng.uniform(0.0, 0.9)
    ang = rng.uniform(0, 2 * np.pi)
    eos0 = E.Eos("ideal", 5.0 / 3.0)
    u0 = np.array(E.prim_to_cons(
        eos0, E.PrimState(rho, vmag * np.cos(ang), vmag * np.sin(ang), p)))
    scale = np.array([u0[0], max(abs(u0[1]), 0.1 * u0[0]),
                      max(abs(u0[2]), 0.1 * u0[0]), u0[3]])
    return np.stack([u0] + [rng.uniform(-margin, margin, 4) * scale
                            for _ in range(3)])


def dd_derivative(fun, a, m, h):
    """Central divided difference for the m-th t-derivative at t=0."""
    def path(t):
        return a[0] + a[1] * t + a[2] * t ** 2 + a[3] * t ** 3

    if m == 1:
        return (fun(path(h)) - fun(path(-h))) / (2 * h)
    if m == 2:
        return (fun(path(h)) - 2 * fun(path(0.0)) + fun(path(-h))) / h ** 2
    if m == 3:
        return (fun(path(2 * h)) - 2 * fun(path(h))
                + 2 * fun(path(-h)) - fun(path(-2 * h))) / (2 * h ** 3)
    raise ValueError(m)


def dd_flux_taylor(eos, a, met, h=1e-3):
    """Richardson-extrapolated Taylor coefficients (m=1..3) of both
    contravariant fluxes along the path, float64."""
    out_f, out_g = [], []

    def fun_f(u):
        return contravariant_flux(eos, u, met)[0]

    def fun_g(u):
        return contravariant_flux(eos, u, met)[1]

    for m in (1, 2, 3):
        df = (4.0 * dd_derivative(fun_f, a, m, h / 2)
              - dd_derivative(fun_f, a, m, h)) / 3.0
        dg = (4.0 * dd_derivative(fun_g, a, m, h / 2)
              - dd_derivative(fun_g, a, m, h)) / 3.0
        out_f.append(df / FACT[m])
        out_g.append(dg / FACT[m])
    return np.array(out_f), np.array(out_g)


# ---------------------------------------------------------------------------
# extended-precision variant

def _mp_enthalpy(mp, eos, x):
    if eos.kind == "ideal":
        g = mp.mpf(eos.gamma)
        return 1 + g / (g - 1) * x
    if eos.kind == "tm":
        return mp.mpf(5) / 2 * x + mp.sqrt(mp.mpf(9) / 4 * x * x + 1)
    if eos.kind == "ip":
        return 2 * x + mp.sqrt(4 * x * x + 1)
    return 2 * (6 * x * x + 4 * x + 1) / (3 * x + 2)


def _mp_flux(mp, eos, u, met, p_start):
    D, m1, m2, Ee = u
    m2sq = m1 * m1 + m2 * m2

    def psi(p):
        S = Ee + p
        B = mp.sqrt(S * S - m2sq)
        x = p * S / (D * B)
        return D * S * _mp_enthalpy(mp, eos, x) / B - p - Ee

    p = mp.findroot(psi, mp.mpf(p_start))
    S = Ee + p
    v1, v2 = m1 / S, m2 / S
    f = [D * v1, m1 * v1 + p, m2 * v1, m1]
    g = [D * v2, m1 * v2, m2 * v2 + p, m2]
    ye, xe, yx, xx = met
    ft = [ye * fc - xe * gc for fc, gc in zip(f, g)]
    gt = [-yx * fc + xx * gc for fc, gc in zip(f, g)]
    return ft, gt


def dd_flux_taylor_mp(eos, a, met, h=1e-3, dps=40):
    """Same stencils/Richardson/h as dd_flux_taylor, in mpmath arithmetic."""
    import mpmath as mp
    mp.mp.dps = dps
    amp = [[mp.mpf(float(c)) for c in row] for row in a]
    met_mp = [mp.mpf(float(v)) for v in met]
    hh = mp.mpf(float(h))
    p0 = float(E.cons_to_prim(E.Eos("ideal", 5.0 / 3.0), tuple(a[0])).p)

    cache = {}

    def F(t):
        if t not in cache:
            u = [amp[0][i] + amp[1][i] * t + amp[2][i] * t * t
                 + amp[3][i] * t ** 3 for i in range(4)]
            cache[t] = _mp_flux(mp, eos, u, met_mp, p0)
        return cache[t]

    def deriv(which, m, hx):
        def g(t):
            return F(t)[which]
        if m == 1:
            return [(x - y) / (2 * hx) for x, y in zip(g(hx), g(-hx))]
        if m == 2:
            aa, bb, cc = g(hx), g(mp.mpf(0)), g(-hx)
            return [(x - 2 * y + z) / hx ** 2 for x, y, z in zip(aa, bb, cc)]
        aa, bb, cc, dd = g(2 * hx), g(hx), g(-hx), g(-2 * hx)
        return [(w - 2 * x + 2 * y - z) / (2 * hx ** 3)
                for w, x, y, z in zip(aa, bb, cc, dd)]

    out_f, out_g = [], []
    for m in (1, 2, 3):
        row_f = [(4 * x - y) / 3 for x, y in zip(deriv(0, m, hh / 2), deriv(0, m, hh))]
        row_g = [(4 * x - y) / 3 for x, y in zip(deriv(1, m, hh / 2), deriv(1, m, hh))]
        out_f.append([float(v) / FACT[m] for v in row_f])
        out_g.append([float(v) / FACT[m] for v in row_g])
    return np.array(out_f), np.array(out_g)
