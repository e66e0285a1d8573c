"""Compiled (numba) twins of the hot per-node math.

Everything here mirrors the reference implementations in ``eos``/``jets``/
``jetflux`` with explicit loops; the test suite pins the two paths against
each other.  Layouts: nodal state u[e, c, i, j]; metric met[e, i, j, 0:4] =
(yeta, xeta, yxi, xxi); jets carry the coefficient axis last.
"""

import math

import numpy as np
from numba import njit, prange

F8 = np.float64


# ---------------------------------------------------------------------------
# jet helpers on 1-D coefficient arrays (no aliasing between args)

@njit(inline="always", cache=True)
def _jmul(a, b, out, L):
    for k in range(L):
        s = 0.0
        for i in range(k + 1):
            s += a[i] * b[k - i]
        out[k] = s


@njit(inline="always", cache=True)
def _jdiv(a, b, out, L):
    out[0] = a[0] / b[0]
    for k in range(1, L):
        s = a[k]
        for i in range(1, k + 1):
            s -= b[i] * out[k - i]
        out[k] = s / b[0]


@njit(inline="always", cache=True)
def _jsqrt(a, out, L):
    out[0] = math.sqrt(a[0])
    for k in range(1, L):
        s = a[k]
        for i in range(1, k):
            s -= out[i] * out[k - i]
        out[k] = s / (2.0 * out[0])


# ---------------------------------------------------------------------------
# scalar EOS pieces

@njit(inline="always", cache=True)
def _h_scalar(eosid, gamma, x):
    """H(x), H'(x) with x = p/rho."""
    if eosid == 0:
        gp = gamma / (gamma - 1.0)
        return 1.0 + gp * x, gp
    elif eosid == 1:
        r = math.sqrt(2.25 * x * x + 1.0)
        return 2.5 * x + r, 2.5 + 2.25 * x / r
    elif eosid == 2:
        r = math.sqrt(4.0 * x * x + 1.0)
        return 2.0 * x + r, 2.0 + 4.0 * x / r
    else:
        den = 3.0 * x + 2.0
        return (2.0 * (6.0 * x * x + 4.0 * x + 1.0) / den,
                2.0 * (18.0 * x * x + 24.0 * x + 5.0) / (den * den))


@njit(inline="always", cache=True)
def _psi_scalar(eosid, gamma, p, D, m2sq, E):
    S = E + p
    A = S * S - m2sq
    if A <= 0.0:
        return 1e300, 1e300
    B = math.sqrt(A)
    x = p * S / (D * B)
    h, hp = _h_scalar(eosid, gamma, x)
    psi = D * S * h / B - p - E
    dpsi = (-D * h * m2sq / (B * A)
            + S * hp * ((S + p) * A - p * S * S) / (A * A) - 1.0)
    return psi, dpsi


@njit(inline="always", cache=True)
def _recover_scalar(eosid, gamma, D, m1, m2, E):
    """Safeguarded Newton for the pressure; returns (rho, v1, v2, p, ok)."""
    m2sq = m1 * m1 + m2 * m2
    if not (D > 0.0 and E - math.sqrt(D * D + m2sq) > 0.0):
        return 0.0, 0.0, 0.0, 0.0, False
    mabs = math.sqrt(m2sq)
    p_lo = max(1e-15, mabs - E + 1e-15 * E)
    tol = 1e-12 * max(1.0, E)
    p_hi = max((E - math.sqrt(D * D + m2sq)) / 3.0, p_lo * 2.0, 1e-10)
    f_hi, _ = _psi_scalar(eosid, gamma, p_hi, D, m2sq, E)
    grow = 0
    while f_hi < 0.0 and grow < 200:
        p_hi *= 2.0
        f_hi, _ = _psi_scalar(eosid, gamma, p_hi, D, m2sq, E)
        grow += 1
    if f_hi < 0.0:
        return 0.0, 0.0, 0.0, 0.0, False

    p = 0.5 * (p_lo + p_hi)
    f, df = _psi_scalar(eosid, gamma, p, D, m2sq, E)
    p_best, f_best, df_best = p, f, df
    ok = False
    for _ in range(100):
        if abs(f) <= tol:
            ok = True
            break
        if f > 0.0:
            p_hi = p
        else:
            p_lo = p
        p_new = p - f / df if df > 0.0 else p_lo - 1.0
        if not (p_lo < p_new < p_hi):
            p_new = 0.5 * (p_lo + p_hi)
        p = p_new
        f, df = _psi_scalar(eosid, gamma, p, D, m2sq, E)
        if abs(f) < abs(f_best):
            p_best, f_best, df_best = p, f, df
    if not ok:
        # |m| -> E drives psi's roundoff noise above tol through the
        # S^2 - |m|^2 cancellation; the bracket has localized the root,
        # so accept the best iterate against the scaled noise floor
        p, f, df = p_best, f_best, df_best
        S = E + p
        A = S * S - m2sq
        if A <= 0.0:
            return 0.0, 0.0, 0.0, 0.0, False
        noise = 64.0 * 2.3e-16 * max(1.0, E) * (S * S / A)
        if abs(f) > max(tol, noise):
            return 0.0, 0.0, 0.0, 0.0, False
    for _ in range(2):  # plain Newton polish
        if f == 0.0 or df <= 0.0:
            break
        p_try = p - f / df
        if p_try <= 0.0:
            break
        f_try, df_try = _psi_scalar(eosid, gamma, p_try, D, m2sq, E)
        if abs(f_try) >= abs(f):
            break
        p, f, df = p_try, f_try, df_try
    S = E + p
    v1 = m1 / S
    v2 = m2 / S
    vv = v1 * v1 + v2 * v2
    if vv >= 1.0 or p <= 0.0:
        return 0.0, 0.0, 0.0, 0.0, False
    rho = D * math.sqrt(1.0 - vv)
    return rho, v1, v2, p, True


@njit(inline="always", cache=True)
def _recover_warm(eosid, gamma, D, m1, m2, E, p_init):
    """Newton from a warm start; falls back to the bracketed solver."""
    m2sq = m1 * m1 + m2 * m2
    if not (D > 0.0 and E - math.sqrt(D * D + m2sq) > 0.0):
        return 0.0, 0.0, 0.0, 0.0, False
    tol = 1e-12 * max(1.0, E)
    p = p_init
    converged = False
    for _ in range(20):
        f, df = _psi_scalar(eosid, gamma, p, D, m2sq, E)
        if df <= 0.0 or f >= 1e290:
            break
        p_new = p - f / df
        if p_new <= 0.0:
            break
        if abs(f) <= tol and abs(p_new - p) <= 1e-14 * p + 1e-300:
            p = p_new
            converged = True
            break
        p = p_new
    if not converged:
        return _recover_scalar(eosid, gamma, D, m1, m2, E)
    S = E + p
    v1 = m1 / S
    v2 = m2 / S
    vv = v1 * v1 + v2 * v2
    if vv >= 1.0 or p <= 0.0:
        return 0.0, 0.0, 0.0, 0.0, False
    return D * math.sqrt(1.0 - vv), v1, v2, p, True


@njit(parallel=True, cache=True)
def recover_prim(u, prim, eosid, gamma):
    """u (M, 4) -> prim (M, 4); returns False where recovery failed."""
    M = u.shape[0]
    ok = np.ones(M, dtype=np.bool_)
    for n in prange(M):
        rho, v1, v2, p, good = _recover_scalar(
            eosid, gamma, u[n, 0], u[n, 1], u[n, 2], u[n, 3])
        prim[n, 0] = rho
        prim[n, 1] = v1
        prim[n, 2] = v2
        prim[n, 3] = p
        if not good:
            ok[n] = False
    return ok


@njit(parallel=True, cache=True)
def recover_prim_warm(u, prim, eosid, gamma, pinit):
    """Warm-started variant: pinit > 0 entries seed the Newton."""
    M = u.shape[0]
    ok = np.ones(M, dtype=np.bool_)
    for n in prange(M):
        if pinit[n] > 0.0:
            rho, v1, v2, p, good = _recover_warm(
                eosid, gamma, u[n, 0], u[n, 1], u[n, 2], u[n, 3], pinit[n])
        else:
            rho, v1, v2, p, good = _recover_scalar(
                eosid, gamma, u[n, 0], u[n, 1], u[n, 2], u[n, 3])
        prim[n, 0] = rho
        prim[n, 1] = v1
        prim[n, 2] = v2
        prim[n, 3] = p
        if not good:
            ok[n] = False
    return ok


# ---------------------------------------------------------------------------
# jet EOS + pressure jet + flux assembly per node

@njit(inline="always", cache=True)
def _h_jet(eosid, gamma, x, h, hp, sc, L):
    # sc: scratch (>= 3 rows of length >= L)
    if eosid == 0:
        gp = gamma / (gamma - 1.0)
        for k in range(L):
            h[k] = gp * x[k]
            hp[k] = 0.0
        h[0] += 1.0
        hp[0] = gp
    elif eosid == 1 or eosid == 2:
        a = 2.5 if eosid == 1 else 2.0
        c = 2.25 if eosid == 1 else 4.0
        _jmul(x, x, sc[0], L)
        for k in range(L):
            sc[0, k] *= c
        sc[0, 0] += 1.0
        _jsqrt(sc[0], sc[1], L)            # r
        for k in range(L):
            h[k] = a * x[k] + sc[1, k]
            sc[2, k] = c * x[k]
        _jdiv(sc[2], sc[1], hp, L)
        hp[0] += a
    else:
        _jmul(x, x, sc[0], L)              # x^2
        for k in range(L):
            sc[1, k] = 6.0 * sc[0, k] + 4.0 * x[k]     # num
            sc[2, k] = 3.0 * x[k]                       # den
        sc[1, 0] += 1.0
        sc[2, 0] += 2.0
        _jdiv(sc[1], sc[2], h, L)
        for k in range(L):
            h[k] *= 2.0
            sc[1, k] = 18.0 * sc[0, k] + 24.0 * x[k]   # num'
        sc[1, 0] += 5.0
        _jmul(sc[2], sc[2], sc[0], L)                  # den^2
        _jdiv(sc[1], sc[0], hp, L)
        for k in range(L):
            hp[k] *= 2.0


@njit(cache=True)
def _flux_jets_node(uD, um1, um2, uE, p, met, eosid, gamma, ft, gt, sc, L, nit):
    """Fill ft, gt (4, L) given state jets and converged p[0]; p is the
    pressure-jet work array (length >= L) with p[0] preset.

    sc is scratch (>= 18 rows).  Returns True on success.
    """
    S = sc[0]
    S2 = sc[1]
    A = sc[2]
    B = sc[3]
    x = sc[4]
    h = sc[5]
    hp = sc[6]
    M2 = sc[7]
    t1 = sc[8]
    t2 = sc[9]
    t3 = sc[10]
    t4 = sc[11]
    psi = sc[12]
    dpsi = sc[13]
    p0 = p[0]
    for k in range(1, L):
        p[k] = 0.0

    _jmul(um1, um1, t1, L)
    _jmul(um2, um2, t2, L)
    for k in range(L):
        M2[k] = t1[k] + t2[k]

    for _ in range(nit):
        for k in range(L):
            S[k] = uE[k] + p[k]
        _jmul(S, S, S2, L)
        for k in range(L):
            A[k] = S2[k] - M2[k]
        if A[0] <= 0.0:
            return False
        _jsqrt(A, B, L)
        _jmul(uD, B, t1, L)
        _jmul(p, S, t2, L)
        _jdiv(t2, t1, x, L)
        _h_jet(eosid, gamma, x, h, hp, sc[15:18], L)
        # psi = D*S*h/B - p - E
        _jmul(uD, S, t1, L)
        _jmul(t1, h, t2, L)
        _jdiv(t2, B, psi, L)
        for k in range(L):
            psi[k] -= p[k] + uE[k]
        # dpsi = -D*h*M2/(B*A) + S*hp*((S+p)*A - p*S2)/A^2 - 1
        _jmul(uD, h, t1, L)
        _jmul(t1, M2, t2, L)
        _jmul(B, A, t1, L)
        _jdiv(t2, t1, t3, L)               # t3 = D*h*M2/(B*A)
        for k in range(L):
            t1[k] = S[k] + p[k]
        _jmul(t1, A, t2, L)
        _jmul(p, S2, t1, L)
        for k in range(L):
            t2[k] -= t1[k]                 # (S+p)*A - p*S2
        _jmul(hp, t2, t1, L)
        _jmul(S, t1, t2, L)
        _jmul(A, A, t1, L)
        _jdiv(t2, t1, t4, L)               # t4 = S*hp*(...)/A^2
        for k in range(L):
            dpsi[k] = t4[k] - t3[k]
        dpsi[0] -= 1.0
        if dpsi[0] == 0.0:
            return False
        _jdiv(psi, dpsi, t1, L)
        for k in range(1, L):
            p[k] -= t1[k]
        p[0] = p0

    # flux assembly
    v1 = sc[14]
    v2 = sc[15]
    for k in range(L):
        S[k] = uE[k] + p[k]
    _jdiv(um1, S, v1, L)
    _jdiv(um2, S, v2, L)
    f0 = sc[16]
    f1 = sc[17]
    yeta = met[0]
    xeta = met[1]
    yxi = met[2]
    xxi = met[3]
    # f = (D v1, m1 v1 + p, m2 v1, m1); g = (D v2, m1 v2, m2 v2 + p, m2)
    _jmul(uD, v1, f0, L)
    _jmul(uD, v2, f1, L)
    for k in range(L):
        ft[0, k] = yeta * f0[k] - xeta * f1[k]
        gt[0, k] = -yxi * f0[k] + xxi * f1[k]
    _jmul(um1, v1, f0, L)
    _jmul(um1, v2, f1, L)
    for k in range(L):
        a = f0[k] + p[k]
        ft[1, k] = yeta * a - xeta * f1[k]
        gt[1, k] = -yxi * a + xxi * f1[k]
    _jmul(um2, v1, f0, L)
    _jmul(um2, v2, f1, L)
    for k in range(L):
        b = f1[k] + p[k]
        ft[2, k] = yeta * f0[k] - xeta * b
        gt[2, k] = -yxi * f0[k] + xxi * b
    for k in range(L):
        ft[3, k] = yeta * um1[k] - xeta * um2[k]
        gt[3, k] = -yxi * um1[k] + xxi * um2[k]
    return True


@njit(inline="always", cache=True)
def _ceil_log2(L):
    n = 0
    m = 1
    while m < L:
        m *= 2
        n += 1
    return n


# chain variable indices for the incremental (coefficient-by-coefficient)
# Taylor propagation through the pressure recovery and flux assembly
_CP, _CS, _CS2, _CA, _CB, _CDB, _CPS, _CX, _CH = 0, 1, 2, 3, 4, 5, 6, 7, 8
_CDS, _CDSH, _CQ, _CV1, _CV2, _CM2, _CE1, _CE2 = 9, 10, 11, 12, 13, 14, 15, 16
NCHAIN = 17


@njit(inline="always", cache=True)
def _conv_m(a, b, m):
    s = 0.0
    for i in range(m + 1):
        s += a[i] * b[m - i]
    return s


@njit(inline="always", cache=True)
def _chain_coeff(ch, uD, um1, um2, uE, m, eosid, gamma):
    """Coefficient m of the recovery chain, given p[0..m] and u[0..m].

    Returns the residual coefficient psi_m = Q[m] - p[m] - E[m]; with
    p[m] = 0 this is the input to the triangular solve p[m] = -psi_m/dpsi0.
    """
    p = ch[_CP]
    S = ch[_CS]
    S[m] = uE[m] + p[m]
    ch[_CS2, m] = _conv_m(S, S, m)
    ch[_CA, m] = ch[_CS2, m] - ch[_CM2, m]
    B = ch[_CB]
    s = ch[_CA, m]
    for i in range(1, m):
        s -= B[i] * B[m - i]
    B[m] = s / (2.0 * B[0])
    ch[_CDB, m] = _conv_m(uD, B, m)
    ch[_CPS, m] = _conv_m(p, S, m)
    x = ch[_CX]
    s = ch[_CPS, m]
    for i in range(1, m + 1):
        s -= ch[_CDB, i] * x[m - i]
    x[m] = s / ch[_CDB, 0]
    h = ch[_CH]
    if eosid == 0:
        h[m] = gamma / (gamma - 1.0) * x[m]
    elif eosid == 1 or eosid == 2:
        a = 2.5 if eosid == 1 else 2.0
        c = 2.25 if eosid == 1 else 4.0
        ch[_CE1, m] = _conv_m(x, x, m)               # x^2
        r = ch[_CE2]
        s = c * ch[_CE1, m]
        for i in range(1, m):
            s -= r[i] * r[m - i]
        r[m] = s / (2.0 * r[0])
        h[m] = a * x[m] + r[m]
    else:
        ch[_CE1, m] = _conv_m(x, x, m)               # x^2
        num_m = 6.0 * ch[_CE1, m] + 4.0 * x[m]       # num of h = 2 num/den
        s = 2.0 * num_m
        for i in range(1, m + 1):
            den_i = 3.0 * x[i]
            s -= den_i * h[m - i]
        h[m] = s / (3.0 * x[0] + 2.0)
    ch[_CDS, m] = _conv_m(uD, S, m)
    ch[_CDSH, m] = _conv_m(ch[_CDS], h, m)
    Q = ch[_CQ]
    s = ch[_CDSH, m]
    for i in range(1, m + 1):
        s -= B[i] * Q[m - i]
    Q[m] = s / B[0]
    return Q[m] - p[m] - uE[m]


@njit(inline="always", cache=True)
def _chain_init(ch, uD, um1, um2, uE, p0, eosid, gamma):
    """Order-0 chain values; returns dpsi0 (0 on failure)."""
    m2sq = um1[0] * um1[0] + um2[0] * um2[0]
    ch[_CM2, 0] = m2sq
    ch[_CP, 0] = p0
    S0 = uE[0] + p0
    A0 = S0 * S0 - m2sq
    if A0 <= 0.0 or S0 <= 0.0 or uD[0] <= 0.0:
        return 0.0
    B0 = math.sqrt(A0)
    ch[_CS, 0] = S0
    ch[_CS2, 0] = S0 * S0
    ch[_CA, 0] = A0
    ch[_CB, 0] = B0
    ch[_CDB, 0] = uD[0] * B0
    ch[_CPS, 0] = p0 * S0
    x0 = p0 * S0 / (uD[0] * B0)
    ch[_CX, 0] = x0
    h0, _ = _h_scalar(eosid, gamma, x0)
    ch[_CH, 0] = h0
    if eosid == 1 or eosid == 2:
        c = 2.25 if eosid == 1 else 4.0
        ch[_CE1, 0] = x0 * x0
        ch[_CE2, 0] = math.sqrt(c * x0 * x0 + 1.0)
    elif eosid == 3:
        ch[_CE1, 0] = x0 * x0
    ch[_CDS, 0] = uD[0] * S0
    ch[_CDSH, 0] = uD[0] * S0 * h0
    ch[_CQ, 0] = ch[_CDSH, 0] / B0
    ch[_CV1, 0] = um1[0] / S0
    ch[_CV2, 0] = um2[0] / S0
    _, dpsi0 = _psi_scalar(eosid, gamma, p0, uD[0], m2sq, uE[0])
    if dpsi0 == 0.0 or dpsi0 >= 1e290:
        return 0.0
    return dpsi0


@njit(inline="always", cache=True)
def _flux_coeff(ch, uD, um1, um2, met, m, ftc, gtc):
    """Coefficient m of the contravariant fluxes into ftc, gtc (4,)."""
    p = ch[_CP]
    S = ch[_CS]
    v1 = ch[_CV1]
    v2 = ch[_CV2]
    if m > 0:
        s = um1[m]
        t = um2[m]
        for i in range(1, m + 1):
            s -= S[i] * v1[m - i]
            t -= S[i] * v2[m - i]
        v1[m] = s / S[0]
        v2[m] = t / S[0]
    ye = met[0]
    xe = met[1]
    yx = met[2]
    xx = met[3]
    Dv1 = _conv_m(uD, v1, m)
    Dv2 = _conv_m(uD, v2, m)
    m1v1 = _conv_m(um1, v1, m) + p[m]
    m1v2 = _conv_m(um1, v2, m)
    m2v1 = _conv_m(um2, v1, m)
    m2v2 = _conv_m(um2, v2, m) + p[m]
    ftc[0] = ye * Dv1 - xe * Dv2
    gtc[0] = -yx * Dv1 + xx * Dv2
    ftc[1] = ye * m1v1 - xe * m1v2
    gtc[1] = -yx * m1v1 + xx * m1v2
    ftc[2] = ye * m2v1 - xe * m2v2
    gtc[2] = -yx * m2v1 + xx * m2v2
    ftc[3] = ye * um1[m] - xe * um2[m]
    gtc[3] = -yx * um1[m] + xx * um2[m]


@njit(parallel=True, cache=True)
def lw_time_averages(u, met, detJ, Dmat, dt, K, eosid, gamma, pnod,
                     F, G, U, uj):
    """Per-element Taylor recursion and time averages.

    u (ne, 4, p1, p1) conservative nodal values; pnod the recovered nodal
    pressures; fills time-average fluxes F, G and solution U (same layout
    as u) plus the full state jets uj (ne, 4, p1, p1, K+1).  Returns False
    per element where the chain could not be initialized.
    """
    ne = u.shape[0]
    p1 = u.shape[2]
    ok = np.ones(ne, dtype=np.bool_)
    for e in prange(ne):
        fj = np.empty((4, p1, p1, K + 1))
        gj = np.empty((4, p1, p1, K + 1))
        ch = np.empty((p1, p1, NCHAIN, K + 1))
        dpsi0 = np.empty((p1, p1))
        ftc = np.empty(4)
        gtc = np.empty(4)
        good = True
        for c in range(4):
            for i in range(p1):
                for j in range(p1):
                    uj[e, c, i, j, 0] = u[e, c, i, j]
        # order 0: init chains and plain fluxes
        for i in range(p1):
            for j in range(p1):
                d0 = _chain_init(ch[i, j], uj[e, 0, i, j], uj[e, 1, i, j],
                                 uj[e, 2, i, j], uj[e, 3, i, j],
                                 pnod[e, i, j], eosid, gamma)
                dpsi0[i, j] = d0
                if d0 == 0.0:
                    good = False
                _flux_coeff(ch[i, j], uj[e, 0, i, j], uj[e, 1, i, j],
                            uj[e, 2, i, j], met[e, i, j], 0, ftc, gtc)
                for c in range(4):
                    fj[c, i, j, 0] = ftc[c]
                    gj[c, i, j, 0] = gtc[c]
        if not good:
            ok[e] = False
            continue
        for m in range(1, K + 1):
            # spatial derivative of the previous flux coefficient
            fac = -dt / m
            for c in range(4):
                for i in range(p1):
                    for j in range(p1):
                        s = 0.0
                        for k in range(p1):
                            s += Dmat[i, k] * fj[c, k, j, m - 1]
                            s += Dmat[j, k] * gj[c, i, k, m - 1]
                        uj[e, c, i, j, m] = fac * s / detJ[e, i, j]
            # extend chains by one coefficient, fluxes at order m
            for i in range(p1):
                for j in range(p1):
                    uD = uj[e, 0, i, j]
                    um1 = uj[e, 1, i, j]
                    um2 = uj[e, 2, i, j]
                    uE = uj[e, 3, i, j]
                    chn = ch[i, j]
                    chn[_CM2, m] = _conv_m(um1, um1, m) + _conv_m(um2, um2, m)
                    chn[_CP, m] = 0.0
                    psi_m = _chain_coeff(chn, uD, um1, um2, uE, m, eosid, gamma)
                    chn[_CP, m] = -psi_m / dpsi0[i, j]
                    _chain_coeff(chn, uD, um1, um2, uE, m, eosid, gamma)
                    _flux_coeff(chn, uD, um1, um2, met[e, i, j], m, ftc, gtc)
                    for c in range(4):
                        fj[c, i, j, m] = ftc[c]
                        gj[c, i, j, m] = gtc[c]
        for c in range(4):
            for i in range(p1):
                for j in range(p1):
                    sf = 0.0
                    sg = 0.0
                    su = 0.0
                    for m in range(K + 1):
                        w = 1.0 / (m + 1.0)
                        sf += w * fj[c, i, j, m]
                        sg += w * gj[c, i, j, m]
                        su += w * uj[e, c, i, j, m]
                    F[e, c, i, j] = sf
                    G[e, c, i, j] = sg
                    U[e, c, i, j] = su
    return ok


def flux_jets_nodes(uj, met, p0, eosid, gamma):
    """Standalone jet-flux evaluation over flat node arrays.

    uj (M, 4, L) state jets, met (M, 4), p0 (M,) converged base pressures.
    Returns (ft, gt) of shape (M, 4, L) and an ok mask.  Thin wrapper used
    by tests and boundary paths.
    """
    uj = np.ascontiguousarray(uj, dtype=F8)
    M, _, L = uj.shape
    ft = np.empty((M, 4, L))
    gt = np.empty((M, 4, L))
    ok = _flux_jets_flat(uj, np.ascontiguousarray(met, dtype=F8),
                         np.ascontiguousarray(p0, dtype=F8),
                         eosid, gamma, ft, gt)
    return ft, gt, ok


@njit(parallel=True, cache=True)
def _flux_jets_flat(uj, met, p0, eosid, gamma, ft, gt):
    M = uj.shape[0]
    L = uj.shape[2]
    ok = np.ones(M, dtype=np.bool_)
    nit = _ceil_log2(L)
    for n in prange(M):
        sc = np.empty((18, L))
        pw = np.empty(L)
        pw[0] = p0[n]
        ftn = np.empty((4, L))
        gtn = np.empty((4, L))
        if not _flux_jets_node(uj[n, 0], uj[n, 1], uj[n, 2], uj[n, 3],
                               pw, met[n], eosid, gamma, ftn, gtn, sc, L, nit):
            ok[n] = False
        for c in range(4):
            for k in range(L):
                ft[n, c, k] = ftn[c, k]
                gt[n, c, k] = gtn[c, k]
    return ok
