"""Taylor-jet evaluation of the contravariant RHD fluxes.

Given jets of the conservative state u = (D, m1, m2, E) at a node, this
produces jets of the contravariant fluxes

    ftilde = yeta * f(u) - xeta * g(u),
    gtilde = -yxi * f(u) + xxi * g(u),

by running the full flux evaluation -- including the pressure recovery --
in truncated Taylor arithmetic.  Differentiating through the root-find is
done by Newton iterations in jet arithmetic, which double the number of
correct coefficients each pass, so ceil(log2(K+1)) passes suffice once the
order-0 pressure is converged.

A state jet is an ndarray of shape (4, K+1, ...); trailing axes broadcast
over nodes.  This is the reference (numpy) path; ``_kernels`` carries the
compiled twin used by the solver loop.
"""

from __future__ import annotations

import math

import numpy as np

from . import eos as eosmod
from .jets import jconst, jdiv, jmul, jsqrt, time_average  # noqa: F401

__all__ = ["flux_jets", "primitive_jet", "flux_jets_from_prim",
           "pressure_jet", "time_average"]


def _enthalpy_jet(eos, x):
    """(H(x), H'(x)) jets for x = p/rho."""
    eid = eos.eos_id
    K = x.shape[0] - 1
    if eid == eosmod.IDEAL:
        gp = eos.gamma / (eos.gamma - 1.0)
        h = gp * x
        h[0] += 1.0
        return h, jconst(np.broadcast_to(gp, x.shape[1:]), K)
    if eid in (eosmod.TM, eosmod.IP):
        a, c = (2.5, 2.25) if eid == eosmod.TM else (2.0, 4.0)
        arg = c * jmul(x, x)
        arg[0] += 1.0
        r = jsqrt(arg)
        return a * x + r, _plus_const(jdiv(c * x, r), a)
    den = 3.0 * x
    den[0] += 2.0
    num = jmul(x, x) * 6.0 + 4.0 * x
    num[0] += 1.0
    h = 2.0 * jdiv(num, den)
    nump = jmul(x, x) * 18.0 + 24.0 * x
    nump[0] += 5.0
    hp = 2.0 * jdiv(nump, jmul(den, den))
    return h, hp


def _plus_const(a, c):
    out = a.copy()
    out[0] += c
    return out


def _psi_jet(eos, p, D, m2sq, E):
    """Jets of the recovery residual psi and of d(psi)/dp at fixed u."""
    S = E + p
    S2 = jmul(S, S)
    A = S2 - m2sq
    B = jsqrt(A)
    x = jdiv(jmul(p, S), jmul(D, B))
    h, hp = _enthalpy_jet(eos, x)
    psi = jdiv(jmul(jmul(D, S), h), B) - p - E
    t1 = jdiv(jmul(jmul(D, h), m2sq), jmul(B, A))
    t2 = jmul(S + p, A) - jmul(p, S2)
    t3 = jdiv(jmul(S, jmul(hp, t2)), jmul(A, A))
    dpsi = _plus_const(t3 - t1, -1.0)
    return psi, dpsi


def pressure_jet(eos, uj, p0=None):
    """Pressure jet solving psi(p; u) = 0 through the jet order.

    p0 is the converged order-0 pressure (recovered if omitted).
    """
    D, m1, m2, E = uj[0], uj[1], uj[2], uj[3]
    L = D.shape[0]
    if p0 is None:
        p0 = eosmod.cons_to_prim(eos, (D[0], m1[0], m2[0], E[0])).p
    m2sq = jmul(m1, m1) + jmul(m2, m2)
    p = jconst(np.broadcast_to(p0, D.shape[1:]), L - 1)
    for _ in range(max(0, math.ceil(math.log2(L)))):
        psi, dpsi = _psi_jet(eos, p, D, m2sq, E)
        p = p - jdiv(psi, dpsi)
        p[0] = np.broadcast_to(p0, p[0].shape)  # order 0 already exact
    return p


def primitive_jet(eos, uj, p0=None):
    """Jets of (rho, v1, v2, p) from jets of (D, m1, m2, E)."""
    D, m1, m2, E = uj[0], uj[1], uj[2], uj[3]
    p = pressure_jet(eos, uj, p0=p0)
    S = E + p
    v1 = jdiv(m1, S)
    v2 = jdiv(m2, S)
    one = jconst(np.ones(np.broadcast_shapes(v1.shape, v2.shape)[1:]), S.shape[0] - 1)
    ginv = jsqrt(one - jmul(v1, v1) - jmul(v2, v2))
    rho = jmul(D, ginv)
    return np.array([rho, v1, v2, p])


def _contravariant(f, g, met):
    yeta, xeta, yxi, xxi = met
    ft = np.array([yeta * f[c] - xeta * g[c] for c in range(4)])
    gt = np.array([-yxi * f[c] + xxi * g[c] for c in range(4)])
    return ft, gt


def _phys_flux_jets(D, m1, m2, E, p, S):
    v1 = jdiv(m1, S)
    v2 = jdiv(m2, S)
    f = np.array([jmul(D, v1), _plusj(jmul(m1, v1), p), jmul(m2, v1), m1])
    g = np.array([jmul(D, v2), jmul(m1, v2), _plusj(jmul(m2, v2), p), m2])
    return f, g


def _plusj(a, b):
    return a + b


def flux_jets(eos, uj, met, p0=None):
    """Jets of the contravariant fluxes (ftilde, gtilde) at nodes.

    uj: state jet (4, L, ...); met: (yeta, xeta, yxi, xxi) arrays
    broadcastable over the trailing axes.  Raises if the value part is
    inadmissible (pressure recovery fails there).
    """
    D, m1, m2, E = uj[0], uj[1], uj[2], uj[3]
    p = pressure_jet(eos, uj, p0=p0)
    f, g = _phys_flux_jets(D, m1, m2, E, p, E + p)
    return _contravariant(f, g, met)


def flux_jets_from_prim(eos, pj, met):
    """Contravariant flux jets straight from primitive-variable jets.

    Used by boundary recipes that overwrite primitive components before
    rebuilding the flux (no recovery involved).
    """
    rho, v1, v2, p = pj[0], pj[1], pj[2], pj[3]
    one = jconst(np.ones(rho.shape[1:]), rho.shape[0] - 1)
    g2 = jdiv(one, one - jmul(v1, v1) - jmul(v2, v2))
    gam = jsqrt(g2)
    x = jdiv(p, rho)
    h, _ = _enthalpy_jet(eos, x)
    D = jmul(rho, gam)
    rhg2 = jmul(jmul(rho, h), g2)
    m1 = jmul(rhg2, v1)
    m2 = jmul(rhg2, v2)
    E = rhg2 - p
    f = np.array([jmul(D, v1), _plusj(jmul(m1, v1), p), jmul(m2, v1), m1])
    g = np.array([jmul(D, v2), jmul(m1, v2), _plusj(jmul(m2, v2), p), m2])
    return _contravariant(f, g, met)


def prim_to_cons_jet(eos, pj):
    """Jets of (D, m1, m2, E) from primitive jets."""
    rho, v1, v2, p = pj[0], pj[1], pj[2], pj[3]
    one = jconst(np.ones(rho.shape[1:]), rho.shape[0] - 1)
    g2 = jdiv(one, one - jmul(v1, v1) - jmul(v2, v2))
    gam = jsqrt(g2)
    x = jdiv(p, rho)
    h, _ = _enthalpy_jet(eos, x)
    rhg2 = jmul(jmul(rho, h), g2)
    return np.array([jmul(rho, gam), jmul(rhg2, v1), jmul(rhg2, v2), rhg2 - p])
