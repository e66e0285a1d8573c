"""Subcell blending limiter and admissibility enforcement.

The high-order LWFR update is blended per element with a first-order
finite-volume update on the (N+1)^2 GLL subcells, weighted by a modal
smoothness indicator of Q = rho*p*Gamma.  Both updates share the blended
(and possibly limited) face fluxes, so their element averages coincide and
the blend conserves.  A final Zhang-Shu contraction toward the element
average enforces nodal admissibility.
"""

from __future__ import annotations

import numpy as np

from .basis import Basis
from .eos import enthalpy_x
from .solver import normal_point_flux, wave_speed_estimate

__all__ = ["smoothness_alpha", "smooth_alpha_neighbors", "subcell_fv_fluxes",
           "low_order_update", "blend", "zhang_shu_scale", "scale_theta",
           "indicator_quantity"]

ALPHA_MAX = 0.5
ALPHA_CUTOFF = 1e-4
SHARPNESS = 9.21024
VARIATION_GATE = 0.6


def indicator_quantity(prim):
    """Q = rho * p * Gamma from nodal primitives (..., 4)."""
    rho, v1, v2, p = np.moveaxis(prim, -1, 0)
    return rho * p / np.sqrt(1.0 - v1 * v1 - v2 * v2)


def _legendre_vandermonde(basis: Basis):
    nodes = basis.nodes
    p1 = basis.n
    P = np.zeros((p1, p1))
    P[0] = 1.0
    if p1 > 1:
        P[1] = nodes
    for k in range(1, p1 - 1):
        P[k + 1] = ((2 * k + 1) * nodes * P[k] - k * P[k - 1]) / (k + 1)
    # orthonormalized, transform by quadrature
    scale = np.sqrt((2 * np.arange(p1) + 1) / 2.0)
    return P * scale[:, None]


def smoothness_alpha(Q, basis: Basis, alpha_max=ALPHA_MAX,
                     cutoff=ALPHA_CUTOFF, mesh=None, gate=VARIATION_GATE):
    """Per-element blending weight from the modal energy of Q (ne, p1, p1).

    The nodal data is transformed to the (orthonormal) Legendre basis by
    quadrature; the fraction of energy in the highest total-degree shell
    is mapped through a logistic with threshold
    T(N) = 0.5 * 10^(-1.8 (N+1)^(1/4)).

    A second-shell ratio is deliberately NOT used: it is invariant under
    scaling of Q and evaluates to O(0.4) on any smooth extremum whose
    value nearly vanishes (near-vacuum troughs), firing at every
    resolution.  For the same reason, when a mesh is given, elements
    whose total Q-variation is below ``gate`` times the face-neighborhood
    Q scale are exempted: variations that small cannot be a meaningful
    discontinuity, while noise there can still tickle the top shell.
    """
    p1 = basis.n
    Np = p1 - 1
    PT = _legendre_vandermonde(basis) * basis.weights[None, :]
    modal = np.einsum("mi,nj,eij->emn", PT, PT, Q)
    sq = modal ** 2
    deg = np.maximum(np.arange(p1)[:, None], np.arange(p1)[None, :])
    top = sq[:, deg == Np].sum(axis=1)
    total = sq.sum(axis=(1, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        energy = np.where(total > 0, top / total, 0.0)
    T = 0.5 * 10.0 ** (-1.8 * (Np + 1) ** 0.25)
    alpha = 1.0 / (1.0 + np.exp(-SHARPNESS / T * (energy - T)))
    # the logistic evaluates to cutoff*(1+4e-7) at zero energy, so the
    # comparison needs an inclusive margin for constants to stay unlimited
    alpha = np.where(alpha <= cutoff * (1.0 + 1e-6), 0.0,
                     np.minimum(alpha, alpha_max))
    if mesh is not None and gate > 0.0:
        qmax = Q.max(axis=(1, 2))
        qrange = qmax - Q.min(axis=(1, 2))
        nb = qmax.copy()
        for a, _sa, b, _sb, _fl in mesh.faces:
            nb[a] = max(nb[a], qmax[b])
            nb[b] = max(nb[b], qmax[a])
        for c, _sc, f0, f1, _sf, _fl in mesh.mortars:
            m = max(qmax[c], qmax[f0], qmax[f1])
            nb[c] = max(nb[c], m)
            nb[f0] = max(nb[f0], m)
            nb[f1] = max(nb[f1], m)
        alpha = np.where(qrange < gate * nb, 0.0, alpha)
    return alpha


def smooth_alpha_neighbors(alpha, mesh):
    """alpha_e <- max(alpha_e, 0.5 * max over face neighbors)."""
    out = alpha.copy()
    nb_max = np.zeros_like(alpha)
    for a, _sa, b, _sb, _fl in mesh.faces:
        nb_max[a] = max(nb_max[a], alpha[b])
        nb_max[b] = max(nb_max[b], alpha[a])
    for c, _sc, f0, f1, _sf, _fl in mesh.mortars:
        nb_max[c] = max(nb_max[c], alpha[f0], alpha[f1])
        nb_max[f0] = max(nb_max[f0], alpha[c])
        nb_max[f1] = max(nb_max[f1], alpha[c])
    return np.maximum(out, 0.5 * nb_max)


def subcell_fv_fluxes(eos, prim, met, basis: Basis):
    """First-order Rusanov fluxes at interior subcell interfaces.

    Interface metrics are the average of the adjacent nodal contravariant
    vectors.  Returns (fxi, geta) with fxi (ne, N, p1) holding the flux
    between nodes (i, j) and (i+1, j) and geta (ne, p1, N) the eta
    counterpart, both as (..., 4) arrays.
    """
    n_xi = np.stack([met[..., 0], -met[..., 1]], axis=-1)   # (yeta, -xeta)
    n_eta = np.stack([-met[..., 2], met[..., 3]], axis=-1)  # (-yxi, xxi)

    nL = 0.5 * (n_xi[:, :-1, :, :] + n_xi[:, 1:, :, :])
    pL, pR = prim[:, :-1, :, :], prim[:, 1:, :, :]
    norm = np.linalg.norm(nL, axis=-1)
    lam = wave_speed_estimate(eos, pL, pR, nL / norm[..., None]) * norm
    uL = _prim_to_cons(eos, pL)
    uR = _prim_to_cons(eos, pR)
    fxi = (0.5 * (normal_point_flux(eos, pL, nL) + normal_point_flux(eos, pR, nL))
           - 0.5 * lam[..., None] * (uR - uL))

    nB = 0.5 * (n_eta[:, :, :-1, :] + n_eta[:, :, 1:, :])
    pB, pT = prim[:, :, :-1, :], prim[:, :, 1:, :]
    norm = np.linalg.norm(nB, axis=-1)
    lam = wave_speed_estimate(eos, pB, pT, nB / norm[..., None]) * norm
    uB = _prim_to_cons(eos, pB)
    uT = _prim_to_cons(eos, pT)
    geta = (0.5 * (normal_point_flux(eos, pB, nB) + normal_point_flux(eos, pT, nB))
            - 0.5 * lam[..., None] * (uT - uB))
    return fxi, geta


def _prim_to_cons(eos, prim):
    rho, v1, v2, p = np.moveaxis(prim, -1, 0)
    g2 = 1.0 / (1.0 - v1 * v1 - v2 * v2)
    h, _ = enthalpy_x(eos, p / rho)
    rhg2 = rho * h * g2
    return np.stack([rho * np.sqrt(g2), rhg2 * v1, rhg2 * v2, rhg2 - p],
                    axis=-1)


def low_order_update(u, detJ, fxi, geta, Tw, Te, Ts, Tn, dt, basis: Basis):
    """First-order FV update on the GLL subcells (reference widths w_i).

    Tw/Te/Ts/Tn (ne, p1, 4) are the element-face fluxes in the element's
    own contravariant convention (shared with the high-order update).
    Returns nodal conservative values.
    """
    w = basis.weights
    ut = u.transpose(0, 2, 3, 1) * detJ[..., None]       # (ne, p1, p1, 4)
    fall = np.concatenate([Tw[:, None, :, :], fxi, Te[:, None, :, :]], axis=1)
    gall = np.concatenate([Ts[:, :, None, :], geta, Tn[:, :, None, :]], axis=2)
    dF = (fall[:, 1:, :, :] - fall[:, :-1, :, :]) / w[None, :, None, None]
    dG = (gall[:, :, 1:, :] - gall[:, :, :-1, :]) / w[None, None, :, None]
    ut_new = ut - dt * (dF + dG)
    return (ut_new / detJ[..., None]).transpose(0, 3, 1, 2)


def blend(high, low, alpha):
    """Convex nodal combination (1-alpha) * high + alpha * low."""
    a = np.asarray(alpha)[:, None, None, None]
    if np.any(a < 0.0) or np.any(a > 1.0):
        raise ValueError("blending weight outside [0, 1]")
    return (1.0 - a) * high + a * low


def scale_theta(u_nodes, ubar, floor_frac=0.1):
    """Largest theta in [0,1] s.t. ubar + theta*(u - ubar) clears the
    positivity floors at every node of each group.

    u_nodes (n, m, 4) nodal conservative states, ubar (n, 4) admissible
    group means.  Floors are purely relative (floor_frac of the mean
    constraint value): an absolute floor like 1e-13 both drops below the
    roundoff ulp of q = E - sqrt(D^2+|m|^2) for large states (the parked
    node flips sign on re-evaluation) and, in near-vacuum elements, parks
    nodes orders of magnitude below the element scale where the flux
    Jacobian is stiff enough to wreck the Taylor recursion at any usable
    step size.  The q constraint is solved exactly (quadratic in theta).
    """
    D = u_nodes[..., 0]
    m1 = u_nodes[..., 1]
    m2 = u_nodes[..., 2]
    Ee = u_nodes[..., 3]
    Db, m1b, m2b, Eb = (ubar[:, k] for k in range(4))
    qb = Eb - np.sqrt(Db ** 2 + m1b ** 2 + m2b ** 2)
    eps_d = floor_frac * Db
    eps_q = floor_frac * qb

    # linear D constraint
    with np.errstate(divide="ignore", invalid="ignore"):
        tD = np.where(D < eps_d[:, None],
                      (Db[:, None] - eps_d[:, None])
                      / np.maximum(Db[:, None] - D, 1e-300), 1.0)
    # quadratic q constraint: (E - eps_q)^2 - D^2 - |m|^2 >= 0, E >= eps_q
    wD = D - Db[:, None]
    wm1 = m1 - m1b[:, None]
    wm2 = m2 - m2b[:, None]
    wE = Ee - Eb[:, None]
    Es = Eb[:, None] - eps_q[:, None]
    a = wE ** 2 - wD ** 2 - wm1 ** 2 - wm2 ** 2
    b = 2.0 * (Es * wE - Db[:, None] * wD - m1b[:, None] * wm1
               - m2b[:, None] * wm2)
    c = Es ** 2 - Db[:, None] ** 2 - m1b[:, None] ** 2 - m2b[:, None] ** 2
    q_node = Ee - np.sqrt(D ** 2 + m1 ** 2 + m2 ** 2)
    need = (q_node < eps_q[:, None]) | ~np.isfinite(q_node)
    disc = np.maximum(b * b - 4.0 * a * c, 0.0)
    den = -b + np.sqrt(disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_quad = np.where(np.abs(den) > 1e-300, 2.0 * c / den, 1.0)
    tq = np.where(need, np.clip(t_quad, 0.0, 1.0), 1.0)
    # E linear safeguard (E(theta) >= eps_q required by the squared form)
    with np.errstate(divide="ignore", invalid="ignore"):
        tE = np.where(Ee < eps_q[:, None],
                      Es / np.maximum(-wE, 1e-300), 1.0)
    theta = np.minimum(np.minimum(tD, tq), np.clip(tE, 0.0, 1.0))
    return np.clip(theta.min(axis=1), 0.0, 1.0)


def zhang_shu_scale(u, avg, floor_frac=0.1):
    """Contract nodal values toward the element average until admissible.

    u (ne, 4, p1, p1); avg (ne, 4) admissible averages.  Returns the
    scaled array and the per-element theta used (1 where untouched).
    """
    ne = u.shape[0]
    nodes = u.transpose(0, 2, 3, 1).reshape(ne, -1, 4)
    theta = scale_theta(nodes, avg, floor_frac)
    if np.all(theta >= 1.0):
        return u, theta
    scaled = (avg[:, None, :] + theta[:, None, None]
              * (nodes - avg[:, None, :]))
    out = np.where(theta[:, None, None, None] < 1.0,
                   scaled.reshape(u.shape[0], u.shape[2], u.shape[3], 4)
                   .transpose(0, 3, 1, 2), u)
    return out, theta
