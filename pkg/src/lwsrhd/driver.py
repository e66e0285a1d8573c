"""Time integration: one LWFR step end to end, and the run loop.

Step pipeline: recover primitives -> element-local Taylor recursion (time
averages + traces) -> face fluxes (LW and first-order, blended by the
smoothness weight, admissibility-limited) -> high-order corrected update
and subcell FV update sharing those fluxes -> nodal blend -> Zhang-Shu
scaling.  A step that cannot restore admissibility raises StepRejected and
the loop retries with half the step.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dfield

import numpy as np

from . import _kernels, amr, limiter, solver
from .solver import (FaceIndex, SIGN, SolutionField, StepRejected,
                     boundary_flux, compute_dt, conformal_face_fluxes,
                     mortar_face_fluxes, reconstruct_derivative)

__all__ = ["StepStats", "RunReport", "lwfr_step", "advance", "regrid_now",
           "init_with_amr"]


@dataclass
class StepStats:
    dt: float = 0.0
    n_alpha: int = 0
    n_theta: int = 0
    n_fluxlim: int = 0
    min_rho: float = np.inf
    min_p: float = np.inf
    min_q: float = np.inf


@dataclass
class RunReport:
    steps: int = 0
    rejected: int = 0
    wall_time: float = 0.0
    element_steps: int = 0
    min_rho: float = np.inf
    min_p: float = np.inf
    min_q: float = np.inf
    alpha_steps: int = 0
    fluxlim_faces: int = 0
    element_history: list = dfield(default_factory=list)
    extra: dict = dfield(default_factory=dict)


def _q_of(u_nodes):
    return u_nodes[..., 3] - np.sqrt(u_nodes[..., 0] ** 2
                                     + u_nodes[..., 1] ** 2
                                     + u_nodes[..., 2] ** 2)


def _is_adm(u_nodes):
    return (u_nodes[..., 0] > 0.0) & (_q_of(u_nodes) > 0.0)


def _scatter_face_fluxes(fi: FaceIndex, phi_conf, phi_mort, bfl, basis, ne):
    """Per-element face fluxes (element convention) from canonical values.

    Returns Tsides (4, ne, p1, 4): S, E, N, W slots.
    """
    p1 = fi.p1
    Tsides = np.zeros((4, ne, p1, 4))
    if len(fi.fL):
        TL = SIGN[fi.sL][:, None, None] * phi_conf
        TR = solver._flipped(SIGN[fi.sR][:, None, None] * (-phi_conf), fi.fflip)
        Tsides[fi.sL, fi.fL] = TL
        Tsides[fi.sR, fi.fR] = TR
    if len(fi.mC):
        P = basis.transfer.P
        proj = sum(np.einsum("iq,nqc->nic", P[r], phi_mort[:, r])
                   for r in (0, 1))
        Tsides[fi.msC, fi.mC] = SIGN[fi.msC][:, None, None] * proj
        for r in (0, 1):
            ef = fi.mF[:, r]
            TF = SIGN[fi.msF][:, None, None] * (-0.5 * phi_mort[:, r])
            Tsides[fi.msF, ef] = solver._flipped(TF, fi.mflip)
    for (e, side, Tstar, _ugh) in bfl:
        Tsides[side, e] = Tstar
    return Tsides


def _first_row_candidate(ut_row, w_perp, w_par, f_inner, f_face, g_lo, g_hi,
                         dt, sgn_out):
    """Candidate low-order update of the subcell row adjacent to one face.

    sgn_out=+1 when the face flux sits at the high end of the transverse
    axis (E/N sides), -1 at the low end (W/S).
    """
    dperp = sgn_out * (f_face - f_inner) / w_perp
    dpar = (g_hi - g_lo) / w_par[:, None]
    return ut_row - dt * (dperp + dpar)


def _face_first_rows(side, e, ut, fall, gall, w, dt, Tface):
    """First-subcell candidate row next to face (e, side) given Tface."""
    p1 = ut.shape[1]
    if side == solver.E:
        return _first_row_candidate(ut[e, p1 - 1], w[p1 - 1], w,
                                    fall[e, p1 - 1], Tface,
                                    gall[e, p1 - 1, :-1], gall[e, p1 - 1, 1:],
                                    dt, +1.0)
    if side == solver.W:
        return _first_row_candidate(ut[e, 0], w[0], w,
                                    fall[e, 1], Tface,
                                    gall[e, 0, :-1], gall[e, 0, 1:],
                                    dt, -1.0)
    if side == solver.N:
        return _first_row_candidate(ut[e, :, p1 - 1], w[p1 - 1], w,
                                    gall[e, :, p1 - 1], Tface,
                                    fall[e, :-1, p1 - 1],
                                    fall[e, 1:, p1 - 1], dt, +1.0)
    return _first_row_candidate(ut[e, :, 0], w[0], w,
                                gall[e, :, 1], Tface,
                                fall[e, :-1, 0],
                                fall[e, 1:, 0], dt, -1.0)


def _first_rows_ok_all(ut, fall, gall, w, dt, Tsides):
    """Admissibility of the boundary-subcell rows for every (element, side)
    in one vectorized pass; returns a (4, ne) boolean array."""
    p1 = ut.shape[1]
    wpar = w[None, :, None]
    rows = {
        solver.E: ut[:, p1 - 1] - dt * (
            (Tsides[solver.E] - fall[:, p1 - 1]) / w[p1 - 1]
            + (gall[:, p1 - 1, 1:] - gall[:, p1 - 1, :-1]) / wpar),
        solver.W: ut[:, 0] - dt * (
            (fall[:, 1] - Tsides[solver.W]) / w[0]
            + (gall[:, 0, 1:] - gall[:, 0, :-1]) / wpar),
        solver.N: ut[:, :, p1 - 1] - dt * (
            (Tsides[solver.N] - gall[:, :, p1 - 1]) / w[p1 - 1]
            + (fall[:, 1:, p1 - 1] - fall[:, :-1, p1 - 1]) / wpar),
        solver.S: ut[:, :, 0] - dt * (
            (gall[:, :, 1] - Tsides[solver.S]) / w[0]
            + (fall[:, 1:, 0] - fall[:, :-1, 0]) / wpar),
    }
    ok = np.empty((4, ut.shape[0]), dtype=bool)
    for side, cand in rows.items():
        ok[side] = _is_adm(cand).all(axis=1)
    return ok


def lwfr_step(field: SolutionField, fi: FaceIndex, bcs, dt, t, prim=None,
              max_sweeps=5):
    """Advance field.u by one step of size dt; returns StepStats."""
    mesh = field.mesh
    basis = field.basis
    eos = field.eos
    ne = mesh.n_elements
    p1 = basis.n
    K = basis.N
    stats = StepStats(dt=dt)

    if prim is None:
        prim = field.recover_all()
    stats.min_rho = float(prim[..., 0].min())
    stats.min_p = float(prim[..., 3].min())

    # element-local Taylor recursion
    F = np.empty_like(field.u)
    G = np.empty_like(field.u)
    U = np.empty_like(field.u)
    uj = np.empty(field.u.shape + (K + 1,))
    ok = _kernels.lw_time_averages(field.u, mesh.met, mesh.detJ, basis.D,
                                   dt, K, eos.eos_id, eos.gamma,
                                   np.ascontiguousarray(prim[..., 3]),
                                   F, G, U, uj)
    if not ok.all():
        raise StepRejected("jet recursion failed in some elements")

    # blending weight
    Q = limiter.indicator_quantity(prim)
    alpha = limiter.smoothness_alpha(Q, basis, mesh=mesh)
    alpha = limiter.smooth_alpha_neighbors(alpha, mesh)
    stats.n_alpha = int(np.count_nonzero(alpha))

    # face fluxes in canonical orientation
    lw, fv, _lam, _uL, _uR = conformal_face_fluxes(fi, eos, F, G, U,
                                                   field.u, prim)
    mlw, mfv, _mlam, _muC, _muF = mortar_face_fluxes(fi, eos, F, G, U,
                                                     field.u, prim, basis)
    bfl = boundary_flux(fi, eos, bcs, t, dt, F, G, U, field.u, prim, uj,
                        basis)
    af = np.maximum(alpha[fi.fL], alpha[fi.fR]) if len(fi.fL) else np.zeros(0)
    phi_conf = lw + af[:, None, None] * (fv - lw)
    phi_mort = np.array(mlw)
    for r in (0, 1):
        if len(fi.mC):
            afm = np.maximum(alpha[fi.mC], alpha[fi.mF[:, r]])
            phi_mort[:, r] = (mlw[:, r] + afm[:, None, None]
                              * (mfv[:, r] - mlw[:, r]))

    # subcell FV fluxes in the interior
    fxi, geta = limiter.subcell_fv_fluxes(eos, prim, mesh.met, basis)
    ut = field.u.transpose(0, 2, 3, 1) * mesh.detJ[..., None]
    w = basis.weights

    # admissibility-limited face fluxes (largest theta toward the FV flux)
    for _sweep in range(max_sweeps):
        Tsides = _scatter_face_fluxes(fi, phi_conf, phi_mort, bfl, basis, ne)
        fall = np.concatenate([Tsides[solver.W][:, None], fxi,
                               Tsides[solver.E][:, None]], axis=1)
        gall = np.concatenate([Tsides[solver.S][:, :, None], geta,
                               Tsides[solver.N][:, :, None]], axis=2)
        changed = 0
        side_ok = _first_rows_ok_all(ut, fall, gall, w, dt, Tsides)
        # conformal faces
        sus = np.nonzero(~(side_ok[fi.sL, fi.fL] & side_ok[fi.sR, fi.fR]))[0] \
            if len(fi.fL) else []
        for k in sus:
            pairs = ((fi.fL[k], fi.sL[k]), (fi.fR[k], fi.sR[k]))
            changed += 1
            lo, hi = 0.0, 1.0
            base = fv[k]
            delta = phi_conf[k] - base
            for _ in range(20):
                mid = 0.5 * (lo + hi)
                phi_try = base + mid * delta
                good = all(
                    _is_adm(_face_first_rows(
                        side, e, ut, fall, gall, w, dt,
                        _face_value_for(side, e, k, fi, phi_try))).all()
                    for e, side in pairs)
                if good:
                    lo = mid
                else:
                    hi = mid
            phi_conf[k] = base + lo * delta
        # mortar halves (only those touching a suspicious element side)
        P = basis.transfer.P
        if len(fi.mC):
            m_sus = np.nonzero(~(side_ok[fi.msC, fi.mC]
                                 & side_ok[fi.msF, fi.mF[:, 0]]
                                 & side_ok[fi.msF, fi.mF[:, 1]]))[0]
        else:
            m_sus = []
        for k in m_sus:
            for r in (0, 1):
                base = mfv[k, r]
                delta = phi_mort[k, r] - base
                if _mortar_ok(fi, k, r, phi_mort, ut, fall, gall, w, dt, P):
                    continue
                changed += 1
                lo, hi = 0.0, 1.0
                for _ in range(20):
                    mid = 0.5 * (lo + hi)
                    phi_mort[k, r] = base + mid * delta
                    if _mortar_ok(fi, k, r, phi_mort, ut, fall, gall, w,
                                  dt, P):
                        lo = mid
                    else:
                        hi = mid
                phi_mort[k, r] = base + lo * delta
        stats.n_fluxlim += changed
        if changed == 0:
            break

    Tsides = _scatter_face_fluxes(fi, phi_conf, phi_mort, bfl, basis, ne)

    # high-order update with the shared fluxes
    dF = reconstruct_derivative(F, Tsides[solver.W], Tsides[solver.E],
                                basis, axis=0)
    dG = reconstruct_derivative(G, Tsides[solver.S], Tsides[solver.N],
                                basis, axis=1)
    u_high = field.u - dt / mesh.detJ[:, None] * (dF + dG)

    # low-order update with the same fluxes
    u_low = limiter.low_order_update(field.u, mesh.detJ, fxi, geta,
                                     Tsides[solver.W], Tsides[solver.E],
                                     Tsides[solver.S], Tsides[solver.N],
                                     dt, basis)
    u_new = limiter.blend(u_high, u_low, alpha)

    avg = field.element_averages(u_new)
    q_avg = avg[:, 3] - np.sqrt(avg[:, 0] ** 2 + avg[:, 1] ** 2
                                + avg[:, 2] ** 2)
    if np.any(avg[:, 0] <= 0.0) or np.any(q_avg <= 0.0):
        raise StepRejected("inadmissible element average after blending")

    u_new, theta = limiter.zhang_shu_scale(u_new, avg)
    stats.n_theta = int(np.count_nonzero(theta < 1.0))
    nodes = u_new.transpose(0, 2, 3, 1)
    qmin = float(_q_of(nodes).min())
    stats.min_q = qmin
    if qmin <= 0.0 or nodes[..., 0].min() <= 0.0:
        raise StepRejected("inadmissible node after scaling")
    field.u = u_new
    return stats


def _face_value_for(side, e, k, fi, phi):
    """Element-convention face flux from a canonical conformal value."""
    if e == fi.fL[k] and side == fi.sL[k]:
        return SIGN[side] * phi
    val = SIGN[side] * (-phi)
    return val[::-1] if fi.fflip[k] else val


def _mortar_values_for(fi, k, phi_mort, P):
    """(coarse Tstar, fine Tstar half 0, fine Tstar half 1)."""
    proj = sum(P[r] @ phi_mort[k, r] for r in (0, 1))
    Tc = SIGN[fi.msC[k]] * proj
    out_f = []
    for r in (0, 1):
        TF = SIGN[fi.msF[k]] * (-0.5 * phi_mort[k, r])
        out_f.append(TF[::-1] if fi.mflip[k] else TF)
    return Tc, out_f[0], out_f[1]


def _mortar_ok(fi, k, r, phi_mort, ut, fall, gall, w, dt, P):
    Tc, Tf0, Tf1 = _mortar_values_for(fi, k, phi_mort, P)
    e_c, s_c = fi.mC[k], fi.msC[k]
    cand = _face_first_rows(s_c, e_c, ut, fall, gall, w, dt, Tc)
    if not _is_adm(cand).all():
        return False
    ef = fi.mF[k, r]
    cand = _face_first_rows(fi.msF[k], ef, ut, fall, gall, w, dt,
                            (Tf0, Tf1)[r])
    return _is_adm(cand).all()


def regrid_now(field: SolutionField, cfg: amr.AmrConfig, prim=None):
    """One controller pass: mark, regrid, transfer.  Returns a fresh
    FaceIndex (or None if the topology did not change)."""
    mesh = field.mesh
    if prim is None:
        prim = field.recover_all()
    Q = limiter.indicator_quantity(prim)
    beta = amr.loehner_beta(Q)
    refine, coarsen = amr.controller(beta, mesh.levels, cfg)
    if len(refine) == 0 and len(coarsen) == 0:
        return None
    old_leaves = tuple(mesh.leaves)
    old_index = dict(mesh.leaf_index)
    u_old = field.u
    mesh.regrid(refine, coarsen)
    if tuple(mesh.leaves) == old_leaves:
        return None   # marks existed but every one was vetoed
    field.u = amr.transfer_solution(mesh, old_index, mesh.last_merged, u_old)
    return FaceIndex(mesh)


def init_with_amr(field: SolutionField, cfg: amr.AmrConfig, ic_fn,
                  max_iters=None):
    """Refine everything to max_level, then let the controller settle while
    re-evaluating the initial condition analytically after each pass."""
    mesh = field.mesh
    for _ in range(cfg.max_level):
        mesh.regrid(list(range(mesh.n_elements)), [])
    _set_ic(field, ic_fn)
    iters = cfg.max_level + 2 if max_iters is None else max_iters
    for _ in range(iters):
        fi = regrid_now(field, cfg)
        if fi is None:
            break
        _set_ic(field, ic_fn)
    return FaceIndex(mesh)


def _set_ic(field, ic_fn):
    mesh = field.mesh
    rho, v1, v2, p = ic_fn(mesh.x, mesh.y)
    prim = np.stack(np.broadcast_arrays(rho + 0.0 * mesh.x, v1 + 0.0 * mesh.x,
                                        v2 + 0.0 * mesh.x, p + 0.0 * mesh.x),
                    axis=-1)
    field.u = np.ascontiguousarray(
        limiter._prim_to_cons(field.eos, prim).transpose(0, 3, 1, 2))


def advance(field: SolutionField, bcs, t_end, cfl_safety=0.95,
            amr_cfg=None, t0=0.0, max_rejects=8, on_step=None):
    """Run to t_end with CFL steps (last step clipped).  Returns RunReport."""
    report = RunReport()
    wall0 = time.time()
    fi = FaceIndex(field.mesh)
    t = t0
    while t < t_end - 1e-14 * max(1.0, abs(t_end)):
        if (amr_cfg is not None and amr_cfg.interval > 0
                and report.steps % amr_cfg.interval == 0):
            fi_new = regrid_now(field, amr_cfg)
            if fi_new is not None:
                fi = fi_new
        prim = field.recover_all()
        dt = compute_dt(field, prim, cfl_safety)
        dt = min(dt, t_end - t)
        for attempt in range(max_rejects + 1):
            try:
                stats = lwfr_step(field, fi, bcs, dt, t, prim=prim)
                break
            except StepRejected:
                report.rejected += 1
                dt *= 0.5
                if attempt == max_rejects:
                    raise
        t += dt
        report.steps += 1
        report.element_steps += field.mesh.n_elements
        report.element_history.append(field.mesh.n_elements)
        report.min_rho = min(report.min_rho, stats.min_rho)
        report.min_p = min(report.min_p, stats.min_p)
        report.min_q = min(report.min_q, stats.min_q)
        report.alpha_steps += int(stats.n_alpha > 0)
        report.fluxlim_faces += stats.n_fluxlim
        if on_step is not None:
            on_step(t, field, stats, report)
    report.wall_time = time.time() - wall0
    return report
