"""Adaptivity: smoothness sensing, level control, solution transfer.

Refinement transfers interpolate the reference solution (|J| u) with the
two-level V operators and coarsening projects it back with the exact-mass
L2 projection, so element integrals are preserved to roundoff.  Newly
created nodal values are contracted toward the source element average
(shared factor per family) whenever they leave the admissible set, which
keeps the transfer conservative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .limiter import scale_theta
from .mesh import MeshTree

__all__ = ["AmrConfig", "loehner_beta", "controller", "prolong_family",
           "restrict_family", "transfer_solution"]

F_WAVE = 0.2    # Loehner filter weight


@dataclass
class AmrConfig:
    base_level: int = 0
    med_level: int = 0
    max_level: int = 0
    eps1: float = 0.01
    eps2: float = 0.1
    interval: int = 1

    def __post_init__(self):
        if not (0 <= self.base_level <= self.med_level <= self.max_level):
            raise ValueError("need base <= med <= max levels")
        if not (0.0 < self.eps1 < self.eps2):
            raise ValueError("need 0 < eps1 < eps2")


def loehner_beta(Q, fw=F_WAVE):
    """Normalized second-difference indicator per element.

    Q (ne, p1, p1) nodal indicator values; index shifts saturate at the
    element edges.  Returns max over nodes and both directions.
    """
    p1 = Q.shape[1]
    ip = np.minimum(np.arange(p1) + 1, p1 - 1)
    im = np.maximum(np.arange(p1) - 1, 0)

    def beta_dir(Qp, Qc, Qm):
        num = np.abs(Qp - 2.0 * Qc + Qm)
        den = (np.abs(Qp - Qc) + np.abs(Qc - Qm)
               + fw * (np.abs(Qp) + 2.0 * np.abs(Qc) + np.abs(Qm)))
        with np.errstate(divide="ignore", invalid="ignore"):
            b = np.where(den > 0.0, num / den, 0.0)
        return b

    bx = beta_dir(Q[:, ip, :], Q, Q[:, im, :])
    by = beta_dir(Q[:, :, ip], Q, Q[:, :, im])
    return np.maximum(bx, by).max(axis=(1, 2))


def controller(beta, levels, cfg: AmrConfig):
    """Marks from the three-level controller: refine where the target level
    exceeds the current one, coarsen where it is lower."""
    target = np.where(beta < cfg.eps1, cfg.base_level,
                      np.where(beta < cfg.eps2, cfg.med_level, cfg.max_level))
    refine = np.nonzero(target > levels)[0]
    coarsen = np.nonzero(target < levels)[0]
    return refine, coarsen


def prolong_family(mesh: MeshTree, parent_nid, u_parent):
    """Children nodal values from a parent's, via the reference solution.

    The interpolated quantity is |J_p| u in the parent's reference
    measure; a child's own Jacobian is |J_p|/4 (its reference square maps
    to a quadrant), hence the factor 4 in the back-division.
    """
    V = mesh.basis.transfer.V
    parent = mesh.nodes[parent_nid]
    ut = u_parent * parent.detJ[None, :, :]
    out = {}
    for c in parent.children:
        child = mesh.nodes[c]
        rx, ry = child.quadrant
        ct = np.einsum("ip,cpq,jq->cij", V[rx], ut, V[ry])
        out[c] = ct / (4.0 * child.detJ[None, :, :])
    return out


def restrict_family(mesh: MeshTree, parent, children_nodes, u_children):
    """Parent nodal values from four children (L2 projection of |J|u).

    Child reference solutions are rescaled to the parent measure
    (4 |J_c| = |J_p|) before projecting.
    """
    P = mesh.basis.transfer.P
    ut = 0.0
    for child, u_c in zip(children_nodes, u_children):
        rx, ry = child.quadrant
        ct = 4.0 * u_c * child.detJ[None, :, :]
        ut = ut + np.einsum("ip,cpq,jq->cij", P[rx], ct, P[ry])
    return ut / parent.detJ[None, :, :]


def _element_average(mesh, node, u):
    w = mesh.basis.weights
    mass = np.einsum("i,j,ij->", w, w, node.detJ)
    tot = np.einsum("i,j,cij->c", w, w, u * node.detJ[None])
    return tot / mass


def transfer_solution(mesh: MeshTree, old_index, old_nodes, u_old):
    """Map the solution onto the regridded mesh.

    old_index: nid -> active index before the regrid; old_nodes: the
    merged families recorded by the mesh ((parent_nid, [child_nids])).
    New leaves created by (possibly chained) splits are filled by
    prolongation from their nearest old-leaf ancestor; merged parents by
    projection from their recorded children.
    """
    p1 = mesh.basis.n
    u_new = np.zeros((mesh.n_elements, 4, p1, p1))
    merged = dict(old_nodes)
    fresh_by_source = {}
    for k, nid in enumerate(mesh.leaves):
        if nid in old_index:
            u_new[k] = u_old[old_index[nid]]
            continue
        if nid in merged:
            kids = merged[nid]
            u_new[k] = restrict_family(
                mesh, mesh.nodes[nid], [mesh.nodes[c] for c in kids],
                [u_old[old_index[c]] for c in kids])
            # nodal overshoots of the projection: contract about the own
            # average (a convex combination of the children's, admissible)
            avg = _element_average(mesh, mesh.nodes[nid], u_new[k])
            theta = scale_theta(
                u_new[k].transpose(1, 2, 0).reshape(1, -1, 4), avg[None])[0]
            if theta < 1.0:
                u_new[k] = (avg[:, None, None]
                            + theta * (u_new[k] - avg[:, None, None]))
            continue
        # chained prolongation from the nearest old-leaf ancestor
        chain = [nid]
        cur = mesh.nodes[nid].parent
        while cur >= 0 and cur not in old_index:
            chain.append(cur)
            cur = mesh.nodes[cur].parent
        if cur < 0:
            raise RuntimeError("new leaf without an old-leaf ancestor")
        chain.append(cur)
        chain.reverse()
        u_val = u_old[old_index[cur]]
        V = mesh.basis.transfer.V
        for parent_nid, child_nid in zip(chain[:-1], chain[1:]):
            parent = mesh.nodes[parent_nid]
            child = mesh.nodes[child_nid]
            rx, ry = child.quadrant
            ct = np.einsum("ip,cpq,jq->cij", V[rx],
                           u_val * parent.detJ[None], V[ry])
            u_val = ct / (4.0 * child.detJ[None])
        u_new[k] = u_val
        fresh_by_source.setdefault(cur, []).append(k)

    # family-shared admissibility scaling about the source average keeps
    # the total of each refined group exactly conserved
    for src, members in fresh_by_source.items():
        node = mesh.nodes[src]
        avg = _element_average(mesh, node, u_old[old_index[src]])
        nodes = np.stack([u_new[k].transpose(1, 2, 0).reshape(-1, 4)
                          for k in members])
        theta = float(scale_theta(nodes.reshape(1, -1, 4), avg[None])[0])
        if theta < 1.0:
            for k in members:
                u_new[k] = (avg[:, None, None]
                            + theta * (u_new[k] - avg[:, None, None]))
    return u_new
