"""Field expressions over snapshots.

Gradient-based expressions differentiate the nodal polynomial per element
(spectral differentiation through the curved metric terms recovered from
the stored coordinates).
"""

from __future__ import annotations

import numpy as np

from .reader import Snapshot, diff_matrix

__all__ = ["FIELDS", "evaluate"]


def _gradient(snap: Snapshot, comp):
    D = diff_matrix(snap.N)
    f = snap.prim[..., comp]
    fxi = np.einsum("ik,ekj->eij", D, f)
    feta = np.einsum("jk,eik->eij", D, f)
    xxi = np.einsum("ik,ekj->eij", D, snap.x)
    xeta = np.einsum("jk,eik->eij", D, snap.x)
    yxi = np.einsum("ik,ekj->eij", D, snap.y)
    yeta = np.einsum("jk,eik->eij", D, snap.y)
    det = xxi * yeta - xeta * yxi
    fx = (fxi * yeta - feta * yxi) / det
    fy = (-fxi * xeta + feta * xxi) / det
    return fx, fy


def evaluate(snap: Snapshot, name):
    """Nodal values of a named field expression; raises on unknown names."""
    if name == "rho":
        return snap.prim[..., 0]
    if name == "v1":
        return snap.prim[..., 1]
    if name == "v2":
        return snap.prim[..., 2]
    if name == "p":
        return snap.prim[..., 3]
    if name == "lnrho":
        return np.log(snap.prim[..., 0])
    if name == "lnp":
        return np.log(snap.prim[..., 3])
    if name == "vmag":
        return np.hypot(snap.prim[..., 1], snap.prim[..., 2])
    if name == "lorentz":
        v2 = snap.prim[..., 1] ** 2 + snap.prim[..., 2] ** 2
        return 1.0 / np.sqrt(1.0 - v2)
    if name == "schlieren":
        # log10(1 + |grad rho|), the shock-vortex figure quantity
        fx, fy = _gradient(snap, 0)
        return np.log10(1.0 + np.hypot(fx, fy))
    raise KeyError(f"unknown field {name!r}; known: {', '.join(FIELDS)}")


FIELDS = ("rho", "v1", "v2", "p", "lnrho", "lnp", "vmag", "lorentz",
          "schlieren")
