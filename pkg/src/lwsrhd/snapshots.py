"""Nodal-text and summary-csv snapshot files.

The nodal-text format is the interchange surface for post-processing:

    # lwsrhd nodal snapshot
    time <t>
    N <degree>
    elements <count>
    eos <name>
    domain <x0> <x1> <y0> <y1>
    element <id> <level>
    <x> <y> <rho> <v1> <v2> <p> <detJ>     ... (N+1)^2 node lines, i-major

Floats are written with 17 significant digits, which round-trips float64
bit-exactly through the reader.
"""

from __future__ import annotations

import csv

import numpy as np

__all__ = ["write_snapshot", "read_snapshot", "write_summary_csv"]

FMT = "%.17g"


def write_snapshot(path, field, prim, t, domain, case_name=""):
    """Write the nodal-text snapshot of a solution field."""
    mesh = field.mesh
    p1 = mesh.basis.n
    lines = ["# lwsrhd nodal snapshot"]
    if case_name:
        lines.append(f"case {case_name}")
    lines.append("time " + FMT % t)
    lines.append(f"N {mesh.basis.N}")
    lines.append(f"elements {mesh.n_elements}")
    lines.append(f"eos {field.eos}")
    (x0, x1), (y0, y1) = domain
    lines.append("domain " + " ".join(FMT % v for v in (x0, x1, y0, y1)))
    for k, nid in enumerate(mesh.leaves):
        node = mesh.nodes[nid]
        lines.append(f"element {nid} {node.level}")
        for i in range(p1):
            for j in range(p1):
                vals = (mesh.x[k, i, j], mesh.y[k, i, j],
                        prim[k, i, j, 0], prim[k, i, j, 1],
                        prim[k, i, j, 2], prim[k, i, j, 3],
                        mesh.detJ[k, i, j])
                lines.append(" ".join(FMT % v for v in vals))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_snapshot(path):
    """Parse a nodal-text snapshot into a dict of arrays."""
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or not lines[0].startswith("# lwsrhd nodal snapshot"):
        raise ValueError("not a lwsrhd nodal snapshot")
    meta = {}
    k = 1
    while k < len(lines) and not lines[k].startswith("element "):
        key, _, val = lines[k].partition(" ")
        meta[key] = val
        k += 1
    N = int(meta["N"])
    p1 = N + 1
    n_el = int(meta["elements"])
    ids = np.empty(n_el, dtype=int)
    levels = np.empty(n_el, dtype=int)
    data = np.empty((n_el, p1, p1, 7))
    for e in range(n_el):
        head = lines[k].split()
        assert head[0] == "element"
        ids[e] = int(head[1])
        levels[e] = int(head[2])
        k += 1
        for i in range(p1):
            for j in range(p1):
                data[e, i, j] = [float(v) for v in lines[k].split()]
                k += 1
    out = {
        "time": float(meta["time"]),
        "N": N,
        "eos": meta.get("eos", ""),
        "case": meta.get("case", ""),
        "domain": tuple(float(v) for v in meta.get("domain", "0 1 0 1").split()),
        "ids": ids,
        "levels": levels,
        "x": data[..., 0],
        "y": data[..., 1],
        "prim": data[..., 2:6],
        "detJ": data[..., 6],
    }
    if len(out["ids"]) != n_el:
        raise ValueError("element count mismatch")
    return out


def write_summary_csv(path, field, prim, t):
    """Per-element averages of the primitive fields plus levels."""
    mesh = field.mesh
    w = mesh.basis.weights
    mass = np.einsum("i,j,eij->e", w, w, mesh.detJ)
    avg = np.einsum("i,j,eijc,eij->ec", w, w, prim, mesh.detJ) / mass[:, None]
    xc = np.einsum("i,j,eij,eij->e", w, w, mesh.x, mesh.detJ) / mass
    yc = np.einsum("i,j,eij,eij->e", w, w, mesh.y, mesh.detJ) / mass
    with open(path, "w", newline="") as f:
        wcsv = csv.writer(f)
        wcsv.writerow(["id", "level", "xc", "yc",
                       "rho_avg", "v1_avg", "v2_avg", "p_avg", "time"])
        for k, nid in enumerate(mesh.leaves):
            wcsv.writerow([nid, int(mesh.levels[k]), repr(float(xc[k])),
                           repr(float(yc[k])),
                           repr(float(avg[k, 0])), repr(float(avg[k, 1])),
                           repr(float(avg[k, 2])), repr(float(avg[k, 3])),
                           repr(float(t))])
