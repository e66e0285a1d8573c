"""Reader for the solver's nodal-text snapshot format.

Standalone: parses the documented text format only, no solver imports.
Every element carries (N+1)^2 tensor-product nodal values at the
Gauss-Legendre-Lobatto points of its curved quadrilateral.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Snapshot", "read_snapshot", "gll_nodes", "diff_matrix"]


@dataclass
class Snapshot:
    time: float
    N: int
    eos: str
    case: str
    domain: tuple
    ids: np.ndarray       # (ne,)
    levels: np.ndarray    # (ne,)
    x: np.ndarray         # (ne, N+1, N+1)
    y: np.ndarray
    prim: np.ndarray      # (ne, N+1, N+1, 4): rho, v1, v2, p
    detJ: np.ndarray

    @property
    def n_elements(self):
        return len(self.ids)


def read_snapshot(path) -> Snapshot:
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or not lines[0].startswith("# lwsrhd nodal snapshot"):
        raise ValueError(f"{path}: not a lwsrhd nodal snapshot")
    meta = {}
    k = 1
    while k < len(lines) and not lines[k].startswith("element "):
        key, _, val = lines[k].partition(" ")
        meta[key] = val
        k += 1
    N = int(meta["N"])
    p1 = N + 1
    ne = int(meta["elements"])
    ids = np.empty(ne, dtype=int)
    levels = np.empty(ne, dtype=int)
    data = np.empty((ne, p1, p1, 7))
    for e in range(ne):
        head = lines[k].split()
        if head[0] != "element":
            raise ValueError(f"{path}: bad element header at line {k}")
        ids[e] = int(head[1])
        levels[e] = int(head[2])
        k += 1
        for i in range(p1):
            for j in range(p1):
                data[e, i, j] = np.fromstring(lines[k], sep=" ")
                k += 1
    if k != len(lines):
        raise ValueError(f"{path}: element count does not match the header")
    dom = tuple(float(v) for v in meta.get("domain", "0 1 0 1").split())
    return Snapshot(time=float(meta["time"]), N=N, eos=meta.get("eos", ""),
                    case=meta.get("case", ""), domain=dom, ids=ids,
                    levels=levels, x=data[..., 0], y=data[..., 1],
                    prim=data[..., 2:6], detJ=data[..., 6])


def gll_nodes(N):
    """Gauss-Legendre-Lobatto nodes on [-1, 1] (Newton on (1-x^2)P_N')."""
    if N == 1:
        return np.array([-1.0, 1.0])
    x = -np.cos(np.pi * np.arange(1, N) / N)
    for _ in range(100):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for k in range(1, N):
            p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
        dp = N * (x * p1 - p0) / (x * x - 1.0)
        dx = (1.0 - x * x) * dp / (N * (N + 1) * p1)
        x += dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    return np.concatenate(([-1.0], x, [1.0]))


def diff_matrix(N):
    """Nodal differentiation matrix at the GLL points."""
    nodes = gll_nodes(N)
    n = N + 1
    bw = np.ones(n)
    for i in range(n):
        for j in range(n):
            if i != j:
                bw[i] /= nodes[i] - nodes[j]
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (bw[j] / bw[i]) / (nodes[i] - nodes[j])
        D[i, i] = -D[i].sum()
    return D
