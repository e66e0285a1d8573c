"""1D nodal machinery on Gauss-Legendre-Lobatto points.

Holds everything the scheme needs per polynomial degree N: nodes/weights,
the nodal differentiation matrix, the g2 correction-function derivative
values at the nodes, and the two-level interpolation (V) / L2-projection
(P) transfer matrices used by mesh adaptation and mortars.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Basis", "TransferOps", "gll", "lagrange_eval", "make_basis"]

N_MIN, N_MAX = 1, 8


def _legendre(n, x):
    """P_n(x) and P_n'(x) by the three-term recurrence."""
    p0 = np.ones_like(x)
    p1 = x.copy()
    if n == 0:
        return p0, np.zeros_like(x)
    for k in range(1, n):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = n * (x * p1 - p0) / (x * x - 1.0)  # endpoints unused by callers
    return p1, dp


def gll(N):
    """GLL nodes (roots of (1-x^2)P_N') and weights w_i = 2/(N(N+1)P_N^2)."""
    if not (N_MIN <= N <= N_MAX):
        raise ValueError(f"degree N must be in [{N_MIN}, {N_MAX}], got {N}")
    if N == 1:
        return np.array([-1.0, 1.0]), np.array([1.0, 1.0])
    # Chebyshev-Gauss-Lobatto initial guesses for the interior roots
    x = -np.cos(np.pi * np.arange(1, N) / N)
    for _ in range(100):
        p, dp = _legendre(N, x)
        # Newton on q(x) = (1-x^2) P_N'(x); q' = -N(N+1) P_N via Legendre ODE
        dx = (1.0 - x * x) * dp / (N * (N + 1) * p)
        x += dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    nodes = np.concatenate(([-1.0], x, [1.0]))
    # symmetrize to kill the last rounding bit
    nodes = 0.5 * (nodes - nodes[::-1])
    pN, _ = _legendre(N, nodes)
    weights = 2.0 / (N * (N + 1) * pN * pN)
    return nodes, weights


def _bary_weights(nodes):
    n = len(nodes)
    w = np.ones(n)
    for i in range(n):
        for j in range(n):
            if i != j:
                w[i] /= nodes[i] - nodes[j]
    return w


def lagrange_eval(nodes, x):
    """Matrix L[k, j] = ell_j(x_k) of Lagrange basis values at points x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    bw = _bary_weights(nodes)
    L = np.empty((len(x), len(nodes)))
    for k, xk in enumerate(x):
        d = xk - nodes
        hit = np.isclose(d, 0.0, atol=1e-14)
        if hit.any():
            L[k] = 0.0
            L[k, np.argmax(hit)] = 1.0
        else:
            t = bw / d
            L[k] = t / t.sum()
    return L


def _diff_matrix(nodes):
    n = len(nodes)
    bw = _bary_weights(nodes)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (bw[j] / bw[i]) / (nodes[i] - nodes[j])
        D[i, i] = -np.sum(D[i, :])
    return D


@dataclass(frozen=True)
class TransferOps:
    """Two-level 1D transfer matrices for the halves I_0=[-1,0], I_1=[0,1].

    V[r][i, p] = ell_p(phi_r^{-1}(xi_i)) interpolates parent nodal data to
    child r.  P[r] is the L2 projection back to the parent, assembled with
    exact integrals (full mass matrix), so sum_r P[r] @ V[r] = I holds on
    degree-<=N data and integral totals are preserved exactly.
    """

    V: tuple
    P: tuple


@dataclass(frozen=True)
class Basis:
    N: int
    nodes: np.ndarray
    weights: np.ndarray
    D: np.ndarray                  # D[i, j] = ell_j'(xi_i)
    gLp: np.ndarray                # c_L'(xi_i) of the g2 correction
    gRp: np.ndarray                # c_R'(xi_i)
    transfer: TransferOps = field(repr=False)

    @property
    def n(self):
        return self.N + 1


def g2_correction_derivatives(N):
    """Nodal derivatives of the degree-(N+1) g2 correction functions.

    g2 is the member of the correction family that makes the FR scheme with
    GLL solution points coincide with the collocated DG-GLL scheme, which
    pins c_L'(xi) = -ell_0(xi)/w_0; at the GLL nodes that collapses to a
    single nonzero entry per function.
    """
    _, w = gll(N)
    gLp = np.zeros(N + 1)
    gRp = np.zeros(N + 1)
    gLp[0] = -1.0 / w[0]
    gRp[N] = 1.0 / w[N]
    return gLp, gRp


def g2_values(N, x):
    """(c_L(x), c_R(x)) by integrating the interpolant of c_L'.

    Only used by tests/diagnostics: the scheme itself needs the nodal
    derivative values only.
    """
    nodes, w = gll(N)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    # ell_0 in monomial form, then c_L(x) = 1 - (1/w_0) int_{-1}^x ell_0
    pts = nodes[1:]
    ell0 = np.poly1d(np.poly(pts) / np.prod(nodes[0] - pts))
    iell0 = ell0.integ()
    cL = 1.0 - (iell0(x) - iell0(-1.0)) / w[0]
    cR = 1.0 - (iell0(-x) - iell0(-1.0)) / w[0]
    return cL, cR


def _transfer_ops(nodes, weights):
    N = len(nodes) - 1
    # phi_0(xi) = 2 xi + 1 maps I_0 -> I, so phi_0^{-1}(xi) = (xi - 1)/2
    V0 = lagrange_eval(nodes, (nodes - 1.0) / 2.0)
    V1 = lagrange_eval(nodes, (nodes + 1.0) / 2.0)
    # exact integrals via Gauss-Legendre of sufficient order
    gx, gw = np.polynomial.legendre.leggauss(N + 2)
    Lg = lagrange_eval(nodes, gx)                  # ell_p at Gauss points
    M = (Lg * gw[:, None]).T @ Lg                  # M[i,p] = int ell_i ell_p
    # C_r[i, p] = int_{I_r} ell_i(xi) ell_p(phi_r(xi)) dxi, mapped to I
    C = []
    for half in (0, 1):
        y = (gx - 1.0) / 2.0 if half == 0 else (gx + 1.0) / 2.0
        Li = lagrange_eval(nodes, y)               # ell_i at mapped points
        C.append(0.5 * (Li * gw[:, None]).T @ Lg)
    Minv = np.linalg.inv(M)
    return TransferOps(V=(V0, V1), P=(Minv @ C[0], Minv @ C[1]))


_cache: dict = {}


def make_basis(N) -> Basis:
    if N not in _cache:
        nodes, weights = gll(N)
        gLp, gRp = g2_correction_derivatives(N)
        _cache[N] = Basis(N=N, nodes=nodes, weights=weights,
                          D=_diff_matrix(nodes), gLp=gLp, gRp=gRp,
                          transfer=_transfer_ops(nodes, weights))
    return _cache[N]
