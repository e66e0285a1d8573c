"""Equations of state and state conversions for 2D special RHD.

Works in units with c = 1.  Conservative variables are u = (D, m1, m2, E)
with D = rho*Gamma, m_i = rho*h*v_i*Gamma^2, E = rho*h*Gamma^2 - p.
Primitive variables are (rho, v1, v2, p).

All four supported equations of state have a specific enthalpy of the form
h = H(x) with x = p/rho:

    ideal:  H = 1 + gamma/(gamma-1) * x
    tm:     H = 2.5*x + sqrt(2.25*x^2 + 1)
    ip:     H = 2*x   + sqrt(4*x^2 + 1)
    rc:     H = 2*(6*x^2 + 4*x + 1) / (3*x + 2)

which keeps conversions and sound speeds purely algebraic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "Eos",
    "PrimState",
    "ConsState",
    "EosError",
    "AdmissibilityError",
    "RecoveryError",
    "enthalpy",
    "enthalpy_x",
    "sound_speed",
    "lorentz",
    "prim_to_cons",
    "cons_to_prim",
    "is_admissible_prim",
    "is_admissible_cons",
    "q_cons",
]

IDEAL, TM, IP, RC = 0, 1, 2, 3
_KIND_IDS = {"ideal": IDEAL, "tm": TM, "ip": IP, "rc": RC}


class EosError(ValueError):
    """Bad thermodynamic input (non-finite, out of domain)."""


class AdmissibilityError(EosError):
    """State outside the physically admissible set."""


class RecoveryError(EosError):
    """Primitive recovery failed to converge."""


@dataclass(frozen=True)
class Eos:
    """Equation-of-state selector: kind in {ideal, tm, ip, rc}."""

    kind: str = "ideal"
    gamma: float = 5.0 / 3.0

    def __post_init__(self):
        if self.kind not in _KIND_IDS:
            raise EosError(f"unknown EOS kind {self.kind!r}")
        if self.kind == "ideal" and not (1.0 < self.gamma <= 2.0):
            raise EosError(f"ideal-gas gamma must lie in (1, 2], got {self.gamma}")

    @property
    def eos_id(self) -> int:
        return _KIND_IDS[self.kind]

    def __str__(self):
        if self.kind == "ideal":
            return f"ideal(gamma={self.gamma:g})"
        return self.kind


class PrimState(NamedTuple):
    rho: float
    v1: float
    v2: float
    p: float


class ConsState(NamedTuple):
    D: float
    m1: float
    m2: float
    E: float


def enthalpy_x(eos, x):
    """H(x) and H'(x) for x = p/rho.  Vectorized over x."""
    x = np.asarray(x, dtype=float)
    eid = eos.eos_id
    if eid == IDEAL:
        gp = eos.gamma / (eos.gamma - 1.0)
        return 1.0 + gp * x, gp * np.ones_like(x)
    if eid == TM:
        r = np.sqrt(2.25 * x * x + 1.0)
        return 2.5 * x + r, 2.5 + 2.25 * x / r
    if eid == IP:
        r = np.sqrt(4.0 * x * x + 1.0)
        return 2.0 * x + r, 2.0 + 4.0 * x / r
    den = 3.0 * x + 2.0
    h = 2.0 * (6.0 * x * x + 4.0 * x + 1.0) / den
    hp = 2.0 * (18.0 * x * x + 24.0 * x + 5.0) / (den * den)
    return h, hp


def enthalpy(eos, rho, p):
    """Specific enthalpy h(rho, p) >= 1."""
    rho = np.asarray(rho, dtype=float)
    p = np.asarray(p, dtype=float)
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(p))):
        raise EosError("non-finite (rho, p)")
    if np.any(rho <= 0.0) or np.any(p < 0.0):
        raise EosError("enthalpy needs rho > 0 and p >= 0")
    h, _ = enthalpy_x(eos, p / rho)
    return h if h.ndim else float(h)


def sound_speed(eos, rho, p):
    """Adiabatic sound speed from s^2 = -rho*h_rho / (h*(rho*h_p - 1)).

    With h = H(p/rho) this collapses to s^2 = x*H'/(H*(H'-1)), x = p/rho.
    For the ideal EOS it reduces to the familiar s^2 = gamma*p/(rho*h).
    """
    rho = np.asarray(rho, dtype=float)
    p = np.asarray(p, dtype=float)
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(p))):
        raise EosError("non-finite (rho, p)")
    if np.any(rho <= 0.0) or np.any(p <= 0.0):
        raise EosError("sound speed needs rho > 0 and p > 0")
    x = p / rho
    h, hp = enthalpy_x(eos, x)
    s2 = x * hp / (h * (hp - 1.0))
    if np.any(s2 <= 0.0) or np.any(s2 >= 1.0):
        raise AdmissibilityError("sound speed squared outside (0, 1)")
    s = np.sqrt(s2)
    return s if s.ndim else float(s)


def lorentz(v1, v2):
    """Lorentz factor 1/sqrt(1 - |v|^2); requires |v| < 1."""
    v2sq = np.asarray(v1, dtype=float) ** 2 + np.asarray(v2, dtype=float) ** 2
    if np.any(~np.isfinite(v2sq)) or np.any(v2sq >= 1.0):
        raise AdmissibilityError("|v| >= 1")
    g = 1.0 / np.sqrt(1.0 - v2sq)
    return g if g.ndim else float(g)


def prim_to_cons(eos, prim):
    """(rho, v1, v2, p) -> (D, m1, m2, E)."""
    rho, v1, v2, p = (np.asarray(c, dtype=float) for c in prim)
    if not is_admissible_prim(PrimState(rho, v1, v2, p)):
        raise AdmissibilityError("inadmissible primitive state")
    g = lorentz(v1, v2)
    h, _ = enthalpy_x(eos, p / rho)
    rhg2 = rho * h * g * g
    D = rho * g
    out = ConsState(D, rhg2 * v1, rhg2 * v2, rhg2 - p)
    if np.asarray(D).ndim == 0:
        out = ConsState(*(float(c) for c in out))
    return out


def q_cons(cons):
    """Admissibility margin q(u) = E - sqrt(D^2 + |m|^2)."""
    D, m1, m2, E = (np.asarray(c, dtype=float) for c in cons)
    return E - np.sqrt(D * D + m1 * m1 + m2 * m2)


def is_admissible_prim(prim) -> bool:
    rho, v1, v2, p = (np.asarray(c, dtype=float) for c in prim)
    vals = np.broadcast_arrays(rho, v1, v2, p)
    if not all(np.all(np.isfinite(v)) for v in vals):
        return False
    # epsilon = h - p/rho - 1 > 0 follows from p > 0 for all four EOSs
    return bool(np.all(rho > 0.0) and np.all(p > 0.0)
                and np.all(v1 * v1 + v2 * v2 < 1.0))


def is_admissible_cons(cons) -> bool:
    D = np.asarray(cons[0], dtype=float)
    q = q_cons(cons)
    if not (np.all(np.isfinite(D)) and np.all(np.isfinite(q))):
        return False
    return bool(np.all(D > 0.0) and np.all(q > 0.0))


def _psi(eos, p, D, m2sq, E):
    """Pressure residual psi(p) = rho*h*Gamma^2 - p - E and d(psi)/dp.

    Uses S = E + p, A = S^2 - |m|^2, B = sqrt(A):
        rho*h*Gamma^2 = D*S*H(x)/B   with x = p*S/(D*B).
    """
    S = E + p
    A = S * S - m2sq
    if A <= 0.0:
        return math.inf, math.inf
    B = math.sqrt(A)
    x = p * S / (D * B)
    h, hp = enthalpy_x(eos, x)
    h = float(h)
    hp = float(hp)
    psi = D * S * h / B - p - E
    dpsi = (-D * h * m2sq / (B * A)
            + S * hp * ((S + p) * A - p * S * S) / (A * A)
            - 1.0)
    return psi, dpsi


def _recover_scalar(eos, D, m1, m2, E):
    if not all(map(math.isfinite, (D, m1, m2, E))):
        raise AdmissibilityError("non-finite conservative state")
    m2sq = m1 * m1 + m2 * m2
    mabs = math.sqrt(m2sq)
    if D <= 0.0 or E - math.sqrt(D * D + m2sq) <= 0.0:
        raise AdmissibilityError("inadmissible conservative state")
    p_lo = max(1e-15, mabs - E + 1e-15 * E)
    tol = 1e-12 * max(1.0, E)

    # grow an upper bracket from an ideal-gas style estimate
    p_hi = max((E - math.sqrt(D * D + m2sq)) / 3.0, p_lo * 2.0, 1e-10)
    f_hi, _ = _psi(eos, p_hi, D, m2sq, E)
    grow = 0
    while f_hi < 0.0 and grow < 200:
        p_hi *= 2.0
        f_hi, _ = _psi(eos, p_hi, D, m2sq, E)
        grow += 1
    if f_hi < 0.0:
        raise RecoveryError("no sign change while bracketing pressure")

    p = 0.5 * (p_lo + p_hi)
    f, df = _psi(eos, p, D, m2sq, E)
    p_best, f_best, df_best = p, f, df
    for _ in range(100):
        if abs(f) <= tol:
            break
        if f > 0.0:
            p_hi = p
        else:
            p_lo = p
        p_new = p - f / df if df > 0.0 else p_lo - 1.0
        if not (p_lo < p_new < p_hi):
            p_new = 0.5 * (p_lo + p_hi)
        p = p_new
        f, df = _psi(eos, p, D, m2sq, E)
        if abs(f) < abs(f_best):
            p_best, f_best, df_best = p, f, df
    else:
        # ultra-relativistic states (|m| -> E) drive the roundoff noise of
        # psi above tol through the S^2 - |m|^2 cancellation; the bracket
        # has localized the root, so accept the best iterate against the
        # cancellation-aware noise floor
        p, f, df = p_best, f_best, df_best
        S = E + p
        A = S * S - m2sq
        noise = 64.0 * 2.3e-16 * max(1.0, E) * (S * S / max(A, 1e-300))
        if abs(f) > max(tol, noise):
            raise RecoveryError("pressure iteration did not converge")
    # plain Newton polish towards machine accuracy (guarded, at most 2 steps)
    for _ in range(2):
        if f == 0.0 or df <= 0.0:
            break
        p_try = p - f / df
        if p_try <= 0.0:
            break
        f_try, df_try = _psi(eos, p_try, D, m2sq, E)
        if abs(f_try) >= abs(f):
            break
        p, f, df = p_try, f_try, df_try

    S = E + p
    v1 = m1 / S
    v2 = m2 / S
    g = lorentz(v1, v2)
    return PrimState(D / g, v1, v2, p)


def cons_to_prim(eos, cons):
    """Recover (rho, v1, v2, p) by a safeguarded Newton on the pressure.

    Reference implementation; the solver hot path uses the compiled kernel
    in ``_kernels`` (cross-checked in the test suite).
    """
    D, m1, m2, E = cons
    if np.asarray(D).ndim == 0:
        return _recover_scalar(eos, float(D), float(m1), float(m2), float(E))
    D, m1, m2, E = (np.asarray(c, dtype=float) for c in (D, m1, m2, E))
    rho = np.empty_like(D)
    v1 = np.empty_like(D)
    v2 = np.empty_like(D)
    p = np.empty_like(D)
    it = np.nditer(D, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        rho[i], v1[i], v2[i], p[i] = _recover_scalar(
            eos, D[i], m1[i], m2[i], E[i])
    return PrimState(rho, v1, v2, p)
