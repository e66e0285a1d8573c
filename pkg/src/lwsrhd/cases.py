"""Test-case library: initial data, domains, boundary recipes, defaults.

Each case bundles an initial condition (x, y) -> (rho, v1, v2, p), an
optional exact solution (x, y, t), a default mesh recipe, default boundary
conditions, EOS/degree/final-time defaults and AMR settings scaled to desk
size (the paper-scale levels remain reachable through the config file).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .amr import AmrConfig
from .eos import Eos
from .solver import BoundaryCondition

__all__ = ["CaseDefinition", "case_library", "get_case", "MAPS"]


# ---------------------------------------------------------------------------
# domain maps

def map_identity(xh, yh):
    return xh, yh


def map_distorted_square(xh, yh):
    """Distorted unit square with two curved and two straight boundaries."""
    x = xh + 0.1 * np.cos(np.pi * xh / 2) * np.cos(2 * np.pi * yh)
    y = yh + 0.1 * np.cos(np.pi * yh / 2) * np.cos(np.pi * xh)
    return x, y


def map_wavy_vortex(xh, yh):
    """[0,1]^2 onto the wavy [-20,20]^2 vortex domain."""
    x = 40 * xh - 4 * np.sin(2 * np.pi * yh) - 20
    y = 40 * yh + 4 * np.sin(2 * np.pi * xh) - 20
    return x, y


def map_sine_periodic(xh, yh):
    """Geometry-periodic curved perturbation of the unit square."""
    s = 0.1 * np.sin(2 * np.pi * xh) * np.sin(2 * np.pi * yh)
    return xh + s, yh + s


MAPS = {
    "identity": map_identity,
    "distorted_square": map_distorted_square,
    "wavy_vortex": map_wavy_vortex,
    "sine_periodic": map_sine_periodic,
}


@dataclass
class CaseDefinition:
    name: str
    ic: Callable
    eos: Eos
    N: int
    t_end: float
    mesh_map: str = "identity"
    base_nx: int = 1
    base_ny: int = 1
    domain: tuple = ((0.0, 1.0), (0.0, 1.0))
    periodic: tuple = (False, False)
    bcs: dict = field(default_factory=dict)
    exact: Optional[Callable] = None
    amr: Optional[AmrConfig] = None
    cfl_safety: float = 0.95
    pad_domain: float = 0.0
    notes: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# individual cases

_VS = 0.99 / math.sqrt(2.0)


def _smooth_exact(x, y, t):
    rho = 1.0 + 0.999 * np.sin(2 * np.pi * (x + y - 2.0 * _VS * t))
    return rho, _VS, _VS, 0.01


def _case_smooth():
    return CaseDefinition(
        name="sinusoidal_smooth",
        ic=lambda x, y: _smooth_exact(x, y, 0.0),
        exact=_smooth_exact,
        eos=Eos("ideal", 4.0 / 3.0),
        N=3, t_end=0.2,
        mesh_map="distorted_square", base_nx=16, base_ny=16,
        bcs={t: BoundaryCondition("auto", state=_smooth_exact)
             for t in ("left", "right", "top", "bottom")},
    )


def _case_freestream():
    const = (1.0, 0.1, 0.2, 0.8)

    def ic(x, y):
        one = np.ones_like(np.asarray(x, dtype=float))
        return const[0] * one, const[1] * one, const[2] * one, const[3] * one

    return CaseDefinition(
        name="freestream",
        ic=ic,
        exact=lambda x, y, t: ic(x, y),
        eos=Eos("ideal", 4.0 / 3.0),
        N=3, t_end=1.0,
        mesh_map="distorted_square", base_nx=16, base_ny=16,
        bcs={t: BoundaryCondition("auto", state=lambda x, y, tt: ic(x, y))
             for t in ("left", "right", "top", "bottom")},
    )


def _vortex_fields(x, y, gamma, w, eps):
    phi = 1.0 / math.sqrt(1.0 - w * w)
    x0 = x + (phi - 1.0) / 2.0 * (x + y)
    y0 = y + (phi - 1.0) / 2.0 * (x + y)
    r2 = x0 * x0 + y0 * y0
    a = (gamma - 1.0) / gamma * eps * eps / (8.0 * math.pi ** 2)
    expf = np.exp(1.0 - r2)
    rho = np.maximum(1.0 - a * expf, 1e-12) ** (1.0 / (gamma - 1.0))
    p = rho ** gamma
    b = 2.0 * gamma * a * expf / (2.0 * gamma - 1.0 - gamma * a * expf)
    fac = np.sqrt(np.maximum(b / (1.0 + b * r2), 0.0))
    v1p = -y0 * fac
    v2p = x0 * fac
    den = 1.0 - w * (v1p + v2p) / math.sqrt(2.0)
    shift = -w / math.sqrt(2.0) + phi * w * w / (2.0 * (phi + 1.0)) * (v1p + v2p)
    v1 = (v1p / phi + shift) / den
    v2 = (v2p / phi + shift) / den
    return rho, v1, v2, p


def _case_vortex():
    gamma = 5.0 / 3.0
    w = 0.5 * math.sqrt(2.0)
    eps = 5.0
    c = w / math.sqrt(2.0)   # translation velocity per component

    def exact(x, y, t):
        # periodic translation on the 40-periodic wavy domain
        xs = (x - c * t + 20.0) % 40.0 - 20.0
        ys = (y - c * t + 20.0) % 40.0 - 20.0
        return _vortex_fields(xs, ys, gamma, w, eps)

    return CaseDefinition(
        name="isentropic_vortex",
        ic=lambda x, y: exact(x, y, 0.0),
        exact=exact,
        eos=Eos("ideal", gamma),
        N=3, t_end=80.0,
        mesh_map="wavy_vortex", base_nx=10, base_ny=10,
        periodic=(True, True),
    )


def _case_blast():
    inner = (1.0, 0.0, 0.0, 1.0)
    outer = (1e-6, 0.0, 0.0, 0.05)

    def ic(x, y):
        m = (x * x + y * y) < 0.25
        rho = np.where(m, inner[0], outer[0])
        p = np.where(m, inner[3], outer[3])
        z = np.zeros_like(rho)
        return rho, z, z, p

    def set_state(x, y, t):
        z = np.zeros_like(np.asarray(x, dtype=float))
        return outer[0] + z, z, z, outer[3] + z

    return CaseDefinition(
        name="blast",
        ic=ic,
        eos=Eos("rc"),
        N=4, t_end=0.35,
        mesh_map="identity", base_nx=1, base_ny=1,
        domain=((-1.0, 1.0), (-1.0, 1.0)),
        bcs={t: BoundaryCondition("auto", state=set_state)
             for t in ("left", "right", "top", "bottom")},
        amr=AmrConfig(0, 3, 5, 0.01, 0.1, 1),
        cfl_safety=0.4,
    )


def _case_shock_vortex():
    gamma = 1.4
    w = 0.9
    eps = 5.0
    post = (4.891497310766981, -0.388882958251919, 0.0, 11.894863258311670)

    def ic(x, y):
        rho, v1, v2, p = _vortex_fields(x, y, gamma, w, eps)
        m = x <= -6.0
        return (np.where(m, post[0], rho), np.where(m, post[1], v1),
                np.where(m, post[2], v2), np.where(m, post[3], p))

    def set_state(x, y, t):
        return ic(x, y)

    return CaseDefinition(
        name="shock_vortex",
        ic=ic,
        eos=Eos("ideal", gamma),
        N=4, t_end=19.0,
        mesh_map="identity", base_nx=2, base_ny=1,
        domain=((-17.0, 3.0), (-5.0, 5.0)),
        bcs={"left": BoundaryCondition("auto", state=set_state),
             "right": BoundaryCondition("auto", state=set_state),
             "top": BoundaryCondition("reflective"),
             "bottom": BoundaryCondition("reflective")},
        amr=AmrConfig(0, 4, 6, 0.002, 0.003, 1),
        cfl_safety=0.4,
    )


def _case_bubble_shock(which="1"):
    pre = (1.0, 0.0, 0.0, 0.05)
    post = (1.941272902134272, -0.200661045980881, 0.0, 0.15)
    rho_bubble = 0.1358 if which == "1" else 3.1538

    def ic(x, y):
        rho = np.where(x > 265.0, post[0], pre[0])
        v1 = np.where(x > 265.0, post[1], pre[1])
        p = np.where(x > 265.0, post[3], pre[3])
        bub = (x - 215.0) ** 2 + (y - 45.0) ** 2 < 25.0 ** 2
        rho = np.where(bub, rho_bubble, rho)
        return rho, v1, np.zeros_like(rho), p

    def set_state(x, y, t):
        rho = np.where(x > 265.0, post[0], pre[0])
        v1 = np.where(x > 265.0, post[1], pre[1])
        p = np.where(x > 265.0, post[3], pre[3])
        return rho, v1, np.zeros_like(rho), p

    eps = (0.03, 0.1) if which == "1" else (0.02, 0.09)
    return CaseDefinition(
        name=f"bubble_shock_{which}",
        ic=ic,
        eos=Eos("ip"),
        N=4, t_end=450.0,
        mesh_map="identity", base_nx=13, base_ny=4,
        domain=((0.0, 325.0), (0.0, 90.0)),
        bcs={"left": BoundaryCondition("auto", state=set_state),
             "right": BoundaryCondition("auto", state=set_state),
             "top": BoundaryCondition("reflective"),
             "bottom": BoundaryCondition("reflective")},
        amr=AmrConfig(0, 2, 3, eps[0], eps[1], 1),
        cfl_safety=0.4,
    )


def jet_ambient_pressure(eos: Eos, rho=1.0, vbeam=0.9999, mach=1.74):
    """Ambient pressure from the Mach number of the beam: the EOS sound
    speed at (rho, p) equals |v|/M.  Solved by bisection."""
    from .eos import sound_speed
    target = vbeam / mach
    lo, hi = 1e-10, 1.0
    while sound_speed(eos, rho, hi) < target:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("no pressure reaches the requested Mach number")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sound_speed(eos, rho, mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _case_jet():
    eos = Eos("rc")
    p_amb = jet_ambient_pressure(eos)

    def ic(x, y):
        one = np.ones_like(np.asarray(x, dtype=float))
        return one, 0.0 * one, 0.0 * one, p_amb * one

    def bottom_state(x, y, t):
        beam = np.abs(x) < 0.5
        rho = np.where(beam, 0.01, 1.0)
        v2 = np.where(beam, 0.9999, 0.0)
        return rho, np.zeros_like(rho), v2, p_amb * np.ones_like(rho)

    def ambient_state(x, y, t):
        one = np.ones_like(np.asarray(x, dtype=float))
        return one, 0.0 * one, 0.0 * one, p_amb * one

    return CaseDefinition(
        name="relativistic_jet",
        ic=ic,
        eos=eos,
        N=4, t_end=5.0,
        mesh_map="identity", base_nx=1, base_ny=1,
        domain=((-16.0, 16.0), (0.0, 32.0)),
        bcs={"bottom": BoundaryCondition("auto", state=bottom_state),
             "left": BoundaryCondition("auto", state=ambient_state),
             "right": BoundaryCondition("auto", state=ambient_state),
             "top": BoundaryCondition("auto", state=ambient_state)},
        amr=AmrConfig(0, 2, 4, 0.05, 0.1, 1),
        cfl_safety=0.4,
        notes={"ambient_pressure": p_amb, "mach": 1.74},
    )


def _quadrants(q1, q2, q3, q4):
    """Four-state initial data on the unit square (quadrants around 0.5)."""
    def ic(x, y):
        out = []
        for c in range(4):
            f = np.where((x > 0.5) & (y > 0.5), q1[c],
                         np.where((x < 0.5) & (y > 0.5), q2[c],
                                  np.where((x < 0.5) & (y < 0.5), q3[c],
                                           q4[c])))
            out.append(f)
        return tuple(out)
    return ic


def _case_riemann1():
    ic = _quadrants(
        (0.1, 0.0, 0.0, 20.0),
        (0.00414329639576, 0.9946418833556542, 0.0, 0.05),
        (0.01, 0.0, 0.0, 0.05),
        (0.00414329639576, 0.0, 0.9946418833556542, 0.05))

    def set_state(x, y, t):
        return ic(x, y)

    return CaseDefinition(
        name="riemann_1",
        ic=ic,
        eos=Eos("ip"),
        N=4, t_end=0.4,
        mesh_map="identity", base_nx=1, base_ny=1,
        bcs={t: BoundaryCondition("auto", state=set_state)
             for t in ("left", "right", "top", "bottom")},
        amr=AmrConfig(0, 3, 5, 0.07, 0.08, 1),
        cfl_safety=0.4,
        pad_domain=0.25,
    )


def _case_riemann2():
    ic = _quadrants(
        (0.5, 0.5, -0.5, 5.0),
        (1.0, 0.5, 0.5, 5.0),
        (3.0, -0.5, 0.5, 5.0),
        (1.5, -0.5, -0.5, 5.0))

    def set_state(x, y, t):
        return ic(x, y)

    return CaseDefinition(
        name="riemann_2",
        ic=ic,
        eos=Eos("tm"),
        N=4, t_end=0.4,
        mesh_map="identity", base_nx=1, base_ny=1,
        bcs={t: BoundaryCondition("auto", state=set_state)
             for t in ("left", "right", "top", "bottom")},
        amr=AmrConfig(0, 3, 5, 0.07, 0.08, 1),
        cfl_safety=0.4,
        pad_domain=0.25,
    )


def _case_kh():
    a = 0.01
    vs = 0.5
    eta0 = 0.1
    sigma = 0.1

    def ic(x, y):
        left = x < 0.0
        rho = np.where(left, 0.505 - 0.495 * np.tanh((x + 0.5) / a),
                       0.505 + 0.495 * np.tanh((x - 0.5) / a))
        v1 = np.where(left,
                      -eta0 * vs * np.sin(2 * np.pi * y)
                      * np.exp(-(x + 0.5) ** 2 / sigma),
                      eta0 * vs * np.sin(2 * np.pi * y)
                      * np.exp(-(x - 0.5) ** 2 / sigma))
        v2 = np.where(left, -vs * np.tanh((x + 0.5) / a),
                      vs * np.tanh((x - 0.5) / a))
        return rho, v1, v2, np.ones_like(rho)

    return CaseDefinition(
        name="kelvin_helmholtz",
        ic=ic,
        eos=Eos("rc"),
        N=4, t_end=3.0,
        mesh_map="identity", base_nx=2, base_ny=1,
        domain=((-1.0, 1.0), (-0.5, 0.5)),
        periodic=(True, True),
        amr=AmrConfig(0, 3, 5, 0.07, 0.1, 1),
        cfl_safety=0.4,
    )


def case_library():
    cases = [_case_smooth(), _case_freestream(), _case_vortex(),
             _case_blast(), _case_shock_vortex(), _case_bubble_shock("1"),
             _case_bubble_shock("2"), _case_jet(), _case_riemann1(),
             _case_riemann2(), _case_kh()]
    return {c.name: c for c in cases}


def get_case(name: str) -> CaseDefinition:
    lib = case_library()
    if name not in lib:
        raise KeyError(f"unknown case {name!r}; known: {', '.join(sorted(lib))}")
    return lib[name]
