"""Run configuration, the run/convergence harnesses, and reports.

Configuration files are flat INI text with sections [run], [mesh], [amr],
[output]; the named case supplies every default, the file overrides.
"""

from __future__ import annotations

import configparser
import json
import math
import os
from dataclasses import dataclass, field as dfield
from typing import Optional

import numpy as np

from . import driver
from .amr import AmrConfig
from .basis import make_basis
from .cases import MAPS, CaseDefinition, get_case
from .eos import Eos
from .mesh import build_mapped_mesh, read_msh_quads
from .snapshots import write_snapshot, write_summary_csv
from .solver import SolutionField

__all__ = ["RunConfig", "ConfigError", "load_config", "build_field", "run",
           "convergence", "error_norms"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    case: str
    eos: Optional[Eos] = None
    N: Optional[int] = None
    t_end: Optional[float] = None
    cfl_safety: Optional[float] = None
    threads: int = 0
    mesh_map: Optional[str] = None
    nx: Optional[int] = None
    ny: Optional[int] = None
    mesh_file: Optional[str] = None
    pad_domain: Optional[float] = None
    amr_on: Optional[bool] = None
    amr: Optional[AmrConfig] = None
    out_dir: str = "out"
    snapshot_dt: float = 0.0
    formats: tuple = ("nodal-text", "summary-csv")

    def resolved(self):
        """Merge with the case defaults into a complete setup."""
        case = get_case(self.case)
        eos = self.eos or case.eos
        N = self.N if self.N is not None else case.N
        if not (1 <= N <= 8):
            raise ConfigError("polynomial degree N must be in [1, 8]")
        t_end = self.t_end if self.t_end is not None else case.t_end
        cfl = self.cfl_safety if self.cfl_safety is not None else case.cfl_safety
        amr = case.amr if self.amr is None else self.amr
        if self.amr_on is False:
            amr = None
        pad = self.pad_domain if self.pad_domain is not None else case.pad_domain
        return case, eos, N, t_end, cfl, amr, pad


def load_config(path) -> RunConfig:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigError(f"cannot read config file {path}")
    try:
        case = cp.get("run", "case")
    except (configparser.NoSectionError, configparser.NoOptionError) as exc:
        raise ConfigError("config needs [run] case = <name>") from exc
    cfg = RunConfig(case=case)
    run = cp["run"]
    if "eos" in run:
        gamma = run.getfloat("gamma", fallback=5.0 / 3.0)
        cfg.eos = Eos(run["eos"], gamma)
    if "n" in run:
        cfg.N = run.getint("n")
    if "t_end" in run:
        cfg.t_end = run.getfloat("t_end")
    if "cfl_safety" in run:
        cfg.cfl_safety = run.getfloat("cfl_safety")
    cfg.threads = run.getint("threads", fallback=0)
    if cp.has_section("mesh"):
        m = cp["mesh"]
        cfg.mesh_map = m.get("map", fallback=None)
        cfg.nx = m.getint("nx", fallback=None)
        cfg.ny = m.getint("ny", fallback=None)
        cfg.mesh_file = m.get("file", fallback=None)
        if "pad_domain" in m:
            cfg.pad_domain = m.getfloat("pad_domain")
    if cp.has_section("amr"):
        a = cp["amr"]
        if a.getboolean("enabled", fallback=True):
            base = a.getint("base_level", fallback=0)
            med = a.getint("med_level", fallback=base)
            mx = a.getint("max_level", fallback=med)
            cfg.amr = AmrConfig(base, med, mx,
                                a.getfloat("eps1", fallback=0.01),
                                a.getfloat("eps2", fallback=0.1),
                                a.getint("interval", fallback=1))
        else:
            cfg.amr_on = False
    if cp.has_section("output"):
        o = cp["output"]
        cfg.out_dir = o.get("dir", fallback=cfg.out_dir)
        cfg.snapshot_dt = o.getfloat("snapshot_dt", fallback=0.0)
        if "formats" in o:
            cfg.formats = tuple(s.strip() for s in o["formats"].split(","))
    return cfg


def build_field(cfg: RunConfig, nx=None, ny=None, amr_override="default"):
    """Mesh + field + boundary conditions for a config (optionally forcing
    a base resolution, used by the convergence harness)."""
    case, eos, N, t_end, cfl, amr_cfg, pad = cfg.resolved()
    if amr_override != "default":
        amr_cfg = amr_override
    basis = make_basis(N)
    (x0, x1), (y0, y1) = case.domain
    if pad > 0.0:
        wx = pad * (x1 - x0)
        wy = pad * (y1 - y0)
        dom = ((x0 - wx, x1 + wx), (y0 - wy, y1 + wy))
        scale = 1.0 + 2.0 * pad
    else:
        dom = case.domain
        scale = 1.0
    if cfg.mesh_file:
        mesh = read_msh_quads(cfg.mesh_file, basis)
    else:
        mp = MAPS[cfg.mesh_map or case.mesh_map]
        bx = nx if nx is not None else (cfg.nx or case.base_nx)
        by = ny if ny is not None else (cfg.ny or case.base_ny)
        if pad > 0.0:
            bx = max(1, int(round(bx * scale)))
            by = max(1, int(round(by * scale)))
        mesh = build_mapped_mesh(mp, bx, by, basis, domain=dom,
                                 periodic=case.periodic)
    field = SolutionField(mesh, eos)
    return case, field, dict(case.bcs), t_end, cfl, amr_cfg


def run(cfg: RunConfig, out_dir=None):
    """Advance the configured case to its final time, writing snapshots and
    the run report.  Returns (field, report)."""
    if cfg.threads > 0:
        import numba
        numba.set_num_threads(cfg.threads)
    case, field, bcs, t_end, cfl, amr_cfg = build_field(cfg)
    out = out_dir or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    if amr_cfg is not None:
        driver.init_with_amr(field, amr_cfg, case.ic)
    else:
        driver._set_ic(field, case.ic)

    snaps = []
    next_snap = [cfg.snapshot_dt if cfg.snapshot_dt > 0 else math.inf]

    def dump(t, tag):
        prim = field.recover_all()
        if "nodal-text" in cfg.formats:
            p = os.path.join(out, f"{case.name}_{tag}.snap")
            write_snapshot(p, field, prim, t, case.domain, case.name)
            snaps.append(p)
        if "summary-csv" in cfg.formats:
            write_summary_csv(os.path.join(out, f"{case.name}_{tag}.csv"),
                              field, prim, t)

    def on_step(t, fld, stats, rep):
        if t >= next_snap[0] - 1e-12:
            dump(t, f"t{t:.6f}")
            next_snap[0] += cfg.snapshot_dt

    dump(0.0, "t0")
    report = driver.advance(field, bcs, t_end, cfl_safety=cfl,
                            amr_cfg=amr_cfg, on_step=on_step)
    dump(t_end, "final")
    report.extra.update(case.notes)
    report.extra["snapshots"] = snaps
    with open(os.path.join(out, f"{case.name}_report.json"), "w") as f:
        json.dump({
            "case": case.name,
            "eos": str(field.eos),
            "N": field.basis.N,
            "t_end": t_end,
            "steps": report.steps,
            "rejected": report.rejected,
            "wall_time": report.wall_time,
            "element_steps": report.element_steps,
            "final_elements": field.mesh.n_elements,
            "min_rho": report.min_rho,
            "min_p": report.min_p,
            "min_q": report.min_q,
            "alpha_steps": report.alpha_steps,
            "fluxlim_faces": report.fluxlim_faces,
            "extra": {k: v for k, v in report.extra.items()
                      if k != "snapshots"},
        }, f, indent=2)
    return field, report


def error_norms(field: SolutionField, exact, t, component=0):
    """Discrete L2/Linf error of a primitive component vs the exact
    solution, by GLL quadrature over all elements."""
    mesh = field.mesh
    prim = field.recover_all()
    vals = exact(mesh.x, mesh.y, t)[component]
    err = prim[..., component] - vals
    w = mesh.basis.weights
    num = np.einsum("i,j,eij,eij->", w, w, err * err, mesh.detJ)
    vol = mesh.total_area()
    return math.sqrt(num / vol), float(np.abs(err).max())


def convergence(cfg: RunConfig, resolutions):
    """Uniform-mesh grid study; returns rows of
    (n, L2, Linf, order_L2, order_Linf)."""
    case = get_case(cfg.case)
    if case.exact is None:
        raise ConfigError(f"case {cfg.case} has no exact solution")
    rows = []
    prev = None
    for n in resolutions:
        case_, field, bcs, t_end, cfl, _ = build_field(cfg, nx=n, ny=n,
                                                       amr_override=None)
        driver._set_ic(field, case_.ic)
        driver.advance(field, bcs, t_end, cfl_safety=cfl, amr_cfg=None)
        l2, linf = error_norms(field, case_.exact, t_end)
        if prev is None:
            rows.append((n, l2, linf, math.nan, math.nan))
        else:
            rows.append((n, l2, linf, math.log2(prev[0] / l2),
                         math.log2(prev[1] / linf)))
        prev = (l2, linf)
    return rows
