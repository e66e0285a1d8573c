"""Reader round-trips, field expressions, and figure rendering."""

import os
import shutil
import subprocess
import sys

import numpy as np
import pytest

from postviz.fields import evaluate
from postviz.reader import diff_matrix, gll_nodes, read_snapshot
from postviz import render


def _make_snapshot_text(ne=2, N=2, time=0.25):
    """Handwritten snapshot in the documented format: ne unit squares in a
    row, bilinear geometry, smooth fields."""
    nodes = gll_nodes(N)
    p1 = N + 1
    lines = ["# lwsrhd nodal snapshot",
             "case handmade",
             "time %.17g" % time,
             f"N {N}",
             f"elements {ne}",
             "eos tm",
             "domain 0 %d 0 1" % ne]
    F = "%.17g"
    for e in range(ne):
        lines.append(f"element {e} {e % 2}")
        for i in range(p1):
            for j in range(p1):
                x = e + (nodes[i] + 1) / 2
                y = (nodes[j] + 1) / 2
                rho = 1.0 + 0.5 * np.sin(x + 2 * y)
                v1 = 0.3 * x
                v2 = -0.2 * y
                p = 2.0 + x * y
                detJ = 0.25
                lines.append(" ".join(
                    F % v for v in (x, y, rho, v1, v2, p, detJ)))
    return "\n".join(lines) + "\n"


@pytest.fixture
def snap(tmp_path):
    p = tmp_path / "hand.snap"
    p.write_text(_make_snapshot_text())
    return read_snapshot(str(p))


def test_reader_roundtrip_values(tmp_path):
    text = _make_snapshot_text()
    p = tmp_path / "a.snap"
    p.write_text(text)
    s = read_snapshot(str(p))
    assert s.time == 0.25
    assert s.N == 2
    assert s.n_elements == 2
    assert s.case == "handmade"
    assert s.eos == "tm"
    nodes = gll_nodes(2)
    x00 = 0 + (nodes[0] + 1) / 2
    assert s.x[0, 0, 0] == x00
    assert s.prim[0, 0, 0, 0] == 1.0 + 0.5 * np.sin(x00 + 2 * s.y[0, 0, 0])
    assert np.all(s.levels == [0, 1])


def test_reader_rejects_garbage(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("not a snapshot\n")
    with pytest.raises(ValueError):
        read_snapshot(str(p))


def test_reader_element_count_mismatch(tmp_path):
    text = _make_snapshot_text()
    p = tmp_path / "short.snap"
    p.write_text(text + "element 9 0\n" + " ".join(["0"] * 7) + "\n")
    with pytest.raises(ValueError):
        read_snapshot(str(p))


def test_field_expressions(snap):
    rho = evaluate(snap, "rho")
    assert np.allclose(evaluate(snap, "lnrho"), np.log(rho))
    g = evaluate(snap, "lorentz")
    v2 = snap.prim[..., 1] ** 2 + snap.prim[..., 2] ** 2
    assert np.allclose(g, 1 / np.sqrt(1 - v2))
    with pytest.raises(KeyError):
        evaluate(snap, "entropy")


def test_gradient_field_matches_analytic(snap):
    # rho = 1 + 0.5 sin(x + 2y): |grad rho| = 0.5 sqrt(5) |cos|; the N=2
    # interpolant carries an O(h^2) error, so compare loosely but uniformly
    s = evaluate(snap, "schlieren")
    ref = np.log10(1 + 0.5 * np.hypot(np.cos(snap.x + 2 * snap.y),
                                      2 * np.cos(snap.x + 2 * snap.y)))
    assert np.max(np.abs(s - ref)) < 0.05


def test_pseudocolor_render(snap, tmp_path):
    out = tmp_path / "rho.png"
    vmin, vmax = render.pseudocolor(snap, "rho", str(out), contours=10)
    assert out.exists() and out.stat().st_size > 0
    assert vmin < vmax


def test_pseudocolor_constant_field(snap, tmp_path):
    snap.prim[..., 3] = 7.0
    out = tmp_path / "p.png"
    vmin, vmax = render.pseudocolor(snap, "p", str(out))
    assert vmin == vmax == 7.0


def test_wireframe_levels(snap, tmp_path):
    out = tmp_path / "mesh.png"
    hist = render.mesh_wireframe(snap, str(out))
    assert out.exists()
    assert sum(hist.values()) == snap.n_elements
    assert hist == {0: 1, 1: 1}


def test_cut_samples_exact_nodal_values(snap):
    # a horizontal cut through a row of nodes returns those exact values
    y0 = snap.y[0, 0, 0]
    px, pv = render.cut_samples(snap, "rho", (0.0, y0, 2.0, y0), band=1e-9)
    assert len(px) > 0
    for xx, vv in zip(px, pv):
        mask = (np.abs(snap.x - xx) < 1e-12) & (np.abs(snap.y - y0) < 1e-12)
        assert np.any(mask)
        assert vv in snap.prim[..., 0][mask]


def test_cut_plot_constant_field(snap, tmp_path):
    snap.prim[..., 0] = 3.0
    out = tmp_path / "cut.png"
    n = render.cut_plot(snap, "rho", (0, 0, 2, 1), str(out))
    assert out.exists() and n > 0


def test_eoc_plot(tmp_path):
    csv1 = tmp_path / "a.csv"
    csv1.write_text("n,l2,linf,wall\n16,1e-4,1e-3,1.0\n32,6e-6,6e-5,8.0\n"
                    "64,4e-7,4e-6,70.0\n")
    out = tmp_path / "eoc.png"
    render.eoc_and_timing_plots([str(csv1)], str(out))
    assert out.exists() and out.stat().st_size > 0


def test_eoc_single_point(tmp_path):
    csv1 = tmp_path / "a.csv"
    csv1.write_text("n,l2,linf,wall\n16,1e-4,1e-3,1.0\n")
    out = tmp_path / "one.png"
    render.eoc_and_timing_plots([str(csv1)], str(out))
    assert out.exists()


def test_eoc_missing_column(tmp_path):
    csv1 = tmp_path / "a.csv"
    csv1.write_text("n,l2,linf\n16,1e-4,1e-3\n")
    with pytest.raises(ValueError, match="missing column"):
        render.eoc_and_timing_plots([str(csv1)], str(tmp_path / "x.png"))


def test_cli_smoke(tmp_path):
    from click.testing import CliRunner
    from postviz.cli import main
    p = tmp_path / "hand.snap"
    p.write_text(_make_snapshot_text())
    r = CliRunner().invoke(main, ["pseudocolor", str(p), "--field", "rho",
                                  "-o", str(tmp_path / "a.png")])
    assert r.exit_code == 0, r.output
    r = CliRunner().invoke(main, ["wireframe", str(p),
                                  "-o", str(tmp_path / "b.png")])
    assert r.exit_code == 0, r.output
    r = CliRunner().invoke(main, ["cut", str(p),
                                  "-o", str(tmp_path / "c.png")])
    assert r.exit_code == 0, r.output
    r = CliRunner().invoke(main, ["pseudocolor", str(p), "--field", "zzz",
                                  "-o", str(tmp_path / "d.png")])
    assert r.exit_code == 2


@pytest.mark.skipif(shutil.which("lwsrhd") is None,
                    reason="primary solver CLI not installed")
def test_roundtrip_with_primary_cli(tmp_path):
    """End-to-end over the external interface: run the solver, read its
    snapshot, and render every figure type."""
    ini = tmp_path / "run.ini"
    ini.write_text("[run]\ncase = blast\nt_end = 0.02\n"
                   "[amr]\nbase_level = 0\nmed_level = 1\nmax_level = 2\n"
                   f"[output]\ndir = {tmp_path}/out\n")
    res = subprocess.run(["lwsrhd", "run", "--config", str(ini)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    snap_path = tmp_path / "out" / "blast_final.snap"
    assert snap_path.exists()
    snap = read_snapshot(str(snap_path))
    assert snap.n_elements > 0
    render.pseudocolor(snap, "rho", str(tmp_path / "rho.png"))
    render.mesh_wireframe(snap, str(tmp_path / "mesh.png"))
    x0, x1, y0, y1 = snap.domain
    render.cut_plot(snap, "rho", (x0, y0, x1, y1), str(tmp_path / "cut.png"))
