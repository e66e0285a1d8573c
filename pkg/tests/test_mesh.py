"""Mesh geometry, metric identities, file reading, and AMR topology."""

import numpy as np
import pytest

from lwsrhd.basis import make_basis
from lwsrhd.mesh import E, MeshError, N, S, W, build_mapped_mesh, read_msh_quads

# the distorted-square transformation with two curved and two straight edges
def distorted_square(xh, yh):
    x = xh + 0.1 * np.cos(np.pi * xh / 2) * np.cos(2 * np.pi * yh)
    y = yh + 0.1 * np.cos(np.pi * yh / 2) * np.cos(np.pi * xh)
    return x, y


def wavy_vortex_map(xh, yh):
    x = 40 * xh - 4 * np.sin(2 * np.pi * yh) - 20
    y = 40 * yh + 4 * np.sin(2 * np.pi * xh) - 20
    return x, y


def identity_map(xh, yh):
    return xh, yh


def test_identity_map_metrics():
    b = make_basis(3)
    mesh = build_mapped_mesh(identity_map, 2, 2, b)
    assert mesh.n_elements == 4
    # affine map: constant metrics, detJ = (1/4)^2 per unit-square quarter
    assert np.allclose(mesh.detJ, 1.0 / 16.0)
    assert np.allclose(mesh.met[..., 1], 0.0)  # xeta
    assert np.allclose(mesh.met[..., 2], 0.0)  # yxi
    assert np.allclose(mesh.total_area(), 1.0)


@pytest.mark.parametrize("N_", [2, 3, 4])
def test_distorted_square_mesh(N_):
    b = make_basis(N_)
    mesh = build_mapped_mesh(distorted_square, 16, 16, b)
    assert np.all(mesh.detJ > 0)


def test_wavy_vortex_mesh():
    b = make_basis(4)
    mesh = build_mapped_mesh(wavy_vortex_map, 10, 10, b)
    assert np.all(mesh.detJ > 0)


@pytest.mark.parametrize("N_", [1, 2, 3, 4])
def test_discrete_metric_identity(N_):
    # d/dxi (yeta) - d/deta (yxi) = 0 and similarly for x at every node
    b = make_basis(N_)
    mesh = build_mapped_mesh(distorted_square, 4, 4, b)
    D = b.D
    for k in range(mesh.n_elements):
        yeta, xeta, yxi, xxi = (mesh.met[k, :, :, c] for c in range(4))
        r1 = np.einsum("ik,kj->ij", D, yeta) - np.einsum("jk,ik->ij", D, yxi)
        r2 = np.einsum("ik,kj->ij", D, xeta) - np.einsum("jk,ik->ij", D, xxi)
        assert np.max(np.abs(r1)) < 1e-12
        assert np.max(np.abs(r2)) < 1e-12


def test_area_matches_shoelace_for_bilinear_quad():
    # single bilinear quad: GLL quadrature of detJ equals the polygon area
    b = make_basis(3)
    corners = np.array([[0.0, 0.0], [2.0, 0.2], [1.9, 1.4], [-0.1, 1.1]])

    def bilinear(xh, yh):
        xi = 2 * xh - 1
        eta = 2 * yh - 1
        nfun = np.array([(1 - xi) * (1 - eta), (1 + xi) * (1 - eta),
                         (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)]) / 4
        return (np.tensordot(nfun, corners[:, 0], axes=(0, 0)),
                np.tensordot(nfun, corners[:, 1], axes=(0, 0)))

    mesh = build_mapped_mesh(bilinear, 1, 1, b)
    x, y = corners[:, 0], corners[:, 1]
    shoelace = 0.5 * abs(sum(x[i] * y[(i + 1) % 4] - x[(i + 1) % 4] * y[i]
                             for i in range(4)))
    assert mesh.total_area() == pytest.approx(shoelace, abs=1e-12)


def test_mapped_mesh_total_area_quadrature():
    # total area of the distorted square via high-order quadrature oracle
    b = make_basis(4)
    mesh = build_mapped_mesh(distorted_square, 8, 8, b)
    gx, gw = np.polynomial.legendre.leggauss(30)
    xh = (gx + 1) / 2
    X, Y = np.meshgrid(xh, xh, indexing="ij")
    d = 1e-6
    xpx, ypx = distorted_square(X + d, Y)
    xmx, ymx = distorted_square(X - d, Y)
    xpy, ypy = distorted_square(X, Y + d)
    xmy, ymy = distorted_square(X, Y - d)
    jac = ((xpx - xmx) * (ypy - ymy) - (xpy - xmy) * (ypx - ymx)) / (2 * d) ** 2
    area = np.einsum("i,j,ij->", gw / 2, gw / 2, jac)
    assert mesh.total_area() == pytest.approx(area, rel=1e-8)


def test_face_bookkeeping_uniform():
    b = make_basis(2)
    mesh = build_mapped_mesh(identity_map, 3, 2, b)
    # every interior macro edge appears once; boundary edges tagged
    assert len(mesh.faces) == 3 * 1 + 2 * 2  # vertical(2*2) + horizontal(3*1)
    assert len(mesh.mortars) == 0
    assert len(mesh.boundary) == 2 * 3 + 2 * 2
    tags = {t for _, _, t in mesh.boundary}
    assert tags == {"left", "right", "top", "bottom"}


def test_periodic_mapped_mesh():
    b = make_basis(2)
    mesh = build_mapped_mesh(identity_map, 2, 2, b, periodic=(True, True))
    assert len(mesh.boundary) == 0
    assert len(mesh.faces) == 2 * 2 * 2  # every edge interior (wrapped)


def test_refine_topology_counts():
    b = make_basis(2)
    mesh = build_mapped_mesh(identity_map, 2, 2, b)
    mesh.regrid([0], [])
    assert mesh.n_elements == 7
    assert len(mesh.mortars) == 2
    # each edge of every element appears in exactly one face/mortar/boundary
    edge_count = 4 * mesh.n_elements
    seen = 2 * len(mesh.faces) + 3 * len(mesh.mortars) + len(mesh.boundary)
    assert seen == edge_count


def test_refine_then_coarsen_restores_topology():
    b = make_basis(2)
    mesh = build_mapped_mesh(identity_map, 2, 2, b)
    mesh.regrid([0], [])
    assert mesh.n_elements == 7
    kids = [k for k, nid in enumerate(mesh.leaves)
            if mesh.nodes[nid].level == 1]
    mesh.regrid([], kids)
    assert mesh.n_elements == 4
    assert len(mesh.mortars) == 0


def test_coarsen_incomplete_family_is_skipped():
    b = make_basis(2)
    mesh = build_mapped_mesh(identity_map, 2, 2, b)
    mesh.regrid([0], [])
    kids = [k for k, nid in enumerate(mesh.leaves)
            if mesh.nodes[nid].level == 1]
    mesh.regrid([], kids[:3])
    assert mesh.n_elements == 7


def test_two_level_balance_enforced():
    b = make_basis(2)
    mesh = build_mapped_mesh(identity_map, 2, 2, b)
    mesh.regrid([0], [])
    # refine a level-1 child twice while its macro neighbor stays level 0:
    # balance must insert intermediate refinement
    k = next(k for k, nid in enumerate(mesh.leaves)
             if mesh.nodes[nid].level == 1)
    mesh.regrid([k], [])
    levels = mesh.levels
    # check the invariant via the face lists: mortars connect level l and l+1
    for (c, _sc, f0, f1, _sf, _fl) in mesh.mortars:
        assert levels[f0] == levels[c] + 1
        assert levels[f1] == levels[c] + 1
    for (a, _sa, bb, _sb, _fl) in mesh.faces:
        assert levels[a] == levels[bb]


def test_child_geometry_restriction_matches_map():
    # children evaluated from the parent's polynomial, which reproduces the
    # global map exactly when the map itself is polynomial of degree <= N
    b = make_basis(3)

    def poly_map(xh, yh):
        return xh + 0.2 * xh * yh, yh - 0.1 * xh ** 2

    mesh = build_mapped_mesh(poly_map, 2, 2, b)
    mesh.regrid([0], [])
    for k, nid in enumerate(mesh.leaves):
        node = mesh.nodes[nid]
        if node.level != 1:
            continue
        # recover the reference-square coordinates for this child and
        # compare the stored geometry against the analytic map
        parent = mesh.nodes[node.parent]
        rx, ry = node.quadrant
        xi = b.nodes
        # parent covers [0, .5] x [0, .5] in map space (macro (0, 0))
        xh = 0.25 * (xi + 1) / 2 + 0.25 * rx
        yh = 0.25 * (xi + 1) / 2 + 0.25 * ry
        X, Y = np.meshgrid(xh, yh, indexing="ij")
        px, py = poly_map(X, Y)
        assert np.allclose(node.x, px, atol=1e-13)
        assert np.allclose(node.y, py, atol=1e-13)
        assert parent.level == 0


MSH_ONE_QUAD = """$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
5
1 1 "left"
1 2 "right"
1 3 "bottom"
1 4 "top"
2 5 "fluid"
$EndPhysicalNames
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
5
1 1 2 3 0 1 2
2 1 2 2 0 2 3
3 1 2 4 0 3 4
4 1 2 1 0 4 1
5 3 2 5 0 1 2 3 4
$EndElements
"""

MSH_TRIANGLE = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
3
1 0 0 0
2 1 0 0
3 0 1 0
$EndNodes
$Elements
1
1 2 2 1 0 1 2 3
$EndElements
"""


def test_read_msh_single_quad(tmp_path):
    p = tmp_path / "one.msh"
    p.write_text(MSH_ONE_QUAD)
    b = make_basis(2)
    mesh = read_msh_quads(str(p), b)
    assert mesh.n_elements == 1
    assert len(mesh.boundary) == 4
    assert {t for _, _, t in mesh.boundary} == {"left", "right", "top", "bottom"}
    assert mesh.total_area() == pytest.approx(1.0, abs=1e-13)


def test_read_msh_triangle_rejected(tmp_path):
    p = tmp_path / "tri.msh"
    p.write_text(MSH_TRIANGLE)
    with pytest.raises(MeshError, match="unsupported element type"):
        read_msh_quads(str(p), make_basis(2))


def _rect_msh(nx, ny, lx, ly, rotate_some=False):
    """Build a rectangle mesh string; optionally rotate corner ordering of
    some quads to exercise flip handling."""
    lines = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat"]
    lines += ["$PhysicalNames", "5",
              '1 1 "left"', '1 2 "right"', '1 3 "bottom"', '1 4 "top"',
              '2 9 "fluid"', "$EndPhysicalNames"]
    nid = {}
    nodes = []
    for j in range(ny + 1):
        for i in range(nx + 1):
            nid[(i, j)] = len(nodes) + 1
            nodes.append((lx * i / nx, ly * j / ny))
    lines.append("$Nodes")
    lines.append(str(len(nodes)))
    for k, (x, y) in enumerate(nodes):
        lines.append(f"{k + 1} {x} {y} 0")
    lines.append("$EndNodes")
    eid = 1
    body = []
    for i in range(nx):
        body.append(f"{eid} 1 2 3 0 {nid[(i, 0)]} {nid[(i + 1, 0)]}")
        eid += 1
        body.append(f"{eid} 1 2 4 0 {nid[(i, ny)]} {nid[(i + 1, ny)]}")
        eid += 1
    for j in range(ny):
        body.append(f"{eid} 1 2 1 0 {nid[(0, j)]} {nid[(0, j + 1)]}")
        eid += 1
        body.append(f"{eid} 1 2 2 0 {nid[(nx, j)]} {nid[(nx, j + 1)]}")
        eid += 1
    q = 0
    for j in range(ny):
        for i in range(nx):
            c = [nid[(i, j)], nid[(i + 1, j)], nid[(i + 1, j + 1)], nid[(i, j + 1)]]
            if rotate_some and q % 3 == 1:
                c = c[1:] + c[:1]          # rotated CCW start corner
            if rotate_some and q % 3 == 2:
                c = [c[0], c[3], c[2], c[1]]  # clockwise (reader fixes it)
            body.append(f"{eid} 3 2 9 0 {c[0]} {c[1]} {c[2]} {c[3]}")
            eid += 1
            q += 1
    lines.append("$Elements")
    lines.append(str(len(body)))
    lines += body
    lines.append("$EndElements")
    return "\n".join(lines) + "\n"


def test_read_msh_rectangle_with_rotations(tmp_path):
    p = tmp_path / "rect.msh"
    p.write_text(_rect_msh(4, 3, 325.0, 90.0, rotate_some=True))
    b = make_basis(3)
    mesh = read_msh_quads(str(p), b)
    assert mesh.n_elements == 12
    assert np.all(mesh.detJ > 0)
    assert mesh.total_area() == pytest.approx(325.0 * 90.0, rel=1e-12)
    n_bnd = len(mesh.boundary)
    assert n_bnd == 2 * 4 + 2 * 3
    assert len(mesh.faces) == (4 - 1) * 3 + 4 * (3 - 1)  # interior edges
