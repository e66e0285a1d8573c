"""Curved quadrilateral mesh with quadtree refinement.

A mesh is a forest of quad trees over a macro (level-0) mesh.  Every tree
node carries its own nodal geometry: physical coordinates at the tensor
GLL points and the metric terms obtained by differentiating the degree-N
interpolant of the reference map (never the analytic map, so the discrete
metric identity holds to roundoff).  Children inherit geometry by
restricting the parent's polynomial map to the quadrant.

Sides are numbered 0=S (eta-), 1=E (xi+), 2=N (eta+), 3=W (xi-); S/N are
parametrized by the xi index, E/W by the eta index.  Face records keep a
flip flag for neighbors that traverse the shared edge in opposite
directions (possible for file meshes; mapped meshes are flip-free).

Child quadrants are indexed by (rx, ry) in {0,1}^2 with (0,1), (1,1),
(0,0), (1,0) matching the upper-left / upper-right / lower-left /
lower-right layout used for refinement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import Basis

__all__ = ["MeshTree", "MeshError", "build_mapped_mesh", "read_msh_quads",
           "S", "E", "N", "W"]

S, E, N, W = 0, 1, 2, 3
_SIDE_AXIS = {S: 1, E: 0, N: 1, W: 0}   # 1: parametrized by xi index i


class MeshError(RuntimeError):
    pass


def _metrics(x, y, D):
    """Metric terms of the interpolated map; raises on folded elements."""
    xxi = np.einsum("ik,kj->ij", D, x)
    yxi = np.einsum("ik,kj->ij", D, y)
    xeta = np.einsum("jk,ik->ij", D, x)
    yeta = np.einsum("jk,ik->ij", D, y)
    detJ = xxi * yeta - xeta * yxi
    if np.any(detJ <= 0.0):
        raise MeshError("non-positive Jacobian in element geometry")
    return xxi, xeta, yxi, yeta, detJ


@dataclass
class TreeNode:
    nid: int
    level: int
    parent: int = -1
    quadrant: tuple = (0, 0)          # (rx, ry) within the parent
    children: list = field(default_factory=list)  # [] or 4 nids, idx 2*rx+ry
    x: np.ndarray = None
    y: np.ndarray = None
    xxi: np.ndarray = None
    xeta: np.ndarray = None
    yxi: np.ndarray = None
    yeta: np.ndarray = None
    detJ: np.ndarray = None

    @property
    def is_leaf(self):
        return not self.children


def _side_children(node, side):
    """Child slots touching a side, ordered by the side's parameter."""
    if side == S:
        return [node.children[0], node.children[2]]   # (0,0), (1,0)
    if side == N:
        return [node.children[1], node.children[3]]   # (0,1), (1,1)
    if side == W:
        return [node.children[0], node.children[1]]   # (0,0), (0,1)
    return [node.children[2], node.children[3]]       # (1,0), (1,1)


class MeshTree:
    """Quadtree forest with face connectivity and boundary tags.

    ``macro_faces`` holds interior macro adjacencies as tuples
    (macroA, sideA, macroB, sideB, flip); ``macro_boundary`` maps
    (macro, side) -> tag for untagged exterior faces.
    """

    def __init__(self, basis: Basis):
        self.basis = basis
        self.nodes: list[TreeNode] = []
        self.roots: list[int] = []
        self.macro_faces = []
        self.macro_boundary = {}
        self.leaves: list[int] = []
        self.leaf_index: dict[int, int] = {}
        # assembled views over active leaves
        self.x = self.y = self.met = self.detJ = self.levels = None
        self.faces = []       # (eL, sL, eR, sR, flip) active indices
        self.mortars = []     # (eC, sC, eF0, eF1, sF, flip)
        self.boundary = []    # (e, side, tag)
        self.last_merged = []  # (parent_nid, [child_nids]) of the last regrid

    # -- construction ------------------------------------------------------

    def new_node(self, level, parent=-1, quadrant=(0, 0)):
        node = TreeNode(nid=len(self.nodes), level=level, parent=parent,
                        quadrant=quadrant)
        self.nodes.append(node)
        return node

    def set_geometry(self, node, x, y):
        node.x = np.asarray(x, dtype=float)
        node.y = np.asarray(y, dtype=float)
        (node.xxi, node.xeta, node.yxi,
         node.yeta, node.detJ) = _metrics(node.x, node.y, self.basis.D)

    def split(self, nid):
        """Create four children with geometry restricted from the parent."""
        node = self.nodes[nid]
        if not node.is_leaf:
            raise MeshError("split of a non-leaf")
        V = self.basis.transfer.V
        node.children = [0, 0, 0, 0]
        for rx in (0, 1):
            for ry in (0, 1):
                child = self.new_node(node.level + 1, parent=nid,
                                      quadrant=(rx, ry))
                cx = V[rx] @ node.x @ V[ry].T
                cy = V[rx] @ node.y @ V[ry].T
                self.set_geometry(child, cx, cy)
                node.children[2 * rx + ry] = child.nid
        return [self.nodes[c] for c in node.children]

    def merge(self, nid):
        """Drop the children of nid (they must all be leaves)."""
        node = self.nodes[nid]
        if node.is_leaf or any(not self.nodes[c].is_leaf for c in node.children):
            raise MeshError("merge needs four leaf children")
        node.children = []

    # -- leaf/face assembly -------------------------------------------------

    def _collect_leaves(self):
        out = []

        def walk(nid):
            node = self.nodes[nid]
            if node.is_leaf:
                out.append(nid)
            else:
                for c in node.children:
                    walk(c)

        for r in self.roots:
            walk(r)
        return out

    def _match(self, na, sa, nb, sb, flip, out_faces, out_mortars, strict):
        A = self.nodes[na]
        B = self.nodes[nb]
        if A.is_leaf and B.is_leaf:
            out_faces.append((na, sa, nb, sb, flip))
            return
        if A.is_leaf or B.is_leaf:
            if A.is_leaf:
                coarse, sc, fine, sf = na, sa, nb, sb
            else:
                coarse, sc, fine, sf = nb, sb, na, sa
            kids = _side_children(self.nodes[fine], sf)
            if any(not self.nodes[k].is_leaf for k in kids):
                if strict:
                    raise MeshError("2:1 balance violated at a face")
                # report as a balance violation via exception-free path
                out_mortars.append(None)
                return
            if flip:
                kids = kids[::-1]
            out_mortars.append((coarse, sc, kids[0], kids[1], sf, flip))
            return
        ka = _side_children(A, sa)
        kb = _side_children(B, sb)
        if flip:
            kb = kb[::-1]
        for r in (0, 1):
            self._match(ka[r], sa, kb[r], sb, flip, out_faces, out_mortars,
                        strict)

    def _interior_faces(self, nid, out_faces, out_mortars, strict):
        node = self.nodes[nid]
        if node.is_leaf:
            return
        c = node.children
        # (rx, ry) slots: 2*rx + ry
        self._match(c[0], E, c[2], W, False, out_faces, out_mortars, strict)
        self._match(c[1], E, c[3], W, False, out_faces, out_mortars, strict)
        self._match(c[0], N, c[1], S, False, out_faces, out_mortars, strict)
        self._match(c[2], N, c[3], S, False, out_faces, out_mortars, strict)
        for k in c:
            self._interior_faces(k, out_faces, out_mortars, strict)

    def _boundary_faces(self, nid, side, tag, out):
        node = self.nodes[nid]
        if node.is_leaf:
            out.append((nid, side, tag))
            return
        for k in _side_children(node, side):
            self._boundary_faces(k, side, tag, out)

    def _build_faces(self, strict=True):
        faces, mortars, bdry = [], [], []
        for (ma, sa, mb, sb, flip) in self.macro_faces:
            self._match(ma, sa, mb, sb, flip, faces, mortars, strict)
        for r in self.roots:
            self._interior_faces(r, faces, mortars, strict)
        for (m, side), tag in self.macro_boundary.items():
            self._boundary_faces(m, side, tag, bdry)
        return faces, mortars, bdry

    def _balance_violations(self):
        """Leaves whose face neighbors are more than one level deeper."""
        bad = set()

        def scan(na, sa, nb, sb, flip):
            A = self.nodes[na]
            B = self.nodes[nb]
            if A.is_leaf and B.is_leaf:
                return
            if A.is_leaf or B.is_leaf:
                if A.is_leaf:
                    leaf, fine, sf = na, nb, sb
                else:
                    leaf, fine, sf = nb, na, sa
                kids = _side_children(self.nodes[fine], sf)
                if any(not self.nodes[k].is_leaf for k in kids):
                    bad.add(leaf)
                return
            ka = _side_children(A, sa)
            kb = _side_children(B, sb)
            if flip:
                kb = kb[::-1]
            for r in (0, 1):
                scan(ka[r], sa, kb[r], sb, flip)

        for (ma, sa, mb, sb, flip) in self.macro_faces:
            scan(ma, sa, mb, sb, flip)

        def interior(nid):
            node = self.nodes[nid]
            if node.is_leaf:
                return
            c = node.children
            scan(c[0], E, c[2], W, False)
            scan(c[1], E, c[3], W, False)
            scan(c[0], N, c[1], S, False)
            scan(c[2], N, c[3], S, False)
            for k in c:
                interior(k)

        for r in self.roots:
            interior(r)
        return bad

    def assemble(self):
        """Rebuild the active-leaf views and face lists."""
        self.leaves = self._collect_leaves()
        self.leaf_index = {nid: k for k, nid in enumerate(self.leaves)}
        p1 = self.basis.n
        n = len(self.leaves)
        self.x = np.empty((n, p1, p1))
        self.y = np.empty((n, p1, p1))
        self.met = np.empty((n, p1, p1, 4))
        self.detJ = np.empty((n, p1, p1))
        self.levels = np.empty(n, dtype=np.int32)
        for k, nid in enumerate(self.leaves):
            nd = self.nodes[nid]
            self.x[k] = nd.x
            self.y[k] = nd.y
            self.met[k, :, :, 0] = nd.yeta
            self.met[k, :, :, 1] = nd.xeta
            self.met[k, :, :, 2] = nd.yxi
            self.met[k, :, :, 3] = nd.xxi
            self.detJ[k] = nd.detJ
            self.levels[k] = nd.level
        faces, mortars, bdry = self._build_faces(strict=True)
        li = self.leaf_index
        self.faces = [(li[a], sa, li[b], sb, fl) for a, sa, b, sb, fl in faces]
        self.mortars = [(li[c], sc, li[f0], li[f1], sf, fl)
                        for c, sc, f0, f1, sf, fl in mortars]
        self.boundary = [(li[e], side, tag) for e, side, tag in bdry]

    @property
    def n_elements(self):
        return len(self.leaves)

    def total_area(self):
        w = self.basis.weights
        return float(np.einsum("i,j,eij->", w, w, self.detJ))

    # -- regridding ----------------------------------------------------------

    def regrid(self, refine_active, coarsen_active):
        """Apply refinement/coarsening marks given as active indices.

        Refinement runs first and is augmented until the forest satisfies
        2:1 balance; coarsening then executes for complete sibling
        families whose merge keeps the balance.  The active views and face
        lists are reassembled before returning.
        """
        refine = {self.leaves[k] for k in refine_active}
        coarsen = {self.leaves[k] for k in coarsen_active}

        for nid in refine:
            if self.nodes[nid].is_leaf:
                self.split(nid)
        for _ in range(64):
            bad = self._balance_violations()
            if not bad:
                break
            for nid in bad:
                if self.nodes[nid].is_leaf:
                    self.split(nid)
        else:
            raise MeshError("balance pass did not terminate")

        # merge complete families against the post-balance forest; a merge
        # is vetoed when a child is the coarse side of a mortar (the merged
        # leaf would sit two levels below that neighbor)
        families = {}
        for nid in coarsen:
            node = self.nodes[nid]
            if node.is_leaf and node.parent >= 0:
                families.setdefault(node.parent, set()).add(nid)
        candidates = [p for p, kids in families.items()
                      if len(kids) == 4
                      and all(self.nodes[c].is_leaf
                              for c in self.nodes[p].children)]
        self.last_merged = []
        if candidates:
            _, mortars, _ = self._build_faces(strict=True)
            mortar_coarse = {c for c, *_ in mortars}
            for p in candidates:
                if not any(c in mortar_coarse for c in self.nodes[p].children):
                    self.last_merged.append((p, list(self.nodes[p].children)))
                    self.merge(p)
        self.assemble()


def build_mapped_mesh(mapfn, nx, ny, basis, domain=((0.0, 1.0), (0.0, 1.0)),
                      periodic=(False, False)) -> MeshTree:
    """Macro mesh of nx*ny curved quads from an analytic map on a rectangle.

    The reference map of every element is the degree-N interpolant of the
    global map; metric terms come from differentiating that interpolant.
    """
    mesh = MeshTree(basis)
    (x0, x1), (y0, y1) = domain
    xi = basis.nodes
    idx = {}
    for i in range(nx):
        for j in range(ny):
            node = mesh.new_node(level=0)
            ax = x0 + (x1 - x0) * (i + (xi[:, None] + 1) / 2 * 1.0) / nx
            ay = y0 + (y1 - y0) * (j + (xi[None, :] + 1) / 2 * 1.0) / ny
            ax, ay = np.broadcast_arrays(ax, ay)
            px, py = mapfn(ax, ay)
            mesh.set_geometry(node, px, py)
            mesh.roots.append(node.nid)
            idx[(i, j)] = node.nid
    for i in range(nx):
        for j in range(ny):
            a = idx[(i, j)]
            if i + 1 < nx:
                mesh.macro_faces.append((a, E, idx[(i + 1, j)], W, False))
            elif periodic[0]:
                mesh.macro_faces.append((a, E, idx[(0, j)], W, False))
            else:
                mesh.macro_boundary[(a, E)] = "right"
                mesh.macro_boundary[(idx[(0, j)], W)] = "left"
            if j + 1 < ny:
                mesh.macro_faces.append((a, N, idx[(i, j + 1)], S, False))
            elif periodic[1]:
                mesh.macro_faces.append((a, N, idx[(i, 0)], S, False))
            else:
                mesh.macro_boundary[(a, N)] = "top"
                mesh.macro_boundary[(idx[(i, 0)], S)] = "bottom"
    mesh.assemble()
    return mesh


# ---------------------------------------------------------------------------
# minimal Gmsh (ASCII v2) quad reader

def _shape_bilinear(c, xi, eta):
    # corners in reference order (-1,-1), (1,-1), (1,1), (-1,1)
    n = np.array([(1 - xi) * (1 - eta), (1 + xi) * (1 - eta),
                  (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)]) / 4.0
    return np.tensordot(n, c, axes=(0, 0))


def _shape_biquadratic(c, xi, eta):
    # 9-node quad: 4 corners, 4 edge midpoints (bottom,right,top,left), center
    def q(a):
        return np.array([a * (a - 1) / 2, (1 - a) * (1 + a), a * (a + 1) / 2])

    qx, qe = q(xi), q(eta)
    # tensor ordering of the 9 nodes on the reference lattice
    lat = np.array([[0, 7, 3], [4, 8, 6], [1, 5, 2]])
    out = 0.0
    for a in range(3):
        for b in range(3):
            out = out + qx[a] * qe[b] * c[lat[a, b]]
    return out


def read_msh_quads(path, basis: Basis) -> MeshTree:
    """Read a small ASCII Gmsh v2 mesh of quads (types 3 and 10).

    Line elements (types 1, 8) carry boundary tags through their physical
    group names; any untagged exterior edge gets the tag "wall".
    """
    with open(path) as f:
        lines = [ln.strip() for ln in f]
    pos = 0

    def section(name):
        nonlocal pos
        while pos < len(lines) and lines[pos] != f"${name}":
            pos += 1
        if pos == len(lines):
            return None
        start = pos + 1
        end = start
        while lines[end] != f"$End{name}":
            end += 1
        pos = end + 1
        return lines[start:end]

    phys = {}
    pos = 0
    sec = section("PhysicalNames")
    if sec:
        for ln in sec[1:]:
            parts = ln.split()
            phys[int(parts[1])] = parts[2].strip('"')
    pos = 0
    sec = section("Nodes")
    if sec is None:
        raise MeshError("missing $Nodes section")
    coords = {}
    for ln in sec[1:]:
        parts = ln.split()
        coords[int(parts[0])] = (float(parts[1]), float(parts[2]))
    pos = 0
    sec = section("Elements")
    if sec is None:
        raise MeshError("missing $Elements section")
    quads = []
    blines = []
    for ln in sec[1:]:
        parts = [int(v) for v in ln.split()]
        etype, ntags = parts[1], parts[2]
        tags = parts[3:3 + ntags]
        conn = parts[3 + ntags:]
        if etype in (3, 10):
            quads.append((conn, tags[0] if tags else 0))
        elif etype in (1, 8):
            blines.append((conn[:2], tags[0] if tags else 0))
        elif etype == 15:
            continue
        else:
            raise MeshError(f"unsupported element type {etype}")
    if not quads:
        raise MeshError("mesh contains no quadrilaterals")

    mesh = MeshTree(basis)
    xi = basis.nodes
    XI, ETA = np.meshgrid(xi, xi, indexing="ij")
    corner_lists = []
    for conn, _tag in quads:
        pts = np.array([coords[k] for k in conn])
        # canonicalize to counterclockwise corners
        corners = pts[:4]
        area2 = 0.0
        for k in range(4):
            xA, yA = corners[k]
            xB, yB = corners[(k + 1) % 4]
            area2 += xA * yB - xB * yA
        flipped = area2 < 0.0
        if flipped:
            order = [0, 3, 2, 1]
            conn = ([conn[k] for k in order]
                    + ([conn[4 + k] for k in (3, 2, 1, 0)] + [conn[8]]
                       if len(conn) == 9 else []))
            pts = np.array([coords[k] for k in conn])
        node = mesh.new_node(level=0)
        if len(conn) == 4:
            px = _shape_bilinear(pts[:, 0], XI, ETA)
            py = _shape_bilinear(pts[:, 1], XI, ETA)
        else:
            px = _shape_biquadratic(pts[:, 0], XI, ETA)
            py = _shape_biquadratic(pts[:, 1], XI, ETA)
        mesh.set_geometry(node, px, py)
        mesh.roots.append(node.nid)
        corner_lists.append([conn[0], conn[1], conn[2], conn[3]])

    # adjacency by directed corner pairs; side order: S: c0->c1, E: c1->c2,
    # N: c3->c2, W: c0->c3 (all in increasing side parameter)
    side_pairs = {S: (0, 1), E: (1, 2), N: (3, 2), W: (0, 3)}
    edge_map = {}
    for q, corners in enumerate(corner_lists):
        for side, (a, b) in side_pairs.items():
            key = frozenset((corners[a], corners[b]))
            edge_map.setdefault(key, []).append((q, side,
                                                 (corners[a], corners[b])))
    tag_map = {}
    for (a, b), ptag in blines:
        tag_map[frozenset((a, b))] = phys.get(ptag, str(ptag))
    for key, members in edge_map.items():
        if len(members) == 2:
            (qa, sa, da), (qb, sb, db) = members
            # opposite directed pairs traverse the edge in opposite senses
            mesh.macro_faces.append((mesh.roots[qa], sa, mesh.roots[qb], sb,
                                     da != db))
        elif len(members) == 1:
            q, side, _ = members[0]
            mesh.macro_boundary[(mesh.roots[q], side)] = tag_map.get(key, "wall")
        else:
            raise MeshError("edge shared by more than two quads")
    mesh.assemble()
    return mesh
