"""Simplicial meshes (segments in 1D, triangles in 2D) with P1 structure.

Polygons are meshed by ear clipping followed by uniform red refinement
(exact area, conforming by construction).  Disks are meshed by mapping a
structured triangulated square onto the disk; boundary nodes land exactly
on the circle, so the mesh is an inscribed polygon and the O(h^2) area
defect is reported rather than hidden.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.legendre import leggauss

from .domains import Domain, _point_segment_distance_many
from .errors import ConfigError, DegenerateCell, MeshFailure, NonFiniteIntegrand

# Symmetric positive-weight quadrature rules on the reference triangle,
# barycentric coordinates and weights summing to one.
_TRI_RULES = {}
_TRI_RULES[1] = (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0]))
_TRI_RULES[2] = (
    np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
    np.full(3, 1 / 3),
)
_a4, _b4 = 0.445948490915965, 0.091576213509771
_wa4, _wb4 = 0.223381589678011, 0.109951743655322
_TRI_RULES[4] = (
    np.array(
        [
            [1 - 2 * _a4, _a4, _a4], [_a4, 1 - 2 * _a4, _a4], [_a4, _a4, 1 - 2 * _a4],
            [1 - 2 * _b4, _b4, _b4], [_b4, 1 - 2 * _b4, _b4], [_b4, _b4, 1 - 2 * _b4],
        ]
    ),
    np.array([_wa4] * 3 + [_wb4] * 3),
)
_a5, _b5 = 0.470142064105115, 0.101286507323456
_wa5, _wb5 = 0.132394152788506, 0.125939180544827
_TRI_RULES[5] = (
    np.vstack(
        [
            [[1 / 3, 1 / 3, 1 / 3]],
            [[1 - 2 * _a5, _a5, _a5], [_a5, 1 - 2 * _a5, _a5], [_a5, _a5, 1 - 2 * _a5]],
            [[1 - 2 * _b5, _b5, _b5], [_b5, 1 - 2 * _b5, _b5], [_b5, _b5, 1 - 2 * _b5]],
        ]
    ),
    np.array([0.225] + [_wa5] * 3 + [_wb5] * 3),
)


def _segment_rule(npoints):
    """Gauss-Legendre on the reference segment, barycentric (1-t, t) form."""
    xi, w = leggauss(npoints)
    t = 0.5 * (xi + 1.0)
    return np.column_stack([1.0 - t, t]), 0.5 * w


def _tri_rule(degree):
    for d in sorted(_TRI_RULES):
        if d >= degree:
            return _TRI_RULES[d]
    raise ConfigError(f"triangle quadrature degree {degree} not supported (max 5)")


class Mesh:
    """Nodes plus simplices, with precomputed P1 machinery.

    Attributes of note: cell_volumes, basis_grads (per-cell gradients of the
    barycentric basis, shape (ncells, dim+1, dim)), boundary_facets with unit
    outward facet_normals / facet_measures / adjacent facet_cells, and
    interior_nodes / boundary_nodes index arrays.
    """

    def __init__(self, nodes, cells, domain=None):
        self.nodes = np.asarray(nodes, dtype=float)
        if self.nodes.ndim == 1:
            self.nodes = self.nodes[:, None]
        self.cells = np.asarray(cells, dtype=np.int64)
        self.dim = self.nodes.shape[1]
        self.domain = domain
        if self.dim not in (1, 2):
            raise MeshFailure(f"only 1D/2D meshes supported, got dim {self.dim}")
        if self.cells.ndim != 2 or self.cells.shape[1] != self.dim + 1:
            raise MeshFailure("cells must be (ncells, dim+1) vertex indices")
        if len(self.cells) == 0:
            raise MeshFailure("mesh has no cells")
        self._setup()
        self._quad_cache = {}
        self._facet_quad_cache = {}
        self._bdist = None

    # -- construction details ---------------------------------------------

    def _setup(self):
        if self.dim == 1:
            order = np.argsort(self.nodes[self.cells, 0], axis=1)
            self.cells = np.take_along_axis(self.cells, order, axis=1)
            x0 = self.nodes[self.cells[:, 0], 0]
            x1 = self.nodes[self.cells[:, 1], 0]
            lengths = x1 - x0
            self.cell_volumes = lengths
            inv = 1.0 / lengths
            self.basis_grads = np.stack([-inv[:, None], inv[:, None]], axis=1)
        else:
            a = self.nodes[self.cells[:, 0]]
            b = self.nodes[self.cells[:, 1]]
            c = self.nodes[self.cells[:, 2]]
            det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (
                b[:, 1] - a[:, 1]
            ) * (c[:, 0] - a[:, 0])
            flip = det < 0
            if np.any(flip):
                self.cells[flip, 1], self.cells[flip, 2] = (
                    self.cells[flip, 2].copy(),
                    self.cells[flip, 1].copy(),
                )
                b = self.nodes[self.cells[:, 1]]
                c = self.nodes[self.cells[:, 2]]
                det = np.abs(det)
            e1 = b - a
            e2 = c - a
            self.cell_volumes = 0.5 * det
            self._check_degenerate()
            g1 = np.column_stack([e2[:, 1], -e2[:, 0]]) / det[:, None]
            g2 = np.column_stack([-e1[:, 1], e1[:, 0]]) / det[:, None]
            self.basis_grads = np.stack([-(g1 + g2), g1, g2], axis=1)

        self._check_degenerate()
        self.volume = float(self.cell_volumes.sum())
        self._find_boundary()

        if self.dim == 1:
            self.h = float(self.cell_volumes.max())
        else:
            a = self.nodes[self.cells[:, 0]]
            b = self.nodes[self.cells[:, 1]]
            c = self.nodes[self.cells[:, 2]]
            ls = np.stack(
                [
                    np.linalg.norm(b - a, axis=1),
                    np.linalg.norm(c - b, axis=1),
                    np.linalg.norm(a - c, axis=1),
                ]
            )
            self.h = float(ls.max())

    def _check_degenerate(self):
        vmax = float(self.cell_volumes.max())
        if vmax <= 0 or np.any(self.cell_volumes < 1e-13 * vmax):
            bad = int(np.argmin(self.cell_volumes))
            raise DegenerateCell(
                f"cell {bad} has volume {self.cell_volumes[bad]:.3e}"
            )

    def _find_boundary(self):
        if self.dim == 1:
            counts = np.bincount(self.cells.ravel(), minlength=len(self.nodes))
            bnodes = np.where(counts == 1)[0]
            if len(bnodes) != 2:
                raise MeshFailure(f"1D mesh has {len(bnodes)} endpoints, expected 2")
            xs = self.nodes[bnodes, 0]
            left, right = bnodes[np.argmin(xs)], bnodes[np.argmax(xs)]
            self.boundary_facets = np.array([[left], [right]], dtype=np.int64)
            self.facet_normals = np.array([[-1.0], [1.0]])
            self.facet_measures = np.ones(2)
            cell_of = {}
            for ci, cell in enumerate(self.cells):
                for v in cell:
                    cell_of.setdefault(int(v), []).append(ci)
            self.facet_cells = np.array(
                [cell_of[int(left)][0], cell_of[int(right)][0]], dtype=np.int64
            )
            self.boundary_nodes = np.array(sorted([left, right]), dtype=np.int64)
        else:
            edge_count = {}
            for ci, cell in enumerate(self.cells):
                for k in range(3):
                    v0, v1 = int(cell[k]), int(cell[(k + 1) % 3])
                    key = (min(v0, v1), max(v0, v1))
                    edge_count.setdefault(key, []).append((ci, v0, v1))
            facets, normals, measures, fcells = [], [], [], []
            for key in sorted(edge_count):
                owners = edge_count[key]
                if len(owners) == 1:
                    ci, v0, v1 = owners[0]
                    a, b = self.nodes[v0], self.nodes[v1]
                    t = b - a
                    length = float(np.linalg.norm(t))
                    n = np.array([t[1], -t[0]]) / length
                    centroid = self.nodes[self.cells[ci]].mean(axis=0)
                    if n @ (0.5 * (a + b) - centroid) < 0:
                        n = -n
                    facets.append([v0, v1])
                    normals.append(n)
                    measures.append(length)
                    fcells.append(ci)
                elif len(owners) > 2:
                    raise MeshFailure(f"edge {key} shared by {len(owners)} cells")
            if not facets:
                raise MeshFailure("2D mesh has no boundary edges")
            self.boundary_facets = np.array(facets, dtype=np.int64)
            self.facet_normals = np.array(normals)
            self.facet_measures = np.array(measures)
            self.facet_cells = np.array(fcells, dtype=np.int64)
            self.boundary_nodes = np.unique(self.boundary_facets.ravel())

        mask = np.ones(len(self.nodes), dtype=bool)
        mask[self.boundary_nodes] = False
        self.interior_nodes = np.where(mask)[0]

    # -- quadrature --------------------------------------------------------

    @property
    def nnodes(self):
        return len(self.nodes)

    @property
    def ncells(self):
        return len(self.cells)

    def reference_rule(self, degree=2):
        """Barycentric points and reference weights (summing to 1)."""
        if self.dim == 1:
            return _segment_rule(int(degree) + 1)
        return _tri_rule(int(degree))

    def quadrature(self, degree=2):
        """(points (nc, nq, dim), weights (nc, nq), bary (nq, nverts))."""
        degree = int(degree)
        if degree not in self._quad_cache:
            bary, wref = self.reference_rule(degree)
            pts = np.einsum("qv,cvd->cqd", bary, self.nodes[self.cells])
            w = self.cell_volumes[:, None] * wref[None, :]
            self._quad_cache[degree] = (pts, w, bary)
        return self._quad_cache[degree]

    def facet_quadrature(self, degree=2):
        """(points (nf, nq, dim), weights (nf, nq)) on boundary facets."""
        degree = int(degree)
        if degree not in self._facet_quad_cache:
            if self.dim == 1:
                pts = self.nodes[self.boundary_facets[:, 0]][:, None, :]
                w = np.ones((len(pts), 1))
            else:
                bary, wref = _segment_rule(int(degree) + 1)
                ends = self.nodes[self.boundary_facets]
                pts = np.einsum("qv,fvd->fqd", bary, ends)
                w = self.facet_measures[:, None] * wref[None, :]
            self._facet_quad_cache[degree] = (pts, w)
        return self._facet_quad_cache[degree]

    def boundary_distance(self):
        """Distance from each node to the boundary (cached)."""
        if self._bdist is None:
            if self.dim == 1:
                xs = self.nodes[:, 0]
                xb = self.nodes[self.boundary_nodes, 0]
                self._bdist = np.minimum.reduce([np.abs(xs - x) for x in xb])
            else:
                d = np.full(len(self.nodes), np.inf)
                for f in self.boundary_facets:
                    a, b = self.nodes[f[0]], self.nodes[f[1]]
                    d = np.minimum(d, _point_segment_distance_many(self.nodes, a, b))
                self._bdist = d
        return self._bdist

    def divergence_check(self, degree=2):
        """Return (boundary integral of x.nu, dim * volume, relative error)."""
        lhs = boundary_integral(self, lambda x, nu: np.sum(x * nu, axis=1), degree)
        rhs = self.dim * self.volume
        return lhs, rhs, abs(lhs - rhs) / abs(rhs)


def boundary_integral(mesh, density, degree=2):
    """Integrate density(x, nu) over the mesh boundary.

    density is called with x (npts, dim) and the matching outward unit
    normals nu (npts, dim), and must return values (npts,).
    """
    pts, w = mesh.facet_quadrature(degree)
    nf, nq, dim = pts.shape
    nu = np.repeat(mesh.facet_normals[:, None, :], nq, axis=1)
    vals = np.asarray(density(pts.reshape(-1, dim), nu.reshape(-1, dim)), dtype=float)
    if vals.shape != (nf * nq,):
        raise ConfigError("boundary density must return one value per point")
    if not np.all(np.isfinite(vals)):
        bad = pts.reshape(-1, dim)[~np.isfinite(vals)][0]
        raise NonFiniteIntegrand(f"non-finite boundary integrand at x = {bad}")
    return float(np.sum(vals.reshape(nf, nq) * w))


# -- mesh generation -------------------------------------------------------


def build_mesh(domain, h_target):
    """Mesh a domain with target resolution h_target (post: h <= 2*h_target)."""
    if h_target <= 0:
        raise ConfigError("h_target must be positive")
    if domain.kind == "interval":
        n = max(1, math.ceil((domain.b - domain.a) / h_target))
        nodes = np.linspace(domain.a, domain.b, n + 1)[:, None]
        cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
        mesh = Mesh(nodes, cells, domain=domain)
        _check_volume(mesh, domain.volume())
    elif domain.kind == "polygon":
        mesh = _mesh_polygon(domain, h_target)
        _check_volume(mesh, domain.volume())
    elif domain.kind == "disk":
        mesh = _mesh_disk(domain, h_target)
    else:
        raise MeshFailure(f"domain kind {domain.kind!r} is analytic-only, not meshable")
    lhs, rhs, rel = mesh.divergence_check()
    if rel > 1e-6:
        raise MeshFailure(
            f"divergence self-test failed: bnd integral {lhs:.12g} vs {rhs:.12g}"
        )
    if mesh.h > 2 * h_target * (1 + 1e-12):
        raise MeshFailure(f"mesh h = {mesh.h:.3g} exceeds 2 * h_target")
    return mesh


def _check_volume(mesh, exact):
    if abs(mesh.volume - exact) > 1e-8 * abs(exact):
        raise MeshFailure(
            f"mesh volume {mesh.volume:.12g} != domain volume {exact:.12g}"
        )


def _mesh_polygon(domain, h_target):
    verts = domain.vertices
    tris = _ear_clip(verts)
    nodes = [tuple(v) for v in verts]
    tris = [tuple(t) for t in tris]

    def max_edge(nodes_arr, tris_list):
        arr = np.asarray(nodes_arr)
        m = 0.0
        for a, b, c in tris_list:
            m = max(
                m,
                float(np.linalg.norm(arr[a] - arr[b])),
                float(np.linalg.norm(arr[b] - arr[c])),
                float(np.linalg.norm(arr[c] - arr[a])),
            )
        return m

    d0 = max_edge(nodes, tris)
    levels = max(0, math.ceil(math.log2(d0 / h_target))) if d0 > h_target else 0
    for _ in range(levels):
        nodes, tris = _refine_red(nodes, tris)
    return Mesh(np.asarray(nodes), np.asarray(tris), domain=domain)


def _refine_red(nodes, tris):
    nodes = list(nodes)
    midpoint = {}

    def mid(i, j):
        key = (min(i, j), max(i, j))
        if key not in midpoint:
            xi = nodes[i]
            xj = nodes[j]
            nodes.append(((xi[0] + xj[0]) / 2.0, (xi[1] + xj[1]) / 2.0))
            midpoint[key] = len(nodes) - 1
        return midpoint[key]

    out = []
    for a, b, c in tris:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        out.extend([(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)])
    return nodes, out


def _ear_clip(verts):
    """Triangulate a simple CCW polygon into vertex-index triples."""
    n = len(verts)
    remaining = list(range(n))
    tris = []
    guard = 0
    while len(remaining) > 3:
        guard += 1
        if guard > 10 * n * n:
            raise MeshFailure("ear clipping failed; is the polygon simple?")
        clipped = False
        m = len(remaining)
        for k in range(m):
            i_prev, i_cur, i_next = (
                remaining[(k - 1) % m],
                remaining[k],
                remaining[(k + 1) % m],
            )
            a, b, c = verts[i_prev], verts[i_cur], verts[i_next]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross <= 1e-14:
                continue
            others = [j for j in remaining if j not in (i_prev, i_cur, i_next)]
            if others and np.any(_in_triangle(verts[others], a, b, c)):
                continue
            tris.append((i_prev, i_cur, i_next))
            remaining.pop(k)
            clipped = True
            break
        if not clipped:
            # only collinear corners left to clip; drop the flattest one
            flattest, best = None, np.inf
            for k in range(m):
                a = verts[remaining[(k - 1) % m]]
                b = verts[remaining[k]]
                c = verts[remaining[(k + 1) % m]]
                cr = abs(
                    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
                )
                if cr < best:
                    best, flattest = cr, k
            if best > 1e-12:
                raise MeshFailure("ear clipping stalled; is the polygon simple?")
            remaining.pop(flattest)
    if len(remaining) == 3:
        tris.append(tuple(remaining))
    return tris


def _in_triangle(pts, a, b, c, tol=1e-12):
    pts = np.atleast_2d(pts)

    def side(p, q):
        return (q[0] - p[0]) * (pts[:, 1] - p[1]) - (q[1] - p[1]) * (pts[:, 0] - p[0])

    s1, s2, s3 = side(a, b), side(b, c), side(c, a)
    return (s1 > -tol) & (s2 > -tol) & (s3 > -tol)


def _mesh_disk(domain, h_target):
    R, center = domain.radius, domain.center
    m = max(2, math.ceil(2.5 * R / h_target))
    for _ in range(8):
        mesh = _mapped_square_disk(m, R, center, domain)
        if mesh.h <= 2 * h_target:
            return mesh
        m = math.ceil(1.3 * m) + 1
    raise MeshFailure("disk meshing failed to reach target resolution")


def _mapped_square_disk(m, R, center, domain):
    s = np.linspace(-1.0, 1.0, m + 1)
    X, Y = np.meshgrid(s, s, indexing="ij")
    # square -> disk map; the square boundary lands exactly on the circle
    U = X * np.sqrt(1.0 - 0.5 * Y**2)
    V = Y * np.sqrt(1.0 - 0.5 * X**2)
    nodes = np.column_stack([U.ravel(), V.ravel()]) * R + center

    def nid(i, j):
        return i * (m + 1) + j

    cells = []
    for i in range(m):
        for j in range(m):
            n00, n10 = nid(i, j), nid(i + 1, j)
            n01, n11 = nid(i, j + 1), nid(i + 1, j + 1)
            if (i < m // 2) == (j < m // 2):
                cells.append([n00, n10, n11])
                cells.append([n00, n11, n01])
            else:
                cells.append([n00, n10, n01])
                cells.append([n10, n11, n01])
    return Mesh(nodes, np.asarray(cells), domain=domain)


# -- plain-text mesh exchange format ---------------------------------------


def write_mesh(mesh, path):
    """Write the text format: header "N nodes cells facets", then node lines
    "id x [y]", cell lines "id n0 n1 [n2]", facet lines "id n0 [n1] nx [ny]".
    """
    lines = [
        f"{mesh.dim} {mesh.nnodes} {mesh.ncells} {len(mesh.boundary_facets)}"
    ]
    for i, x in enumerate(mesh.nodes):
        lines.append(f"{i} " + " ".join(repr(float(c)) for c in x))
    for i, cell in enumerate(mesh.cells):
        lines.append(f"{i} " + " ".join(str(int(v)) for v in cell))
    for i, (f, n) in enumerate(zip(mesh.boundary_facets, mesh.facet_normals)):
        ids = " ".join(str(int(v)) for v in f)
        comps = " ".join(repr(float(c)) for c in n)
        lines.append(f"{i} {ids} {comps}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path, domain=None):
    """Read the text format written by write_mesh and rebuild the mesh.

    Facet lines are validated against the boundary derived from the cells;
    a mismatch raises MeshFailure.
    """
    with open(path) as fh:
        tokens = [ln.split() for ln in fh.read().splitlines() if ln.strip()]
    if not tokens:
        raise MeshFailure(f"empty mesh file {path}")
    try:
        dim, nn, nc, nf = (int(t) for t in tokens[0])
    except ValueError as exc:
        raise MeshFailure(f"bad mesh header in {path}") from exc
    if len(tokens) != 1 + nn + nc + nf:
        raise MeshFailure(f"mesh file {path} has wrong line count")
    nodes = np.array([[float(v) for v in t[1 : 1 + dim]] for t in tokens[1 : 1 + nn]])
    cells = np.array(
        [[int(v) for v in t[1 : 2 + dim]] for t in tokens[1 + nn : 1 + nn + nc]]
    )
    mesh = Mesh(nodes, cells, domain=domain)
    declared = set()
    for t in tokens[1 + nn + nc :]:
        ids = tuple(sorted(int(v) for v in t[1 : 1 + dim]))
        declared.add(ids)
    derived = {tuple(sorted(int(v) for v in f)) for f in mesh.boundary_facets}
    if declared != derived:
        raise MeshFailure(f"facets in {path} disagree with cell boundary")
    return mesh
