"""2D triangular meshes: structured builders, adjacency, symmetric-node stencils.

Meshes are immutable after construction.  Node neighborhoods ("macroelements")
are the vertex stars used by the shock detector, and the symmetric-node
stencil records, for every directed neighbor pair (i, j), the point where the
ray from node j through node i leaves the star of i.
"""

import numpy as np

INTERIOR = "interior"
BOTTOM = "bottom"
TOP = "top"
MEMBRANE = "membrane"
OTHER_BOUNDARY = "other_boundary"

BOUNDARY_TAGS = (BOTTOM, TOP, MEMBRANE, OTHER_BOUNDARY)


class StencilError(RuntimeError):
    """Raised when a symmetric point cannot be constructed for a node pair."""


def _cross2(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


class Mesh:
    """Conforming triangulation with counterclockwise elements.

    Parameters
    ----------
    nodes : (N, 2) array
        Node coordinates.
    elements : (M, 3) int array
        Node indices per triangle, counterclockwise.
    boundary_tags : (N,) array of str, optional
        Tag per node; interior nodes must carry ``"interior"``.  If omitted,
        all boundary nodes are tagged ``"other_boundary"``.

    Attributes
    ----------
    node_neighbors : list of int arrays
        Sorted indices of the nodes sharing an element with node i,
        including i itself.
    pair_i, pair_j : int arrays
        Directed neighbor pairs (j != i), grouped by i; ``pair_ptr`` holds
        the CSR-style offsets of each node's group.
    h : float
        Maximum element diameter.
    """

    def __init__(self, nodes, elements, boundary_tags=None):
        self.nodes = np.ascontiguousarray(nodes, dtype=float)
        self.elements = np.ascontiguousarray(elements, dtype=np.int64)
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise ValueError("nodes must be an (N, 2) array")
        if self.elements.ndim != 2 or self.elements.shape[1] != 3:
            raise ValueError("elements must be an (M, 3) array")

        p0 = self.nodes[self.elements[:, 0]]
        p1 = self.nodes[self.elements[:, 1]]
        p2 = self.nodes[self.elements[:, 2]]
        self.areas = 0.5 * _cross2(p1 - p0, p2 - p0)
        if np.any(self.areas <= 0.0):
            bad = int(np.argmin(self.areas))
            raise ValueError(
                f"element {bad} has non-positive signed area {self.areas[bad]:g}"
            )
        edge_len = np.stack(
            [
                np.linalg.norm(p1 - p0, axis=1),
                np.linalg.norm(p2 - p1, axis=1),
                np.linalg.norm(p0 - p2, axis=1),
            ]
        )
        self.h = float(edge_len.max())

        self._build_adjacency()
        self._find_boundary()

        if boundary_tags is None:
            tags = np.full(self.num_nodes, INTERIOR, dtype=object)
            tags[self.boundary_mask] = OTHER_BOUNDARY
            self.boundary_tags = tags
        else:
            self.boundary_tags = np.asarray(boundary_tags, dtype=object)
            if self.boundary_tags.shape != (self.num_nodes,):
                raise ValueError("boundary_tags must have one entry per node")

    @property
    def num_nodes(self):
        return self.nodes.shape[0]

    @property
    def num_elements(self):
        return self.elements.shape[0]

    def _build_adjacency(self):
        tri = self.elements
        # every vertex of a triangle is adjacent to every vertex of it
        rows = np.concatenate([tri[:, a] for a in range(3) for _ in range(3)])
        cols = np.concatenate([tri[:, b] for _ in range(3) for b in range(3)])
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        keep = np.ones(rows.size, dtype=bool)
        keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        rows, cols = rows[keep], cols[keep]

        counts = np.bincount(rows, minlength=self.num_nodes)
        ptr = np.zeros(self.num_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        self.node_neighbors = [
            cols[ptr[i]:ptr[i + 1]].copy() for i in range(self.num_nodes)
        ]

        off = cols != rows
        self.pair_i = rows[off].copy()
        self.pair_j = cols[off].copy()
        counts_off = np.bincount(self.pair_i, minlength=self.num_nodes)
        self.pair_ptr = np.zeros(self.num_nodes + 1, dtype=np.int64)
        np.cumsum(counts_off, out=self.pair_ptr[1:])

        # unordered adjacent pairs (i < j), used by edge-based operators
        und = self.pair_i < self.pair_j
        self.edge_i = self.pair_i[und].copy()
        self.edge_j = self.pair_j[und].copy()

    def _find_boundary(self):
        tri = self.elements
        e = np.concatenate(
            [tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]], axis=0
        )
        e_sorted = np.sort(e, axis=1)
        _, inv, counts = np.unique(
            e_sorted, axis=0, return_inverse=True, return_counts=True
        )
        boundary_edges = e_sorted[counts[inv] == 1]
        # deduplicate (each boundary edge appears once already, but be safe)
        boundary_edges = np.unique(boundary_edges, axis=0)
        self.boundary_edges = boundary_edges
        mask = np.zeros(self.num_nodes, dtype=bool)
        mask[boundary_edges.ravel()] = True
        self.boundary_mask = mask

    def pair_index(self, i, j):
        """Index of the directed pair (i, j) in the pair arrays."""
        lo, hi = self.pair_ptr[i], self.pair_ptr[i + 1]
        js = self.pair_j[lo:hi]
        k = np.searchsorted(js, j)
        if k == js.size or js[k] != j:
            raise KeyError(f"node {j} is not a neighbor of node {i}")
        return int(lo + k)

    def nodes_with_tag(self, tag):
        """Indices of all nodes carrying the given boundary tag."""
        return np.flatnonzero(self.boundary_tags == tag)

    def total_area(self):
        return float(self.areas.sum())


def build_unit_square(n, offset=(-0.5, -0.5)):
    """Structured triangulation of a unit square by n x n cells.

    Each cell is split along its southwest-northeast diagonal, so interior
    nodes have six neighbors.  The default offset centers the square at the
    origin.

    Parameters
    ----------
    n : int
        Subdivisions per side; must be >= 2.
    offset : pair of float
        Coordinates of the lower-left corner.

    Returns
    -------
    Mesh
        (n+1)^2 nodes, 2 n^2 elements, boundary tagged ``other_boundary``.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    ox, oy = float(offset[0]), float(offset[1])
    xs = ox + np.arange(n + 1) / n
    ys = oy + np.arange(n + 1) / n
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (n + 1) + j

    elements = []
    for i in range(n):
        for j in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            elements.append([v00, v10, v11])
            elements.append([v00, v11, v01])
    return Mesh(nodes, np.array(elements))


def build_channel(cell):
    """Structured triangulation of the I-shaped channel domain.

    The domain is the union of a bottom reservoir [-2,2]x[0,1.5], a channel
    [-1,1]x[1.5,5.5] and a top reservoir [-2,2]x[5.5,7].  Boundary nodes are
    tagged ``bottom`` (y=0), ``top`` (y=7), ``membrane`` (the channel walls
    x=+-1, 1.5<=y<=5.5) and ``other_boundary`` elsewhere.

    Parameters
    ----------
    cell : float
        Grid spacing; must divide 0.5 so the corners land on grid points.
    """
    m = 0.5 / cell
    mi = int(round(m))
    if mi < 1 or abs(m - mi) > 1e-9 * m:
        raise ValueError(f"cell={cell!r} does not divide the geometry unit 0.5")
    m = mi
    ncx, ncy = 8 * m, 14 * m  # bounding box in cells: [-2,2] x [0,7]

    def cell_included(ci, cj):
        if 3 * m <= cj < 11 * m:
            return 2 * m <= ci < 6 * m
        return True

    node_id = {}
    nodes = []
    grid_pos = []

    def vid(gi, gj):
        key = (gi, gj)
        if key not in node_id:
            node_id[key] = len(nodes)
            nodes.append((-2.0 + 4.0 * (gi / ncx), 7.0 * (gj / ncy)))
            grid_pos.append(key)
        return node_id[key]

    elements = []
    for ci in range(ncx):
        for cj in range(ncy):
            if not cell_included(ci, cj):
                continue
            v00, v10 = vid(ci, cj), vid(ci + 1, cj)
            v01, v11 = vid(ci, cj + 1), vid(ci + 1, cj + 1)
            elements.append([v00, v10, v11])
            elements.append([v00, v11, v01])

    mesh = Mesh(np.array(nodes), np.array(elements))
    tags = np.full(mesh.num_nodes, INTERIOR, dtype=object)
    for k, (gi, gj) in enumerate(grid_pos):
        if not mesh.boundary_mask[k]:
            continue
        if gj == 0:
            tags[k] = BOTTOM
        elif gj == ncy:
            tags[k] = TOP
        elif gi in (2 * m, 6 * m) and 3 * m <= gj <= 11 * m:
            tags[k] = MEMBRANE
        else:
            tags[k] = OTHER_BOUNDARY
    mesh.boundary_tags = tags
    return mesh


def build_equilateral_strip(nx, ny, side=1.0):
    """Sheared-rectangle (parallelogram) mesh of exactly equilateral triangles.

    Row j is shifted right by j*side/2, which makes every triangle
    equilateral and the assembled stiffness matrix strictly acute; this is
    the mesh used to exercise the discrete entropy law.

    Parameters
    ----------
    nx, ny : int
        Cells along the base and the height.
    side : float
        Triangle side length.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    a = float(side)
    hrow = a * np.sqrt(3.0) / 2.0
    nodes = []
    for i in range(nx + 1):
        for j in range(ny + 1):
            nodes.append((i * a + 0.5 * a * j, j * hrow))

    def vid(i, j):
        return i * (ny + 1) + j

    elements = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            # split along the short diagonal of the sheared cell
            elements.append([v00, v10, v01])
            elements.append([v10, v11, v01])
    return Mesh(np.array(nodes), np.array(elements))


class SymmetricStencil:
    """Symmetric-node data for every directed neighbor pair of a mesh.

    For pair index p (aligned with ``mesh.pair_i``/``mesh.pair_j``):

    - ``sym_nodes[p]`` and ``sym_weights[p]`` give the two endpoint nodes of
      the star-boundary edge containing the symmetric point and the convex
      weights such that a nodal field evaluates there as
      ``w1*x[n1] + w2*x[n2]``;
    - ``r_len[p]`` and ``r_sym_len[p]`` are the distances from node i to
      node j and to the symmetric point;
    - ``one_sided[p]`` marks boundary pairs where the ray leaves the domain
      immediately; these duplicate the pair's own difference
      (``x_sym := x_j``, ``r_sym := r``).
    """

    def __init__(self, mesh, sym_nodes, sym_weights, sym_points, r_len,
                 r_sym_len, one_sided):
        self.mesh = mesh
        self.sym_nodes = sym_nodes
        self.sym_weights = sym_weights
        self.sym_points = sym_points
        self.r_len = r_len
        self.r_sym_len = r_sym_len
        self.one_sided = one_sided

    def eval_at_sym(self, x):
        """Values of the nodal field x at every symmetric point."""
        x = np.asarray(x, dtype=float)
        w = self.sym_weights
        return w[:, 0] * x[self.sym_nodes[:, 0]] + w[:, 1] * x[self.sym_nodes[:, 1]]


def build_sym_stencils(mesh):
    """Construct the symmetric-node stencil of a mesh.

    For each directed pair (i, j) the ray from node j through node i is
    intersected with the far edges of the star of i (the element edges
    opposite to i).  Boundary pairs whose ray exits the domain immediately
    fall back to the one-sided rule.

    Raises
    ------
    StencilError
        If an interior node's ray hits no far edge (degenerate geometry).
    """
    npairs = mesh.pair_i.size
    sym_nodes = np.zeros((npairs, 2), dtype=np.int64)
    sym_weights = np.zeros((npairs, 2))
    sym_points = np.zeros((npairs, 2))
    r_len = np.zeros(npairs)
    r_sym_len = np.zeros(npairs)
    one_sided = np.zeros(npairs, dtype=bool)

    # far edges per node: edges (u, v) opposite i in elements containing i
    far_edges = [[] for _ in range(mesh.num_nodes)]
    for (u, v, w) in mesh.elements:
        far_edges[u].append((v, w))
        far_edges[v].append((w, u))
        far_edges[w].append((u, v))

    pts = mesh.nodes
    for p in range(npairs):
        i, j = int(mesh.pair_i[p]), int(mesh.pair_j[p])
        ai, aj = pts[i], pts[j]
        d = ai - aj
        rij = np.linalg.norm(d)
        r_len[p] = rij

        best_t, best = np.inf, None
        for (u, v) in far_edges[i]:
            e = pts[v] - pts[u]
            denom = d[0] * e[1] - d[1] * e[0]
            if abs(denom) < 1e-14 * max(rij, 1.0) * np.linalg.norm(e):
                continue
            w = pts[u] - ai
            t = (w[0] * e[1] - w[1] * e[0]) / denom
            s = (w[0] * d[1] - w[1] * d[0]) / denom
            if t > 1e-12 and -1e-12 <= s <= 1.0 + 1e-12 and t < best_t:
                best_t, best = t, (u, v, min(max(s, 0.0), 1.0))

        if best is None:
            if not mesh.boundary_mask[i]:
                raise StencilError(
                    f"no symmetric point for interior pair ({i}, {j})"
                )
            sym_nodes[p] = (j, j)
            sym_weights[p] = (1.0, 0.0)
            sym_points[p] = aj
            r_sym_len[p] = rij
            one_sided[p] = True
        else:
            u, v, s = best
            point = ai + best_t * d
            sym_nodes[p] = (u, v)
            sym_weights[p] = (1.0 - s, s)
            sym_points[p] = point
            r_sym_len[p] = np.linalg.norm(point - ai)

    return SymmetricStencil(
        mesh, sym_nodes, sym_weights, sym_points, r_len, r_sym_len, one_sided
    )


class AcutenessReport:
    """Result of the strict-acuteness check of an assembled stiffness matrix."""

    def __init__(self, is_acute, c_ang, worst_pair):
        self.is_acute = is_acute
        self.c_ang = c_ang
        self.worst_pair = worst_pair

    def __repr__(self):
        return (
            f"AcutenessReport(is_acute={self.is_acute}, c_ang={self.c_ang:g}, "
            f"worst_pair={self.worst_pair})"
        )


def check_acuteness(mesh, stiffness, tol=1e-14):
    """Check that all off-diagonal stiffness couplings are strictly negative.

    The mesh is strictly acute when (grad phi_i, grad phi_j) <= -c for every
    adjacent pair i != j; the report carries c (from the worst pair).
    """
    K = stiffness.tocsr()
    vals = np.asarray(K[mesh.edge_i, mesh.edge_j]).ravel()
    worst = int(np.argmax(vals))
    worst_pair = (int(mesh.edge_i[worst]), int(mesh.edge_j[worst]))
    max_entry = float(vals[worst])
    return AcutenessReport(max_entry <= -tol, -max_entry, worst_pair)
