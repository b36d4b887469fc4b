"""Hexahedral mesh with an explicit pre-split fracture surface.

The mesh is conforming: the fracture is represented by duplicated nodes, and
the two overlapping surfaces are given as explicit (plus-face, minus-face)
quadrilateral pairs. This module derives everything the discretization needs
from that raw description: paired node alignment, face frames, face areas and
coupling weights, the interior/boundary edge sets of the fracture with their
collocation points, and the face-adjacency classification used by the
stabilization.

Conventions
-----------
* The face frame is (n, m1, m2), orthonormal, with n pointing from the minus
  surface toward the plus surface, so the normal gap g_N = [[u]] . n is
  positive when the fracture opens ( [[u]] = u_plus - u_minus ).
* m1 is the normalized in-plane projection of the global axis least aligned
  with n; m2 = n x m1.
* Traction DOFs per face are ordered (normal, m1, m2); face-constant
  multipliers couple to each of the 4 node pairs with weight A/4.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class MeshError(Exception):
    """Raised for invalid mesh geometry or topology."""


# reference hexahedron corners, counter-clockwise bottom then top
HEX_CORNERS = np.array(
    [
        [-1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0],
        [1.0, 1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
        [1.0, -1.0, 1.0],
        [1.0, 1.0, 1.0],
        [-1.0, 1.0, 1.0],
    ]
)

# local node ids of the 6 hex faces, right-hand rule -> outward normal
HEX_FACES = np.array(
    [
        [0, 3, 2, 1],  # zmin
        [4, 5, 6, 7],  # zmax
        [0, 1, 5, 4],  # ymin
        [3, 7, 6, 2],  # ymax
        [0, 4, 7, 3],  # xmin
        [1, 2, 6, 5],  # xmax
    ]
)

# 2x2 Gauss rule on the reference square
_G = 1.0 / np.sqrt(3.0)
QUAD_QP = np.array([[-_G, -_G], [_G, -_G], [_G, _G], [-_G, _G]])


def quad_shape(xi, eta):
    """Bilinear shape functions on the reference square."""
    return 0.25 * np.array(
        [
            (1 - xi) * (1 - eta),
            (1 + xi) * (1 - eta),
            (1 + xi) * (1 + eta),
            (1 - xi) * (1 + eta),
        ]
    )


def quad_shape_deriv(xi, eta):
    """d(shape)/d(xi, eta), shape (4, 2)."""
    return 0.25 * np.array(
        [
            [-(1 - eta), -(1 - xi)],
            [(1 - eta), -(1 + xi)],
            [(1 + eta), (1 + xi)],
            [-(1 + eta), (1 - xi)],
        ]
    )


def quad_area_and_qw(coords):
    """Area and Gauss surface weights of a planar quad.

    coords: (4, 3). Returns (area, qw) with qw (4,) including the surface
    Jacobian, so qw.sum() == area.
    """
    qw = np.empty(4)
    for q, (xi, eta) in enumerate(QUAD_QP):
        dN = quad_shape_deriv(xi, eta)
        j1 = dN[:, 0] @ coords
        j2 = dN[:, 1] @ coords
        qw[q] = np.linalg.norm(np.cross(j1, j2))
    return qw.sum(), qw


@dataclass
class DirichletBC:
    node_set: str
    component: int  # 0, 1, 2
    value: float | Callable  # constant, or callable(coords (k, 3)) -> (k,)


@dataclass
class NeumannBC:
    node_set: str  # boundary faces whose 4 nodes all lie in this set
    traction: np.ndarray  # (3,) constant traction vector, Pa


@dataclass
class Mesh:
    nodes: np.ndarray  # (n, 3) float
    hexes: np.ndarray  # (m, 8) int
    material_ids: np.ndarray  # (m,) int
    node_sets: dict[str, np.ndarray] = field(default_factory=dict)
    # fracture name -> (nf, 2, 4) int: [:, 0] plus quad, [:, 1] minus quad
    fractures: dict[str, np.ndarray] = field(default_factory=dict)
    dirichlet: list[DirichletBC] = field(default_factory=list)
    neumann: list[NeumannBC] = field(default_factory=list)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    def validate(self):
        if self.hexes.size and (
            self.hexes.min() < 0 or self.hexes.max() >= self.n_nodes
        ):
            raise MeshError("hexahedron references a nonexistent node")
        for e, h in enumerate(self.hexes):
            if len(set(h.tolist())) != 8:
                raise MeshError(f"hexahedron {e} has repeated nodes")

    def boundary_faces(self):
        """All boundary quads (outward-ordered), as an (nb, 4) int array."""
        seen: dict[tuple, np.ndarray] = {}
        count: dict[tuple, int] = {}
        for h in self.hexes:
            for loc in HEX_FACES:
                quad = h[loc]
                key = tuple(sorted(quad.tolist()))
                count[key] = count.get(key, 0) + 1
                seen[key] = quad
        out = [seen[k] for k, c in count.items() if c == 1]
        return np.array(out, dtype=int).reshape(-1, 4)

    def face_set(self, name):
        """Boundary quads whose 4 nodes all belong to node set `name`."""
        members = set(self.node_sets[name].tolist())
        faces = [q for q in self.boundary_faces() if all(int(n) in members for n in q)]
        if not faces:
            raise MeshError(f"node set '{name}' selects no boundary faces")
        return np.array(faces, dtype=int)


@dataclass
class InteriorEdge:
    faces: tuple[int, int]   # (K, L), K < L
    nodes: tuple[int, int]   # plus-surface endpoint node ids
    a: np.ndarray            # endpoint coordinates (3,)
    b: np.ndarray
    length: float
    x: np.ndarray            # collocation point (3,)
    m: np.ndarray            # (2, 3) outward in-plane normals for K then L


@dataclass
class BoundaryEdge:
    face: int
    nodes: tuple[int, int]
    a: np.ndarray
    b: np.ndarray
    length: float
    x: np.ndarray
    m: np.ndarray            # (3,) outward in-plane normal
    kind: str = "flux"       # 'pressure' or 'flux'
    pset: str | None = None  # node-set name that classified it as 'pressure'


@dataclass
class FractureTopology:
    name: str
    plus_nodes: np.ndarray   # (nf, 4), aligned with minus_nodes
    minus_nodes: np.ndarray  # (nf, 4)
    area: np.ndarray         # (nf,)
    centroid: np.ndarray     # (nf, 3)
    frame: np.ndarray        # (nf, 3, 3), columns (n, m1, m2)
    qp_shape: np.ndarray     # (4 qp, 4 nodes) bilinear shapes at 2x2 Gauss
    qp_weight: np.ndarray    # (nf, 4 qp) surface weights, rows sum to area
    interior_edges: list[InteriorEdge]
    boundary_edges: list[BoundaryEdge]
    edge_pairs: np.ndarray       # (n_int, 2) edge-sharing face pairs (K < L)
    node_only_pairs: np.ndarray  # (k, 2) pairs sharing >= 1 node but no edge

    @property
    def n_faces(self):
        return self.plus_nodes.shape[0]

    @property
    def node_pair_weight(self):
        """Coupling weight per node pair: A/4 (face-constant multipliers)."""
        return self.area / 4.0


def _tangent_frame(n):
    """(m1, m2) completing n to a right-handed orthonormal frame."""
    axis = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[axis] = 1.0
    m1 = e - (e @ n) * n
    m1 /= np.linalg.norm(m1)
    m2 = np.cross(n, m1)
    return m1, m2


def _align_minus(mesh, plus, minus, f):
    """Permute the minus quad so minus[i] coincides geometrically with plus[i]."""
    xp = mesh.nodes[plus]
    xm = mesh.nodes[minus]
    scale = max(np.ptp(xp, axis=0).max(), 1e-300)
    perm = np.full(4, -1, dtype=int)
    used: set[int] = set()
    for i in range(4):
        d = np.linalg.norm(xm - xp[i], axis=1)
        j = int(np.argmin(d))
        if d[j] > 1e-8 * scale or j in used:
            raise MeshError(
                f"fracture face {f}: unpaired split node (plus node "
                f"{int(plus[i])} has no coincident partner on the minus quad)"
            )
        used.add(j)
        perm[i] = j
    return minus[perm]


def _node_to_hexes(mesh):
    inc: dict[int, list[int]] = {}
    for e, h in enumerate(mesh.hexes):
        for n in h:
            inc.setdefault(int(n), []).append(e)
    return inc


def _owner_hex(mesh, quad, incidence):
    """A hexahedron containing all 4 nodes of the quad, or None."""
    sets = [set(incidence.get(int(n), [])) for n in quad]
    common = sets[0].intersection(*sets[1:])
    return min(common) if common else None


def _edge_key(n1, n2):
    return (n1, n2) if n1 < n2 else (n2, n1)


def _intersect_edge_with_line(a, b, xk, xl, tag):
    """Intersection of segment a-b with the (xk, xl) line, least-squares.

    Returns the point on the segment. Errors if the lines are (near-)parallel
    or the intersection falls off the segment.
    """
    d1 = b - a
    d2 = xl - xk
    # minimize |a + s d1 - xk - t d2|^2 over (s, t)
    M = np.array([[d1 @ d1, -(d1 @ d2)], [-(d1 @ d2), d2 @ d2]])
    rhs = np.array([(xk - a) @ d1, -((xk - a) @ d2)])
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    scale = (d1 @ d1) * (d2 @ d2)
    if abs(det) < 1e-12 * max(scale, 1e-300):
        raise MeshError(f"{tag}: barycenter line parallel to edge")
    s, t = np.linalg.solve(M, rhs)
    p = a + s * d1
    q = xk + t * d2
    if np.linalg.norm(p - q) > 1e-8 * np.linalg.norm(d1):
        raise MeshError(f"{tag}: barycenter line does not meet the edge plane")
    if s < -1e-6 or s > 1.0 + 1e-6:
        raise MeshError(
            f"{tag}: barycenter line misses the edge segment (s = {s:.3e})"
        )
    return p


def edge_collocation_point(edge, topology):
    """Collocation point x_eps of a fracture edge.

    Interior edge: intersection of the edge segment with the line joining the
    two face barycenters. Boundary edge: orthogonal projection of the owning
    face barycenter onto the edge line.
    """
    if isinstance(edge, InteriorEdge):
        k, l = edge.faces
        return _intersect_edge_with_line(
            edge.a, edge.b, topology.centroid[k], topology.centroid[l],
            f"interior edge {edge.nodes}",
        )
    xk = topology.centroid[edge.face]
    t = edge.b - edge.a
    t = t / (t @ t)
    return edge.a + ((xk - edge.a) @ (edge.b - edge.a)) * t


def _in_plane_outward(a, b, n, centroid):
    """Unit in-plane normal of edge a-b, perpendicular to n, away from centroid."""
    t = b - a
    m = np.cross(t, n)
    m /= np.linalg.norm(m)
    mid = 0.5 * (a + b)
    if m @ (mid - centroid) < 0.0:
        m = -m
    return m


def build_fracture_topology(mesh, name="main", pressure_edge_sets=None,
                            planarity_tol=1e-8):
    """Derive the full fracture topology for the named face-pair list.

    pressure_edge_sets: iterable of node-set names; a boundary edge whose two
    (plus-surface) endpoint nodes both belong to one of these sets is
    classified as a pressure (Dirichlet) edge, all others as flux edges.
    """
    if name not in mesh.fractures:
        raise MeshError(f"mesh has no fracture named '{name}'")
    pairs = mesh.fractures[name]
    nf = pairs.shape[0]
    if nf == 0:
        raise MeshError(f"fracture '{name}' has no faces")

    incidence = _node_to_hexes(mesh)

    plus = pairs[:, 0].copy()
    minus = np.empty_like(plus)
    area = np.empty(nf)
    centroid = np.empty((nf, 3))
    frame = np.empty((nf, 3, 3))
    qp_weight = np.empty((nf, 4))
    qp_shape = np.array([quad_shape(xi, eta) for xi, eta in QUAD_QP])

    patch_pts = mesh.nodes[np.unique(plus)]
    patch_diam = float(np.linalg.norm(np.ptp(patch_pts, axis=0)))
    tol = planarity_tol * max(patch_diam, 1.0)

    for f in range(nf):
        minus[f] = _align_minus(mesh, plus[f], pairs[f, 1], f)
        xp = mesh.nodes[plus[f]]

        # per-face planarity + normal from the two diagonals
        n = np.cross(xp[2] - xp[0], xp[3] - xp[1])
        nn = np.linalg.norm(n)
        if nn <= 0.0:
            raise MeshError(f"fracture face {f} is degenerate")
        n /= nn
        dev = np.abs((xp - xp.mean(axis=0)) @ n).max()
        if dev > tol:
            raise MeshError(
                f"fracture face {f} is non-planar (deviation {dev:.3e} m)"
            )

        # orient n from minus toward plus: into the hex owning the plus quad
        owner = _owner_hex(mesh, plus[f], incidence)
        if owner is None:
            raise MeshError(f"fracture face {f}: plus quad not matched by any hex")
        hc = mesh.nodes[mesh.hexes[owner]].mean(axis=0)
        if n @ (hc - xp.mean(axis=0)) < 0.0:
            n = -n

        m1, m2 = _tangent_frame(n)
        frame[f] = np.column_stack([n, m1, m2])
        area[f], qp_weight[f] = quad_area_and_qw(xp)
        centroid[f] = xp.mean(axis=0)

    # whole-patch coplanarity (stabilization and TPFA geometry assume it)
    n0 = frame[:, :, 0]
    ref = n0[0]
    align = n0 @ ref
    if np.any(np.abs(np.abs(align) - 1.0) > 1e-6):
        worst = int(np.argmax(np.abs(np.abs(align) - 1.0)))
        raise MeshError(
            f"fracture '{name}' is not planar: face {worst} normal deviates"
        )
    off = np.abs((centroid - centroid[0]) @ ref).max()
    if off > tol:
        raise MeshError(
            f"fracture '{name}' faces are coplanar only to {off:.3e} m (> tol)"
        )
    # make all frames identical in n (and hence in m1, m2): flip any
    # anti-aligned face normal; orientation consistency requires the plus
    # surfaces to be on a common side
    if np.any(align < 0.0):
        worst = int(np.argmin(align))
        raise MeshError(
            f"fracture '{name}': face {worst} has plus/minus sides swapped "
            "relative to face 0"
        )

    # edges keyed by sorted plus-node pairs
    local_edges = [(0, 1), (1, 2), (2, 3), (3, 0)]
    edge_faces: dict[tuple, list[int]] = {}
    for f in range(nf):
        for i, j in local_edges:
            key = _edge_key(int(plus[f, i]), int(plus[f, j]))
            edge_faces.setdefault(key, []).append(f)

    p_sets = []
    for sname in (pressure_edge_sets or []):
        if sname not in mesh.node_sets:
            raise MeshError(f"pressure edge set '{sname}' not in mesh")
        p_sets.append((sname, set(mesh.node_sets[sname].tolist())))

    interior: list[InteriorEdge] = []
    boundary: list[BoundaryEdge] = []
    pair_list: list[tuple[int, int]] = []
    for (n1, n2), faces in sorted(edge_faces.items()):
        a = mesh.nodes[n1].astype(float)
        b = mesh.nodes[n2].astype(float)
        length = float(np.linalg.norm(b - a))
        if len(faces) > 2:
            raise MeshError(f"fracture edge {(n1, n2)} shared by {len(faces)} faces")
        if len(faces) == 2:
            k, l = sorted(faces)
            e = InteriorEdge(
                faces=(k, l), nodes=(n1, n2), a=a, b=b, length=length,
                x=np.zeros(3),
                m=np.stack([
                    _in_plane_outward(a, b, frame[k][:, 0], centroid[k]),
                    _in_plane_outward(a, b, frame[l][:, 0], centroid[l]),
                ]),
            )
            e.x = edge_collocation_point(
                e, _GeomView(centroid)
            )
            interior.append(e)
            pair_list.append((k, l))
        else:
            k = faces[0]
            kind, pset = "flux", None
            for sname, ps in p_sets:
                if n1 in ps and n2 in ps:
                    kind, pset = "pressure", sname
                    break
            e = BoundaryEdge(
                face=k, nodes=(n1, n2), a=a, b=b, length=length,
                x=np.zeros(3),
                m=_in_plane_outward(a, b, frame[k][:, 0], centroid[k]),
                kind=kind, pset=pset,
            )
            e.x = edge_collocation_point(e, _GeomView(centroid))
            boundary.append(e)

    edge_pairs = np.array(sorted(set(pair_list)), dtype=int).reshape(-1, 2)

    # pairs sharing at least one node but no edge (excluded from stabilization)
    node_faces: dict[int, list[int]] = {}
    for f in range(nf):
        for n in plus[f]:
            node_faces.setdefault(int(n), []).append(f)
    sharing: set[tuple[int, int]] = set()
    for faces in node_faces.values():
        for i, k in enumerate(faces):
            for l in faces[i + 1:]:
                sharing.add((min(k, l), max(k, l)))
    edge_set = {tuple(p) for p in edge_pairs}
    node_only = np.array(sorted(sharing - edge_set), dtype=int).reshape(-1, 2)

    return FractureTopology(
        name=name, plus_nodes=plus, minus_nodes=minus, area=area,
        centroid=centroid, frame=frame, qp_shape=qp_shape,
        qp_weight=qp_weight, interior_edges=interior, boundary_edges=boundary,
        edge_pairs=edge_pairs, node_only_pairs=node_only,
    )


class _GeomView:
    """Minimal stand-in exposing centroids during topology construction."""

    def __init__(self, centroid):
        self.centroid = centroid


@dataclass
class DofMap:
    """Free/constrained displacement DOF numbering plus multiplier layout.

    Traction DOFs: face k owns (3k, 3k+1, 3k+2) = (normal, m1, m2).
    Pressure DOFs: face k owns index k.
    """
    n_nodes: int
    free: np.ndarray        # (n_nodes, 3) -> free index or -1
    fixed_mask: np.ndarray  # (n_nodes, 3) bool
    fixed_vals: np.ndarray  # (n_nodes, 3) float, 0 where free
    n_u: int

    @classmethod
    def build(cls, mesh):
        n = mesh.n_nodes
        fixed_mask = np.zeros((n, 3), dtype=bool)
        fixed_vals = np.zeros((n, 3))
        for bc in mesh.dirichlet:
            ids = mesh.node_sets[bc.node_set]
            c = bc.component
            if callable(bc.value):
                vals = np.asarray(bc.value(mesh.nodes[ids]), dtype=float)
            else:
                vals = np.full(ids.shape[0], float(bc.value))
            clash = fixed_mask[ids, c] & (fixed_vals[ids, c] != vals)
            if np.any(clash):
                raise MeshError(
                    f"conflicting Dirichlet values on set '{bc.node_set}' comp {c}"
                )
            fixed_mask[ids, c] = True
            fixed_vals[ids, c] = vals
        free = np.full((n, 3), -1, dtype=int)
        idx = np.flatnonzero(~fixed_mask.ravel())
        free.ravel()[idx] = np.arange(idx.size)
        return cls(n_nodes=n, free=free, fixed_mask=fixed_mask,
                   fixed_vals=fixed_vals, n_u=idx.size)

    def full_vector(self, u_free):
        """Scatter the free vector into an (n_nodes, 3) field with lifts."""
        u = self.fixed_vals.copy()
        u.ravel()[np.flatnonzero(~self.fixed_mask.ravel())] = u_free
        return u

    def free_part(self, u_full):
        return u_full.ravel()[np.flatnonzero(~self.fixed_mask.ravel())]

    def node_dofs(self, node):
        """Global (all-DOF) indices 3*node + (0,1,2)."""
        return np.arange(3 * node, 3 * node + 3)
