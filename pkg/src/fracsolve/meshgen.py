"""Structured hexahedral mesh generation and fracture splitting.

Benchmark meshes are tensor-product grids (optionally sheared so a grid
surface follows an inclined fracture trace), split along a selected set of
interior faces by duplicating nodes. The splitter is generic: it works for
fractures terminating inside the domain (tip nodes stay shared) and for
fractures cutting through to the boundary.
"""
from __future__ import annotations

import numpy as np

from .mesh import HEX_FACES, Mesh, MeshError


def structured_box(xs, ys, zs, material_of=None):
    """Tensor-product hex mesh over the given tick arrays.

    material_of: optional callable(centroid) -> int material id.
    Node sets xmin/xmax/ymin/ymax/zmin/zmax are attached from coordinate
    extremes.
    """
    xs, ys, zs = (np.asarray(a, dtype=float) for a in (xs, ys, zs))
    for a, nm in ((xs, "x"), (ys, "y"), (zs, "z")):
        if a.size < 2 or np.any(np.diff(a) <= 0):
            raise MeshError(f"{nm} ticks must be strictly increasing, length >= 2")
    nx, ny, nz = xs.size - 1, ys.size - 1, zs.size - 1
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    nodes = np.column_stack([X.ravel(order="F"), Y.ravel(order="F"),
                             Z.ravel(order="F")])
    # node index (i, j, k) -> i + j*(nx+1) + k*(nx+1)*(ny+1)
    def nid(i, j, k):
        return i + j * (nx + 1) + k * (nx + 1) * (ny + 1)

    hexes = np.empty((nx * ny * nz, 8), dtype=int)
    e = 0
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                hexes[e] = [
                    nid(i, j, k), nid(i + 1, j, k),
                    nid(i + 1, j + 1, k), nid(i, j + 1, k),
                    nid(i, j, k + 1), nid(i + 1, j, k + 1),
                    nid(i + 1, j + 1, k + 1), nid(i, j + 1, k + 1),
                ]
                e += 1

    mesh = Mesh(nodes=nodes, hexes=hexes,
                material_ids=np.zeros(len(hexes), dtype=int))
    if material_of is not None:
        cent = nodes[hexes].mean(axis=1)
        mesh.material_ids = np.array([material_of(c) for c in cent], dtype=int)
    attach_box_node_sets(mesh)
    mesh.validate()
    return mesh


def attach_box_node_sets(mesh, tol=1e-9):
    """(Re)build xmin..zmax node sets from coordinate extremes."""
    for axis, nm in enumerate("xyz"):
        c = mesh.nodes[:, axis]
        span = max(c.max() - c.min(), 1.0)
        mesh.node_sets[f"{nm}min"] = np.flatnonzero(c < c.min() + tol * span)
        mesh.node_sets[f"{nm}max"] = np.flatnonzero(c > c.max() - tol * span)
    return mesh


def _shear_to_line(mesh, f_of_s, level, axis, along):
    lo_bound = mesh.nodes[:, axis].min()
    hi_bound = mesh.nodes[:, axis].max()
    if not (lo_bound < level < hi_bound):
        raise MeshError("level must be strictly inside the mesh")
    s = mesh.nodes[:, along]
    c = mesh.nodes[:, axis]
    cf = np.array([f_of_s(si) for si in s])
    if np.any(cf <= lo_bound) or np.any(cf >= hi_bound):
        raise MeshError("fracture line leaves the box; shear would pinch cells")
    lo = c <= level + 1e-12
    cnew = np.where(
        lo,
        lo_bound + (c - lo_bound) * (cf - lo_bound) / (level - lo_bound),
        hi_bound - (hi_bound - c) * (hi_bound - cf) / (hi_bound - level),
    )
    mesh.nodes = mesh.nodes.copy()
    mesh.nodes[:, axis] = cnew
    attach_box_node_sets(mesh)
    return mesh


def shear_rows_to_line(mesh, y_of_x, y_level):
    """Shear a structured grid so the y = y_level surface maps onto y_of_x(x).

    Rows below/above the level are blended linearly into the sub/super
    intervals, preserving the bottom and top boundaries. Cells remain convex
    for moderate slopes.
    """
    return _shear_to_line(mesh, y_of_x, y_level, 1, 0)


def shear_cols_to_line(mesh, x_of_y, x_level):
    """Shear a structured grid so the x = x_level surface maps onto x_of_y(y).

    Transposed twin of shear_rows_to_line for near-vertical surfaces.
    """
    return _shear_to_line(mesh, x_of_y, x_level, 0, 1)


# reference direction with strictly incommensurate components; no mesh
# plane of interest is perpendicular to it, so the sign test never ties
_ORIENT_DIR = np.array([1.0, 1.6180339887498949, 2.6180339887498949])


def _interior_faces(mesh):
    """(sorted-key) -> [(hex, outward quad), (hex, outward quad)] for interior."""
    reg: dict[tuple, list[tuple[int, np.ndarray]]] = {}
    for e, h in enumerate(mesh.hexes):
        for loc in HEX_FACES:
            quad = h[loc]
            key = tuple(sorted(quad.tolist()))
            reg.setdefault(key, []).append((e, quad))
    return {k: v for k, v in reg.items() if len(v) == 2}


def split_mesh(mesh, face_predicate, fracture_name="main"):
    """Split the mesh along the interior faces selected by the predicate.

    face_predicate(centroid, unit_normal) -> bool. The normal handed to the
    predicate has a deterministic sign, positive against a fixed reference
    direction so that coplanar faces always orient the same way (a per-face
    dominant-component rule would tie-break randomly on, say, 45-degree
    planes). Nodes interior to the selected patch are duplicated; nodes on
    the patch rim stay shared, so fracture tips close exactly.

    Returns a new Mesh carrying `fractures[fracture_name]` as (nf, 2, 4)
    (plus-quad, minus-quad) pairs. Node sets are inherited by duplicates.
    """
    interior = _interior_faces(mesh)

    selected = []  # (key, plus_hex, minus_hex, quad oriented minus->plus)
    sel_keys = set()
    for key, owners in interior.items():
        (e0, q0), (e1, q1) = owners
        x = mesh.nodes[q0]
        n = np.cross(x[2] - x[0], x[3] - x[1])
        n /= np.linalg.norm(n)
        s = n @ _ORIENT_DIR
        if abs(s) < 1e-9:
            s = n[int(np.argmax(np.abs(n)))]
        if s < 0:
            n = -n
        c = x.mean(axis=0)
        if not face_predicate(c, n):
            continue
        # plus hex = the owner on the +n side
        c0 = mesh.nodes[mesh.hexes[e0]].mean(axis=0)
        if n @ (c0 - c) > 0:
            plus_hex, minus_hex = e0, e1
            quad = q1  # outward of minus hex -> normal points minus->plus
        else:
            plus_hex, minus_hex = e1, e0
            quad = q0
        selected.append((key, plus_hex, minus_hex, quad.copy()))
        sel_keys.add(key)
    if not selected:
        raise MeshError("face predicate selected no interior faces")

    # side classification per fracture node: hexes incident to the node,
    # connected through non-fracture faces containing that node
    frac_nodes = sorted({int(n) for _, _, _, q in selected for n in q})
    node_hexes: dict[int, list[int]] = {v: [] for v in frac_nodes}
    for e, h in enumerate(mesh.hexes):
        for n in h:
            if int(n) in node_hexes:
                node_hexes[int(n)].append(e)

    plus_of_face = {key: ph for key, ph, _, _ in selected}
    minus_of_face = {key: mh for key, _, mh, _ in selected}

    new_nodes = [mesh.nodes]
    dup: dict[int, int] = {}           # original id -> duplicate id
    hexes = mesh.hexes.copy()
    next_id = mesh.n_nodes

    for v in frac_nodes:
        elems = node_hexes[v]
        # union-find over elems, merging across shared non-fracture faces at v
        parent = {e: e for e in elems}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        face_owner: dict[tuple, int] = {}
        for e in elems:
            h = mesh.hexes[e]
            for loc in HEX_FACES:
                quad = h[loc]
                if v not in quad:
                    continue
                key = tuple(sorted(quad.tolist()))
                if key in sel_keys:
                    continue
                if key in face_owner:
                    ra, rb = find(face_owner[key]), find(e)
                    if ra != rb:
                        parent[ra] = rb
                else:
                    face_owner[key] = e
        comps: dict[int, list[int]] = {}
        for e in elems:
            comps.setdefault(find(e), []).append(e)
        if len(comps) == 1:
            continue  # rim node, stays shared
        if len(comps) != 2:
            raise MeshError(f"node {v}: fracture splits it into {len(comps)} parts")
        sides = list(comps.values())
        # the side containing a plus hex of an incident selected face is plus
        plus_side = None
        for key, ph in plus_of_face.items():
            if v in key and ph in elems:
                plus_side = 0 if ph in sides[0] else 1
                break
        if plus_side is None:
            raise MeshError(f"node {v}: cannot orient fracture sides")
        for key, mh in minus_of_face.items():
            if v in key and mh in elems:
                if mh in sides[plus_side]:
                    raise MeshError(f"node {v}: inconsistent fracture sides")
        minus_elems = sides[1 - plus_side]
        dup[v] = next_id
        new_nodes.append(mesh.nodes[v][None, :])
        for e in minus_elems:
            hexes[e] = np.where(hexes[e] == v, next_id, hexes[e])
        next_id += 1

    pairs = np.empty((len(selected), 2, 4), dtype=int)
    for f, (_key, _ph, _mh, quad) in enumerate(selected):
        pairs[f, 0] = quad
        pairs[f, 1] = [dup.get(int(n), int(n)) for n in quad]

    node_sets = {}
    for nm, ids in mesh.node_sets.items():
        extra = [dup[int(i)] for i in ids if int(i) in dup]
        node_sets[nm] = np.concatenate([ids, np.array(extra, dtype=int)]) \
            if extra else ids.copy()

    out = Mesh(
        nodes=np.vstack(new_nodes), hexes=hexes,
        material_ids=mesh.material_ids.copy(), node_sets=node_sets,
        fractures={fracture_name: pairs},
    )
    out.validate()
    return out


def geometric_ticks(start, end, h0, ratio, align_end=True):
    """Ticks from start toward end, first spacing h0, growing by `ratio`."""
    if end <= start:
        raise MeshError("end must exceed start")
    ticks = [start]
    h = h0
    while ticks[-1] + h < end - 1e-12 * (end - start):
        ticks.append(ticks[-1] + h)
        h *= ratio
    if align_end:
        # stretch the last few spacings smoothly onto the end point
        ticks.append(end)
        t = np.asarray(ticks)
    else:
        t = np.asarray(ticks)
    return t


def uniform_ticks(start, end, n):
    return np.linspace(start, end, n + 1)
