"""Trilinear hexahedral elasticity: element stiffness, assembly, loads.

Small-strain isotropic elasticity on 8-node hexes with 2x2x2 Gauss
quadrature. Assembly eliminates Dirichlet dofs, returning the free-free
stiffness together with the load lift from prescribed values; the raw
(pre-elimination) diagonal over all dofs is kept because the contact
stabilization operator is scaled by it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import HEX_CORNERS, Mesh, MeshError, DofMap

GAUSS_1D = np.array([-1.0, 1.0]) / np.sqrt(3.0)
# 2x2x2 points ordered to match HEX_CORNERS axis convention
HEX_QP = np.array([[gx, gy, gz] for gz in GAUSS_1D for gy in GAUSS_1D
                   for gx in GAUSS_1D])


@dataclass(frozen=True)
class Material:
    """Isotropic linear-elastic material."""
    E: float
    nu: float

    @property
    def lam(self) -> float:
        return self.E * self.nu / ((1 + self.nu) * (1 - 2 * self.nu))

    @property
    def mu(self) -> float:
        return self.E / (2 * (1 + self.nu))

    def moduli_matrix(self) -> np.ndarray:
        """6x6 stiffness in Voigt order (xx, yy, zz, yz, xz, xy)."""
        lam, mu = self.lam, self.mu
        D = np.zeros((6, 6))
        D[:3, :3] = lam
        D[np.arange(3), np.arange(3)] += 2 * mu
        D[np.arange(3, 6), np.arange(3, 6)] = mu
        return D


def hex_shape(xi: np.ndarray) -> np.ndarray:
    """Trilinear shape values, xi (m, 3) -> (m, 8)."""
    xi = np.atleast_2d(xi)
    return 0.125 * np.prod(1.0 + xi[:, None, :] * HEX_CORNERS[None, :, :],
                           axis=2)


def hex_shape_deriv(xi: np.ndarray) -> np.ndarray:
    """Reference-coordinate derivatives, xi (m, 3) -> (m, 8, 3)."""
    xi = np.atleast_2d(xi)
    one = 1.0 + xi[:, None, :] * HEX_CORNERS[None, :, :]  # (m, 8, 3)
    d = np.empty((xi.shape[0], 8, 3))
    for a in range(3):
        others = [b for b in range(3) if b != a]
        d[:, :, a] = 0.125 * HEX_CORNERS[None, :, a] * \
            one[:, :, others[0]] * one[:, :, others[1]]
    return d


_DN_QP = hex_shape_deriv(HEX_QP)  # (8 qp, 8 nodes, 3)


def _strain_rows(dNdx: np.ndarray) -> np.ndarray:
    """B matrices for a batch: dNdx (ne, 8, 3) -> (ne, 6, 24).

    Voigt order (xx, yy, zz, yz, xz, xy) with engineering shear strains;
    column layout is (node0 x y z, node1 x y z, ...).
    """
    ne = dNdx.shape[0]
    B = np.zeros((ne, 6, 24))
    dx, dy, dz = dNdx[:, :, 0], dNdx[:, :, 1], dNdx[:, :, 2]
    B[:, 0, 0::3] = dx
    B[:, 1, 1::3] = dy
    B[:, 2, 2::3] = dz
    B[:, 3, 1::3] = dz
    B[:, 3, 2::3] = dy
    B[:, 4, 0::3] = dz
    B[:, 4, 2::3] = dx
    B[:, 5, 0::3] = dy
    B[:, 5, 1::3] = dx
    return B


def element_stiffness(coords: np.ndarray, mat: Material,
                      elem_ids=None) -> np.ndarray:
    """Stiffness matrices for a batch of hexes, coords (ne, 8, 3) -> (ne, 24, 24)."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 2:
        coords = coords[None]
    ne = coords.shape[0]
    D = mat.moduli_matrix()
    K = np.zeros((ne, 24, 24))
    for q in range(8):
        dN = _DN_QP[q]                       # (8, 3)
        J = np.einsum("eia,ib->eab", coords, dN)   # dx/dxi
        detJ = np.linalg.det(J)
        if np.any(detJ <= 0.0):
            bad = int(np.argmax(detJ <= 0.0))
            eid = bad if elem_ids is None else int(elem_ids[bad])
            raise MeshError(
                f"element {eid}: non-positive Jacobian {detJ[bad]:.3e} "
                f"at quadrature point {q}")
        dNdx = np.einsum("ib,eba->eia", dN, np.linalg.inv(J))
        B = _strain_rows(dNdx)
        K += np.einsum("eqi,qr,erj->eij", B, D, B) * detJ[:, None, None]
    return K


@dataclass
class ElasticSystem:
    """Assembled elasticity over free dofs.

    K_ff:     free-free stiffness (CSR, symmetric)
    lift:     load contribution -K_fc * u_c from prescribed displacements
    raw_diag: pre-elimination stiffness diagonal over all 3n dofs
    K_full:   optional full (3n, 3n) stiffness for reaction recovery
    """
    K_ff: sp.csr_matrix
    lift: np.ndarray
    raw_diag: np.ndarray
    K_full: sp.csr_matrix | None = None


def assemble_elasticity(mesh: Mesh, materials: dict[int, Material],
                        dofmap: DofMap, keep_full: bool = False,
                        chunk: int = 16384) -> ElasticSystem:
    """Assemble the bulk stiffness, eliminating Dirichlet dofs."""
    n_all = 3 * mesh.n_nodes
    raw_diag = np.zeros(n_all)
    lift = np.zeros(dofmap.n_u)
    free = dofmap.free.ravel()              # all-dof -> free index or -1
    fixed_vals = dofmap.fixed_vals.ravel()

    rows_ff, cols_ff, vals_ff = [], [], []
    rows_full, cols_full, vals_full = [], [], []
    for mid, mat in materials.items():
        elems = np.flatnonzero(mesh.material_ids == mid)
        for s in range(0, elems.size, chunk):
            es = elems[s:s + chunk]
            Ke = element_stiffness(mesh.nodes[mesh.hexes[es]], mat, es)
            dofs = (3 * mesh.hexes[es][:, :, None] +
                    np.arange(3)[None, None, :]).reshape(-1, 24)
            r = np.repeat(dofs, 24, axis=1).ravel()
            c = np.tile(dofs, (1, 24)).ravel()
            v = Ke.ravel()
            np.add.at(raw_diag, dofs.ravel(),
                      Ke[:, np.arange(24), np.arange(24)].ravel())
            fr, fc = free[r], free[c]
            both = (fr >= 0) & (fc >= 0)
            rows_ff.append(fr[both])
            cols_ff.append(fc[both])
            vals_ff.append(v[both])
            to_fixed = (fr >= 0) & (fc < 0)
            np.add.at(lift, fr[to_fixed], -v[to_fixed] * fixed_vals[c[to_fixed]])
            if keep_full:
                rows_full.append(r)
                cols_full.append(c)
                vals_full.append(v)

    K_ff = sp.coo_matrix(
        (np.concatenate(vals_ff),
         (np.concatenate(rows_ff), np.concatenate(cols_ff))),
        shape=(dofmap.n_u, dofmap.n_u)).tocsr()
    K_full = None
    if keep_full:
        K_full = sp.coo_matrix(
            (np.concatenate(vals_full),
             (np.concatenate(rows_full), np.concatenate(cols_full))),
            shape=(n_all, n_all)).tocsr()
    return ElasticSystem(K_ff=K_ff, lift=lift, raw_diag=raw_diag,
                         K_full=K_full)


def neumann_load(mesh: Mesh, dofmap: DofMap) -> np.ndarray:
    """Consistent nodal load from the mesh's boundary tractions (free dofs)."""
    from .mesh import quad_area_and_qw, quad_shape, QUAD_QP

    f = np.zeros(dofmap.n_u)
    N = quad_shape(QUAD_QP[:, 0], QUAD_QP[:, 1]).T   # (4 qp, 4 nodes)
    for bc in mesh.neumann:
        quads = mesh.face_set(bc.node_set)
        for quad in quads:
            coords = mesh.nodes[quad]
            _, qw = quad_area_and_qw(coords)
            xq = N @ coords
            if callable(bc.traction):
                tq = np.array([bc.traction(x) for x in xq])  # (4, 3)
            else:
                tq = np.broadcast_to(np.asarray(bc.traction, dtype=float),
                                     (4, 3))
            fn = np.einsum("q,qi,qc->ic", qw, N, tq)         # (4 nodes, 3)
            for i, node in enumerate(quad):
                for c in range(3):
                    j = dofmap.free[node, c]
                    if j >= 0:
                        f[j] += fn[i, c]
    return f


def reactions(system: ElasticSystem, mesh: Mesh, dofmap: DofMap,
              u_full: np.ndarray, f_ext_full: np.ndarray | None = None
              ) -> np.ndarray:
    """Reaction forces at constrained dofs, (n_nodes, 3), zero elsewhere."""
    if system.K_full is None:
        raise ValueError("assemble with keep_full=True to recover reactions")
    r = system.K_full @ u_full.ravel()
    if f_ext_full is not None:
        r = r - f_ext_full.ravel()
    r = r.reshape(-1, 3).copy()
    r[~dofmap.fixed_mask] = 0.0
    return r


def _invert_trilinear(coords: np.ndarray, x: np.ndarray,
                      tol: float = 1e-11, maxit: int = 30):
    """Reference coordinates of physical point x inside one hex, or None."""
    xi = np.zeros(3)
    for _ in range(maxit):
        N = hex_shape(xi[None])[0]
        r = N @ coords - x
        if np.linalg.norm(r) < tol * max(1.0, np.abs(coords).max()):
            break
        dN = hex_shape_deriv(xi[None])[0]
        J = coords.T @ dN
        try:
            xi = xi - np.linalg.solve(J.T, r)
        except np.linalg.LinAlgError:
            return None
        if np.any(np.abs(xi) > 3.0):
            return None
    if np.any(np.abs(xi) > 1.0 + 1e-8):
        return None
    return xi


def stress_at_points(mesh: Mesh, materials: dict[int, Material],
                     u_full: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Cauchy stress tensors (m, 3, 3) at physical points.

    Each point is evaluated in every element whose reference preimage
    contains it and the results are averaged, so points on inter-element
    faces get the two-sided mean.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    u = u_full.reshape(-1, 3)
    el_coords = mesh.nodes[mesh.hexes]                    # (ne, 8, 3)
    lo = el_coords.min(axis=1)
    hi = el_coords.max(axis=1)
    pad = 1e-9 * (hi - lo).max()
    out = np.zeros((points.shape[0], 3, 3))
    for p, x in enumerate(points):
        cand = np.flatnonzero(np.all((x >= lo - pad) & (x <= hi + pad),
                                     axis=1))
        sigmas = []
        for e in cand:
            coords = el_coords[e]
            xi = _invert_trilinear(coords, x)
            if xi is None:
                continue
            dN = hex_shape_deriv(xi[None])[0]
            J = coords.T @ dN
            dNdx = dN @ np.linalg.inv(J)
            grad = u[mesh.hexes[e]].T @ dNdx              # du_i/dx_j
            eps = 0.5 * (grad + grad.T)
            mat = materials[int(mesh.material_ids[e])]
            sig = mat.lam * np.trace(eps) * np.eye(3) + 2 * mat.mu * eps
            sigmas.append(sig)
        if not sigmas:
            raise MeshError(f"point {x} lies outside the mesh")
        out[p] = np.mean(sigmas, axis=0)
    return out
