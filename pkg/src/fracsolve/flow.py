"""Lubrication flow in the fracture: finite volumes with two-point fluxes.

Each fracture face is a flow cell carrying one pressure unknown. Fluxes
across cell edges use a linear two-point approximation built from one-sided
geometric factors at edge collocation points; the hydraulic conductivity
follows the cubic law

    C_f = C_f0 + max(g_N, 0)^3 / 12

with the face value taken as the quadrature mean of the pointwise law over
the 2x2 points of the face. Storage comes from the opening rate of open
faces; closed faces (residual conductivity C_f0) host steady flow.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .contact import OPEN
from .mesh import FractureTopology


@dataclass(frozen=True)
class FluidProperties:
    viscosity: float          # Pa s
    residual_conductivity: float  # C_f0, m^3 (per unit width: m^2/ (1/m)...)

    def __post_init__(self):
        if self.viscosity <= 0.0:
            raise ValueError("viscosity must be positive")
        if self.residual_conductivity <= 0.0:
            raise ValueError("residual conductivity must be positive")


@dataclass
class FlowGeometry:
    """Edge-wise geometric transmissibility factors (fixed for a mesh).

    For edge eps and adjacent face beta the one-sided factor is

        ybar = (|eps| / mu) * ((x_eps - x_beta) . m_beta) / |x_eps - x_beta|^2

    with x_eps the edge collocation point, x_beta the face barycenter and
    m_beta the unit outward in-plane edge normal of the face.
    """
    int_K: np.ndarray         # (ne,) face index (lower)
    int_L: np.ndarray         # (ne,) face index (higher)
    int_ybar: np.ndarray      # (ne, 2) one-sided factors (K side, L side)
    bnd_face: np.ndarray      # (nb,) face index of pressure-boundary edges
    bnd_ybar: np.ndarray      # (nb,)
    bnd_set: list[str] = field(default_factory=list)   # (nb,) set names
    flux_face: np.ndarray = field(default_factory=lambda: np.empty(0, int))
    flux_length: np.ndarray = field(default_factory=lambda: np.empty(0))


def _one_sided(edge_x, length, face_x, m, mu):
    d = edge_x - face_x
    dist2 = float(d @ d)
    if dist2 <= 0.0:
        raise ValueError("edge collocation point coincides with face center")
    return length * float(d @ m) / dist2 / mu


def build_flow_geometry(top: FractureTopology, fluid: FluidProperties
                        ) -> FlowGeometry:
    mu = fluid.viscosity
    iK, iL, iy = [], [], []
    for e in top.interior_edges:
        k, l = e.faces
        iK.append(k)
        iL.append(l)
        iy.append((
            _one_sided(e.x, e.length, top.centroid[k], e.m[0], mu),
            _one_sided(e.x, e.length, top.centroid[l], e.m[1], mu),
        ))
    bF, bY, bS = [], [], []
    fF, fL = [], []
    for e in top.boundary_edges:
        if e.kind == "pressure":
            bF.append(e.face)
            bY.append(_one_sided(e.x, e.length, top.centroid[e.face], e.m, mu))
            bS.append(e.pset or "")
        else:
            fF.append(e.face)
            fL.append(e.length)
    return FlowGeometry(
        int_K=np.array(iK, dtype=int), int_L=np.array(iL, dtype=int),
        int_ybar=np.array(iy, dtype=float).reshape(-1, 2),
        bnd_face=np.array(bF, dtype=int), bnd_ybar=np.array(bY, dtype=float),
        bnd_set=bS, flux_face=np.array(fF, dtype=int),
        flux_length=np.array(fL, dtype=float),
    )


def face_conductivity(top: FractureTopology, gq: np.ndarray, c_f0: float):
    """Quadrature-mean cubic-law conductivity per face.

    gq: (nf, 4) normal jump at the 2x2 points. Returns (C (nf,),
    dC_dgq (nf, 4)) where dC_dgq are the derivatives w.r.t. the pointwise
    jumps (zero where the jump is clamped at contact).
    """
    gpos = np.maximum(gq, 0.0)
    w = top.qp_weight / top.area[:, None]
    C = c_f0 + np.sum(w * gpos ** 3, axis=1) / 12.0
    dC = w * gpos ** 2 / 4.0
    return C, dC


def _harmonic(yk, yl):
    s = yk + yl
    return np.where(s > 0.0, yk * yl / np.where(s > 0.0, s, 1.0), 0.0)


@dataclass
class FlowBlocks:
    r_p: np.ndarray           # (nf,)
    A_pp: sp.csr_matrix       # (nf, nf)
    A_pC: sp.csr_matrix       # (nf, nf): d r_p / d C_f (conductivity chain)


def flow_blocks(geom: FlowGeometry, top: FractureTopology, C: np.ndarray,
                p: np.ndarray, pressure_values: dict[str, float],
                storage: np.ndarray | None = None,
                face_sources: np.ndarray | None = None) -> FlowBlocks:
    """Flow residual and pressure/conductivity Jacobians.

    storage: optional (nf,) accumulation term (already divided by dt);
    face_sources: optional (nf,) injection rates (m^3/s, positive in).
    """
    nf = top.n_faces
    K, L = geom.int_K, geom.int_L
    yK = C[K] * geom.int_ybar[:, 0]
    yL = C[L] * geom.int_ybar[:, 1]
    Y = _harmonic(yK, yL)

    r_p = np.zeros(nf)
    dp = p[K] - p[L]
    np.add.at(r_p, K, Y * dp)
    np.add.at(r_p, L, -Y * dp)

    rows = [K, K, L, L]
    cols = [K, L, L, K]
    vals = [Y, -Y, Y, -Y]

    # conductivity chain: dY/dC_K = (yL/(yK+yL))^2 ybar_K etc.
    s = yK + yL
    with np.errstate(divide="ignore", invalid="ignore"):
        dY_dCK = np.where(s > 0, (yL / s) ** 2, 0.0) * geom.int_ybar[:, 0]
        dY_dCL = np.where(s > 0, (yK / s) ** 2, 0.0) * geom.int_ybar[:, 1]
    c_rows = [K, L, K, L]
    c_cols = [K, K, L, L]
    c_vals = [dY_dCK * dp, -dY_dCK * dp, dY_dCL * dp, -dY_dCL * dp]

    if geom.bnd_face.size:
        pbar = np.array([pressure_values.get(sname, np.nan)
                         for sname in geom.bnd_set])
        if np.any(np.isnan(pbar)):
            missing = {sname for sname, v in zip(geom.bnd_set, pbar)
                       if np.isnan(v)}
            raise ValueError(
                f"no prescribed pressure for edge set(s) {sorted(missing)}")
        bf = geom.bnd_face
        yb = C[bf] * geom.bnd_ybar
        np.add.at(r_p, bf, yb * (p[bf] - pbar))
        rows.append(bf)
        cols.append(bf)
        vals.append(yb)
        c_rows.append(bf)
        c_cols.append(bf)
        c_vals.append(geom.bnd_ybar * (p[bf] - pbar))

    if storage is not None:
        r_p += storage
    if face_sources is not None:
        r_p -= face_sources

    A_pp = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nf, nf))
    A_pC = sp.csr_matrix(
        (np.concatenate(c_vals),
         (np.concatenate(c_rows), np.concatenate(c_cols))), shape=(nf, nf))
    return FlowBlocks(r_p=r_p, A_pp=A_pp, A_pC=A_pC)


def storage_term(top: FractureTopology, status: np.ndarray, g_N: np.ndarray,
                 g_N_prev: np.ndarray, dt: float) -> np.ndarray:
    """Opening-rate accumulation (chi, dg_N/dt) over open faces, (nf,)."""
    out = np.zeros(top.n_faces)
    op = status == OPEN
    out[op] = top.area[op] * (g_N[op] - g_N_prev[op]) / dt
    return out
