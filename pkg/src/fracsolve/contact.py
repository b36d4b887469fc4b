"""Frictional contact on fracture faces.

Face-wise-constant Lagrange multipliers carry the contact traction in the
local frame (normal, two tangents). Each face is in one of three states:

* stick -- no relative motion: zero normal gap, zero incremental slip;
* slip  -- closed but sliding: zero gap, tangential traction on the Coulomb
           cone opposing the slip increment;
* open  -- separated: zero traction, aperture feeds the fluid problem.

The displacement/multiplier coupling uses the face-integrated jump, with
each of the four node pairs of a face weighted by a quarter of the face
area (exact for the parallelogram faces produced by the mesh generators).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import FractureTopology

STICK, SLIP, OPEN = 0, 1, 2
STATE_NAMES = {STICK: "stick", SLIP: "slip", OPEN: "open"}

# below this slip increment the direction is taken from history instead of
# from the (noisy) increment itself
SLIP_DIRECTION_FLOOR = 1e-12
GAP_TOL = 1e-12


@dataclass(frozen=True)
class FrictionLaw:
    """Coulomb friction: |t_T| <= cohesion - t_N * tan_phi (t_N < 0 closed)."""
    cohesion: float = 0.0
    tan_phi: float = 0.0

    def tau_max(self, t_N):
        return np.maximum(self.cohesion - np.asarray(t_N) * self.tan_phi, 0.0)


def coupling_matrix(top: FractureTopology, n_nodes: int) -> sp.csc_matrix:
    """Jump operator C, shape (3*n_nodes, 3*n_faces).

    Column 3f+c holds the nodal force pattern of a unit multiplier in local
    direction c of face f (c = 0 normal, 1/2 tangents); equivalently
    C^T u = area * face-mean jump in the local frame.
    """
    nf = top.n_faces
    w = top.node_pair_weight                      # (nf,) = area/4
    rows, cols, vals = [], [], []
    for f in range(nf):
        R = top.frame[f]                          # columns n, m1, m2
        for c in range(3):
            col = 3 * f + c
            for i in range(4):
                for a in range(3):
                    v = w[f] * R[a, c]
                    if v == 0.0:
                        continue
                    rows.append(3 * top.plus_nodes[f, i] + a)
                    cols.append(col)
                    vals.append(v)
                    rows.append(3 * top.minus_nodes[f, i] + a)
                    cols.append(col)
                    vals.append(-v)
    return sp.csc_matrix((vals, (rows, cols)), shape=(3 * n_nodes, 3 * nf))


def normal_jump_qp_matrix(top: FractureTopology, n_nodes: int) -> sp.csr_matrix:
    """Maps u (3n,) to the normal jump at the 2x2 quadrature points (4*nf,)."""
    nf = top.n_faces
    rows, cols, vals = [], [], []
    for f in range(nf):
        n = top.frame[f, :, 0]
        for q in range(4):
            row = 4 * f + q
            for i in range(4):
                Nq = top.qp_shape[q, i]
                for a in range(3):
                    v = Nq * n[a]
                    if v == 0.0:
                        continue
                    rows.append(row)
                    cols.append(3 * top.plus_nodes[f, i] + a)
                    vals.append(v)
                    rows.append(row)
                    cols.append(3 * top.minus_nodes[f, i] + a)
                    vals.append(-v)
    return sp.csr_matrix((vals, (rows, cols)), shape=(4 * nf, 3 * n_nodes))


def face_jumps(top: FractureTopology, u_full: np.ndarray) -> np.ndarray:
    """Face-mean displacement jump in the local frame, (nf, 3) = [N, T1, T2]."""
    u = u_full.reshape(-1, 3)
    diff = (u[top.plus_nodes] - u[top.minus_nodes]).mean(axis=1)  # (nf, 3)
    return np.einsum("fa,fac->fc", diff, top.frame)


def qp_normal_jumps(top: FractureTopology, u_full: np.ndarray) -> np.ndarray:
    """Normal jump at the 2x2 quadrature points, (nf, 4)."""
    u = u_full.reshape(-1, 3)
    diff = u[top.plus_nodes] - u[top.minus_nodes]                 # (nf, 4, 3)
    dq = np.einsum("qi,fia->fqa", top.qp_shape, diff)             # (nf, 4, 3)
    return np.einsum("fqa,fa->fq", dq, top.frame[:, :, 0])


def slip_traction(law: FrictionLaw, t_N: np.ndarray, dgT: np.ndarray,
                  prev_dir: np.ndarray):
    """Return-direction tangential traction t* and its derivatives.

    t* = tau_max(t_N) * d, d = dgT/|dgT|. Below SLIP_DIRECTION_FLOOR the
    direction is frozen to prev_dir (or, failing that, left zero with zero
    derivatives so the caller can substitute the trial traction direction).

    Returns (tstar (m,2), d_dgT (m,2,2), d_tN (m,2), dir_used (m,2),
    frozen (m,) bool).
    """
    t_N = np.atleast_1d(np.asarray(t_N, dtype=float))
    dgT = np.atleast_2d(np.asarray(dgT, dtype=float))
    prev_dir = np.atleast_2d(np.asarray(prev_dir, dtype=float))
    m = t_N.size
    tau = law.tau_max(t_N)
    dtau = np.where(law.cohesion - t_N * law.tan_phi > 0.0, -law.tan_phi, 0.0)

    norm = np.linalg.norm(dgT, axis=1)
    frozen = norm < SLIP_DIRECTION_FLOOR
    d = np.zeros((m, 2))
    live = ~frozen
    d[live] = dgT[live] / norm[live, None]
    hist = frozen & (np.linalg.norm(prev_dir, axis=1) > 0.5)
    d[hist] = prev_dir[hist]

    tstar = tau[:, None] * d
    d_tN = dtau[:, None] * d
    d_dgT = np.zeros((m, 2, 2))
    # d(dg/|dg|)/d(dg) = (I |dg|^2 - dg dg^T)/|dg|^3, zero when frozen
    I2 = np.eye(2)
    for a in range(2):
        for b in range(2):
            d_dgT[live, a, b] = tau[live] * (
                I2[a, b] * norm[live] ** 2 - dgT[live, a] * dgT[live, b]
            ) / norm[live] ** 3
    return tstar, d_dgT, d_tN, d, frozen


def traction_tolerance(t_N: np.ndarray, floor: float = 1.0) -> float:
    """Open/closed decision tolerance: 1e-8 of the peak |t_N|, at least 1 Pa."""
    if t_N.size == 0:
        return floor
    return max(1e-8 * float(np.max(np.abs(t_N))), floor)


def update_states(law: FrictionLaw, status: np.ndarray, t_loc: np.ndarray,
                  g: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
    """One active-set status update from the current converged iterate.

    Transition rules, applied face-wise:
      stick -> slip when |t_T| exceeds the Coulomb bound (relative slack rtol)
      stick/slip -> open when t_N turns tensile beyond the traction tolerance
      open -> stick when the gap turns negative (interpenetration)
    Slip faces never revert directly to stick; they must pass through the
    bound check of a later outer iteration as stick faces.
    """
    status = status.copy()
    t_N = t_loc[:, 0]
    t_T = np.linalg.norm(t_loc[:, 1:], axis=1)
    closed = status != OPEN
    ttol = traction_tolerance(t_N[closed]) if closed.any() else 1.0

    tau = law.tau_max(t_N)
    to_slip = (status == STICK) & (t_T > tau * (1.0 + rtol))
    to_open = (status != OPEN) & (t_N > ttol)
    to_stick = (status == OPEN) & (g[:, 0] < -GAP_TOL)
    status[to_slip] = SLIP
    status[to_open] = OPEN
    status[to_stick] = STICK
    return status


@dataclass
class ContactBlocks:
    """Unstabilized contact residual rows and Jacobian pieces.

    Residual rows are stored per face (nf, 3) in the local frame with the
    meaning depending on the face state (see module docstring); the solver
    scatters them into the partitioned system.
    """
    r_face: np.ndarray          # (nf, 3)
    g: np.ndarray               # (nf, 3) current face-mean jumps
    dgT: np.ndarray             # (nf, 2) tangential jump increments
    tstar: np.ndarray           # (nf, 2) slip target traction (slip rows only)
    d_dgT: np.ndarray           # (nf, 2, 2)
    d_tN: np.ndarray            # (nf, 2)
    slip_dir: np.ndarray        # (nf, 2) direction used (for history)
    dir_frozen: np.ndarray      # (nf,) bool


def contact_blocks(top: FractureTopology, law: FrictionLaw,
                   u_full: np.ndarray, t_loc: np.ndarray,
                   g_prev: np.ndarray, slip_dir_prev: np.ndarray,
                   status: np.ndarray) -> ContactBlocks:
    nf = top.n_faces
    g = face_jumps(top, u_full)
    dgT = g[:, 1:] - g_prev[:, 1:]
    area = top.area

    tstar = np.zeros((nf, 2))
    d_dgT = np.zeros((nf, 2, 2))
    d_tN = np.zeros((nf, 2))
    slip_dir = np.zeros((nf, 2))
    frozen = np.zeros(nf, dtype=bool)
    sl = status == SLIP
    if sl.any():
        ts, dg, dn, dused, fz = slip_traction(
            law, t_loc[sl, 0], dgT[sl], slip_dir_prev[sl])
        # frozen with no history: oppose nothing -- use the trial traction
        # direction so the face keeps its current shear orientation
        need = fz & (np.linalg.norm(dused, axis=1) < 0.5)
        if need.any():
            tt = t_loc[sl][need, 1:]
            nrm = np.linalg.norm(tt, axis=1)
            ok = nrm > 0.0
            dd = np.zeros_like(tt)
            dd[ok] = tt[ok] / nrm[ok, None]
            dused[need] = dd
            tau = law.tau_max(t_loc[sl, 0][need])
            ts[need] = tau[:, None] * dd
        tstar[sl], d_dgT[sl], d_tN[sl] = ts, dg, dn
        slip_dir[sl], frozen[sl] = dused, fz

    r_face = np.zeros((nf, 3))
    st = status == STICK
    r_face[st, 0] = area[st] * g[st, 0]
    r_face[st, 1:] = area[st, None] * dgT[st]
    r_face[sl, 0] = area[sl] * g[sl, 0]
    r_face[sl, 1:] = area[sl, None] * (t_loc[sl, 1:] - tstar[sl])
    op = status == OPEN
    r_face[op] = area[op, None] * t_loc[op]

    return ContactBlocks(r_face=r_face, g=g, dgT=dgT, tstar=tstar,
                         d_dgT=d_dgT, d_tN=d_tN, slip_dir=slip_dir,
                         dir_frozen=frozen)
