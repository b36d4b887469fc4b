"""Jump stabilization for face-wise constant interface multipliers.

Trilinear displacements paired with face-wise constant tractions (and
pressures) are not a uniformly stable mixed pair: the interface Schur
complement S = -C^T K^{-1} C has a kernel of mesh-scale checkerboard
modes that pollute the multiplier field.  The cure used here is a
symmetric positive semi-definite matrix H penalizing multiplier jumps
between neighboring faces, subtracted from the (zero) multiplier
diagonal block, in one of three variants:

* ``analytic_macro``   -- H = alpha * V V^T with V the checkerboard modes of a
                          two-element macro patch and alpha a closed-form
                          optimal scalar (regular grids, homogeneous material).
* ``algebraic_macro``  -- H = C~^T D^-1 C~ per macroelement, where C~ is the
                          column-swapped, sign-flipped local coupling block and
                          D the assembled stiffness diagonal at the shared
                          nodes; reduces to the analytic variant on regular
                          homogeneous grids but needs no scalar tuning.
* ``algebraic_global`` -- the same local construction applied to *every*
                          edge-sharing face pair, no macroelement partition
                          required.  Default.

The resulting H has the sparsity of an edge-adjacency (block) Laplacian.
Pairs of faces sharing only a node contribute nothing.  The scalar
pressure analogue H_pp is the normal-normal component of each block.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .contact import STICK, SLIP
from .elasticity import Material, element_stiffness
from .mesh import HEX_CORNERS, FractureTopology

# in-plane rotation used by the closed-form 2D macroelement: columns are the
# interface frame (n, m) expressed in global (x, y) for a horizontal interface
ROT2 = np.array([[0.0, -1.0], [1.0, 0.0]])

VARIANTS = ("analytic_macro", "algebraic_macro", "algebraic_global")


@dataclass
class StabilizationConfig:
    """Variant selection plus the knobs the macro variants need.

    patches: optional list of face-index groups forming the macroelement
        partition (macro variants).  When omitted, a greedy edge matching
        over the fracture adjacency is used.
    alpha: scalar for analytic_macro (overrides the closed-form value).
    """

    variant: str = "algebraic_global"
    alpha: float | None = None
    patches: list | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(
                f"unknown stabilization variant '{self.variant}'; "
                f"expected one of {VARIANTS}")


def analytic_alpha(E: float, nu: float, h: float, dim: int = 3) -> float:
    """Optimal checkerboard-penalty scale for a regular grid of spacing h.

    2D: alpha* = (1+nu)(1-2nu)/E * (3/2) h^2 / (3-4nu)
    3D: alpha* = (1+nu)(1-2nu)/E * 3 h^3 / (16-24nu)

    For anisotropic grids h is the mean interface element length (2D) or
    the cube root of the mean adjacent-cell volume (3D).
    """
    if not 0.0 <= nu < 0.5:
        raise ValueError(f"Poisson ratio {nu} outside [0, 0.5)")
    if h <= 0.0 or E <= 0.0:
        raise ValueError("E and h must be positive")
    c = (1.0 + nu) * (1.0 - 2.0 * nu) / E
    if dim == 2:
        return c * 1.5 * h * h / (3.0 - 4.0 * nu)
    if dim == 3:
        return c * 3.0 * h ** 3 / (16.0 - 24.0 * nu)
    raise ValueError(f"dim must be 2 or 3, got {dim}")


# ----------------------------------------------------------------------
# reference macroelements (closed forms used by the spectral tests)
# ----------------------------------------------------------------------

def reference_macroelement_2d(E, nu, hx, hy, *, E_minus=None, hy_minus=None):
    """Closed-form (K, C) of the plane-strain two-interface-element patch.

    Four hx-by-hy quads around the interface; only the innermost node pair
    is active, so K is the assembled 4x4 diagonal displacement block
    [N1+x, N1+y, N1-x, N1-y] and C the 4x4 coupling to the face tractions
    [tN1, tT1, tN2, tT2].  Optional E_minus / hy_minus describe a patch
    whose lower elements differ (stretched or heterogeneous tests).
    """
    E_minus = E if E_minus is None else E_minus
    hy_minus = hy if hy_minus is None else hy_minus

    def diag_block(Ee, hyy):
        k = Ee * (1.0 - nu) / (3.0 * (1.0 + nu) * (1.0 - 2.0 * nu))
        r = (1.0 - 2.0 * nu) / (1.0 - nu)
        return k * np.array([r * hx / hyy + 2.0 * hyy / hx,
                             r * hyy / hx + 2.0 * hx / hyy])

    K = np.diag(np.concatenate([diag_block(E, hy),
                                diag_block(E_minus, hy_minus)]))
    half = 0.5 * hx
    C = half * np.block([[ROT2, ROT2], [-ROT2, -ROT2]])
    return K, C


def reference_macroelement_3d(E: float, nu: float, h: float):
    """Numeric (K, C) of the 8-hex / 4-interface-quad reference patch.

    Only the central node pair is active: K is the 6x6 assembled diagonal
    block (4 hexes per side), C the 6x12 coupling to the four face
    tractions, each with node-pair weight A/4 = h^2/4 and identity frame.
    """
    mat = Material(E, nu)
    Ke = element_stiffness(0.5 * h * (HEX_CORNERS + 1.0), mat)[0]
    k_plus = np.zeros((3, 3))
    k_minus = np.zeros((3, 3))
    for c in range(4):                      # bottom corners touch N1+
        k_plus += Ke[3 * c:3 * c + 3, 3 * c:3 * c + 3]
    for c in range(4, 8):                   # top corners touch N1-
        k_minus += Ke[3 * c:3 * c + 3, 3 * c:3 * c + 3]
    K = sla.block_diag(k_plus, k_minus)
    w = 0.25 * h * h
    C = np.zeros((6, 12))
    for f in range(4):
        C[0:3, 3 * f:3 * f + 3] = w * np.eye(3)
        C[3:6, 3 * f:3 * f + 3] = -w * np.eye(3)
    return K, C


def macroelement_schur(K: np.ndarray, C: np.ndarray):
    """S = -C^T K^{-1} C with its eigen-decomposition (ascending)."""
    try:
        S = -C.T @ np.linalg.solve(K, C)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular macroelement stiffness") from exc
    S = 0.5 * (S + S.T)
    lam, vec = sla.eigh(S)
    return S, lam, vec


def checkerboard_modes(pairs, n_faces: int, comp: int) -> np.ndarray:
    """Mode matrix V: one +1/-1 column per (face pair, traction component)."""
    V = np.zeros((comp * n_faces, comp * len(pairs)))
    for j, (a, b) in enumerate(pairs):
        for c in range(comp):
            V[comp * a + c, comp * j + c] = 1.0
            V[comp * b + c, comp * j + c] = -1.0
    return V


def build_H_analytic(alpha: float, n_faces: int = 2, comp: int = 2,
                     pairs=None) -> np.ndarray:
    """alpha-scaled checkerboard penalty H = alpha V V^T on a small patch."""
    if pairs is None:
        pairs = [(i, i + 1) for i in range(n_faces - 1)]
    V = checkerboard_modes(pairs, n_faces, comp)
    return alpha * (V @ V.T)


def build_H_algebraic_macro(weights, diag_plus, diag_minus, rot=None):
    """Paper-form macro H = V D V^T from hat-integral weights and K diagonals.

    weights: per-face hat integrals at the shared vertex -- (l1, l2) in 2D,
        (A1, ..., A4) in 3D (wrap-around edge pairing).
    diag_plus / diag_minus: assembled stiffness diagonal at the shared node
        pair, length 2 (2D) or 3 (3D).
    rot: interface frame (global <- local); identity by default, ROT2 in 2D.
    """
    weights = np.asarray(weights, dtype=float)
    dp = np.asarray(diag_plus, dtype=float)
    dm = np.asarray(diag_minus, dtype=float)
    if np.any(dp <= 0.0) or np.any(dm <= 0.0):
        raise ValueError("non-positive stiffness diagonal at shared node pair")
    comp = dp.size
    D = np.diag(1.0 / dp + 1.0 / dm)
    if rot is None:
        rot = np.eye(comp)
    n = weights.size
    if n == 2:
        edge_list = [(0, 1)]
    elif n == 4:
        edge_list = [(0, 1), (1, 2), (2, 3), (3, 0)]
    else:
        raise ValueError("expected 2 (2D) or 4 (3D) face weights")
    H = np.zeros((comp * n, comp * n))
    for a, b in edge_list:
        V = np.zeros((comp * n, comp))
        V[comp * a:comp * a + comp] = -weights[b] * rot.T
        V[comp * b:comp * b + comp] = weights[a] * rot.T
        H += V @ D @ V.T
    return H


# ----------------------------------------------------------------------
# production builders on a fracture topology
# ----------------------------------------------------------------------

def _minus_of(top: FractureTopology, face: int, node_plus: int) -> int:
    pos = int(np.flatnonzero(top.plus_nodes[face] == node_plus)[0])
    return int(top.minus_nodes[face][pos])


def _edge_subset(top: FractureTopology, patches) -> list:
    """Interior edges internal to the given partition (or a greedy matching)."""
    if patches is not None:
        group = {}
        for gi, faces in enumerate(patches):
            for f in faces:
                if int(f) in group:
                    raise ValueError(f"face {int(f)} in two macro patches")
                group[int(f)] = gi
        return [e for e in top.interior_edges
                if group.get(e.faces[0], -1) == group.get(e.faces[1], -2)]
    used = np.zeros(top.n_faces, dtype=bool)
    picked = []
    for e in top.interior_edges:
        fk, fl = e.faces
        if not used[fk] and not used[fl]:
            used[fk] = used[fl] = True
            picked.append(e)
    return picked


def _pair_blocks(top, raw_diag, edge):
    """Local 2x2-block H contribution of one edge-sharing face pair.

    Gathers the coupling columns of both faces over the four shared nodes
    (both surfaces), swaps/negates the column blocks, and scales by the
    inverse assembled stiffness diagonal.  Blocks are returned in the local
    face frames, matching the traction DOF layout.
    """
    fk, fl = edge.faces
    n1p, n2p = edge.nodes
    nodes = (n1p, _minus_of(top, fk, n1p), n2p, _minus_of(top, fk, n2p))
    inv_sum = np.zeros(3)
    for n in nodes:
        d = raw_diag[3 * n:3 * n + 3]
        if np.any(d <= 0.0):
            raise ValueError(
                f"non-positive stiffness diagonal at fracture node {n}")
        inv_sum += 1.0 / d
    Rk = top.frame[fk]
    Rl = top.frame[fl]
    wk = top.node_pair_weight[fk]
    wl = top.node_pair_weight[fl]
    mid_k = Rk.T * inv_sum                 # R_k^T @ diag(inv_sum)
    H_kk = (wl * wl) * (Rl.T * inv_sum) @ Rl
    H_ll = (wk * wk) * mid_k @ Rk
    H_kl = -(wk * wl) * (Rl.T * inv_sum) @ Rk
    return H_kk, H_kl, H_ll


def _analytic_pair_blocks(alpha):
    I3 = np.eye(3)
    return alpha * I3, -alpha * I3, alpha * I3


def build_H_global(top: FractureTopology, raw_diag: np.ndarray,
                   edges=None, analytic_alpha_value: float | None = None):
    """Assemble the global jump penalty H (3nf x 3nf) and its pressure
    analogue H_pp (nf x nf, normal-normal components).

    One contribution per edge-sharing face pair; node-only neighbors are
    skipped, so the sparsity is exactly the edge adjacency.  ``edges``
    restricts assembly to a subset (macro variants).  When
    ``analytic_alpha_value`` is given, each pair contributes the plain
    alpha-scaled checkerboard penalty instead of the algebraic one.
    """
    if edges is None:
        edges = top.interior_edges
    nf = top.n_faces
    rows, cols, vals = [], [], []
    prow, pcol, pval = [], [], []
    idx3 = np.arange(3)
    for e in edges:
        fk, fl = e.faces
        if analytic_alpha_value is None:
            H_kk, H_kl, H_ll = _pair_blocks(top, raw_diag, e)
        else:
            H_kk, H_kl, H_ll = _analytic_pair_blocks(analytic_alpha_value)
        for (fa, fb, blk) in ((fk, fk, H_kk), (fk, fl, H_kl),
                              (fl, fk, H_kl.T), (fl, fl, H_ll)):
            r = (3 * fa + idx3)[:, None] + np.zeros(3, dtype=int)
            c = (3 * fb + idx3)[None, :] + np.zeros((3, 1), dtype=int)
            rows.append(r.ravel())
            cols.append(c.ravel())
            vals.append(blk.ravel())
            prow.append(fa)
            pcol.append(fb)
            pval.append(blk[0, 0])
    if rows:
        H = sp.coo_matrix((np.concatenate(vals),
                           (np.concatenate(rows), np.concatenate(cols))),
                          shape=(3 * nf, 3 * nf)).tocsr()
        H_pp = sp.coo_matrix((pval, (prow, pcol)), shape=(nf, nf)).tocsr()
    else:
        H = sp.csr_matrix((3 * nf, 3 * nf))
        H_pp = sp.csr_matrix((nf, nf))
    return H, H_pp


def build_stabilization(top: FractureTopology, raw_diag: np.ndarray,
                        config: StabilizationConfig | None = None):
    """Variant dispatch; returns (H, H_pp), both state-independent."""
    if config is None:
        config = StabilizationConfig()
    if config.variant == "algebraic_global":
        return build_H_global(top, raw_diag)
    edges = _edge_subset(top, config.patches)
    if config.variant == "algebraic_macro":
        return build_H_global(top, raw_diag, edges=edges)
    if config.alpha is None:
        raise ValueError("analytic_macro on a mesh requires config.alpha")
    return build_H_global(top, raw_diag, edges=edges,
                          analytic_alpha_value=config.alpha)


@dataclass
class PartitionedStabilization:
    """State-dependent views of H used by the linearized system.

    Stick faces keep all three traction components, slip faces only the
    normal one, open faces none.  H_pp spans every (flowing) face and is
    scaled by 1/dt where it enters the pressure equation.
    """

    H_SS: sp.csr_matrix
    H_SN: sp.csr_matrix
    H_NS: sp.csr_matrix
    H_NN: sp.csr_matrix
    idx_stick: np.ndarray    # traction-DOF indices of the stick block
    idx_slip_n: np.ndarray   # traction-DOF indices of the slip normal block


def partition_H(H: sp.spmatrix, status: np.ndarray) -> PartitionedStabilization:
    stick = np.flatnonzero(status == STICK)
    slip = np.flatnonzero(status == SLIP)
    idx_s = (3 * stick[:, None] + np.arange(3)).ravel()
    idx_n = 3 * slip
    Hc = H.tocsr()
    return PartitionedStabilization(
        H_SS=Hc[idx_s][:, idx_s], H_SN=Hc[idx_s][:, idx_n],
        H_NS=Hc[idx_n][:, idx_s], H_NN=Hc[idx_n][:, idx_n],
        idx_stick=idx_s, idx_slip_n=idx_n)


def spectrum(H: sp.spmatrix, max_dense: int = 3000) -> np.ndarray:
    """Eigenvalues of H (ascending); dense up to max_dense, else extremes."""
    n = H.shape[0]
    if n <= max_dense:
        return sla.eigvalsh(H.toarray())
    import scipy.sparse.linalg as spla
    k = min(6, n - 2)
    lo = spla.eigsh(H, k=k, sigma=0.0, which="LM",
                    return_eigenvectors=False)
    hi = spla.eigsh(H, k=k, which="LA", return_eigenvectors=False)
    return np.sort(np.concatenate([lo, hi]))
