"""Quasi-static frictional-contact / fracture-flow solver.

Unknowns: nodal displacements u, face-wise contact tractions t (local
frames), face-wise fluid pressure p.  Each timestep runs an active-set
outer loop: freeze the stick/slip/open partition, Newton-solve the
stabilized block system, update the partition from the converged iterate,
and stop when the partition repeats.  Slip tangential tractions and open
tractions have invertible diagonal blocks and are condensed out of the
linear solve in production; the full block system is kept available for
verification.

Layout of the condensed unknown vector:
    [du (n_u) | dt_stick (3 per stick face) | dt_N (1 per slip face) | dp]
The full layout appends dt_T (2 per slip face) and dt_open (3 per open
face) between dt_N and dp.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .contact import (OPEN, SLIP, STICK, SLIP_DIRECTION_FLOOR, FrictionLaw,
                      contact_blocks, coupling_matrix, face_jumps,
                      normal_jump_qp_matrix, qp_normal_jumps, update_states)
from .elasticity import ElasticSystem, assemble_elasticity, neumann_load
from .flow import (FlowGeometry, FluidProperties, build_flow_geometry,
                   face_conductivity, flow_blocks, storage_term)
from .mesh import DofMap, FractureTopology, Mesh, build_fracture_topology
from .stabilization import StabilizationConfig, build_stabilization, partition_H


class NonconvergenceError(RuntimeError):
    """Newton or active-set loop failed; carries the iteration history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history if history is not None else []


@dataclass
class SolverConfig:
    """Newton / active-set tolerances and limits.

    Convergence is field-wise: every residual block must satisfy
    ||r_i|| <= rtol * ||r_i at entry|| + atol_i, with absolute floors in
    the natural units of the block (forces, area-weighted gaps, fluxes).
    """

    newton_rtol: float = 1e-8
    atol_force: float = 1e-6
    atol_gap: float = 1e-12
    atol_flux: float = 1e-12
    max_newton_iters: int = 20
    max_outer_iters: int = 12
    condensed: bool = True
    # return the last iterate instead of raising when the Newton limit is
    # hit; for diagnostic runs on deliberately unstable discretizations
    best_effort: bool = False

    def validate(self):
        if min(self.newton_rtol, self.atol_force, self.atol_gap,
               self.atol_flux) <= 0.0:
            raise ValueError("solver tolerances must be positive")
        if self.max_newton_iters < 1 or self.max_outer_iters < 1:
            raise ValueError("iteration limits must be at least 1")


@dataclass
class SolverState:
    """One accepted (or in-progress) solution snapshot."""

    time: float
    u: np.ndarray          # (n_nodes, 3), constrained entries hold BC values
    t: np.ndarray          # (3*nf,) local tractions [N, T1, T2] per face
    p: np.ndarray          # (nf,) fluid pressure
    status: np.ndarray     # (nf,) STICK / SLIP / OPEN
    slip_dir: np.ndarray   # (nf, 2) last resolved slip direction

    def copy(self):
        return SolverState(self.time, self.u.copy(), self.t.copy(),
                           self.p.copy(), self.status.copy(),
                           self.slip_dir.copy())


@dataclass
class Physics:
    """Assembled, state-independent problem data."""

    mesh: Mesh
    dofmap: DofMap
    elastic: ElasticSystem
    top: FractureTopology
    law: FrictionLaw
    f_ext: np.ndarray              # (n_u,) external load
    C_free: sp.csc_matrix          # (n_u, 3nf) coupling, free rows
    glob_of_free: np.ndarray       # (n_u,) flat u indices of the free dofs
    fluid: FluidProperties | None = None
    flow_geom: FlowGeometry | None = None
    pressure_bc: dict = field(default_factory=dict)
    face_sources: np.ndarray | None = None
    fixed_pressure: np.ndarray | None = None   # (nf,) used when fluid is None
    nqp_free: sp.csr_matrix | None = None      # (4nf, n_u) qp normal jumps

    @property
    def has_flow(self):
        return self.fluid is not None


def build_physics(mesh: Mesh, materials: dict, law: FrictionLaw, *,
                  fluid: FluidProperties | None = None,
                  pressure_bc: dict | None = None,
                  face_sources: np.ndarray | None = None,
                  fixed_pressure: np.ndarray | None = None,
                  fracture: str = "main",
                  pressure_edge_sets=None,
                  keep_full: bool = False) -> Physics:
    """Assemble every state-independent operator for the given mesh."""
    dofmap = DofMap.build(mesh)
    elastic = assemble_elasticity(mesh, materials, dofmap, keep_full=keep_full)
    top = build_fracture_topology(mesh, fracture,
                                  pressure_edge_sets=pressure_edge_sets)
    C = coupling_matrix(top, mesh.n_nodes)
    glob_of_free = np.flatnonzero(~dofmap.fixed_mask.ravel())
    C_free = C.tocsr()[glob_of_free].tocsc()
    f_ext = neumann_load(mesh, dofmap)
    flow_geom = None
    nqp_free = None
    if fluid is not None:
        flow_geom = build_flow_geometry(top, fluid)
        nqp = normal_jump_qp_matrix(top, mesh.n_nodes)
        nqp_free = nqp.tocsc()[:, glob_of_free].tocsr()
    return Physics(mesh=mesh, dofmap=dofmap, elastic=elastic, top=top,
                   law=law, f_ext=f_ext, C_free=C_free,
                   glob_of_free=glob_of_free, fluid=fluid,
                   flow_geom=flow_geom, pressure_bc=pressure_bc or {},
                   face_sources=face_sources, fixed_pressure=fixed_pressure,
                   nqp_free=nqp_free)


def initial_state(physics: Physics, time: float = 0.0) -> SolverState:
    """All-stick, zero-displacement start (constrained dofs lifted)."""
    nf = physics.top.n_faces
    p = (physics.fixed_pressure.copy() if physics.fixed_pressure is not None
         else np.zeros(nf))
    return SolverState(time=time,
                       u=physics.dofmap.full_vector(np.zeros(physics.dofmap.n_u)),
                       t=np.zeros(3 * nf), p=p,
                       status=np.full(nf, STICK, dtype=int),
                       slip_dir=np.zeros((nf, 2)))


# ----------------------------------------------------------------------
# system assembly
# ----------------------------------------------------------------------

@dataclass
class _Assembled:
    matrix: sp.csc_matrix
    rhs: np.ndarray
    norms: dict
    layout: dict
    recon: dict      # pieces needed to reconstruct condensed unknowns


def _field_norms(r_u, r_S, r_N, r_T, r_O, r_p):
    out = {"u": float(np.linalg.norm(r_u)),
           "S": float(np.linalg.norm(r_S)),
           "N": float(np.linalg.norm(r_N)),
           "T": float(np.linalg.norm(r_T)),
           "O": float(np.linalg.norm(r_O))}
    if r_p is not None:
        out["p"] = float(np.linalg.norm(r_p))
    return out


def _empty(nr, nc):
    return sp.csr_matrix((nr, nc))


def assemble_system(physics: Physics, state: SolverState,
                    state_prev: SolverState, dt: float,
                    H: sp.spmatrix, H_pp: sp.spmatrix,
                    condensed: bool = True) -> _Assembled:
    """Linearized block system at the current iterate, partition frozen.

    Traction rows: stick faces impose zero jump increment on all three
    components, slip faces impose zero normal jump plus the Coulomb
    return-direction equation, open faces impose zero traction.  The
    stabilization H relaxes the constraint rows by the multiplier jumps;
    its scalar analogue enters the pressure equation scaled by 1/dt.
    """
    top, dof = physics.top, physics.dofmap
    nf = top.n_faces
    area = top.area
    status = state.status
    stick = np.flatnonzero(status == STICK)
    slip = np.flatnonzero(status == SLIP)
    opened = np.flatnonzero(status == OPEN)
    ns, nl, no = stick.size, slip.size, opened.size
    n_u = dof.n_u

    ix_S = (3 * stick[:, None] + np.arange(3)).ravel()
    ix_N = 3 * slip
    ix_T = (3 * slip[:, None] + np.array([1, 2])).ravel()
    ix_O = (3 * opened[:, None] + np.arange(3)).ravel()
    ix_n_all = 3 * np.arange(nf)

    g_prev = face_jumps(top, state_prev.u)
    cb = contact_blocks(top, physics.law, state.u, state.t.reshape(nf, 3),
                        g_prev, state_prev.slip_dir, status)

    u_f = dof.free_part(state.u)
    r_u = (physics.elastic.K_ff @ u_f - physics.elastic.lift - physics.f_ext
           + physics.C_free @ state.t
           - physics.C_free[:, ix_n_all] @ state.p)

    r_S = cb.r_face[stick].ravel()
    r_N = cb.r_face[slip, 0]
    r_T = cb.r_face[slip, 1:].ravel()
    r_O = cb.r_face[opened].ravel()

    part = partition_H(H, status)
    H_SS, H_SN = part.H_SS, part.H_SN
    H_NS, H_NN = part.H_NS, part.H_NN
    r_S_st = r_S - H_SS @ state.t[ix_S] - H_SN @ state.t[ix_N]
    r_N_st = r_N - H_NS @ state.t[ix_S] - H_NN @ state.t[ix_N]

    A_uS = physics.C_free[:, ix_S]
    A_uN = physics.C_free[:, ix_N]
    A_uT = physics.C_free[:, ix_T]
    A_uO = physics.C_free[:, ix_O]

    if nl:
        A_Tu = (-sp.block_diag([cb.d_dgT[f] for f in slip], format="csr")
                @ A_uT.T).tocsr()
        A_TN = sp.csr_matrix(
            ((-area[slip][:, None] * cb.d_tN[slip]).ravel(),
             (np.arange(2 * nl), np.repeat(np.arange(nl), 2))),
            shape=(2 * nl, nl))
        A_TT_inv = sp.diags(1.0 / np.repeat(area[slip], 2))
    else:
        A_Tu = _empty(0, n_u)
        A_TN = _empty(0, 0)
        A_TT_inv = _empty(0, 0)
    A_OO_inv = sp.diags(1.0 / np.repeat(area[opened], 3)) if no else _empty(0, 0)

    # flow residual and couplings
    r_p_st = None
    A_pu = A_up = A_pp_st = None
    if physics.has_flow:
        gq = qp_normal_jumps(top, state.u)
        c_f0 = physics.fluid.residual_conductivity
        Cf, dC = face_conductivity(top, gq, c_f0)
        stor = storage_term(top, status, cb.g[:, 0], g_prev[:, 0], dt)
        fb = flow_blocks(physics.flow_geom, top, Cf, state.p,
                         physics.pressure_bc, storage=stor,
                         face_sources=physics.face_sources)
        r_p_st = fb.r_p + (H_pp @ state.p) / dt
        dC_sel = sp.csr_matrix(
            (dC.ravel(), (np.repeat(np.arange(nf), 4), np.arange(4 * nf))),
            shape=(nf, 4 * nf))
        A_pu = (fb.A_pC @ (dC_sel @ physics.nqp_free)).tocsr()
        if no:
            scatter = sp.csr_matrix(
                (np.ones(no), (opened, np.arange(no))), shape=(nf, no))
            A_pu = A_pu + (scatter @ physics.C_free[:, 3 * opened].T) / dt
        A_up = -physics.C_free[:, ix_n_all]
        A_pp_st = (fb.A_pp + H_pp / dt).tocsr()

    norms = _field_norms(r_u, r_S_st, r_N_st, r_T, r_O,
                         r_p_st if physics.has_flow else None)
    layout = {"n_u": n_u, "stick": stick, "slip": slip, "open": opened,
              "ix_S": ix_S, "ix_N": ix_N, "ix_T": ix_T, "ix_O": ix_O}
    recon = {"A_TT_inv": A_TT_inv, "A_OO_inv": A_OO_inv, "A_Tu": A_Tu,
             "A_TN": A_TN, "r_T": r_T, "r_O": r_O}

    A_uu = physics.elastic.K_ff.tocsr()
    if condensed:
        if nl:
            B_uu = -(A_uT @ (A_TT_inv @ A_Tu))
            B_uN = -(A_uT @ (A_TT_inv @ A_TN))
            A_row_u = A_uu + B_uu
            A_uN_eff = A_uN + B_uN
            rhs_u = -r_u + A_uT @ (A_TT_inv @ r_T)
        else:
            A_row_u = A_uu
            A_uN_eff = A_uN
            rhs_u = -r_u
        if no:
            rhs_u = rhs_u + A_uO @ (A_OO_inv @ r_O)
        blocks = [[A_row_u, A_uS, A_uN_eff],
                  [A_uS.T, -H_SS, -H_SN],
                  [A_uN.T, -H_NS, -H_NN]]
        rhs = [rhs_u, -r_S_st, -r_N_st]
        if physics.has_flow:
            blocks[0].append(A_up)
            blocks[1].append(None)
            blocks[2].append(None)
            blocks.append([A_pu, _empty(nf, 3 * ns), _empty(nf, nl), A_pp_st])
            rhs.append(-r_p_st)
    else:
        blocks = [
            [A_uu, A_uS, A_uN, A_uT, A_uO],
            [A_uS.T, -H_SS, -H_SN, _empty(3 * ns, 2 * nl), _empty(3 * ns, 3 * no)],
            [A_uN.T, -H_NS, -H_NN, _empty(nl, 2 * nl), _empty(nl, 3 * no)],
            [A_Tu, _empty(2 * nl, 3 * ns), A_TN,
             sp.diags(np.repeat(area[slip], 2)) if nl else _empty(0, 0),
             _empty(2 * nl, 3 * no)],
            [_empty(3 * no, n_u), _empty(3 * no, 3 * ns), _empty(3 * no, nl),
             _empty(3 * no, 2 * nl),
             sp.diags(np.repeat(area[opened], 3)) if no else _empty(0, 0)],
        ]
        rhs = [-r_u, -r_S_st, -r_N_st, -r_T, -r_O]
        if physics.has_flow:
            for row, tail in zip(blocks, (A_up, None, None, None, None)):
                row.append(tail)
            blocks.append([A_pu, _empty(nf, 3 * ns), _empty(nf, nl),
                           _empty(nf, 2 * nl), _empty(nf, 3 * no), A_pp_st])
            rhs.append(-r_p_st)

    matrix = sp.bmat(blocks, format="csc")
    return _Assembled(matrix=matrix, rhs=np.concatenate(rhs), norms=norms,
                      layout=layout, recon=recon)


# ----------------------------------------------------------------------
# Newton iteration (frozen partition)
# ----------------------------------------------------------------------

_ATOL_FIELD = {"u": "atol_force", "S": "atol_gap", "N": "atol_gap",
               "T": "atol_force", "O": "atol_force", "p": "atol_flux"}


def _converged(norms, norms0, config):
    for k, v in norms.items():
        if v > config.newton_rtol * norms0[k] + getattr(config, _ATOL_FIELD[k]):
            return False
    return True


@dataclass
class NewtonInfo:
    iterations: int
    history: list
    converged: bool = True


def newton_solve(physics: Physics, state: SolverState,
                 state_prev: SolverState, dt: float,
                 H: sp.spmatrix, H_pp: sp.spmatrix,
                 config: SolverConfig,
                 condensed: bool | None = None) -> tuple[SolverState, NewtonInfo]:
    """Newton iteration at frozen partition; returns the converged state."""
    condensed = config.condensed if condensed is None else condensed
    state = state.copy()
    state.u.ravel()[physics.dofmap.fixed_mask.ravel()] = \
        physics.dofmap.fixed_vals.ravel()[physics.dofmap.fixed_mask.ravel()]
    norms0 = None
    history = []
    for it in range(config.max_newton_iters + 1):
        asm = assemble_system(physics, state, state_prev, dt, H, H_pp,
                              condensed=condensed)
        history.append(asm.norms)
        if norms0 is None:
            norms0 = asm.norms
        if _converged(asm.norms, norms0, config):
            return state, NewtonInfo(iterations=it, history=history)
        if it == config.max_newton_iters:
            if config.best_effort:
                return state, NewtonInfo(iterations=it, history=history,
                                         converged=False)
            raise NonconvergenceError(
                f"Newton did not converge in {it} iterations "
                f"(final norms {asm.norms})", history)
        try:
            lu = spla.splu(asm.matrix)
        except RuntimeError as exc:
            raise NonconvergenceError(f"singular linear system: {exc}",
                                      history) from exc
        delta = lu.solve(asm.rhs)
        if not np.all(np.isfinite(delta)):
            raise NonconvergenceError("linear solve returned non-finite values",
                                      history)
        _apply_update(physics, state, asm, delta, condensed)
    raise AssertionError("unreachable")


def _apply_update(physics, state, asm, delta, condensed):
    lay, rec = asm.layout, asm.recon
    n_u = lay["n_u"]
    ns, nl, no = lay["stick"].size, lay["slip"].size, lay["open"].size
    nf = physics.top.n_faces
    du = delta[:n_u]
    off = n_u
    dt_S = delta[off:off + 3 * ns]
    off += 3 * ns
    dt_N = delta[off:off + nl]
    off += nl
    if condensed:
        dt_T = -(rec["A_TT_inv"] @ (rec["r_T"] + rec["A_Tu"] @ du
                                    + rec["A_TN"] @ dt_N)) if nl else np.zeros(0)
        dt_O = -(rec["A_OO_inv"] @ rec["r_O"]) if no else np.zeros(0)
    else:
        dt_T = delta[off:off + 2 * nl]
        off += 2 * nl
        dt_O = delta[off:off + 3 * no]
        off += 3 * no
    state.u.ravel()[physics.glob_of_free] += du
    state.t[lay["ix_S"]] += dt_S
    state.t[lay["ix_N"]] += dt_N
    state.t[lay["ix_T"]] += dt_T
    state.t[lay["ix_O"]] += dt_O
    if physics.has_flow:
        state.p += delta[off:off + nf]


def internal_energy(physics: Physics, state: SolverState) -> float:
    """Strain energy minus external work, used for cycle tie-breaking."""
    u_f = physics.dofmap.free_part(state.u)
    f = physics.f_ext + physics.elastic.lift
    return 0.5 * float(u_f @ (physics.elastic.K_ff @ u_f)) - float(f @ u_f)


# ----------------------------------------------------------------------
# active-set outer loop and time marching
# ----------------------------------------------------------------------

@dataclass
class StepDiagnostics:
    time: float
    outer_iters: int
    newton_iters: int
    n_stick: int
    n_slip: int
    n_open: int
    residual_norms: dict


def active_set_step(physics: Physics, state_prev: SolverState, dt: float,
                    H: sp.spmatrix, H_pp: sp.spmatrix,
                    config: SolverConfig) -> tuple[SolverState, StepDiagnostics]:
    """Advance one timestep: solve-update cycles until the partition repeats.

    A 2-cycle between partitions is resolved by accepting the solution of
    lower internal energy; longer cycles and iteration-limit hits raise
    NonconvergenceError with the partition history attached.
    """
    top = physics.top
    status = state_prev.status.copy()
    solved: dict[bytes, tuple[float, SolverState, NewtonInfo]] = {}
    order: list[bytes] = []
    total_newton = 0
    accepted = None
    info = None
    for outer in range(1, config.max_outer_iters + 1):
        work = state_prev.copy()
        work.time = state_prev.time + dt
        work.status = status
        work, ninfo = newton_solve(physics, work, state_prev, dt, H, H_pp,
                                   config)
        total_newton += ninfo.iterations
        key = status.tobytes()
        order.append(key)
        solved[key] = (internal_energy(physics, work), work, ninfo)
        if not ninfo.converged:
            accepted, info = work, ninfo
            break
        new_status = update_states(physics.law, status,
                                   work.t.reshape(top.n_faces, 3),
                                   face_jumps(top, work.u))
        if np.array_equal(new_status, status):
            accepted, info = work, ninfo
            break
        nkey = new_status.tobytes()
        if nkey in solved:
            if len(order) >= 2 and order[-2] == nkey:
                # 2-cycle: keep the lower-energy branch
                cand = [solved[nkey], solved[key]]
                cand.sort(key=lambda c: c[0])
                _, accepted, info = cand[0]
                break
            raise NonconvergenceError(
                "active-set loop cycles between more than two partitions",
                [np.frombuffer(k, dtype=status.dtype) for k in order])
        status = new_status
    else:
        raise NonconvergenceError(
            f"active set did not settle in {config.max_outer_iters} iterations",
            [np.frombuffer(k, dtype=status.dtype) for k in order])

    accepted.status = accepted.status.copy()
    _advance_slip_dir(top, accepted, state_prev)
    diag = StepDiagnostics(
        time=accepted.time, outer_iters=outer, newton_iters=total_newton,
        n_stick=int(np.sum(accepted.status == STICK)),
        n_slip=int(np.sum(accepted.status == SLIP)),
        n_open=int(np.sum(accepted.status == OPEN)),
        residual_norms=info.history[-1])
    return accepted, diag


def _advance_slip_dir(top, state_new, state_prev):
    dgT = (face_jumps(top, state_new.u)[:, 1:]
           - face_jumps(top, state_prev.u)[:, 1:])
    nrm = np.linalg.norm(dgT, axis=1)
    live = (nrm > SLIP_DIRECTION_FLOOR) & (state_new.status == SLIP)
    sd = state_prev.slip_dir.copy()
    sd[live] = dgT[live] / nrm[live, None]
    state_new.slip_dir = sd


def zero_stabilization(top: FractureTopology):
    nf = top.n_faces
    return sp.csr_matrix((3 * nf, 3 * nf)), sp.csr_matrix((nf, nf))


def solve_static(physics: Physics, stab: StabilizationConfig | None,
                 config: SolverConfig | None = None,
                 state0: SolverState | None = None):
    """Single quasi-static solve (no transient flow terms)."""
    config = config or SolverConfig()
    config.validate()
    if stab is None:
        H, H_pp = zero_stabilization(physics.top)
    else:
        H, H_pp = build_stabilization(physics.top, physics.elastic.raw_diag,
                                      stab)
    state0 = state0 or initial_state(physics)
    return active_set_step(physics, state0, 1.0, H, H_pp, config)


def time_march(physics: Physics, schedule, stab: StabilizationConfig | None,
               config: SolverConfig | None = None,
               state0: SolverState | None = None, callback=None):
    """March the schedule [(dt, t_end), ...]; returns (states, diagnostics).

    The callback, when given, receives (state, diag) after every accepted
    step.  On a step failure the exception propagates with the last good
    state list intact in the exception's __notes__-free way: callers keep
    the returned-by-callback data.
    """
    config = config or SolverConfig()
    config.validate()
    t_prev_end = None
    for dt, t_end in schedule:
        if dt <= 0.0:
            raise ValueError("schedule timestep must be positive")
        if t_prev_end is not None and t_end <= t_prev_end:
            raise ValueError("schedule end times must increase")
        t_prev_end = t_end
    if stab is None:
        H, H_pp = zero_stabilization(physics.top)
    else:
        H, H_pp = build_stabilization(physics.top, physics.elastic.raw_diag,
                                      stab)
    state = state0 or initial_state(physics)
    states = [state]
    diags = []
    for dt, t_end in schedule:
        scale = max(abs(t_end), 1.0)
        while state.time < t_end - 1e-12 * scale:
            step = min(dt, t_end - state.time)
            state, diag = active_set_step(physics, state, step, H, H_pp,
                                          config)
            states.append(state)
            diags.append(diag)
            if callback is not None:
                callback(state, diag)
    return states, diags
