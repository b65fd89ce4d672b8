"""Monolithic assembly and time stepping for the stabilized scheme.

Per step the unknowns (u, p, C) solve one coupled linear system: momentum
and continuity rows with pressure-gradient stabilization, conformation
rows with the linearized stretching and reaction terms, and one Lagrange
multiplier row enforcing the zero-mean pressure gauge.  The material
derivatives are discretized along characteristics: previous-level fields
enter through their values at the upwind points.

Velocity Dirichlet conditions are imposed by excluding boundary velocity
nodes from the unknown layout; pressure and conformation keep all nodes.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import characteristics, quadrature, sparse
from .errors import InvalidParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Params:
    nu: float
    eps: float
    dt: float
    T: float
    delta0: float = 1.0

    def __post_init__(self):
        if self.nu <= 0:
            raise InvalidParameterError(f"viscosity must be positive, got {self.nu}")
        if self.eps < 0:
            raise InvalidParameterError(f"elastic stress viscosity must be >= 0, got {self.eps}")
        if self.dt <= 0 or self.T <= 0:
            raise InvalidParameterError("dt and T must be positive")
        if self.delta0 <= 0:
            raise InvalidParameterError("stabilization constant must be positive")

    @property
    def n_steps(self):
        return int(np.floor(self.T / self.dt + 1e-12))


@dataclass
class State:
    n: int
    t: float
    u: np.ndarray  # (nn, 2), zero on the boundary
    p: np.ndarray  # (nn,), zero mean
    C: np.ndarray  # (nn, 3): components C11, C12, C22


@dataclass
class AnalyticTriple:
    """Callable exact fields used for projections and error measurement."""

    velocity: callable              # (xy, t) -> (..., 2)
    pressure: callable              # (xy, t) -> (...)
    conformation: callable          # (xy, t) -> (..., 3)
    velocity_gradient: callable     # (xy, t) -> (..., 2, 2)
    conformation_gradient: callable  # (xy, t) -> (..., 3, 2)
    pressure_gradient: callable = None  # (xy, t) -> (..., 2); primed norms only


class DofMap:
    """Global unknown layout: u1, u2 (interior), p, C11, C12, C22, multiplier."""

    def __init__(self, mesh):
        nn = mesh.node_count
        self.interior = ~mesh.boundary_node
        ni = int(self.interior.sum())
        self.n_interior = ni
        self.node_count = nn
        u_index = np.full((nn, 2), -1, dtype=np.int64)
        u_index[self.interior, 0] = np.arange(ni)
        u_index[self.interior, 1] = ni + np.arange(ni)
        self.u_index = u_index
        self.p_offset = 2 * ni
        self.c_offsets = (2 * ni + nn, 2 * ni + 2 * nn, 2 * ni + 3 * nn)
        self.multiplier = 2 * ni + 4 * nn
        self.ndof = 2 * ni + 4 * nn + 1


def _concat_triplets(parts):
    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    vals = np.concatenate([p[2] for p in parts])
    return rows, cols, vals


def _mask(rows, cols, vals):
    keep = (rows >= 0) & (cols >= 0)
    return rows[keep], cols[keep], vals[keep]


class StepAssembler:
    """Caches mesh geometry, dof layout and the time-independent blocks."""

    def __init__(self, mesh, quad, params, dofmap=None):
        self.mesh = mesh
        self.quad = quad
        self.params = params
        self.dofmap = dofmap if dofmap is not None else DofMap(mesh)

        tri = mesh.elements
        self.tri = tri
        self.g = mesh.grads                  # (ne, 3, 2)
        self.area = mesh.areas               # (ne,)
        self.lam = quad.points               # (nq, 3)
        self.wq = quad.weights               # (nq,)
        self.x_quad = quadrature.physical_points(mesh, quad)

        self.mass_ref = np.einsum("q,qa,qb->ab", self.wq, self.lam, self.lam)
        self.gagb = np.einsum("eak,ebk->eab", self.g, self.g)

        dm = self.dofmap
        self.udof = dm.u_index[tri]                       # (ne, 3, 2)
        self.pdof = dm.p_offset + tri                     # (ne, 3)
        self.cdof = [off + tri for off in dm.c_offsets]   # 3 x (ne, 3)

        # nodal integrals of the hat functions (int phi_b dx)
        self.int_phi = np.zeros(dm.node_count)
        np.add.at(self.int_phi, tri.ravel(),
                  np.repeat(self.area / 3.0, 3))

        self._const = self._assemble_constant()

    # --- constant blocks -------------------------------------------------

    def _velocity_mass_triplets(self, coeff):
        vals = coeff * self.area[:, None, None] * self.mass_ref[None, :, :]
        parts = []
        for k in range(2):
            parts.append(_mask(
                np.broadcast_to(self.udof[:, :, None, k], vals.shape).ravel(),
                np.broadcast_to(self.udof[:, None, :, k], vals.shape).ravel(),
                vals.ravel()))
        return parts

    def _viscous_triplets(self, nu):
        g, area = self.g, self.area
        eye = np.eye(2)
        # row basis (a, k), column basis (b, m)
        vals = nu * area[:, None, None, None, None] * (
            eye[None, None, :, None, :] * self.gagb[:, :, None, :, None]
            + np.einsum("ebk,eam->eakbm", g, g))
        rows = np.broadcast_to(self.udof[:, :, :, None, None], vals.shape)
        cols = np.broadcast_to(self.udof[:, None, None, :, :], vals.shape)
        return [_mask(rows.ravel(), cols.ravel(), vals.ravel())]

    def _divergence_triplets(self, p_offset=None):
        pdof = self.pdof if p_offset is None else p_offset + self.tri
        vals = -(self.area[:, None, None] / 3.0) * self.g  # (ne, a, k)
        vals4 = np.broadcast_to(vals[:, :, :, None], vals.shape + (3,))
        rows_u = np.broadcast_to(self.udof[:, :, :, None], vals4.shape)
        cols_p = np.broadcast_to(pdof[:, None, None, :], vals4.shape)
        return [_mask(rows_u.ravel(), cols_p.ravel(), vals4.ravel()),
                _mask(cols_p.ravel(), rows_u.ravel(), vals4.ravel())]

    def _stabilization_triplets(self, delta0, p_offset=None):
        pdof = self.pdof if p_offset is None else p_offset + self.tri
        vals = -(delta0 * self.mesh.sizes ** 2 * self.area)[:, None, None] * self.gagb
        rows = np.broadcast_to(pdof[:, :, None], vals.shape)
        cols = np.broadcast_to(pdof[:, None, :], vals.shape)
        return [_mask(rows.ravel(), cols.ravel(), vals.ravel())]

    def _multiplier_triplets(self, mult_index, p_offset=None):
        pdof = self.pdof if p_offset is None else p_offset + self.tri
        vals = np.broadcast_to((self.area / 3.0)[:, None], pdof.shape).ravel()
        rows = pdof.ravel()
        cols = np.full_like(rows, mult_index)
        return [(rows, cols, vals), (cols, rows, vals)]

    def _tensor_scalar_triplets(self, local_vals):
        """Scatter per-component scalar local matrices to the C blocks.

        The tensor inner product doubles the off-diagonal contribution, so
        the C12 block carries a factor 2.
        """
        parts = []
        for comp, fac in ((0, 1.0), (1, 2.0), (2, 1.0)):
            cdof = self.cdof[comp]
            rows = np.broadcast_to(cdof[:, :, None], local_vals.shape)
            cols = np.broadcast_to(cdof[:, None, :], local_vals.shape)
            parts.append((rows.ravel(), cols.ravel(), (fac * local_vals).ravel()))
        return parts

    def _assemble_constant(self):
        p = self.params
        mass_loc = self.area[:, None, None] * self.mass_ref[None, :, :]
        stiff_loc = self.area[:, None, None] * self.gagb
        parts = []
        parts += self._velocity_mass_triplets(1.0 / p.dt)
        parts += self._viscous_triplets(p.nu)
        parts += self._divergence_triplets()
        parts += self._stabilization_triplets(p.delta0)
        parts += self._multiplier_triplets(self.dofmap.multiplier)
        parts += self._tensor_scalar_triplets(mass_loc / p.dt)
        if p.eps != 0.0:
            parts += self._tensor_scalar_triplets(p.eps * stiff_loc)
        rows, cols, vals = _concat_triplets(parts)
        buf = sparse.TripletBuffer(self.dofmap.ndof, self.dofmap.ndof)
        buf.add_many(rows, cols, vals)
        return sparse.compress(buf).csr

    # --- per-step blocks -------------------------------------------------

    def _coupling_triplets(self, c_prev_quad):
        """The two linearized coupling blocks driven by C^{n-1}.

        c_prev_quad: (ne, nq, 3) values of the previous conformation tensor
        at the quadrature points.
        """
        cmat = np.empty(c_prev_quad.shape[:2] + (2, 2))
        cmat[..., 0, 0] = c_prev_quad[..., 0]
        cmat[..., 0, 1] = cmat[..., 1, 0] = c_prev_quad[..., 1]
        cmat[..., 1, 1] = c_prev_quad[..., 2]

        parts = []
        # momentum rows (a, k) x trace columns (b):  + int phi_b C_kj d_j phi_a
        t_cross = np.einsum("eqkj,eaj->eqak", cmat, self.g)
        T1 = np.einsum("e,q,qb,eqak->eakb", self.area, self.wq, self.lam, t_cross)
        rows = np.broadcast_to(self.udof[:, :, :, None], T1.shape)
        for comp in (0, 2):  # trace touches C11 and C22 only
            cols = np.broadcast_to(self.cdof[comp][:, None, None, :], T1.shape)
            parts.append(_mask(rows.ravel(), cols.ravel(), T1.ravel()))

        # conformation rows (b, comp) x velocity columns (a, m):
        # -2 int phi_b (grad phi_a . C)_j
        d_cross = np.einsum("eak,eqkj->eqaj", self.g, cmat)
        P = np.einsum("e,q,qb,eqaj->ebaj", self.area, self.wq, self.lam, d_cross)
        for comp, m, j in ((0, 0, 0), (2, 1, 1), (1, 0, 1), (1, 1, 0)):
            vals = -2.0 * P[:, :, :, j]
            rows_c = np.broadcast_to(self.cdof[comp][:, :, None], vals.shape)
            cols_u = np.broadcast_to(self.udof[:, None, :, m], vals.shape)
            parts.append(_mask(rows_c.ravel(), cols_u.ravel(), vals.ravel()))
        return parts

    def _reaction_triplets(self, trace_sq_quad):
        local = np.einsum("e,q,eq,qa,qb->eab", self.area, self.wq, trace_sq_quad,
                          self.lam, self.lam)
        return self._tensor_scalar_triplets(local)

    def assemble(self, prev, t_n, w, f, F, table=None):
        """Matrix and right-hand side of the step system at time t_n.

        Returns (SparseMatrix, rhs, upwind table).
        """
        p = self.params
        tri, lam, wq, area = self.tri, self.lam, self.wq, self.area

        if table is None:
            table = characteristics.build_upwind_table(self.mesh, self.quad, w, t_n, p.dt)

        c_prev_quad = np.einsum("qi,eic->eqc", lam, prev.C[tri])
        trace_prev = c_prev_quad[..., 0] + c_prev_quad[..., 2]

        parts = [self._coupling_triplets(c_prev_quad),
                 self._reaction_triplets(trace_prev ** 2)]
        rows, cols, vals = _concat_triplets([t for part in parts for t in part])
        n = self.dofmap.ndof
        varying = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        matrix = sparse.SparseMatrix(self._const + varying)

        # right-hand side
        rhs = np.zeros(n)
        u_upw = characteristics.eval_composed(prev.u, self.mesh, table)
        c_upw = characteristics.eval_composed(prev.C, self.mesh, table)
        f_quad = np.asarray(f(table.points, t_n), dtype=float)
        F_quad = np.asarray(F(table.points, t_n), dtype=float)

        mom = np.einsum("e,q,eqk,qa->eak", area, wq, u_upw / p.dt + f_quad, lam)
        keep = self.udof >= 0
        np.add.at(rhs, self.udof[keep], mom[keep])

        iden = np.array([1.0, 0.0, 1.0])
        integrand = c_upw / p.dt + F_quad + trace_prev[..., None] * iden
        con = np.einsum("e,q,eqc,qa->eca", area, wq, integrand, lam)
        for comp, fac in ((0, 1.0), (1, 2.0), (2, 1.0)):
            np.add.at(rhs, self.cdof[comp].ravel(), fac * con[:, comp, :].ravel())

        return matrix, rhs, table


def assemble_step_system(mesh, quad, params, prev, t_n, w, f, F):
    """One-shot assembly of the monolithic step system (fresh caches)."""
    asm = StepAssembler(mesh, quad, params)
    matrix, rhs, _ = asm.assemble(prev, t_n, w, f, F)
    return matrix, rhs


class StepSolver:
    """Block-preconditioned GMRES for the per-step monolithic systems.

    Direct LU of the full coupled matrix suffers heavy fill, so steps are
    solved iteratively: the preconditioner pairs the constant stabilized
    Stokes block (factored once per run) with the three scalar
    conformation blocks (mass + diffusion + reaction, refactored each
    step, cheap).  The varying coupling blocks are small relative to the
    1/dt mass scaling, so a handful of iterations reaches the tolerance.
    Falls back to a direct solve whenever the residual contract is missed.
    """

    def __init__(self, asm):
        self.asm = asm
        dm = asm.dofmap
        nn, ni = dm.node_count, dm.n_interior
        self.ix_stokes = np.r_[np.arange(2 * ni + nn), dm.multiplier]
        self.c_slices = [slice(off, off + nn) for off in dm.c_offsets]
        stokes = asm._const[self.ix_stokes][:, self.ix_stokes].tocsc()
        self.stokes_lu = spla.splu(stokes)

    def solve(self, matrix, rhs, rel_tol=sparse.DEFAULT_REL_TOL):
        csr = matrix.csr
        c11 = self.c_slices[0]
        c_lu = spla.splu(csr[c11, c11].tocsc())

        def apply_prec(y):
            z = np.zeros_like(y)
            z[self.ix_stokes] = self.stokes_lu.solve(y[self.ix_stokes])
            for i, sl in enumerate(self.c_slices):
                # the C12 block is twice the scalar block (tensor product weight)
                z[sl] = c_lu.solve(y[sl] / (2.0 if i == 1 else 1.0))
            return z

        prec = spla.LinearOperator(csr.shape, matvec=apply_prec)
        x, info = spla.gmres(csr, rhs, M=prec, rtol=rel_tol * 1e-2, atol=0.0,
                                  restart=200, maxiter=500)
        b_norm = np.linalg.norm(rhs)
        if info == 0 and np.linalg.norm(csr @ x - rhs) <= rel_tol * b_norm:
            return x
        logger.warning("preconditioned GMRES missed tolerance (info=%s); "
                       "falling back to direct LU", info)
        return sparse.solve(matrix, rhs, rel_tol=rel_tol)


def _unpack(asm, x):
    dm = asm.dofmap
    nn = dm.node_count
    u = np.zeros((nn, 2))
    u[dm.interior, 0] = x[dm.u_index[dm.interior, 0]]
    u[dm.interior, 1] = x[dm.u_index[dm.interior, 1]]
    p = x[dm.p_offset:dm.p_offset + nn].copy()
    C = np.column_stack([x[off:off + nn] for off in dm.c_offsets])
    p -= asm.int_phi @ p  # remove residual mean (domain measure is 1)
    return u, p, C


def time_step(asm, prev, w, f, F, solver_tol=sparse.DEFAULT_REL_TOL, solver=None):
    """Advance one time level; returns the new State."""
    t_n = prev.t + asm.params.dt
    matrix, rhs, table = asm.assemble(prev, t_n, w, f, F)
    if table.clamped:
        logger.info("step %d: clamped %d upwind points to the boundary",
                    prev.n + 1, table.clamped)
    if solver is not None:
        x = solver.solve(matrix, rhs, rel_tol=solver_tol)
    else:
        x = sparse.solve(matrix, rhs, rel_tol=solver_tol)
    u, p, C = _unpack(asm, x)
    return State(n=prev.n + 1, t=t_n, u=u, p=p, C=C)


def stokes_poisson_project(mesh, quad, params, exact, t,
                           solver_tol=sparse.DEFAULT_REL_TOL):
    """Discrete projection defining initial data.

    Solves the stabilized Stokes projection for (u, p) with the zero-mean
    multiplier, and the (-Laplace + identity) Galerkin projection for each
    conformation component.  Returns nodal arrays (u, p, C).
    """
    asm = StepAssembler(mesh, quad, params)
    dm = asm.dofmap
    nn, ni = dm.node_count, dm.n_interior
    n_stokes = 2 * ni + nn + 1
    mult = 2 * ni + nn

    parts = []
    parts += asm._viscous_triplets(params.nu)
    parts += asm._divergence_triplets()
    parts += asm._stabilization_triplets(params.delta0)
    parts += asm._multiplier_triplets(mult)
    rows, cols, vals = _concat_triplets(parts)
    buf = sparse.TripletBuffer(n_stokes, n_stokes)
    buf.add_many(rows, cols, vals)
    stokes = sparse.compress(buf)

    x_q = asm.x_quad
    grad_u = np.asarray(exact.velocity_gradient(x_q, t), dtype=float)
    d_u = 0.5 * (grad_u + np.swapaxes(grad_u, -1, -2))
    p_q = np.asarray(exact.pressure(x_q, t), dtype=float)
    div_u = grad_u[..., 0, 0] + grad_u[..., 1, 1]

    rhs = np.zeros(n_stokes)
    mom = (2.0 * params.nu * np.einsum("e,q,eqkj,eaj->eak", asm.area, asm.wq, d_u, asm.g)
           - np.einsum("e,q,eq,eak->eak", asm.area, asm.wq, p_q, asm.g))
    keep = asm.udof >= 0
    np.add.at(rhs, asm.udof[keep], mom[keep])
    cont = -np.einsum("e,q,eq,qb->eb", asm.area, asm.wq, div_u, asm.lam)
    np.add.at(rhs, asm.pdof.ravel(), cont.ravel())

    x = sparse.solve(stokes, rhs, rel_tol=solver_tol)
    u = np.zeros((nn, 2))
    u[dm.interior, 0] = x[dm.u_index[dm.interior, 0]]
    u[dm.interior, 1] = x[dm.u_index[dm.interior, 1]]
    p = x[2 * ni:2 * ni + nn].copy()
    p -= asm.int_phi @ p

    # conformation: scalar (stiffness + mass) projection per component
    stiff_mass = np.einsum("e,eab->eab", asm.area, asm.gagb + asm.mass_ref[None, :, :])
    rows = np.broadcast_to(asm.tri[:, :, None], stiff_mass.shape).ravel()
    cols = np.broadcast_to(asm.tri[:, None, :], stiff_mass.shape).ravel()
    buf = sparse.TripletBuffer(nn, nn)
    buf.add_many(rows, cols, stiff_mass.ravel())
    helmholtz = sparse.compress(buf)

    c_q = np.asarray(exact.conformation(x_q, t), dtype=float)
    grad_c = np.asarray(exact.conformation_gradient(x_q, t), dtype=float)
    C = np.empty((nn, 3))
    for comp in range(3):
        load = np.einsum("e,q,eqj,eaj->ea", asm.area, asm.wq, grad_c[..., comp, :], asm.g)
        load += np.einsum("e,q,eq,qa->ea", asm.area, asm.wq, c_q[..., comp], asm.lam)
        b = np.zeros(nn)
        np.add.at(b, asm.tri.ravel(), load.ravel())
        C[:, comp] = sparse.solve(helmholtz, b, rel_tol=solver_tol)
    return u, p, C


def run_simulation(mesh, quad, params, w, f, F, exact=None, init=None,
                   observer=None, solver_tol=sparse.DEFAULT_REL_TOL):
    """Project initial data, advance n_steps levels, notify the observer.

    Either `exact` (an AnalyticTriple whose t=0 velocity/conformation are
    projected with zero pressure) or explicit `init` nodal arrays
    (u, p, C) must be given.  Returns the final State.
    """
    if init is None:
        if exact is None:
            raise InvalidParameterError("run_simulation needs `exact` or `init`")
        proj = replace(exact, pressure=lambda xy, t: np.zeros(np.asarray(xy).shape[:-1]))
        u0, p0, C0 = stokes_poisson_project(mesh, quad, params, proj, 0.0,
                                            solver_tol=solver_tol)
    else:
        u0, p0, C0 = (np.array(a, dtype=float) for a in init)

    check = characteristics.check_courant(mesh, w, 0.0, params.dt)
    if check.status is not characteristics.CourantStatus.OK:
        logger.warning("Courant check: %s (dt * |w|_1,inf ~= %.3f)",
                       check.status.value, check.product)

    asm = StepAssembler(mesh, quad, params)
    solver = StepSolver(asm)
    state = State(n=0, t=0.0, u=u0, p=p0, C=C0)
    if observer is not None:
        observer(state)
    for _ in range(params.n_steps):
        state = time_step(asm, state, w, f, F, solver_tol=solver_tol, solver=solver)
        if observer is not None:
            observer(state)
    return state
