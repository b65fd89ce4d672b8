"""Discrete space-time norms, relative error ratios and convergence slopes.

Plain errors measure the discrete solution against the nodal interpolant of
the exact solution with exact P1 integration (mass/stiffness matrices).
Primed errors measure against the exact solution itself, every integral
replaced by the degree-5 seven-point quadrature; for P1 functions the
primed L2 norm coincides with the exact one.

Time aggregation: max-type norms include level 0, squared-sum norms run
over levels 1..N_T weighted by dt.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import quadrature
from .errors import InvalidParameterError

_TENSOR_WEIGHT = np.array([1.0, 2.0, 1.0])  # Frobenius weight for (C11, C12, C22)


class MeshNorms:
    """Cached P1 mass/stiffness matrices and per-element data for one mesh."""

    def __init__(self, mesh):
        self.mesh = mesh
        tri = mesh.elements
        area = mesh.areas
        mass_ref = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
        gagb = np.einsum("eak,ebk->eab", mesh.grads, mesh.grads)
        rows = np.broadcast_to(tri[:, :, None], gagb.shape).ravel()
        cols = np.broadcast_to(tri[:, None, :], gagb.shape).ravel()
        nn = mesh.node_count
        self.mass = sp.coo_matrix(((area[:, None, None] * mass_ref).ravel(), (rows, cols)),
                                  shape=(nn, nn)).tocsr()
        self.stiff = sp.coo_matrix(((area[:, None, None] * gagb).ravel(), (rows, cols)),
                                   shape=(nn, nn)).tocsr()

    def l2_sq(self, vals):
        vals = np.atleast_2d(np.asarray(vals, dtype=float).T).T  # (nn, k)
        return float(sum(col @ (self.mass @ col) for col in vals.T))

    def h1_semi_sq(self, vals):
        vals = np.atleast_2d(np.asarray(vals, dtype=float).T).T
        return float(sum(col @ (self.stiff @ col) for col in vals.T))

    def tensor_l2_sq(self, vals):
        return float(sum(w * (vals[:, c] @ (self.mass @ vals[:, c]))
                         for c, w in enumerate(_TENSOR_WEIGHT)))

    def tensor_h1_semi_sq(self, vals):
        return float(sum(w * (vals[:, c] @ (self.stiff @ vals[:, c]))
                         for c, w in enumerate(_TENSOR_WEIGHT)))


def l2_and_h1_norms(vals, mesh, norms=None):
    """(L2, full H1) norms of a P1 nodal field (scalar or per-component)."""
    norms = norms or MeshNorms(mesh)
    l2_sq = norms.l2_sq(vals)
    return math.sqrt(l2_sq), math.sqrt(l2_sq + norms.h1_semi_sq(vals))


def h_seminorm(p_vals, mesh):
    """Mesh-weighted pressure-gradient seminorm {sum_K h_K^2 |grad p|_K^2}^1/2."""
    p_vals = np.asarray(p_vals, dtype=float)
    grad = np.einsum("ea,eak->ek", p_vals[mesh.elements], mesh.grads)
    return math.sqrt(float(np.sum(mesh.sizes ** 2 * mesh.areas * np.sum(grad ** 2, axis=1))))


class ErrorAccumulator:
    """Running max / dt-weighted sum-of-squares channels."""

    def __init__(self, dt):
        self.dt = dt
        self._max = {}
        self._sq = {}

    def update_max(self, key, value):
        self._max[key] = max(self._max.get(key, 0.0), value)

    def add_square(self, key, value_sq):
        self._sq[key] = self._sq.get(key, 0.0) + value_sq

    def linf(self, key):
        return self._max.get(key, 0.0)

    def l2(self, key):
        return math.sqrt(self.dt * self._sq.get(key, 0.0))


class TrajectoryErrors:
    """Observer accumulating the six relative errors along a run."""

    def __init__(self, mesh, quad, exact, dt, primed=False):
        self.mesh = mesh
        self.quad = quad
        self.exact = exact
        self.primed = primed
        self.norms = MeshNorms(mesh)
        self.acc = ErrorAccumulator(dt)
        if primed:
            self.x_quad = quadrature.physical_points(mesh, quad)

    def update(self, state):
        mesh, acc = self.mesh, self.acc
        t = state.t
        iu = np.asarray(self.exact.velocity(mesh.nodes, t), dtype=float)
        ip = np.asarray(self.exact.pressure(mesh.nodes, t), dtype=float)
        ic = np.asarray(self.exact.conformation(mesh.nodes, t), dtype=float)

        nrm = self.norms
        du, dp, dc = state.u - iu, state.p - ip, state.C - ic

        acc.update_max("u_err_l2", math.sqrt(nrm.l2_sq(du)))
        acc.update_max("u_ref_l2", math.sqrt(nrm.l2_sq(iu)))
        acc.update_max("c_err_l2", math.sqrt(nrm.tensor_l2_sq(dc)))
        acc.update_max("c_ref_l2", math.sqrt(nrm.tensor_l2_sq(ic)))
        if state.n >= 1:
            acc.add_square("u_err_h1", nrm.l2_sq(du) + nrm.h1_semi_sq(du))
            acc.add_square("u_ref_h1", nrm.l2_sq(iu) + nrm.h1_semi_sq(iu))
            acc.add_square("p_err_l2", nrm.l2_sq(dp))
            acc.add_square("p_ref_l2", nrm.l2_sq(ip))
            acc.add_square("p_err_h", h_seminorm(dp, mesh) ** 2)
            acc.add_square("c_err_h1", nrm.tensor_l2_sq(dc) + nrm.tensor_h1_semi_sq(dc))
            acc.add_square("c_ref_h1", nrm.tensor_l2_sq(ic) + nrm.tensor_h1_semi_sq(ic))
        if self.primed:
            self._update_primed(state)

    def _update_primed(self, state):
        mesh, quad, acc = self.mesh, self.quad, self.acc
        t = state.t
        tri = mesh.elements
        lam, wq, area = quad.points, quad.weights, mesh.areas
        x = self.x_quad

        def quad_sum(sq_per_point, weight=None):
            w_elem = area if weight is None else area * weight
            return float(np.einsum("e,q,eq->", w_elem, wq, sq_per_point))

        # velocity
        u_h = np.einsum("qi,eik->eqk", lam, state.u[tri])
        u_ex = np.asarray(self.exact.velocity(x, t), dtype=float)
        du_sq = np.sum((u_h - u_ex) ** 2, axis=-1)
        acc.update_max("up_err_l2", math.sqrt(quad_sum(du_sq)))
        gu_h = np.einsum("eak,eaj->ekj", state.u[tri], mesh.grads)[:, None, :, :]
        gu_ex = np.asarray(self.exact.velocity_gradient(x, t), dtype=float)
        dgu_sq = np.sum((gu_h - gu_ex) ** 2, axis=(-1, -2))

        # pressure
        p_h = np.einsum("qi,ei->eq", lam, state.p[tri])
        p_ex = np.asarray(self.exact.pressure(x, t), dtype=float)
        gp_h = np.einsum("ei,eij->ej", state.p[tri], mesh.grads)[:, None, :]
        gp_ex = np.asarray(self.exact.pressure_gradient(x, t), dtype=float)
        dgp_sq = np.sum((gp_h - gp_ex) ** 2, axis=-1)

        # conformation
        c_h = np.einsum("qi,eic->eqc", lam, state.C[tri])
        c_ex = np.asarray(self.exact.conformation(x, t), dtype=float)
        dc_sq = np.einsum("eqc,c->eq", (c_h - c_ex) ** 2, _TENSOR_WEIGHT)
        acc.update_max("cp_err_l2", math.sqrt(quad_sum(dc_sq)))
        gc_h = np.einsum("eic,eij->ecj", state.C[tri], mesh.grads)[:, None, :, :]
        gc_ex = np.asarray(self.exact.conformation_gradient(x, t), dtype=float)
        dgc_sq = np.einsum("eqcj,c->eq", (gc_h - gc_ex) ** 2, _TENSOR_WEIGHT)

        if state.n >= 1:
            acc.add_square("up_err_h1", quad_sum(du_sq) + quad_sum(dgu_sq))
            acc.add_square("pp_err_l2", quad_sum((p_h - p_ex) ** 2))
            acc.add_square("pp_err_h", quad_sum(dgp_sq, weight=mesh.sizes ** 2))
            acc.add_square("cp_err_h1", quad_sum(dc_sq) + quad_sum(dgc_sq))

    def report(self):
        """The relative errors (and primed variants when enabled)."""
        acc = self.acc

        def ratio(num, den):
            if den == 0.0:
                raise InvalidParameterError("zero reference norm in relative error")
            return num / den

        out = {
            "Er1": ratio(acc.linf("u_err_l2"), acc.linf("u_ref_l2")),
            "Er2": ratio(acc.l2("u_err_h1"), acc.l2("u_ref_h1")),
            "Er3": ratio(acc.l2("p_err_l2"), acc.l2("p_ref_l2")),
            "Er4": ratio(acc.l2("p_err_h"), acc.l2("p_ref_l2")),
            "Er5": ratio(acc.linf("c_err_l2"), acc.linf("c_ref_l2")),
            "Er6": ratio(acc.l2("c_err_h1"), acc.l2("c_ref_h1")),
        }
        if self.primed:
            out.update({
                "Er1p": ratio(acc.linf("up_err_l2"), acc.linf("u_ref_l2")),
                "Er2p": ratio(acc.l2("up_err_h1"), acc.l2("u_ref_h1")),
                "Er3p": ratio(acc.l2("pp_err_l2"), acc.l2("p_ref_l2")),
                "Er4p": ratio(acc.l2("pp_err_h"), acc.l2("p_ref_l2")),
                "Er5p": ratio(acc.linf("cp_err_l2"), acc.linf("c_ref_l2")),
                "Er6p": ratio(acc.l2("cp_err_h1"), acc.l2("c_ref_h1")),
            })
        return out


def primed_l2_norm(vals, mesh, quad):
    """Quadrature L2 norm of a P1 nodal field (scalar or per-component)."""
    vals = np.asarray(vals, dtype=float)
    nodal = vals[mesh.elements]
    if nodal.ndim == 2:
        at_q = np.einsum("qi,ei->eq", quad.points, nodal)
        sq = at_q ** 2
    else:
        at_q = np.einsum("qi,eik->eqk", quad.points, nodal)
        sq = np.sum(at_q ** 2, axis=-1)
    return math.sqrt(float(np.einsum("e,q,eq->", mesh.areas, quad.weights, sq)))


def slopes(values):
    """log2 ratios of consecutive errors; None for the coarsest level."""
    out = [None]
    for prev, cur in zip(values, values[1:]):
        out.append(math.log2(prev / cur) if prev > 0 and cur > 0 else None)
    return out


@dataclass
class ErrorReport:
    """Errors and slopes across a refinement sequence for one case."""

    nu: float
    eps: float
    Ns: list
    errors: dict = field(default_factory=dict)  # name -> list of values per N

    def slope_table(self):
        return {name: slopes(vals) for name, vals in self.errors.items()}
