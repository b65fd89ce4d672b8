"""First-order upwind (characteristic feet) map and composed evaluation.

The upwind point of x with respect to the transport velocity w at time
level n is x - w(x) * dt; previous-level fields are evaluated there to
discretize the material derivative.
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import fields, mesh as mesh_mod, quadrature
from .errors import UpwindEscapeError

TOL_CLAMP = 1e-10


class CourantStatus(enum.Enum):
    OK = "ok"
    WARN_JACOBIAN = "warn_jacobian"
    WARN_BIJECTIVE = "warn_bijective"


@dataclass(frozen=True)
class CourantCheck:
    status: CourantStatus
    lipschitz: float  # estimate of |w|_{1,infinity}
    dt: float

    @property
    def product(self):
        return self.dt * self.lipschitz


def upwind_point(x, w_at_x, dt):
    """x - w(x) * dt, elementwise."""
    return np.asarray(x, dtype=float) - np.asarray(w_at_x, dtype=float) * dt


def check_courant(mesh, w, t, dt):
    """Advisory check of the step restrictions for the upwind map.

    Estimates the Lipschitz constant of w from the gradients of its P1
    interpolant; warns when dt times the estimate exceeds 1/4 (Jacobian
    bound lost) or reaches 1 (bijectivity lost).
    """
    w_nodal = _nodal_velocity(mesh, w, t)
    grad = np.einsum("eak,eaj->ekj", w_nodal[mesh.elements], mesh.grads)
    lipschitz = float(np.abs(grad).max()) if grad.size else 0.0
    product = dt * lipschitz
    if product >= 1.0:
        status = CourantStatus.WARN_BIJECTIVE
    elif product > 0.25:
        status = CourantStatus.WARN_JACOBIAN
    else:
        status = CourantStatus.OK
    return CourantCheck(status=status, lipschitz=lipschitz, dt=dt)


def _nodal_velocity(mesh, w, t):
    if callable(w):
        return np.asarray(w(mesh.nodes, t), dtype=float)
    return np.asarray(w.values if hasattr(w, "values") else w, dtype=float)


@dataclass(frozen=True)
class UpwindTable:
    """Located upwind points for every (element, quadrature point) pair."""

    time: float
    dt: float
    points: np.ndarray         # (ne, nq, 2) physical quadrature points
    upwind_points: np.ndarray  # (ne, nq, 2) after clamping to the closed square
    elements: np.ndarray       # (ne, nq) containing element of each upwind point
    bary: np.ndarray           # (ne, nq, 3)
    clamped: int               # number of points nudged back onto the boundary


def build_upwind_table(mesh, quad, w, t, dt, tol_clamp=TOL_CLAMP):
    """Locate the upwind point of every quadrature point.

    The velocity w is evaluated analytically at the quadrature points when
    callable (nodal P1 data is interpolated otherwise).  Points leaving the
    domain by more than `tol_clamp` raise UpwindEscapeError.
    """
    x = quadrature.physical_points(mesh, quad)
    if callable(w):
        w_at_x = np.asarray(w(x, t), dtype=float)
    else:
        w_nodal = _nodal_velocity(mesh, w, t)
        nq = quad.points.shape[0]
        elems = np.broadcast_to(np.arange(mesh.element_count)[:, None], x.shape[:2])
        bary = np.broadcast_to(quad.points[None, :, :], x.shape[:2] + (3,))
        w_at_x = fields.eval_at(w_nodal, mesh, elems, bary)
    feet = upwind_point(x, w_at_x, dt)

    excess = np.maximum(np.max(feet - 1.0, axis=-1), np.max(-feet, axis=-1))
    worst = float(excess.max()) if excess.size else 0.0
    if worst > tol_clamp:
        idx = np.unravel_index(np.argmax(excess), excess.shape)
        check = check_courant(mesh, w, t, dt)
        raise UpwindEscapeError(
            f"upwind point {tuple(feet[idx])} escapes the domain by {worst:.3e} "
            f"(dt * |w|_1,inf ~= {check.product:.3f})",
            point=feet[idx], courant=check.product)
    clamped = int(np.count_nonzero(excess > 0))
    feet = np.clip(feet, 0.0, 1.0)

    elems, bary = mesh_mod.locate_points(mesh, feet)
    return UpwindTable(time=t, dt=dt, points=x, upwind_points=feet,
                       elements=elems, bary=bary, clamped=clamped)


def eval_composed(values, mesh, table):
    """Previous-level P1 field values at the stored upwind points.

    `values` is nodal data of shape (nn,) or (nn, k); the result has shape
    (ne, nq) or (ne, nq, k).
    """
    values = np.asarray(values.values if hasattr(values, "values") else values, dtype=float)
    return fields.eval_at(values, mesh, table.elements, table.bary)
