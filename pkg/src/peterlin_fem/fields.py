"""P1 nodal fields over a mesh: scalar, vector and symmetric-tensor valued.

Symmetric tensors store three components per node in the order
(C11, C12, C22); the (2,1) entry is never stored, so symmetry holds by
construction.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class ScalarField:
    values: np.ndarray  # (nn,)


@dataclass
class VectorField:
    values: np.ndarray  # (nn, 2)


@dataclass
class SymTensorField:
    values: np.ndarray  # (nn, 3): columns C11, C12, C22

    def trace(self):
        return self.values[:, 0] + self.values[:, 2]


def eval_field(field, mesh, location):
    """Value of a P1 field at a located point (barycentric combination)."""
    values = field.values if hasattr(field, "values") else np.asarray(field)
    nodal = values[mesh.elements[location.element]]
    return location.bary @ nodal


def eval_at(values, mesh, elems, bary):
    """Vectorized P1 evaluation at pre-located points.

    `values` is (nn,) or (nn, k); `elems` is any integer shape S and `bary`
    is S + (3,).  Returns shape S (+ (k,)).
    """
    nodal = values[mesh.elements[elems]]  # S + (3,) (+ (k,))
    if nodal.ndim == bary.ndim:
        return np.einsum("...i,...i->...", bary, nodal)
    return np.einsum("...i,...ik->...k", bary, nodal)


def interpolate(func, mesh, t):
    """Lagrange interpolant: nodal values of func(x, t) wrapped as a field."""
    vals = np.asarray(func(mesh.nodes, t), dtype=float)
    if vals.ndim == 1:
        return ScalarField(vals)
    if vals.shape[1] == 2:
        return VectorField(vals)
    if vals.shape[1] == 3:
        return SymTensorField(vals)
    raise ValueError(f"cannot infer field kind from value shape {vals.shape}")
