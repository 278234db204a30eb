"""Finite-difference oracle for partial derivatives of immersion components.

Tensor products of 1-D central stencils, Richardson-extrapolated from steps
``h`` and ``h/2``.  The immersion is evaluated through the AST in extended
precision (``np.longdouble``), which keeps the cancellation error of the
third-order stencils well under the truncation error.  The oracle never
touches jet arithmetic.
"""
from __future__ import annotations

import itertools

import numpy as np

from . import expr
from .catalog import ImmersionSpec

# order -> (offsets, weights) of second-order accurate central stencils
_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def central_difference(f, point: np.ndarray, alpha, h: float) -> np.ndarray:
    """Central-difference estimate of d^alpha f at ``point`` (shape ``(..., m)``)."""
    point = np.asarray(point, dtype=np.longdouble)
    total = 0.0
    per_axis = [list(zip(*_STENCILS[a])) for a in alpha]
    for combo in itertools.product(*per_axis):
        offset = np.array([o for o, _ in combo], dtype=np.longdouble) * np.longdouble(h)
        weight = np.prod([w for _, w in combo])
        total = total + weight * f(point + offset)
    return total / np.longdouble(h) ** sum(alpha)


def richardson_derivative(f, point, alpha, h: float = 1e-3) -> np.ndarray:
    coarse = central_difference(f, point, alpha, h)
    fine = central_difference(f, point, alpha, h / 2)
    return (4.0 * fine - coarse) / 3.0


def extended_evaluator(spec: ImmersionSpec):
    """Component evaluation in ``np.longdouble``, shape ``(..., n)``."""

    def f(point):
        point = np.asarray(point, dtype=np.longdouble)
        u = [point[..., i] for i in range(spec.m)]
        vals = [np.broadcast_to(np.asarray(expr.evaluate(c, u), dtype=np.longdouble), point.shape[:-1])
                for c in spec.components]
        return np.stack(vals, axis=-1)

    return f


def multi_indices_upto(m: int, order: int) -> list[tuple[int, ...]]:
    return [a for a in itertools.product(range(order + 1), repeat=m) if 0 < sum(a) <= order]


def jet_vs_fd(spec: ImmersionSpec, points, order: int = 3, h: float = 1e-3, jet_order: int = 4) -> dict:
    """Compare jet partials with the FD oracle for every component and |alpha| <= order.

    Returns arrays of jet values, FD values and the relative error
    ``|fd - jet| / max(|jet|, 1)`` keyed by multi-index.
    """
    from .catalog import eval_immersion

    points = np.asarray(points, dtype=float)
    phi = eval_immersion(spec, points, jet_order)
    f = extended_evaluator(spec)
    out = {}
    for alpha in multi_indices_upto(spec.m, order):
        exact = phi.partial(alpha)  # (..., n)
        approx = richardson_derivative(f, points, alpha, h).astype(float)
        err = np.abs(approx - exact) / np.maximum(np.abs(exact), 1.0)
        out[alpha] = {"jet": exact, "fd": approx, "rel_err": err}
    return out


def max_relative_error(spec: ImmersionSpec, points, order: int = 3, h: float = 1e-3) -> float:
    res = jet_vs_fd(spec, points, order, h)
    return float(max(r["rel_err"].max() for r in res.values()))
