"""Truncated multivariate Taylor series (jets) with numpy batch dimensions.

A :class:`Jet` stores Taylor coefficients ``c_alpha = d^alpha f(p) / alpha!``
for every multi-index ``|alpha| <= order`` in graded-lexicographic order.  The
coefficient array carries arbitrary leading dimensions, so one ``Jet`` object
can hold a whole field of jets (a batch of chart points, the entries of a
matrix, or both).  Arithmetic broadcasts over the leading dimensions exactly
like numpy does.

Products are evaluated from precomputed index-pair tables by a small compiled
kernel (numba), falling back to ``np.add.reduceat`` when numba is missing.
The cost of a product is linear in the number of coefficient pairs,
``C(2 v + p, p)`` for ``v`` variables and order ``p`` (495 pairs for the
default 4 variables, order 4).
"""
from __future__ import annotations

import functools
import itertools
import math
from typing import Sequence

import numpy as np

from .errors import OrderExhaustedError, SingularPointError

try:
    from numba import njit
except ImportError:  # pure numpy fallback, roughly 10x slower products
    njit = None

DEFAULT_ORDER = 4
MAX_VARS = 4

__all__ = [
    "Jet",
    "multi_indices",
    "num_coeffs",
    "jet_variable",
    "jet_arith",
    "jet_elementary",
    "jet_partial",
    "constant",
    "variables",
    "stack",
    "dot",
    "matmul",
    "inv",
    "value",
    "sin",
    "cos",
    "tan",
    "exp",
    "log",
    "sqrt",
    "sinh",
    "cosh",
    "reciprocal",
    "pow_int",
]


@functools.lru_cache(maxsize=None)
def multi_indices(num_vars: int, order: int) -> np.ndarray:
    """All multi-indices of total degree <= order, graded lexicographic.

    Within one degree the indices are sorted so that a larger exponent in an
    earlier variable comes first, e.g. ``(2,0), (1,1), (0,2)``.
    """
    rows = []
    for deg in range(order + 1):
        block = [a for a in itertools.product(range(deg, -1, -1), repeat=num_vars) if sum(a) == deg]
        rows.extend(block)
    out = np.array(rows, dtype=np.int64).reshape(len(rows), num_vars)
    out.setflags(write=False)
    return out


def num_coeffs(num_vars: int, order: int) -> int:
    return math.comb(num_vars + order, order)


@functools.lru_cache(maxsize=None)
def _index_map(num_vars: int, order: int) -> dict:
    return {tuple(int(x) for x in a): k for k, a in enumerate(multi_indices(num_vars, order))}


@functools.lru_cache(maxsize=None)
def _mul_table(num_vars: int, order: int):
    idx = _index_map(num_vars, order)
    alphas = multi_indices(num_vars, order)
    ia, ib, out = [], [], []
    for i, a in enumerate(alphas):
        for j, b in enumerate(alphas):
            s = a + b
            if s.sum() <= order:
                ia.append(i)
                ib.append(j)
                out.append(idx[tuple(int(x) for x in s)])
    ia, ib, out = map(np.asarray, (ia, ib, out))
    perm = np.argsort(out, kind="stable")
    ia, ib, out = ia[perm], ib[perm], out[perm]
    starts = np.searchsorted(out, np.arange(len(alphas)))
    return ia, ib, starts


@functools.lru_cache(maxsize=None)
def _mul_targets(num_vars: int, order: int) -> np.ndarray:
    ia, _, starts = _mul_table(num_vars, order)
    return np.repeat(np.arange(len(starts)), np.diff(np.append(starts, len(ia))))


if njit is not None:

    @njit(cache=True, nogil=True)
    def _product_kernel(a, b, ia, ib, target, k):  # pragma: no cover - compiled
        out = np.zeros((a.shape[0], k))
        for r in range(a.shape[0]):
            for p in range(ia.shape[0]):
                out[r, target[p]] += a[r, ia[p]] * b[r, ib[p]]
        return out


def _jet_product(a: np.ndarray, b: np.ndarray, num_vars: int, order: int) -> np.ndarray:
    ia, ib, starts = _mul_table(num_vars, order)
    k = a.shape[-1]
    if njit is None:
        return np.add.reduceat(a[..., ia] * b[..., ib], starts, axis=-1)
    shape = np.broadcast_shapes(a.shape, b.shape)
    a2 = np.ascontiguousarray(np.broadcast_to(a, shape)).reshape(-1, k)
    b2 = np.ascontiguousarray(np.broadcast_to(b, shape)).reshape(-1, k)
    out = _product_kernel(a2, b2, ia, ib, _mul_targets(num_vars, order), k)
    return out.reshape(shape)


@functools.lru_cache(maxsize=None)
def _deriv_table(num_vars: int, order: int, var: int):
    src = _index_map(num_vars, order)
    lower = multi_indices(num_vars, order - 1)
    take = np.empty(len(lower), dtype=np.int64)
    scale = np.empty(len(lower))
    for k, b in enumerate(lower):
        up = [int(x) for x in b]
        up[var] += 1
        take[k] = src[tuple(up)]
        scale[k] = up[var]
    return take, scale


def _normalize_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a if a >= 0 else a + ndim for a in axis)


class Jet:
    """Field of truncated Taylor expansions.

    ``coeffs`` has shape ``shape + (num_coeffs(num_vars, order),)``.
    """

    __slots__ = ("coeffs", "num_vars", "order")
    __array_ufunc__ = None  # make ndarray (op) Jet defer to the Jet side

    def __init__(self, coeffs, num_vars: int, order: int = DEFAULT_ORDER):
        if not 1 <= num_vars <= MAX_VARS:
            raise ValueError(f"num_vars must be in 1..{MAX_VARS}, got {num_vars}")
        if order < 0:
            raise ValueError("order must be non-negative")
        coeffs = np.asarray(coeffs, dtype=float)
        k = num_coeffs(num_vars, order)
        if coeffs.ndim == 0 or coeffs.shape[-1] != k:
            raise ValueError(f"expected trailing coefficient axis of length {k}, got shape {coeffs.shape}")
        self.coeffs = coeffs
        self.num_vars = num_vars
        self.order = order

    # construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, value, num_vars: int, order: int = DEFAULT_ORDER) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (num_coeffs(num_vars, order),))
        c[..., 0] = value
        return cls(c, num_vars, order)

    def _new(self, coeffs, order=None) -> "Jet":
        return Jet(coeffs, self.num_vars, self.order if order is None else order)

    def _check(self, other: "Jet"):
        if other.num_vars != self.num_vars or other.order != self.order:
            raise ValueError(
                f"incompatible jets: (vars={self.num_vars}, order={self.order}) vs "
                f"(vars={other.num_vars}, order={other.order})"
            )

    # array-like protocol --------------------------------------------------
    @property
    def shape(self):
        return self.coeffs.shape[:-1]

    @property
    def ndim(self):
        return self.coeffs.ndim - 1

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def __len__(self):
        return self.shape[0]

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key):
            return self._new(self.coeffs[key + (slice(None),)])
        return self._new(self.coeffs[key + (Ellipsis, slice(None))])

    def sum(self, axis=None) -> "Jet":
        return self._new(self.coeffs.sum(axis=_normalize_axis(axis, self.ndim)))

    def swapaxes(self, a: int, b: int) -> "Jet":
        a, b = _normalize_axis((a, b), self.ndim)
        return self._new(np.swapaxes(self.coeffs, a, b))

    def permute(self, *perm: int) -> "Jet":
        """Permute the trailing ``len(perm)`` leading axes, numpy ``transpose`` style."""
        k = len(perm)
        lead = self.ndim - k
        axes = list(range(lead)) + [lead + p for p in perm] + [self.ndim]
        return self._new(np.transpose(self.coeffs, axes))

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return self._new(self.coeffs.reshape(tuple(shape) + (self.coeffs.shape[-1],)))

    def broadcast_to(self, shape) -> "Jet":
        return self._new(np.broadcast_to(self.coeffs, tuple(shape) + (self.coeffs.shape[-1],)))

    def copy(self) -> "Jet":
        return self._new(self.coeffs.copy())

    def __repr__(self):
        return f"Jet(shape={self.shape}, num_vars={self.num_vars}, order={self.order})"

    # calculus -------------------------------------------------------------
    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError(f"cannot raise jet order from {self.order} to {order}")
        return self._new(self.coeffs[..., : num_coeffs(self.num_vars, order)], order)

    def derivative(self, var: int) -> "Jet":
        """Partial derivative along one variable; the result has order - 1."""
        if not 0 <= var < self.num_vars:
            raise IndexError(f"variable index {var} out of range for {self.num_vars} variables")
        if self.order == 0:
            raise OrderExhaustedError("jet of order 0 carries no derivative data")
        take, scale = _deriv_table(self.num_vars, self.order, var)
        return self._new(self.coeffs[..., take] * scale, self.order - 1)

    def gradient(self) -> "Jet":
        """Stack of all first partials along a new trailing axis."""
        return stack([self.derivative(i) for i in range(self.num_vars)], axis=-1)

    def partial(self, alpha: Sequence[int]) -> np.ndarray:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.num_vars or min(alpha) < 0:
            raise ValueError(f"multi-index {alpha} does not match {self.num_vars} variables")
        if sum(alpha) > self.order:
            raise OrderExhaustedError(f"|alpha| = {sum(alpha)} exceeds jet order {self.order}")
        k = _index_map(self.num_vars, self.order)[alpha]
        return self.coeffs[..., k] * math.prod(math.factorial(a) for a in alpha)

    # arithmetic -----------------------------------------------------------
    def __neg__(self):
        return self._new(-self.coeffs)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return self._new(self.coeffs + other.coeffs)
        c = np.asarray(other, dtype=float)
        shape = np.broadcast_shapes(self.shape, c.shape)
        out = np.broadcast_to(self.coeffs, shape + self.coeffs.shape[-1:]).copy()
        out[..., 0] += c
        return self._new(out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return self._new(_jet_product(self.coeffs, other.coeffs, self.num_vars, self.order))
        c = np.asarray(other, dtype=float)
        return self._new(self.coeffs * c[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        c = np.asarray(other, dtype=float)
        if np.any(c == 0):
            raise SingularPointError("division by zero constant")
        return self._new(self.coeffs / c[..., None])

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, k):
        if isinstance(k, (int, np.integer)):
            return pow_int(self, int(k))
        raise TypeError("jets support integer powers only")

    def tolist(self):
        return self.coeffs.tolist()


def constant(value, num_vars: int, order: int = DEFAULT_ORDER) -> Jet:
    return Jet.constant(value, num_vars, order)


def jet_variable(index: int, value, num_vars: int, order: int = DEFAULT_ORDER) -> Jet:
    """Jet of the coordinate function ``u_index`` expanded at ``value``."""
    if not 0 <= index < num_vars:
        raise IndexError(f"variable index {index} out of range for {num_vars} variables")
    j = Jet.constant(value, num_vars, order)
    if order >= 1:
        j.coeffs[..., 1 + index] = 1.0
    return j


def variables(point, order: int = DEFAULT_ORDER) -> list[Jet]:
    """Coordinate jets for every chart variable at ``point`` (shape ``(..., m)``)."""
    point = np.asarray(point, dtype=float)
    m = point.shape[-1]
    return [jet_variable(i, point[..., i], m, order) for i in range(m)]


def stack(jets: Sequence[Jet], axis: int = 0) -> Jet:
    first = jets[0]
    for j in jets[1:]:
        first._check(j)
    ndim = first.ndim + 1
    axis = axis if axis >= 0 else axis + ndim
    return first._new(np.stack([j.coeffs for j in jets], axis=axis))


def value(x):
    """Constant term of a jet, or the argument itself for plain arrays."""
    return x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)


def dot(a, b, axis: int = -1):
    """Contract ``a`` and ``b`` over one shared axis (jets or arrays)."""
    if isinstance(a, Jet) or isinstance(b, Jet):
        return (a * b).sum(axis)
    return np.sum(np.asarray(a) * np.asarray(b), axis=axis)


def matmul(a, b):
    """Batched matrix product over the last two (non-coefficient) axes."""
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.matmul(a, b)
    if isinstance(a, Jet):
        aa = a[..., :, :, None]
    else:
        aa = np.asarray(a)[..., :, :, None]
    if isinstance(b, Jet):
        bb = b[..., None, :, :]
    else:
        bb = np.asarray(b)[..., None, :, :]
    return (aa * bb).sum(-2) if isinstance(aa, Jet) else (bb * aa).sum(-2)


def inv(a: Jet) -> Jet:
    """Inverse of a jet-valued square matrix via a terminating Neumann series."""
    a0 = a.value
    if np.any(np.linalg.matrix_rank(a0) < a0.shape[-1]):
        raise SingularPointError("singular matrix at the expansion point")
    a0_inv = np.linalg.inv(a0)
    nil = a - a0
    x = -matmul(a0_inv, nil)
    out = Jet.constant(a0_inv, a.num_vars, a.order)
    for _ in range(a.order):
        out = matmul(x, out) + a0_inv
    return out


# elementary functions ------------------------------------------------------

def _compose(a: Jet, taylor) -> Jet:
    """Evaluate sum_k taylor[k] * (a - a0)^k, truncated, by Horner's rule."""
    d = a._new(a.coeffs.copy())
    d.coeffs[..., 0] = 0.0
    out = Jet.constant(taylor[a.order], a.num_vars, a.order) if a.order else None
    if out is None:
        return Jet.constant(taylor[0], a.num_vars, a.order)
    for k in range(a.order - 1, -1, -1):
        out = out * d + taylor[k]
    return out


def _factorials(order):
    return [math.factorial(k) for k in range(order + 1)]


def _sin_jet(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    cyc = [s, c, -s, -c]
    return _compose(a, [cyc[k % 4] / f for k, f in enumerate(_factorials(a.order))])


def _cos_jet(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    cyc = [c, -s, -c, s]
    return _compose(a, [cyc[k % 4] / f for k, f in enumerate(_factorials(a.order))])


def _sinh_jet(a: Jet) -> Jet:
    s, c = np.sinh(a.value), np.cosh(a.value)
    return _compose(a, [(s if k % 2 == 0 else c) / f for k, f in enumerate(_factorials(a.order))])


def _cosh_jet(a: Jet) -> Jet:
    s, c = np.sinh(a.value), np.cosh(a.value)
    return _compose(a, [(c if k % 2 == 0 else s) / f for k, f in enumerate(_factorials(a.order))])


def _exp_jet(a: Jet) -> Jet:
    e = np.exp(a.value)
    return _compose(a, [e / f for f in _factorials(a.order)])


def _log_jet(a: Jet) -> Jet:
    x = a.value
    if np.any(x <= 0):
        raise SingularPointError("log of a jet with non-positive constant term")
    taylor = [np.log(x)] + [(-1.0) ** (k + 1) / (k * x**k) for k in range(1, a.order + 1)]
    return _compose(a, taylor)


def _sqrt_jet(a: Jet) -> Jet:
    x = a.value
    if np.any(x <= 0):
        raise SingularPointError("sqrt of a jet with non-positive constant term")
    taylor = [_binom_half(k) * x ** (0.5 - k) for k in range(a.order + 1)]
    return _compose(a, taylor)


def _binom_half(k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= (0.5 - i) / (i + 1)
    return out


def _reciprocal_jet(a: Jet) -> Jet:
    x = a.value
    if np.any(x == 0):
        raise SingularPointError("division by a jet with zero constant term")
    return _compose(a, [(-1.0) ** k / x ** (k + 1) for k in range(a.order + 1)])


def _tan_jet(a: Jet) -> Jet:
    if np.any(np.cos(a.value) == 0):
        raise SingularPointError("tan evaluated at a pole")
    return _sin_jet(a) * _reciprocal_jet(_cos_jet(a))


def _pow_int_jet(a: Jet, k: int) -> Jet:
    if k < 0:
        return _pow_int_jet(_reciprocal_jet(a), -k)
    out = Jet.constant(np.ones(a.shape), a.num_vars, a.order)
    base = a
    while k:
        if k & 1:
            out = out * base
        k >>= 1
        if k:
            base = base * base
    return out


def _as_float(x) -> np.ndarray:
    # keep extended precision inputs as they are
    a = np.asarray(x)
    return a if np.issubdtype(a.dtype, np.floating) else a.astype(float)


def _dispatch(jet_fn, np_fn):
    def fn(x):
        if isinstance(x, Jet):
            return jet_fn(x)
        return np_fn(_as_float(x))

    fn.__name__ = np_fn.__name__
    return fn


sin = _dispatch(_sin_jet, np.sin)
cos = _dispatch(_cos_jet, np.cos)
tan = _dispatch(_tan_jet, np.tan)
exp = _dispatch(_exp_jet, np.exp)
log = _dispatch(_log_jet, np.log)
sqrt = _dispatch(_sqrt_jet, np.sqrt)
sinh = _dispatch(_sinh_jet, np.sinh)
cosh = _dispatch(_cosh_jet, np.cosh)
reciprocal = _dispatch(_reciprocal_jet, np.reciprocal)


def pow_int(x, k: int):
    if isinstance(x, Jet):
        return _pow_int_jet(x, int(k))
    return _as_float(x) ** int(k)


ELEMENTARY = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "sinh": sinh,
    "cosh": cosh,
}


def jet_arith(op: str, a, b):
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown arithmetic op {op!r}")


def jet_elementary(fn: str, a, k: int | None = None):
    if fn == "pow_int":
        if k is None:
            raise ValueError("pow_int needs an integer exponent")
        return pow_int(a, k)
    try:
        return ELEMENTARY[fn](a)
    except KeyError:
        raise ValueError(f"unknown elementary function {fn!r}") from None


def jet_partial(a: Jet, alpha: Sequence[int]) -> np.ndarray:
    return a.partial(alpha)
