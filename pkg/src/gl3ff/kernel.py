"""Rational building blocks used by every Bethe-equation and determinant formula.

All functions live on the complex rapidity plane and depend on a single
nonzero coupling constant ``c``:

    g(x, y) = c / (x - y)
    f(x, y) = 1 + g(x, y) = (x - y + c) / (x - y)
    h(x, y) = f / g = (x - y + c) / c
    t(x, y) = g / h = c**2 / ((x - y) * (x - y + c))

Rapidity sets are plain sequences of complex numbers.  Order is significant
and always preserved: the ordered antisymmetric products and the determinant
row/column conventions downstream depend on it.
"""

from __future__ import annotations

from typing import Callable, Sequence, Union

from .errors import PoleError

SetOrScalar = Union[complex, Sequence[complex]]

# Collision guard: points closer than COLLISION_SCALE * max(1, |c|) count as
# a pole hit for every denominator in the package.
COLLISION_SCALE = 1e-10


def pole_tol(c: complex) -> float:
    """Absolute collision tolerance for coupling ``c``."""
    return COLLISION_SCALE * max(1.0, abs(c))


def g(x: complex, y: complex, c: complex) -> complex:
    """g(x, y) = c / (x - y)."""
    d = x - y
    if abs(d) <= pole_tol(c):
        raise PoleError(f"g(x, y) pole: x={x} collides with y={y}")
    return c / d


def f(x: complex, y: complex, c: complex) -> complex:
    """f(x, y) = (x - y + c) / (x - y)."""
    d = x - y
    if abs(d) <= pole_tol(c):
        raise PoleError(f"f(x, y) pole: x={x} collides with y={y}")
    return (d + c) / d


def h(x: complex, y: complex, c: complex) -> complex:
    """h(x, y) = (x - y + c) / c.  Entire; vanishes at x - y = -c."""
    return (x - y + c) / c


def t(x: complex, y: complex, c: complex) -> complex:
    """t(x, y) = c**2 / ((x - y) * (x - y + c))."""
    d = x - y
    tol = pole_tol(c)
    if abs(d) <= tol:
        raise PoleError(f"t(x, y) pole: x={x} collides with y={y}")
    if abs(d + c) <= tol:
        raise PoleError(f"t(x, y) pole: x={x} collides with y={y} - c")
    return c * c / (d * (d + c))


def _as_tuple(v: SetOrScalar) -> tuple:
    if isinstance(v, (list, tuple)):
        return tuple(v)
    return (v,)


def prod_fn(fn: Callable[[complex, complex, complex], complex],
            lhs: SetOrScalar, rhs: SetOrScalar, c: complex) -> complex:
    """Product of ``fn`` over all pairs from lhs x rhs; empty set gives 1.

    When both sides are the *same* sequence object, diagonal pairs are
    skipped, which realises the self-exclusion convention for products of a
    set against itself.
    """
    same = lhs is rhs and isinstance(lhs, (list, tuple))
    xs = _as_tuple(lhs)
    ys = _as_tuple(rhs)
    out = 1.0 + 0.0j
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            if same and i == j:
                continue
            out *= fn(x, y, c)
    return out


def g_prod(lhs: SetOrScalar, rhs: SetOrScalar, c: complex) -> complex:
    return prod_fn(g, lhs, rhs, c)


def f_prod(lhs: SetOrScalar, rhs: SetOrScalar, c: complex) -> complex:
    return prod_fn(f, lhs, rhs, c)


def h_prod(lhs: SetOrScalar, rhs: SetOrScalar, c: complex) -> complex:
    return prod_fn(h, lhs, rhs, c)


def t_prod(lhs: SetOrScalar, rhs: SetOrScalar, c: complex) -> complex:
    return prod_fn(t, lhs, rhs, c)


def inv_f_prod(lhs: SetOrScalar, rhs: SetOrScalar, c: complex) -> complex:
    """Product of 1/f(x, y) = (x - y) / (x - y + c) over all pairs.

    Finite (zero) where f itself has a pole, so it is the safe way to divide
    by an f-product whose arguments may coincide.  Raises only at the genuine
    pole x - y = -c.
    """
    tol = pole_tol(c)
    out = 1.0 + 0.0j
    for x in _as_tuple(lhs):
        for y in _as_tuple(rhs):
            d = x - y
            if abs(d + c) <= tol:
                raise PoleError(f"1/f pole: x={x} collides with y={y} - c")
            out *= d / (d + c)
    return out


def inv_h_prod(lhs: SetOrScalar, rhs: SetOrScalar, c: complex) -> complex:
    """Product of 1/h(x, y) = c / (x - y + c); raises where h vanishes."""
    tol = pole_tol(c)
    out = 1.0 + 0.0j
    for x in _as_tuple(lhs):
        for y in _as_tuple(rhs):
            den = x - y + c
            if abs(den) <= tol:
                raise PoleError(f"1/h pole: x={x} collides with y={y} - c")
            out *= c / den
    return out


def inv_g_prod(lhs: SetOrScalar, rhs: SetOrScalar, c: complex) -> complex:
    """Product of 1/g(x, y) = (x - y) / c; entire, vanishes at coincidences."""
    out = 1.0 + 0.0j
    for x in _as_tuple(lhs):
        for y in _as_tuple(rhs):
            out *= (x - y) / c
    return out


def delta_prime(xs: Sequence[complex], c: complex) -> complex:
    """Ordered antisymmetric product over index pairs j < k of g(x_j, x_k)."""
    xs = _as_tuple(xs)
    out = 1.0 + 0.0j
    n = len(xs)
    for j in range(n):
        for k in range(j + 1, n):
            out *= g(xs[j], xs[k], c)
    return out


def delta(xs: Sequence[complex], c: complex) -> complex:
    """Ordered antisymmetric product over index pairs j > k of g(x_j, x_k)."""
    xs = _as_tuple(xs)
    out = 1.0 + 0.0j
    n = len(xs)
    for j in range(n):
        for k in range(j):
            out *= g(xs[j], xs[k], c)
    return out


def exclude(xs: Sequence[complex], i: int) -> tuple:
    """The sequence with entry ``i`` removed (the bar-minus-one convention)."""
    xs = _as_tuple(xs)
    return xs[:i] + xs[i + 1:]


def check_distinct(xs: Sequence[complex], c: complex, label: str = "set") -> None:
    """Raise PoleError naming the first pair closer than the collision tolerance."""
    xs = _as_tuple(xs)
    tol = pole_tol(c)
    for j in range(len(xs)):
        for k in range(j + 1, len(xs)):
            if abs(xs[j] - xs[k]) <= tol:
                raise PoleError(
                    f"{label}: entries {j} and {k} collide ({xs[j]} ~ {xs[k]})")
