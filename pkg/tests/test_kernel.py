import numpy as np
import pytest

from gl3ff.errors import PoleError
from gl3ff import kernel as K


def test_g_direct_values():
    assert K.g(2.0, 1.0, 1.0) == 1.0
    assert K.g(0.0, -2.0, 2.0) == 1.0


def test_g_pole():
    with pytest.raises(PoleError):
        K.g(1.0, 1.0, 1.0)


def test_f_h_t_direct_values():
    assert K.f(1.0, 0.0, 1.0) == 2.0
    assert K.h(0.5, 0.5 + 1.0, 1.0) == 0.0  # x - y = -c
    assert K.t(2.0, 1.0, 1.0) == 0.5


def test_t_pole_at_shifted_coincidence():
    with pytest.raises(PoleError):
        K.t(0.0, 1.0, 1.0)


def test_reflection_properties():
    rng = np.random.default_rng(0)
    for _ in range(200):
        x, y = (complex(*rng.uniform(-2, 2, 2)) for _ in range(2))
        c = complex(*rng.uniform(-2, 2, 2))
        if abs(x - y) < 1e-3 or abs(x - y + c) < 1e-3 or abs(c) < 1e-3:
            continue
        for fn in (K.g, K.f, K.h, K.t):
            lhs = fn(-x, -y, c)
            rhs = fn(y, x, c)
            assert abs(lhs - rhs) <= 1e-14 * abs(rhs)


def test_algebraic_identities():
    rng = np.random.default_rng(1)
    for _ in range(200):
        x, y = (complex(*rng.uniform(-2, 2, 2)) for _ in range(2))
        c = complex(*rng.uniform(-2, 2, 2))
        if abs(x - y) < 1e-3 or abs(x - y + c) < 1e-3 or abs(c) < 1e-3:
            continue
        f, g, h, t = (fn(x, y, c) for fn in (K.f, K.g, K.h, K.t))
        assert abs(f - (1 + g)) <= 1e-14 * abs(f)
        assert abs(t * h - g) <= 1e-14 * abs(g)
        assert abs(f - g * h) <= 1e-14 * abs(f)


def test_empty_products_are_one():
    assert K.f_prod(0.5j, (), 1.0) == 1.0
    u = (0.3 + 0.1j,)
    assert K.prod_fn(K.g, u, u, 1.0) == 1.0  # self-exclusion on a singleton


def test_pair_product_value():
    val = K.f_prod((1.0, 3.0), (0.0,), 1.0)
    assert abs(val - 8.0 / 3.0) < 1e-15


def test_prod_fn_reports_offending_pair():
    with pytest.raises(PoleError):
        K.f_prod((1.0, 2.0), (2.0,), 1.0)


def test_delta_values():
    assert K.delta_prime((0.5,), 1.0) == 1.0
    assert K.delta((), 1.0) == 1.0
    assert K.delta_prime((2.0, 1.0), 1.0) == 1.0   # g(2,1)
    assert K.delta((2.0, 1.0), 1.0) == -1.0        # g(1,2)


def test_delta_product_permutation_symmetric():
    rng = np.random.default_rng(2)
    xs = tuple(complex(*rng.uniform(-2, 2, 2)) for _ in range(4))
    ref = K.delta_prime(xs, 1.0) * K.delta(xs, 1.0)
    for perm in ((1, 0, 2, 3), (3, 2, 1, 0), (2, 3, 0, 1)):
        ys = tuple(xs[i] for i in perm)
        val = K.delta_prime(ys, 1.0) * K.delta(ys, 1.0)
        assert abs(val - ref) <= 1e-12 * abs(ref)


def test_inverse_products_match_reciprocals():
    rng = np.random.default_rng(3)
    xs = tuple(complex(*rng.uniform(-2, 2, 2)) for _ in range(3))
    ys = tuple(complex(*rng.uniform(-2, 2, 2)) for _ in range(2))
    c = 1.0
    assert abs(K.inv_f_prod(xs, ys, c) * K.f_prod(xs, ys, c) - 1) < 1e-12
    assert abs(K.inv_h_prod(xs, ys, c) * K.h_prod(xs, ys, c) - 1) < 1e-12
    assert abs(K.inv_g_prod(xs, ys, c) * K.g_prod(xs, ys, c) - 1) < 1e-12


def test_inv_f_prod_finite_at_coincidence():
    # the safe reciprocal is zero (not a pole) where f itself diverges
    assert K.inv_f_prod((0.5,), (0.5,), 1.0) == 0.0


def test_check_distinct():
    with pytest.raises(PoleError):
        K.check_distinct((0.1, 0.1 + 1e-12), 1.0)
    K.check_distinct((0.1, 0.2), 1.0)
