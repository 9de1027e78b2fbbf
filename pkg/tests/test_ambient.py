"""Flat Kaehler linear algebra: examples and structural identities."""

import numpy as np
import pytest

from maslov.ambient import AmbientSpace, block_j, complexify


def test_j_sends_ex_to_ey():
    a = AmbientSpace(1)
    assert np.array_equal(a.j_apply([1.0, 0.0]), [0.0, 1.0])


def test_j_squares_to_minus_identity_on_basis():
    a = AmbientSpace(1)
    assert np.array_equal(a.j_apply([0.0, 1.0]), [-1.0, 0.0])


def test_j_block_convention_n2():
    a = AmbientSpace(2)
    assert np.array_equal(a.j_apply([1.0, 0.0, 0.0, 0.0]), [0.0, 0.0, 1.0, 0.0])


def test_j_involution_is_exact_on_random_vectors():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        v = rng.normal(size=2 * n)
        a = AmbientSpace(n)
        # J is a signed permutation, so J(J(v)) == -v holds exactly.
        assert np.array_equal(a.j_apply(a.j_apply(v)), -v)


def test_metric_examples():
    a = AmbientSpace(1)
    assert a.g_inner([1.0, 0.0], [1.0, 0.0]) == 1.0
    assert a.g_inner([1.0, 0.0], [0.0, 1.0]) == 0.0
    assert a.g_inner([3.0, 4.0], [3.0, 4.0]) == 25.0


def test_omega_examples():
    a = AmbientSpace(1)
    assert a.omega([1.0, 0.0], [0.0, 1.0]) == -1.0  # omega = -dx^dy
    v = np.array([0.3, -1.2])
    assert abs(a.omega(v, v)) < 1e-15
    b = AmbientSpace(2)
    e_x1 = [1.0, 0.0, 0.0, 0.0]
    e_y2 = [0.0, 0.0, 0.0, 1.0]
    assert b.omega(e_x1, e_y2) == 0.0


def test_omega_antisymmetry_and_j_invariance():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(1, 4))
        a = AmbientSpace(n)
        u = rng.normal(size=2 * n)
        v = rng.normal(size=2 * n)
        assert abs(a.omega(u, v) + a.omega(v, u)) < 1e-12
        assert abs(a.omega(a.j_apply(u), a.j_apply(v)) - a.omega(u, v)) < 1e-12
        assert abs(a.g_inner(a.j_apply(u), a.j_apply(v)) - a.g_inner(u, v)) < 1e-12
        assert abs(a.omega(u, a.j_apply(u)) + a.g_inner(u, u)) < 1e-12


def test_complex_round_trip_and_i_action():
    a = AmbientSpace(1)
    assert a.to_complex([1.0, 2.0]) == pytest.approx(1.0 + 2.0j)
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(1, 4))
        amb = AmbientSpace(n)
        v = rng.normal(size=2 * n)
        assert np.allclose(amb.from_complex(amb.to_complex(v)), v)
        assert np.allclose(amb.to_complex(amb.j_apply(v)), 1j * amb.to_complex(v))


def test_holomorphic_volume_examples():
    a = AmbientSpace(2)
    e_x1 = [1.0, 0.0, 0.0, 0.0]
    e_x2 = [0.0, 1.0, 0.0, 0.0]
    assert a.holomorphic_volume([e_x1, e_x2]) == pytest.approx(1.0)
    assert a.holomorphic_volume([e_x2, e_x1]) == pytest.approx(-1.0)  # alternation
    b = AmbientSpace(1)
    assert b.holomorphic_volume([[0.0, 1.0]]) == pytest.approx(1j)


def test_holomorphic_volume_scales_by_complex_determinant():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(1, 4))
        a = AmbientSpace(n)
        z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        base = [a.from_complex(z[:, k]) for k in range(n)]
        acted = [a.from_complex((z @ m)[:, k]) for k in range(n)]
        lhs = a.holomorphic_volume(acted)
        rhs = a.holomorphic_volume(base) * np.linalg.det(m)
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(rhs))


def test_dimension_mismatch_is_rejected():
    a = AmbientSpace(2)
    with pytest.raises(ValueError):
        a.j_apply([1.0, 0.0])
    with pytest.raises(ValueError):
        a.g_inner([1.0, 0.0, 0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        a.holomorphic_volume([[1.0, 0.0, 0.0, 0.0]])


def test_ambient_invariants():
    with pytest.raises(ValueError):
        AmbientSpace(0)
    with pytest.raises(ValueError):
        AmbientSpace(1, periods=np.array([[1.0, 0.0], [2.0, 0.0]]))
    torus = AmbientSpace(1, periods=np.eye(2))
    assert torus.dim == 2


def test_block_helpers_match_methods():
    rng = np.random.default_rng(4)
    v = rng.normal(size=6)
    a = AmbientSpace(3)
    assert np.array_equal(block_j(v), a.j_apply(v))
    assert np.allclose(complexify(v), a.to_complex(v))
