import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randmult import linalg
from randmult.errors import RankDeficientError, SingularMatrixError

from oracles import gram_schmidt, random_orthogonal, triple_loop_matmul


def test_matmul_identity_and_swap():
    a = np.arange(9.0).reshape(3, 3)
    np.testing.assert_array_equal(linalg.matmul(np.eye(3), a), a)
    out = linalg.matmul([[1, 2], [3, 4]], [[0, 1], [1, 0]])
    np.testing.assert_array_equal(out, [[2, 1], [4, 3]])


def test_matmul_matches_triple_loop(rng):
    a, b = rng.standard_normal((5, 5)), rng.standard_normal((5, 5))
    ref = triple_loop_matmul(a.tolist(), b.tolist())
    np.testing.assert_allclose(linalg.matmul(a, b), ref, rtol=1e-13, atol=1e-13)


def test_matmul_dimension_mismatch():
    with pytest.raises(ValueError):
        linalg.matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_leading_block():
    a = np.arange(12.0).reshape(3, 4)
    np.testing.assert_array_equal(linalg.leading_block(a, 2, 3), a[:2, :3])
    np.testing.assert_array_equal(linalg.leading_block(a, 3, 4), a)
    with pytest.raises(ValueError):
        linalg.leading_block(a, 4)


def test_qr_hand_example():
    res = linalg.qr([[3.0], [4.0]])
    np.testing.assert_allclose(res.q, [[0.6], [0.8]], atol=1e-15)
    np.testing.assert_allclose(res.r, [[5.0]], atol=1e-15)


def test_qr_of_orthonormal_input(rng):
    u = random_orthogonal(rng, 6)[:, :4]
    res = linalg.qr(u)
    np.testing.assert_allclose(res.q, u, atol=1e-12)
    np.testing.assert_allclose(res.r, np.eye(4), atol=1e-12)


def test_qr_matches_gram_schmidt_complex(rng):
    a = rng.standard_normal((7, 4)) + 1j * rng.standard_normal((7, 4))
    q_ref, r_ref = gram_schmidt(a)
    res = linalg.qr(a)
    np.testing.assert_allclose(res.q, q_ref, atol=1e-12)
    np.testing.assert_allclose(res.r, r_ref, atol=1e-12)
    assert np.all(np.diagonal(res.r).real > 0)
    assert np.allclose(np.diagonal(res.r).imag, 0)


def test_qr_rank_deficient():
    with pytest.raises(RankDeficientError):
        linalg.qr([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])


def test_qr_deterministic(rng):
    a = rng.standard_normal((9, 5))
    r1, r2 = linalg.qr(a), linalg.qr(a)
    assert np.array_equal(r1.q, r2.q) and np.array_equal(r1.r, r2.r)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1), st.booleans())
def test_svd_invariants(m, n, seed, cplx):
    g = np.random.default_rng(seed)
    a = g.standard_normal((m, n))
    if cplx:
        a = a + 1j * g.standard_normal((m, n))
    s = linalg.svd(a)
    tol = linalg.tol_orth(m, n)
    rho = min(m, n)
    assert s.left.shape == (m, rho) and s.right.shape == (n, rho)
    assert np.linalg.norm(s.left.conj().T @ s.left - np.eye(rho)) <= tol
    assert np.linalg.norm(s.right.conj().T @ s.right - np.eye(rho)) <= tol
    assert np.all(np.diff(s.singulars) <= 0)
    assert np.linalg.norm(a - s.matrix(), 2) <= tol * s.singulars[0]


def test_svd_small_examples():
    s = linalg.svd(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(s.singulars, [3, 1])
    np.testing.assert_allclose(np.abs(s.left), np.eye(2))
    np.testing.assert_allclose(linalg.singular_values([[0.0, 2.0], [1.0, 0.0]]), [2, 1])
    np.testing.assert_array_equal(linalg.singular_values(np.zeros((3, 2))), [0, 0])


def test_norms():
    for n in (1, 4):
        eye = np.eye(n)
        assert linalg.spectral_norm(eye) == pytest.approx(1)
        assert linalg.pseudo_inverse_norm(eye) == pytest.approx(1)
        assert linalg.condition_number(eye) == pytest.approx(1)
    d = np.diag([4.0, 2.0])
    assert linalg.spectral_norm(d) == pytest.approx(4)
    assert linalg.pseudo_inverse_norm(d) == pytest.approx(0.5)
    assert linalg.condition_number(d) == pytest.approx(2)
    assert linalg.frobenius_norm(d) == pytest.approx(np.sqrt(20))
    with pytest.raises(SingularMatrixError):
        linalg.condition_number(np.zeros((2, 2)))


def test_condition_number_cross_check(rng):
    a = rng.standard_normal((6, 6))
    s = np.linalg.svd(a, compute_uv=False)
    assert linalg.condition_number(a) == pytest.approx(s[0] / s[-1], rel=1e-12)


def test_truncate_svd():
    s = linalg.svd(np.diag([3.0, 2.0, 1.0]))
    t = linalg.truncate_svd(s, 2)
    assert linalg.spectral_norm(np.diag([3.0, 2.0, 1.0]) - t.matrix()) == pytest.approx(1)
    full = linalg.truncate_svd(s, 3)
    assert full.tail.size == 0 and full.residual_norm() == 0
    np.testing.assert_allclose(full.matrix(), np.diag([3.0, 2.0, 1.0]), atol=1e-14)
    with pytest.raises(ValueError):
        linalg.truncate_svd(s, 0)
    with pytest.raises(ValueError):
        linalg.truncate_svd(s, 4)


def test_truncate_svd_random(rng):
    a = rng.standard_normal((8, 8))
    s = linalg.svd(a)
    t = linalg.truncate_svd(s, 3)
    assert linalg.spectral_norm(a - t.matrix()) == pytest.approx(s.singulars[3], abs=1e-12)
    assert t.residual_norm() == s.singulars[3]


def test_orthogonal_invariance(rng):
    for _ in range(100):
        a = rng.standard_normal((6, 6))
        s_mat, t_mat = random_orthogonal(rng, 6), random_orthogonal(rng, 6)
        ref = linalg.singular_values(a)
        np.testing.assert_allclose(linalg.singular_values(s_mat @ a), ref, rtol=1e-11)
        np.testing.assert_allclose(linalg.singular_values(a @ t_mat), ref, rtol=1e-11)


def test_submatrix_dominance(rng):
    for _ in range(100):
        a = rng.standard_normal((8, 7))
        k, l = rng.integers(1, 9), rng.integers(1, 8)
        sub = linalg.singular_values(a[:k, :l])
        assert np.all(linalg.singular_values(a)[: sub.size] >= sub - 1e-12)


def test_nested_pseudo_inverse_norms(rng):
    for _ in range(100):
        a = rng.standard_normal((10, 8))
        r = int(rng.integers(1, 8))
        extra = int(rng.integers(1, 9 - r))
        assert linalg.pseudo_inverse_norm(a[:, :r]) <= linalg.pseudo_inverse_norm(a[:, : r + extra]) * (1 + 1e-12)


def test_canonicalize_columns(rng):
    q = linalg.orth(rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3)))
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
    c1, c2 = linalg.canonicalize_columns(q), linalg.canonicalize_columns(q * phases)
    np.testing.assert_allclose(c1, c2, atol=1e-14)
    idx = np.argmax(np.abs(c1), axis=0)
    top = c1[idx, np.arange(3)]
    assert np.allclose(top.imag, 0) and np.all(top.real > 0)
