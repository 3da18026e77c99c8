import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from qgmodels.linalg import (
    ClosureError,
    decode,
    encode,
    group_closure,
    haar_unitaries,
    inner,
    matrix_power,
    proj,
    projective_closure,
    rank1_chain_trace,
    stream,
    unitarity_residual,
)


def unit_vectors(d, count, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_proj_is_rank_one_projection():
    (v,) = unit_vectors(5, 1, 0)
    P = proj(v)
    assert np.abs(P @ P - P).max() < 1e-14
    assert np.abs(P - P.conj().T).max() < 1e-14
    assert abs(np.trace(P) - 1) < 1e-14


def test_proj_rejects_non_unit():
    with pytest.raises(ValueError):
        proj([1.0, 1.0])
    with pytest.raises(ValueError):
        proj([0.0, 0.0])
    # tiny drift is renormalized
    P = proj([1 + 1e-9, 0.0])
    assert abs(P[0, 0] - 1) < 1e-15


def test_inner_examples():
    x = np.array([[1, 2], [3, 4j]])
    y = np.array([[0, 1], [1j, 1]])
    assert inner(x, y) == pytest.approx(np.trace(x.conj().T @ y) / 2)
    assert inner(x, y, normalized=False) == pytest.approx(np.trace(x.conj().T @ y))
    assert inner(np.eye(3), np.eye(3)) == pytest.approx(1)
    with pytest.raises(ValueError):
        inner(np.eye(2), np.eye(3))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**31))
def test_chain_trace_matches_dense_product(p, d, seed):
    vs = unit_vectors(d, p, seed)
    dense = np.eye(d, dtype=complex)
    for v in vs:
        dense = dense @ proj(v)
    assert abs(rank1_chain_trace(list(vs)) - np.trace(dense)) < 1e-12


def test_haar_unitary_and_deterministic():
    a = haar_unitaries(3, 50, stream(7, 0))
    b = haar_unitaries(3, 50, stream(7, 0))
    assert np.array_equal(a, b)
    assert unitarity_residual(a) < 1e-13
    c = haar_unitaries(3, 50, stream(7, 1))
    assert not np.allclose(a, c)


def test_haar_d1_is_uniform_phase():
    z = haar_unitaries(1, 20000, stream(3))[:, 0, 0]
    assert np.abs(np.abs(z) - 1).max() < 1e-14
    # first two Fourier moments vanish
    assert abs(z.mean()) < 0.03 and abs((z**2).mean()) < 0.03


def u2_trace_moment(p):
    """E|Tr U|^{2p} on U_2 by quadrature over the eigenvalue-angle difference."""
    f = lambda phi: (2 + 2 * np.cos(phi)) ** p * (2 - 2 * np.cos(phi)) / 2  # noqa: E731
    val, _ = integrate.quad(f, 0, 2 * np.pi)
    return val / (2 * np.pi)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_haar_trace_moments_against_quadrature(p):
    us = haar_unitaries(2, 100000, stream(11))
    vals = np.abs(np.trace(us, axis1=1, axis2=2)) ** (2 * p)
    se = vals.std() / np.sqrt(len(vals))
    assert abs(vals.mean() - u2_trace_moment(p)) < 4 * se


def test_quadrature_oracle_gives_catalan():
    assert [round(u2_trace_moment(p), 10) for p in range(1, 6)] == [1, 2, 5, 14, 42]


def pauli():
    return [np.array([[1, 0], [0, -1]], dtype=complex), np.array([[0, 1], [1, 0]], dtype=complex)]


def test_projective_closure_counts():
    assert len(projective_closure(pauli())) == 4
    w = np.exp(2j * np.pi / 3)
    clock = np.diag([1, w, w * w])
    shift = np.roll(np.eye(3), 1, axis=0).astype(complex)
    assert len(projective_closure([clock, shift])) == 9
    assert len(projective_closure([np.exp(0.3j) * np.eye(2)])) == 1


def test_projective_closure_is_closed_and_deterministic():
    reps = projective_closure(pauli())
    again = projective_closure(pauli())
    assert all(np.array_equal(a, b) for a, b in zip(reps, again))
    for a in reps:
        for b in reps:
            c = a @ b
            assert any(abs(abs(np.vdot(r, c)) - 2) < 1e-9 for r in reps)


def test_closure_cap():
    rot = np.array([[np.cos(1), -np.sin(1)], [np.sin(1), np.cos(1)]], dtype=complex)
    with pytest.raises(ClosureError):
        projective_closure([rot], cap=50)
    with pytest.raises(ClosureError):
        group_closure([rot], cap=50)


def test_group_closure_exact():
    assert len(group_closure([np.diag([1j, -1j])])) == 4
    assert len(group_closure(pauli())) == 8


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 5), st.data())
def test_encode_decode_round_trip(N, p, data):
    multi = tuple(data.draw(st.lists(st.integers(0, N - 1), min_size=p, max_size=p)))
    flat = encode(multi, N)
    assert 0 <= flat < N**p
    assert decode(flat, N, p) == multi


def test_encode_is_row_major():
    assert encode((1, 0), 3) == 3
    assert encode((0, 2), 3) == 2
    with pytest.raises(ValueError):
        encode((3,), 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 12), st.integers(0, 2**31))
def test_matrix_power_matches_numpy(r, seed):
    a = np.random.default_rng(seed).standard_normal((4, 4)) / 2
    assert np.allclose(matrix_power(a, r), np.linalg.matrix_power(a, r), atol=1e-12)
