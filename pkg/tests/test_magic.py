import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgmodels.linalg import haar_unitaries, haar_unitary, stream
from qgmodels.magic import (
    LatinSquare,
    basis_to_magic,
    commuting_entries,
    is_flat,
    is_latin,
    latin_count,
    latin_enumerate,
    latin_flat_model,
    magic_from_json,
    magic_to_basis,
    magic_to_json,
    max_commutator,
    validate_biunitary,
    validate_magic,
)
from qgmodels.models import WeylMatrixSet, classical_permutation_model, weyl_model
from qgmodels.algebra import FiniteAbelianGroup


def latin_oracle(N, first_row_fixed):
    """Count Latin squares by stacking permutation rows; independent of the backtracker."""
    perms = list(itertools.permutations(range(N)))
    starts = [tuple(range(N))] if first_row_fixed else perms
    count = 0

    def extend(rows):
        nonlocal count
        if len(rows) == N:
            count += 1
            return
        for p in perms:
            if all(p[j] != r[j] for r in rows for j in range(N)):
                extend(rows + [p])

    for s in starts:
        extend([s])
    return count


def test_permutation_matrix_is_magic_and_flat():
    u = classical_permutation_model(3).evaluate(np.array([1, 2, 0]))
    assert validate_magic(u, 1e-12).passed
    assert not is_flat(u)  # K = 1 != N


def test_perturbed_magic_fails():
    u = weyl_model("Z2").evaluate(np.eye(2))
    assert validate_magic(u, 1e-12).passed
    bad = u.copy()
    bad[0, 0] = bad[0, 0] + 1e-6 * np.eye(4)
    r = validate_magic(bad, 1e-9)
    assert not r.passed and r.projection_residual > 1e-7


def test_biunitary_examples():
    u = np.zeros((2, 2, 1, 1), dtype=complex)
    u[0, 0] = u[1, 1] = 1
    assert validate_biunitary(u).passed
    u[0, 1] = 1
    assert not validate_biunitary(u).passed


def random_magic_basis(N, seed):
    """xi_ij = phase * V e_{(i+j) mod N} with V Haar: every row and column is a frame."""
    V = haar_unitary(N, stream(seed))
    return np.array([[V[:, (i + j) % N] * np.exp(1j * (i - j)) for j in range(N)] for i in range(N)])


def test_basis_round_trip():
    xi = random_magic_basis(4, 3)
    u = basis_to_magic(xi)
    assert validate_magic(u, 1e-12).passed and is_flat(u)
    back = magic_to_basis(u)
    assert np.abs(basis_to_magic(back) - u).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**31))
def test_basis_round_trip_property(N, seed):
    u = basis_to_magic(random_magic_basis(N, seed))
    assert np.abs(basis_to_magic(magic_to_basis(u)) - u).max() < 1e-10


def test_basis_rejects_non_orthogonal():
    xi = random_magic_basis(3, 1)
    xi[0, 1] = xi[0, 0]
    with pytest.raises(ValueError):
        basis_to_magic(xi)


@pytest.mark.parametrize("group", ["Z2", "Z3"])
def test_weyl_basis_matches_model(group):
    H = FiniteAbelianGroup.parse(group)
    n = H.order
    W = WeylMatrixSet.build(H).matrices
    U = haar_unitary(n, stream(5))
    xi = np.array([[(W[x] @ U @ W[y].conj().T).ravel() / np.sqrt(n) for y in range(n * n)] for x in range(n * n)])
    model = weyl_model(H, "haar", samples=100, seed=0)
    assert np.abs(basis_to_magic(xi) - model.evaluate(U)).max() < 1e-12


def test_commuting_entries():
    assert commuting_entries(classical_permutation_model(4).evaluate(np.array([1, 0, 3, 2])))
    us = haar_unitaries(2, 3, stream(9))
    u = weyl_model("Z2", "haar", samples=100, seed=0).evaluate(us[0])
    assert not commuting_entries(u)
    assert max_commutator(u) >= 0.1


def test_latin_counts_against_oracle():
    assert latin_count(3, "half") == 2 == latin_oracle(3, True)
    assert latin_count(4, "half") == 24 == latin_oracle(4, True)
    assert latin_count(3, "all") == 12 == latin_oracle(3, False)
    assert latin_count(4, "all") == 576 == latin_oracle(4, False)
    assert latin_count(4, "full") == 4
    assert latin_count(1, "half") == 1


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
def test_total_is_half_times_factorial(N):
    assert latin_count(N, "all") == latin_count(N, "half") * math.factorial(N)


def test_enumeration_order_and_validity():
    squares = latin_enumerate(4, "half")
    keys = [sum(L.entries, ()) for L in squares]
    assert keys == sorted(keys)
    assert all(L.half_normalized and is_latin(L.entries) for L in squares)
    assert squares[0].entries == ((1, 2, 3, 4), (2, 1, 4, 3), (3, 4, 1, 2), (4, 3, 2, 1))


def test_enumeration_caps():
    with pytest.raises(ValueError):
        latin_enumerate(7)
    with pytest.raises(ValueError):
        latin_enumerate(6, "all")
    with pytest.raises(ValueError):
        latin_enumerate(3, "odd")


def test_latin_square_validation_and_json():
    L = LatinSquare(((1, 2, 3), (3, 1, 2), (2, 3, 1)))
    assert LatinSquare.from_json(L.to_json()) == L
    with pytest.raises(ValueError):
        LatinSquare(((1, 2), (1, 2)))


def test_latin_flat_model_is_flat_magic():
    V = haar_unitary(4, stream(2))
    for L in latin_enumerate(4, "half")[:5]:
        u = latin_flat_model(V.T, L)
        assert validate_magic(u, 1e-12).passed and is_flat(u, 1e-12)
    with pytest.raises(ValueError):
        latin_flat_model(np.ones((4, 4)) / 2, latin_enumerate(4)[0])


def test_magic_json_round_trip():
    u = weyl_model("Z2").evaluate(haar_unitary(2, stream(4)))
    assert np.array_equal(magic_from_json(magic_to_json(u)), u)
