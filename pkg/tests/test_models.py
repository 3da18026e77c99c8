import numpy as np
import pytest

from qgmodels.algebra import FiniteAbelianGroup
from qgmodels.linalg import group_closure, haar_unitaries, stream
from qgmodels.magic import is_flat, validate_magic
from qgmodels.models import (
    WeylMatrixSet,
    abelian_dual_model,
    build_model,
    classical_permutation_model,
    dihedral_example,
    dual_reflection_model,
    half_classical_model,
    latin_fiber_model,
    parse_model_config,
    permutation_group_table,
    regular_representation_model,
    weyl_identities_check,
    weyl_matrix,
    weyl_model,
)

Z2 = FiniteAbelianGroup.parse("Z2")


PAULI_DISPLAY = {
    (0, 0): [[1, 0], [0, 1]],
    (1, 0): [[1, 0], [0, -1]],
    (1, 1): [[0, -1], [1, 0]],
    (0, 1): [[0, 1], [1, 0]],
}


@pytest.mark.parametrize("ia", list(PAULI_DISPLAY))
def test_pauli_display(ia):
    assert np.abs(weyl_matrix(Z2, *ia) - np.array(PAULI_DISPLAY[ia])).max() <= 1e-12


def test_z3_clock():
    w = np.exp(2j * np.pi / 3)
    Z3 = FiniteAbelianGroup.parse("Z3")
    assert np.allclose(weyl_matrix(Z3, 1, 0), np.diag([1, w, w * w]), atol=1e-15)
    assert np.allclose(weyl_matrix(Z3, 0, 1), np.roll(np.eye(3), 1, axis=0), atol=1e-15)


def test_weyl_set_positions():
    W = WeylMatrixSet.build(Z2)
    assert np.array_equal(W[1, 1], weyl_matrix(Z2, 1, 1))
    assert W.position(1, 0) == 2


@pytest.mark.parametrize("group", ["Z2", "Z3", "Z4", "Z2xZ2"])
def test_weyl_identities(group):
    rep = weyl_identities_check(FiniteAbelianGroup.parse(group))
    assert rep.passed, rep


def test_identity_check_cap():
    with pytest.raises(ValueError):
        weyl_identities_check(FiniteAbelianGroup.parse("Z17"))


@pytest.mark.parametrize("group", ["Z2", "Z3", "Z2xZ2"])
def test_weyl_model_is_flat_magic(group):
    m = weyl_model(group, "haar", samples=100, seed=1)
    n = m.params["H"].order
    for U in haar_unitaries(n, 3, stream(8)):
        u = m.evaluate(U)
        assert validate_magic(u, 1e-12).passed and is_flat(u, 1e-12)


def test_weyl_model_phase_invariant():
    m = weyl_model("Z3", "haar", samples=100, seed=1)
    U = haar_unitaries(3, 1, stream(2))[0]
    assert np.abs(m.evaluate(U) - m.evaluate(np.exp(0.7j) * U)).max() < 1e-13


def test_weyl_model_at_identity():
    u = weyl_model("Z2").evaluate(np.eye(2))
    # u_{x,x} is the projection onto vec(I)/sqrt(2)
    v = np.eye(2).ravel() / np.sqrt(2)
    assert np.abs(u[0, 0] - np.outer(v, v)).max() < 1e-15


def test_weyl_exact_points():
    assert len(weyl_model("Z2").backend.points) == 4
    assert len(weyl_model("Z3").backend.points) == 9


def test_weyl_explicit_E_requires_weyl_group():
    W = list(WeylMatrixSet.build(Z2).matrices)
    m = weyl_model(Z2, [1j * w for w in W])
    assert m.backend.kind == "exact"
    with pytest.raises(ValueError, match="up to phase"):
        weyl_model(Z2, W[:3])
    with pytest.raises(ValueError):
        weyl_model(Z2, "haar")  # no seed


def test_classical_model():
    m = classical_permutation_model(3)
    assert len(m.backend.points) == 6
    u = m.evaluate(np.array([2, 0, 1]))[..., 0, 0].real
    assert np.array_equal(u, [[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    with pytest.raises(ValueError):
        classical_permutation_model(9)


def test_latin_fiber_model_points():
    m = latin_fiber_model(4)
    assert len(m.backend.points) == 24
    for L in m.backend.points[:4]:
        u = m.evaluate(L)
        assert validate_magic(u, 1e-12).passed and is_flat(u)


def test_half_classical_accepts_dihedral():
    H = dihedral_example()
    assert len(H) == 8
    m = half_classical_model(H)
    assert m.K == 2 and m.validate(m.evaluate(H[3]), 1e-12).passed


def test_half_classical_rejections():
    with pytest.raises(ValueError, match="multiplication"):
        half_classical_model([np.eye(2), np.diag([1j, -1j])])
    # clock times shift generates a cyclic group of order 3 whose conjugates lie outside it
    w = np.exp(2j * np.pi / 3)
    C3 = group_closure([np.diag([1, w, w * w]) @ np.roll(np.eye(3), 1, axis=0)])
    with pytest.raises(ValueError, match="conjugation"):
        half_classical_model(C3)


def test_abelian_dual_model():
    m = abelian_dual_model("Z3", [1], characters=[1])
    assert m.group_dual and m.K == 1
    assert m.evaluate(np.array([1]))[0, 0, 0, 0] == pytest.approx(np.exp(2j * np.pi / 3))
    assert len(abelian_dual_model("Z3", [1]).backend.points) == 3


def test_dual_reflection_model():
    m = dual_reflection_model("Z4", [1])
    u = m.evaluate(np.array([1]))
    assert np.allclose(u[0, 0], [[0, 1j], [-1j, 0]])
    assert m.validate(u, 1e-12).passed
    assert not m.self_adjoint


def test_regular_representation_s3():
    table, perms = permutation_group_table(3)
    assert perms[0] == (0, 1, 2)
    m = regular_representation_model(table)
    u = m.evaluate(np.zeros(1))
    assert m.validate(u, 1e-12).passed
    for g in range(6):
        assert np.trace(u[g, g]).real == (6 if g == 0 else 0)
    with pytest.raises(ValueError):
        regular_representation_model([[0, 1], [0, 1]])


def test_spec_file_parsing():
    cfg = parse_model_config("type = weyl\ngroup = Z2\nE = haar\nM = 400\nseed = 3\n")
    m, echo = build_model(cfg)
    assert m.backend.samples == 400 and echo["seed"] == 3
    cfg = parse_model_config("[model]\ntype = classical\nN = 3  # comment\n")
    assert build_model(cfg)[0].N == 3
    with pytest.raises(ValueError):
        parse_model_config("group = Z2\n")
    with pytest.raises(ValueError):
        parse_model_config("type = banana\n")
    with pytest.raises(ValueError, match="seed"):
        build_model(parse_model_config("type = weyl\nE = haar\n"))
