"""Magic unitaries, magic bases and Latin squares.

A magic unitary is stored as an array of shape ``(N, N, K, K)``: entry
``u[i, j]`` is the ``K x K`` projection ``u_ij``. A magic basis is an array of
shape ``(N, N, N)`` of unit vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .linalg import as_unit_vector

DEFAULT_TOL = 1e-9
LATIN_MAX_N = 6
LATIN_ALL_MAX_N = 5


@dataclass(frozen=True)
class MagicReport:
    projection_residual: float
    row_residual: float
    column_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.projection_residual, self.row_residual, self.column_residual) <= self.tol


@dataclass(frozen=True)
class BiunitaryReport:
    unitary_residual: float
    transpose_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.unitary_residual, self.transpose_residual) <= self.tol


def _as_blocks(u) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 4 or u.shape[0] != u.shape[1] or u.shape[2] != u.shape[3]:
        raise ValueError(f"expected an (N, N, K, K) array of blocks, got shape {u.shape}")
    return u


def validate_magic(u, tol: float = DEFAULT_TOL) -> MagicReport:
    """Residuals of the magic conditions: projections, row sums and column sums equal to 1."""
    u = _as_blocks(u)
    K = u.shape[-1]
    adj = np.swapaxes(u.conj(), -1, -2)
    proj_res = max(np.abs(u - adj).max(), np.abs(u @ u - u).max()) if u.size else 0.0
    eye = np.eye(K)
    row_res = np.abs(u.sum(axis=1) - eye).max() if u.size else 0.0
    col_res = np.abs(u.sum(axis=0) - eye).max() if u.size else 0.0
    return MagicReport(float(proj_res), float(row_res), float(col_res), tol)


def block_matrix(u) -> np.ndarray:
    """Assemble ``(u_ij)`` into the ``NK x NK`` operator matrix."""
    u = _as_blocks(u)
    N, K = u.shape[0], u.shape[-1]
    return u.transpose(0, 2, 1, 3).reshape(N * K, N * K)


def validate_biunitary(u, tol: float = DEFAULT_TOL) -> BiunitaryReport:
    """Check that both ``u = (u_ij)`` and ``u^t = (u_ji)`` are unitary."""
    u = _as_blocks(u)
    eye = np.eye(u.shape[0] * u.shape[-1])
    big = block_matrix(u)
    bigt = block_matrix(np.swapaxes(u, 0, 1))
    res = max(np.abs(big.conj().T @ big - eye).max(), np.abs(big @ big.conj().T - eye).max())
    rest = max(np.abs(bigt.conj().T @ bigt - eye).max(), np.abs(bigt @ bigt.conj().T - eye).max())
    return BiunitaryReport(float(res), float(rest), tol)


def is_flat(u, tol: float = DEFAULT_TOL) -> bool:
    """Flat means ``K == N`` and every entry is a rank one projection."""
    u = _as_blocks(u)
    if u.shape[-1] != u.shape[0]:
        return False
    traces = np.trace(u, axis1=-2, axis2=-1)
    return bool(np.all(np.abs(traces - 1.0) <= tol))


def canonical_phase(v) -> np.ndarray:
    """Rotate ``v`` so its first coordinate of largest modulus is real positive."""
    v = np.asarray(v, dtype=complex)
    mod = np.abs(v)
    # tie-break with a tolerance so rounding noise does not move the pivot
    k = int(np.argmax(mod >= mod.max() - 1e-12))
    return v * (abs(v[k]) / v[k])


def _check_orthonormal_rows(xi, tol: float):
    gram_rows = np.einsum("ija,ika->ijk", xi.conj(), xi)
    gram_cols = np.einsum("jia,kia->ijk", xi.conj(), xi)
    eye = np.eye(xi.shape[0])
    bad = max(np.abs(gram_rows - eye).max(), np.abs(gram_cols - eye).max())
    if bad > tol:
        raise ValueError(f"not a magic basis: row/column orthonormality residual {bad:.3g}")


def basis_to_magic(xi, tol: float = 1e-8) -> np.ndarray:
    """Flat magic unitary ``u_ij = Proj(xi_ij)`` of a magic basis ``xi`` of shape ``(N, N, N)``."""
    xi = np.asarray(xi, dtype=complex)
    if xi.ndim != 3 or xi.shape[0] != xi.shape[1] or xi.shape[2] != xi.shape[0]:
        raise ValueError(f"magic basis must have shape (N, N, N), got {xi.shape}")
    norms = np.linalg.norm(xi, axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise ValueError("magic basis vectors must have unit norm")
    xi = xi / norms[..., None]
    _check_orthonormal_rows(xi, tol)
    return np.einsum("ija,ijb->ijab", xi, xi.conj())


def magic_to_basis(u, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Canonical-phase vectors ``xi_ij`` with ``u_ij = Proj(xi_ij)`` for a flat magic unitary."""
    u = _as_blocks(u)
    if not is_flat(u, tol):
        raise ValueError("magic unitary is not flat")
    N = u.shape[0]
    xi = np.empty((N, N, N), dtype=complex)
    for i in range(N):
        for j in range(N):
            block = u[i, j]
            col = int(np.argmax(np.linalg.norm(block, axis=0)))
            v = block[:, col]
            xi[i, j] = canonical_phase(v / np.linalg.norm(v))
    return xi


def commuting_entries(u, tol: float = DEFAULT_TOL) -> bool:
    """True if all entries ``u_ij`` pairwise commute within ``tol``.

    For rank one projections this is the same as the underlying vectors being
    proportional or orthogonal.
    """
    u = _as_blocks(u)
    K = u.shape[-1]
    flat = u.reshape(-1, K, K)
    a = flat[:, None]
    b = flat[None, :]
    comm = a @ b - b @ a
    return bool(np.abs(comm).max() <= tol) if comm.size else True


def max_commutator(u) -> float:
    u = _as_blocks(u)
    K = u.shape[-1]
    flat = u.reshape(-1, K, K)
    comm = flat[:, None] @ flat[None, :] - flat[None, :] @ flat[:, None]
    return float(np.linalg.norm(comm, ord=2, axis=(-2, -1)).max()) if comm.size else 0.0


@dataclass(frozen=True)
class LatinSquare:
    """Latin square with entries in ``1..N``."""

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in r) for r in self.entries)
        object.__setattr__(self, "entries", rows)
        if not is_latin(rows):
            raise ValueError("rows and columns must each be permutations of 1..N")

    @property
    def N(self) -> int:
        return len(self.entries)

    @property
    def half_normalized(self) -> bool:
        return self.entries[0] == tuple(range(1, self.N + 1)) if self.N else True

    @property
    def normalized(self) -> bool:
        return self.half_normalized and tuple(r[0] for r in self.entries) == tuple(range(1, self.N + 1))

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=int).reshape(self.N, self.N)

    def to_json(self) -> str:
        return json.dumps([list(r) for r in self.entries])

    @classmethod
    def from_json(cls, text: str) -> "LatinSquare":
        return cls(tuple(tuple(r) for r in json.loads(text)))


def is_latin(rows: Sequence[Sequence[int]]) -> bool:
    N = len(rows)
    target = set(range(1, N + 1))
    if any(len(r) != N for r in rows):
        return False
    return all(set(r) == target for r in rows) and all({r[j] for r in rows} == target for j in range(N))


def _backtrack(N: int, fixed_first_row: bool, fixed_first_col: bool) -> Iterable[list[int]]:
    """Cell-by-cell search in row-major order, values ascending, yielding flat 0-based squares."""
    size = N * N
    cells = [0] * size
    row_used = [0] * N
    col_used = [0] * N
    full = (1 << N) - 1

    def forced(pos):
        i, j = divmod(pos, N)
        if fixed_first_row and i == 0:
            return j
        if fixed_first_col and j == 0:
            return i
        return None

    def rec(pos):
        if pos == size:
            yield cells
            return
        i, j = divmod(pos, N)
        free = full & ~(row_used[i] | col_used[j])
        f = forced(pos)
        candidates = (f,) if f is not None else range(N)
        for v in candidates:
            bit = 1 << v
            if not free & bit:
                continue
            cells[pos] = v
            row_used[i] |= bit
            col_used[j] |= bit
            yield from rec(pos + 1)
            row_used[i] &= ~bit
            col_used[j] &= ~bit

    yield from rec(0)


def _check_enumeration_args(N: int, normalization: str):
    if normalization not in ("all", "half", "full"):
        raise ValueError("normalization must be 'all', 'half' or 'full'")
    if not 1 <= N <= LATIN_MAX_N:
        raise ValueError(f"Latin square enumeration is capped at 1 <= N <= {LATIN_MAX_N}")
    if normalization == "all" and N > LATIN_ALL_MAX_N:
        raise ValueError(f"'all' enumeration is capped at N <= {LATIN_ALL_MAX_N}")


def latin_enumerate(N: int, normalization: str = "half") -> list[LatinSquare]:
    """All ``N x N`` Latin squares, in lexicographic order of their row-major entries.

    ``normalization`` is ``"all"``, ``"half"`` (first row is ``1..N``) or
    ``"full"`` (first row and first column are ``1..N``).
    """
    _check_enumeration_args(N, normalization)
    out = []
    for cells in _backtrack(N, normalization in ("half", "full"), normalization == "full"):
        rows = tuple(tuple(c + 1 for c in cells[r * N:(r + 1) * N]) for r in range(N))
        out.append(LatinSquare(rows))
    return out


def latin_count(N: int, normalization: str = "half") -> int:
    _check_enumeration_args(N, normalization)
    return sum(1 for _ in _backtrack(N, normalization in ("half", "full"), normalization == "full"))


def latin_flat_model(basis: Sequence, L: LatinSquare, tol: float = 1e-10) -> np.ndarray:
    """Flat magic unitary ``u_ij = Proj(x_{L_ij})`` for an orthonormal basis ``x_1..x_N``."""
    xs = np.array([as_unit_vector(x) for x in basis])
    N = L.N
    if xs.shape != (N, N):
        raise ValueError(f"need {N} vectors of dimension {N}, got array of shape {xs.shape}")
    if np.abs(xs.conj() @ xs.T - np.eye(N)).max() > tol:
        raise ValueError("basis is not orthonormal")
    projs = np.einsum("ka,kb->kab", xs, xs.conj())
    return projs[L.array() - 1]


def magic_to_json(u) -> str:
    """``u[i][j]`` is a ``K x K`` list of ``[re, im]`` pairs."""
    u = _as_blocks(u)
    pairs = np.stack([u.real, u.imag], axis=-1)
    return json.dumps({"N": u.shape[0], "K": u.shape[-1], "entries": pairs.tolist()})


def magic_from_json(text: str) -> np.ndarray:
    data = json.loads(text)
    arr = np.asarray(data["entries"] if isinstance(data, dict) else data, dtype=float)
    if arr.ndim != 5 or arr.shape[-1] != 2:
        raise ValueError("expected an N x N array of K x K matrices of [re, im] pairs")
    return _as_blocks(arr[..., 0] + 1j * arr[..., 1])

