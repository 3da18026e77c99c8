"""Dense complex linear algebra used by the models.

Matrices are plain ``numpy`` complex arrays. Random numbers always come from an
explicitly passed ``numpy.random.Generator``; :func:`stream` builds
counter-based Philox generators keyed by ``(seed, chunk)`` so Monte Carlo
sums do not depend on evaluation order.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

UNIT_TOL = 1e-12
RENORMALIZE_TOL = 1e-6


class ClosureError(RuntimeError):
    """Raised when a generated group is not finite within the requested cap."""


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream for ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def as_unit_vector(xi) -> np.ndarray:
    v = np.asarray(xi, dtype=complex).ravel()
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("zero vector has no projection")
    if abs(norm - 1.0) > UNIT_TOL:
        if abs(norm - 1.0) > RENORMALIZE_TOL:
            raise ValueError(f"vector norm {norm!r} is not 1 (tolerance {RENORMALIZE_TOL})")
        v = v / norm
    return v


def proj(xi) -> np.ndarray:
    """Orthogonal projection ``xi xi^*`` onto the line spanned by a unit vector."""
    v = as_unit_vector(xi)
    return np.outer(v, v.conj())


def inner(x, y, normalized: bool = True) -> complex:
    """Trace pairing ``tr(x^* y)``, antilinear in ``x``.

    With ``normalized=False`` this is the plain ``Tr(x^* y)``.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"inner needs equal square matrices, got {x.shape} and {y.shape}")
    val = np.vdot(x, y)
    return complex(val / x.shape[0]) if normalized else complex(val)


def rank1_chain_trace(vectors: Sequence) -> complex:
    """``Tr(Proj(x_1) ... Proj(x_p)) = <x_1,x_2><x_2,x_3>...<x_p,x_1>``."""
    if len(vectors) == 0:
        raise ValueError("need at least one vector")
    xs = [as_unit_vector(x) for x in vectors]
    if len({x.shape for x in xs}) != 1:
        raise ValueError("vectors must share a dimension")
    out = 1.0 + 0j
    for a, b in zip(xs, xs[1:] + xs[:1]):
        out *= np.vdot(a, b)
    return complex(out)


def haar_unitaries(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar-distributed unitaries, shape ``(count, d, d)``.

    QR of a complex Ginibre matrix, with the phases of ``diag(R)`` pushed into Q.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    z = (rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag))[:, None, :]


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return haar_unitaries(d, 1, rng)[0]


def unitarity_residual(u) -> float:
    u = np.asarray(u)
    eye = np.eye(u.shape[-1])
    return float(np.abs(np.swapaxes(u.conj(), -1, -2) @ u - eye).max())


def phase_equal(a, b, tol: float = 1e-8) -> bool:
    """True when ``a = lambda b`` for a unit scalar ``lambda`` (both unitary)."""
    d = a.shape[0]
    return abs(abs(np.vdot(a, b)) - d) <= tol * d


def projective_closure(generators: Sequence, tol: float = 1e-8, cap: int = 4096) -> list[np.ndarray]:
    """Representatives, modulo global phase, of the group generated by unitaries.

    Breadth-first over right multiplication by generators starting from the
    identity; the output order is therefore deterministic. Raises
    :class:`ClosureError` if more than ``cap`` classes appear.
    """
    gens = [np.asarray(g, dtype=complex) for g in generators]
    if not gens:
        raise ValueError("need at least one generator")
    d = gens[0].shape[0]
    for g in gens:
        if g.shape != (d, d):
            raise ValueError("generators must be square matrices of one size")
        if unitarity_residual(g) > tol:
            raise ValueError("generator is not unitary within tolerance")

    reps = [np.eye(d, dtype=complex)]
    stack = np.empty((cap, d, d), dtype=complex)
    stack[0] = reps[0]
    frontier = [reps[0]]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                c = a @ g
                overlaps = np.abs(np.einsum("kij,ij->k", stack[: len(reps)].conj(), c))
                if np.any(np.abs(overlaps - d) <= tol * d):
                    continue
                if len(reps) >= cap:
                    raise ClosureError(f"group is not finite within cap={cap} (modulo phase)")
                stack[len(reps)] = c
                reps.append(c)
                nxt.append(c)
        frontier = nxt
    return reps


def encode(multi: Sequence[int], N: int) -> int:
    """Row-major flat index of a multi-index, first slot most significant."""
    out = 0
    for m in multi:
        if not 0 <= m < N:
            raise ValueError(f"slot value {m} out of range [0, {N})")
        out = out * N + int(m)
    return out


def decode(flat: int, N: int, p: int) -> tuple[int, ...]:
    if not 0 <= flat < N**p:
        raise ValueError(f"flat index {flat} out of range for N={N}, p={p}")
    slots = []
    for _ in range(p):
        flat, m = divmod(flat, N)
        slots.append(m)
    return tuple(reversed(slots))


def matrix_power(a, r: int) -> np.ndarray:
    """``a**r`` by repeated squaring, ``r >= 0``."""
    a = np.asarray(a)
    if r < 0:
        raise ValueError("negative power")
    result = np.eye(a.shape[0], dtype=np.result_type(a, float))
    base = a
    while r:
        if r & 1:
            result = result @ base
        r >>= 1
        if r:
            base = base @ base
    return result


def find_matrix(stack: np.ndarray, c: np.ndarray, tol: float) -> int:
    """Index of the first matrix in ``stack`` equal to ``c`` entrywise within ``tol``, or -1."""
    if len(stack) == 0:
        return -1
    hits = np.flatnonzero(np.abs(stack - c).max(axis=(-2, -1)) <= tol)
    return int(hits[0]) if hits.size else -1


def group_closure(generators: Sequence, tol: float = 1e-9, cap: int = 4096) -> list[np.ndarray]:
    """Elements of the finite matrix group generated by ``generators`` (exact, not modulo phase)."""
    gens = [np.asarray(g, dtype=complex) for g in generators]
    if not gens:
        raise ValueError("need at least one generator")
    d = gens[0].shape[0]
    elems = [np.eye(d, dtype=complex)]
    frontier = list(elems)
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                c = a @ g
                if find_matrix(np.array(elems), c, tol) >= 0:
                    continue
                if len(elems) >= cap:
                    raise ClosureError(f"group is not finite within cap={cap}")
                elems.append(c)
                nxt.append(c)
        frontier = nxt
    return elems
