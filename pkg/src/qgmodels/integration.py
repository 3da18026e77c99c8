"""Transfer matrices, their powers and Cesaro means, stationarity and character moments.

For a word ``e`` of length ``p`` the transfer matrix has entries

    T[i_1..i_p, j_1..j_p] = integral over x of tr(U^x_{i_1 j_1}^{e_1} ... U^x_{i_p j_p}^{e_p})

with ``tr`` the normalized trace on ``M_K``. The ``r``-th power of ``T`` gives
the ``r``-th convolution power of the model trace, and ``T @ T == T`` for every
word is the idempotence criterion tested by :func:`stationarity_defect`.

Monte Carlo backends produce per-entry standard errors by batch means.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .linalg import encode, matrix_power
from .models import ExactBackend, ModelSpec, MonteCarloBackend, iter_exact_chunks

DEFAULT_MEMORY_CAP = 2**28
EXACT_TOL = 1e-9
SE_FACTOR = 4.0
# per-chunk working set, in complex entries
_WORK_BUDGET = 2**22


class MemoryCapError(ValueError):
    pass


def canonical_word(word: str | int | Sequence, self_adjoint: bool) -> str:
    """Normalize a word over ``{'1', '*'}``; an int ``p`` means the all-plain word of length ``p``."""
    if isinstance(word, (int, np.integer)):
        if word < 0:
            raise ValueError("word length must be >= 0")
        return "1" * int(word)
    letters = "".join(str(w) for w in word) if not isinstance(word, str) else word
    if any(c not in "1*" for c in letters):
        raise ValueError(f"word letters must be '1' or '*', got {word!r}")
    return "1" * len(letters) if self_adjoint else letters


def words_of_length(p: int, self_adjoint: bool) -> list[str]:
    if self_adjoint:
        return ["1" * p]
    return ["".join(w) for w in itertools.product("1*", repeat=p)]


@dataclass
class TransferMatrix:
    N: int
    p: int
    word: str
    values: np.ndarray
    backend: str
    samples: int | None = None
    seed: int | None = None
    se: np.ndarray | None = None
    batch_means: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def check_memory(N: int, p: int, memory_cap: int):
    entries = N ** (2 * p)
    if entries > memory_cap:
        raise MemoryCapError(
            f"T_p for N={N}, p={p} has {entries} entries > cap {memory_cap}; "
            "use the streaming character moment path instead"
        )


def _dense_chunk_transfer(u: np.ndarray, word: str) -> np.ndarray:
    """Per-point transfer matrices ``(B, N^p, N^p)`` from coordinate arrays ``(B, N, N, K, K)``."""
    B, N, _, K, _ = u.shape
    p = len(word)
    if p == 0:
        return np.ones((B, 1, 1), dtype=complex)
    ustar = np.swapaxes(u.conj(), -1, -2)
    letters = [u if c == "1" else ustar for c in word]
    if p == 1:
        return np.trace(letters[0], axis1=-2, axis2=-1) / K
    acc = letters[0]
    for nxt in letters[1:-1]:
        d = acc.shape[1]
        # contract the inner K index as one batched GEMM: (I J a, c) x (c, i j e)
        rhs = nxt.transpose(0, 3, 1, 2, 4).reshape(B, K, N * N * K)
        prod = (acc.reshape(B, d * d * K, K) @ rhs).reshape(B, d, d, K, N, N, K)
        acc = prod.transpose(0, 1, 4, 2, 5, 3, 6).reshape(B, d * N, d * N, K, K)
    d = acc.shape[1]
    # closing trace: sum_{a,c} acc[I, J, a, c] last[i, j, c, a]
    last = letters[-1].transpose(0, 4, 3, 1, 2).reshape(B, K * K, N * N)
    out = (acc.reshape(B, d * d, K * K) @ last).reshape(B, d, d, N, N) / K
    return out.transpose(0, 1, 3, 2, 4).reshape(B, d * N, d * N)


def _batched(model: ModelSpec, per_point: Callable[[np.ndarray], np.ndarray], size: int, threads: int = 1):
    """Integrate ``per_point`` (points -> (B, ...)) over the model's backend.

    Returns ``(mean, batch_means)``; ``batch_means`` is ``None`` for exact backends.
    Chunks are reduced in a fixed order, so the result does not depend on ``threads``.
    """
    backend = model.backend
    if isinstance(backend, ExactBackend):
        def run(args):
            pts, w = args
            vals = per_point(pts)
            return np.tensordot(w, vals, axes=(0, 0))

        chunks = list(iter_exact_chunks(backend, max(1, size)))
        total = None
        for part in _ordered_map(run, chunks, threads):
            total = part if total is None else total + part
        return total, None

    assert isinstance(backend, MonteCarloBackend)
    nb = backend.batches

    def run_mc(c):
        pts, ids = backend.chunk_points(c)
        sums = {}
        for start in range(0, len(pts), max(1, size)):
            vals = per_point(pts[start:start + size])
            sub = ids[start:start + size]
            for b in np.unique(sub):
                part = vals[sub == b].sum(axis=0)
                sums[int(b)] = sums[int(b)] + part if int(b) in sums else part
        return sums

    batch_sums = None
    for sums in _ordered_map(run_mc, range(backend.n_chunks()), threads):
        for b, part in sums.items():
            if batch_sums is None:
                batch_sums = np.zeros((nb,) + part.shape, dtype=part.dtype)
            batch_sums[b] += part
    counts = np.bincount(np.arange(backend.samples) * nb // backend.samples, minlength=nb)
    batch_means = batch_sums / counts.reshape((nb,) + (1,) * (batch_sums.ndim - 1))
    mean = batch_sums.sum(axis=0) / backend.samples
    return mean, batch_means


def _ordered_map(fn, items, threads: int):
    if threads <= 1:
        for item in items:
            yield fn(item)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(fn, items)


def batch_se(batch_means: np.ndarray, center: np.ndarray | None = None) -> np.ndarray:
    """Standard error of the overall mean from (equal-size) batch means, per entry."""
    nb = batch_means.shape[0]
    center = batch_means.mean(axis=0) if center is None else center
    dev = np.abs(batch_means - center) ** 2
    return np.sqrt(dev.sum(axis=0) / ((nb - 1) * nb))


def _chunk_size(per_point_entries: int) -> int:
    return max(1, min(4096, _WORK_BUDGET // max(1, per_point_entries)))


def _finish(model: ModelSpec, p: int, word: str, mean, batch_means) -> TransferMatrix:
    backend = model.backend
    if isinstance(backend, MonteCarloBackend):
        return TransferMatrix(model.N, p, word, mean, "montecarlo", backend.samples, backend.seed,
                              se=batch_se(batch_means, mean), batch_means=batch_means)
    return TransferMatrix(model.N, p, word, mean, "exact")


def transfer_matrix(model: ModelSpec, word: str | int, memory_cap: int = DEFAULT_MEMORY_CAP,
                    threads: int = 1) -> TransferMatrix:
    """Dense transfer matrix by explicit products of the ``K x K`` coordinate matrices.

    Star letters on self-adjoint models are silently replaced by plain ones.
    """
    word = canonical_word(word, model.self_adjoint)
    p = len(word)
    N, K = model.N, model.K
    check_memory(N, p, memory_cap)
    work = N ** (2 * max(p - 1, 0)) * K * K + N ** (2 * p) + N * N * K * K
    if work > memory_cap:
        raise MemoryCapError(f"intermediate products need {work} entries > cap {memory_cap}")

    def per_point(pts):
        return _dense_chunk_transfer(model.evaluate_batch(pts), word)

    mean, bm = _batched(model, per_point, _chunk_size(work), threads)
    return _finish(model, p, word, mean, bm)


def _cyclic_assemble(S: np.ndarray, p: int) -> np.ndarray:
    """``R[b, x_1..x_p, y_1..y_p] = prod_t S[b, x_t, y_t, x_{t+1}, y_{t+1}]`` (indices cyclic).

    Returns shape ``(B, N^p, N^p)``.
    """
    B, N = S.shape[0], S.shape[1]
    if p == 1:
        diag = S[:, np.arange(N)[:, None], np.arange(N)[None, :], np.arange(N)[:, None], np.arange(N)[None, :]]
        return diag
    step = S.transpose(0, 1, 3, 2, 4)  # (b, x, x', y, y')
    xs = ys = N * N
    R = step.reshape(B, xs, ys)  # rows (x1, x2), columns (y1, y2)
    for _ in range(p - 2):
        Rv = R.reshape(B, xs // N, N, 1, ys // N, N, 1)
        xs *= N
        ys *= N
        R = (Rv * step[:, None, :, :, None, :, :]).reshape(B, xs, ys)
    close = S.transpose(0, 3, 1, 4, 2)  # close[b, x1, xp, y1, yp] = S[b, xp, yp, x1, y1]
    Rv = R.reshape(B, N, xs // (N * N), N, N, ys // (N * N), N)
    out = Rv * close[:, :, None, :, :, None, :]
    return out.reshape(B, xs, ys)


def weyl_step_tensor(model: ModelSpec, us: np.ndarray) -> np.ndarray:
    """Per-step factors of the closed form for Weyl models.

    For ``x = (i, a)``, ``y = (j, b)`` and the next pair ``x', y'``::

        S[x, y, x', y'] = <i, a - a'> <j', b' - b> tr(W_{i'-i, a'-a} U W_{j-j', b-b'} U^*)
    """
    W = model.params["weyl"]
    H = W.H
    n = H.order
    N = n * n
    mats = W.matrices
    us = np.asarray(us, dtype=complex)
    left = np.einsum("xpq,bqr->bxpr", mats, us)
    right = np.einsum("ypq,brq->bypr", mats, us.conj())
    F = np.einsum("bxpq,byqp->bxy", left, right) / n

    el = np.arange(N)
    gi, ga = el // n, el % n
    cpl = H.coupling_table
    sub = H.sub_table
    # left couplings <i, a - a'>, right couplings <j', b' - b>
    CL = cpl[gi[:, None], sub[ga[:, None], ga[None, :]]]
    CR = cpl[gi[None, :], sub[ga[None, :], ga[:, None]]]
    dL = sub[gi[None, :], gi[:, None]] * n + sub[ga[None, :], ga[:, None]]  # (x, x') -> x' - x
    dR = sub[gi[:, None], gi[None, :]] * n + sub[ga[:, None], ga[None, :]]  # (y, y') -> y - y'
    Fsel = F[:, dL[:, None, :, None], dR[None, :, None, :]]  # (b, x, y, x', y')
    return CL[None, :, None, :, None] * CR[None, None, :, None, :] * Fsel


def weyl_transfer_fastpath(model: ModelSpec, p: int, memory_cap: int = DEFAULT_MEMORY_CAP,
                           threads: int = 1) -> TransferMatrix:
    """Transfer matrix of a Weyl model from the closed-form coupling/trace product.

    Uses the same backend (and the same Monte Carlo stream) as ``model``.
    """
    if "weyl" not in model.params:
        raise ValueError("fast path needs a model built by weyl_model")
    N = model.N
    check_memory(N, p, memory_cap)
    if p == 0:
        return _finish(model, 0, "", *_batched(model, lambda pts: np.ones((len(pts), 1, 1), complex), 4096, threads))

    def per_point(pts):
        return _cyclic_assemble(weyl_step_tensor(model, pts), p) / N

    work = N ** (2 * p) + N**4
    mean, bm = _batched(model, per_point, _chunk_size(work), threads)
    return _finish(model, p, "1" * p, mean, bm)


def halfclassical_transfer(H, p: int, memory_cap: int = DEFAULT_MEMORY_CAP) -> TransferMatrix:
    """Transfer matrix of the 2x2 antidiagonal model: zero for odd ``p``, otherwise
    the average of ``Re(v_{i_1 j_1} conj(v_{i_2 j_2}) v_{i_3 j_3} ...)``."""
    elems = H.params["H"] if isinstance(H, ModelSpec) else np.array([np.asarray(v, dtype=complex) for v in H])
    N = elems.shape[1]
    check_memory(N, p, memory_cap)
    if p % 2 == 1:
        return TransferMatrix(N, p, "1" * p, np.zeros((N**p, N**p), dtype=complex), "exact")
    acc = np.ones((len(elems), 1, 1), dtype=complex)
    for t in range(p):
        v = elems if t % 2 == 0 else elems.conj()
        d = acc.shape[1]
        acc = (acc[:, :, None, :, None] * v[:, None, :, None, :]).reshape(len(elems), d * N, d * N)
    return TransferMatrix(N, p, "1" * p, acc.real.mean(axis=0).astype(complex), "exact")


def truncated_integral(T: TransferMatrix | np.ndarray, r: int, i: Sequence[int], j: Sequence[int]) -> complex:
    """Entry ``(i, j)`` of ``T**r``, the ``r``-th truncated integral of the corresponding word."""
    if r < 1:
        raise ValueError("r must be >= 1")
    vals = T.values if isinstance(T, TransferMatrix) else np.asarray(T)
    N = T.N if isinstance(T, TransferMatrix) else None
    if N is None:
        p = len(i)
        N = round(vals.shape[0] ** (1.0 / p)) if p else 1
    if len(i) != len(j):
        raise ValueError("multi-indices must have the same length")
    if N ** len(i) != vals.shape[0]:
        raise ValueError("multi-index length does not match the matrix size")
    return complex(matrix_power(vals, r)[encode(i, N), encode(j, N)])


@dataclass
class CesaroResult:
    mean: np.ndarray
    history: np.ndarray
    entry: tuple[int, int]


def cesaro(T: TransferMatrix | np.ndarray, k: int, entry: tuple[int, int] = (0, 0)) -> CesaroResult:
    """``(1/k) sum_{r=1..k} T^r`` with compensated summation.

    ``history[r-1]`` is the partial mean ``(1/r) sum_{s<=r} T^s`` at ``entry``.
    The limit is the Haar state only for inner faithful models, which is
    assumed here and not checked.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    vals = np.asarray(T.values if isinstance(T, TransferMatrix) else T, dtype=complex)
    if vals.ndim == 0:
        vals = vals.reshape(1, 1)
    total = np.zeros_like(vals)
    comp = np.zeros_like(vals)
    power = np.eye(vals.shape[0], dtype=complex)
    history = np.empty(k, dtype=complex)
    for r in range(1, k + 1):
        power = power @ vals
        y = power - comp
        t = total + y
        comp = (t - total) - y
        total = t
        history[r - 1] = total[entry] / r
    return CesaroResult(total / k, history, entry)


@dataclass
class HaarStateEstimate:
    word: str
    i: tuple[int, ...]
    j: tuple[int, ...]
    k: int
    value: complex
    history: np.ndarray


def haar_state_estimate(T: TransferMatrix, i: Sequence[int], j: Sequence[int], k: int) -> HaarStateEstimate:
    entry = (encode(i, T.N), encode(j, T.N))
    res = cesaro(T, k, entry)
    return HaarStateEstimate(T.word, tuple(i), tuple(j), k, complex(res.mean[entry]), res.history)


def idempotence_defect(T: TransferMatrix) -> tuple[np.ndarray, np.ndarray | None]:
    """``T^2 - T`` and, for Monte Carlo, its per-entry standard error.

    The error is propagated through the linearization
    ``d(T^2 - T) = T dT + dT T - dT`` applied to each batch deviation.
    """
    vals = T.values
    D = vals @ vals - vals
    if T.batch_means is None:
        return D, None
    dev = T.batch_means - vals
    lin = vals @ dev + dev @ vals - dev
    nb = dev.shape[0]
    se = np.sqrt((np.abs(lin) ** 2).sum(axis=0) / ((nb - 1) * nb))
    return D, se


@dataclass
class DepthResult:
    p: int
    word: str
    defect: float
    se: float | None
    ratio: float | None
    passed: bool


@dataclass
class StationarityReport:
    model: dict
    p_max: int
    tol: float
    backend: str
    depths: list[DepthResult]

    @property
    def passed(self) -> bool:
        return all(d.passed for d in self.depths)

    @property
    def defect(self) -> float:
        return max((d.defect for d in self.depths), default=0.0)

    @property
    def verdict(self) -> str:
        if self.passed:
            return f"stationary within tolerance at tested depths p <= {self.p_max} (not a proof for larger p)"
        bad = [d for d in self.depths if not d.passed]
        worst = max(bad, key=lambda d: d.defect)
        return f"not stationary: defect {worst.defect:.3g} at p = {worst.p}, word {worst.word or '()'}"


# entries with vanishing standard error still carry rounding noise
_SE_FLOOR = 1e-12


def stationarity_defect(model: ModelSpec, p_max: int, tol: float = EXACT_TOL,
                        memory_cap: int = DEFAULT_MEMORY_CAP, threads: int = 1,
                        se_factor: float = SE_FACTOR) -> StationarityReport:
    """Max entrywise ``|T^2 - T|`` for every word class of length ``1..p_max``.

    Exact backends pass when the defect is at most ``tol``; Monte Carlo backends
    when every entry is within ``se_factor`` propagated standard errors.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    depths = []
    for p in range(1, p_max + 1):
        for word in words_of_length(p, model.self_adjoint):
            T = transfer_matrix(model, word, memory_cap=memory_cap, threads=threads)
            D, se = idempotence_defect(T)
            defect = float(np.abs(D).max())
            if se is None:
                depths.append(DepthResult(p, word, defect, None, None, defect <= tol))
            else:
                bound = se_factor * se + _SE_FLOOR
                ratio = float((np.abs(D) / (se + _SE_FLOOR)).max())
                depths.append(DepthResult(p, word, defect, float(se.max()), ratio, bool(np.all(np.abs(D) <= bound))))
    return StationarityReport(model.describe(), p_max, tol, model.backend.kind, depths)


@dataclass
class MomentEstimate:
    p: int
    value: float
    se: float | None
    mode: str
    imag: float = 0.0


def _moment_from(mean, batch_means, p, mode) -> MomentEstimate:
    mean = complex(mean)
    se = None if batch_means is None else float(batch_se(np.asarray(batch_means).reshape(-1, 1), np.array([mean]))[0])
    return MomentEstimate(p, mean.real, se, mode, mean.imag)


def character_moment(model: ModelSpec, p: int, mode: str = "materialized",
                     memory_cap: int = DEFAULT_MEMORY_CAP, threads: int = 1) -> MomentEstimate:
    """``(tr x integral)(chi^p)`` for the main character ``chi = sum_i u_ii``.

    ``materialized`` takes the trace of the full transfer matrix; ``streaming``
    forms ``chi`` at each sample point and never builds ``T_p``.
    """
    if p < 0:
        raise ValueError("p must be >= 0")
    if mode == "materialized":
        T = transfer_matrix(model, "1" * p, memory_cap=memory_cap, threads=threads)
        bm = None if T.batch_means is None else np.trace(T.batch_means, axis1=1, axis2=2)
        return _moment_from(np.trace(T.values), bm, p, mode)
    if mode != "streaming":
        raise ValueError("mode must be 'materialized' or 'streaming'")
    K = model.K

    def per_point(pts):
        u = model.evaluate_batch(pts)
        chi = np.trace(u, axis1=1, axis2=2)  # sum_i u_ii, shape (B, K, K)
        return np.trace(np.linalg.matrix_power(chi, p), axis1=-2, axis2=-1) / K

    mean, bm = _batched(model, per_point, _chunk_size(model.N**2 * K * K), threads)
    return _moment_from(mean, bm, p, mode)


def row_sums(T: TransferMatrix) -> np.ndarray:
    return T.values.sum(axis=1)


@dataclass
class WordCheck:
    word: tuple[int, ...]
    value: complex
    expected: float
    passed: bool


def _word_matrices(model: ModelSpec, word: Sequence[int]) -> np.ndarray:
    """``g^x`` at every exact point for a word of signed 1-based generator indices."""
    backend = model.backend
    if not isinstance(backend, ExactBackend):
        raise ValueError("word checks need an exact backend")
    u = model.evaluate_batch(backend.points)
    gens = u[:, np.arange(model.N), np.arange(model.N)]  # (P, N, K, K)
    out = np.broadcast_to(np.eye(model.K, dtype=complex), (len(u), model.K, model.K)).copy()
    for letter in word:
        k = abs(int(letter)) - 1
        if letter == 0 or not 0 <= k < model.N:
            raise ValueError(f"letter {letter} is not a generator index in +-1..+-{model.N}")
        g = gens[:, k]
        out = out @ (g if letter > 0 else np.swapaxes(g.conj(), -1, -2))
    return out


def dual_stationarity_check(model: ModelSpec, words: Sequence[Sequence[int]], tol: float = 1e-12) -> list[WordCheck]:
    """Compare ``integral tr(g^x) dx`` with ``delta_{g,1}`` for each word.

    A word counts as the identity when it evaluates to the identity matrix at
    every point, i.e. the model is taken to be faithful on the group.
    """
    if not model.group_dual:
        raise ValueError("dual_stationarity_check needs a group dual model")
    if model.N == 0:
        raise ValueError("empty alphabet")
    w = model.backend.weights
    out = []
    for word in words:
        mats = _word_matrices(model, word)
        traces = np.trace(mats, axis1=-2, axis2=-1) / model.K
        value = complex(np.dot(w, traces))
        is_one = bool(np.abs(mats - np.eye(model.K)).max() <= 1e-9)
        expected = 1.0 if is_one else 0.0
        out.append(WordCheck(tuple(word), value, expected, abs(value - expected) <= tol))
    return out


def reduced_words(n_generators: int, max_length: int, involutions: bool = False) -> list[tuple[int, ...]]:
    """Nonempty freely reduced words in ``+-1..+-n``; with ``involutions`` the generators
    square to one, so only positive letters with no repeated neighbours remain."""
    letters = list(range(1, n_generators + 1))
    if not involutions:
        letters += [-x for x in letters]
    out = []
    for length in range(1, max_length + 1):
        for w in itertools.product(letters, repeat=length):
            if involutions and any(a == b for a, b in zip(w, w[1:])):
                continue
            if not involutions and any(a == -b for a, b in zip(w, w[1:])):
                continue
            out.append(w)
    return out


def geometric_cesaro_bound(omega: complex, k: int) -> float:
    """``2 / (k |1 - omega|)`` bound on the Cesaro mean of a unit scalar ``omega != 1``."""
    return 2.0 / (k * abs(1 - omega))


def catalan(p: int) -> int:
    return math.comb(2 * p, p) // (p + 1)
