"""Matrix models ``u_ij -> [x -> U^x_ij]`` with an integration backend over ``x``.

Every model is a :class:`ModelSpec`. Its ``evaluate_batch`` maps a stacked
array of sample points to an array of shape ``(B, N, N, K, K)``; the backend
says how sample points are produced and weighted.
"""

from __future__ import annotations

import configparser
import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from .algebra import FiniteAbelianGroup, coupling, index_add, index_neg, index_sub
from .linalg import (
    find_matrix,
    group_closure,
    haar_unitaries,
    phase_equal,
    projective_closure,
    stream,
    unitarity_residual,
)
from .magic import DEFAULT_TOL, latin_enumerate, latin_flat_model, validate_biunitary, validate_magic

MC_CHUNK = 1024
MC_BATCHES = 20


@dataclass(frozen=True)
class ExactBackend:
    """Finite sample space with probability weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.points):
            raise ValueError("one weight per point is required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "ExactBackend":
        points = np.asarray(points)
        return cls(points, np.full(len(points), 1.0 / len(points)))

    @property
    def kind(self) -> str:
        return "exact"


@dataclass(frozen=True)
class MonteCarloBackend:
    """``samples`` draws from ``draw(rng, count)``.

    Sample ``s`` lives in chunk ``s // chunk`` and each chunk draws from its own
    stream ``stream(seed, chunk_index)``, so the sample set depends only on
    ``(seed, samples, chunk)``.
    """

    sampler: str
    samples: int
    seed: int
    draw: Callable[[np.random.Generator, int], np.ndarray] = field(repr=False, compare=False)
    batches: int = MC_BATCHES
    chunk: int = MC_CHUNK

    def __post_init__(self):
        if self.samples < self.batches:
            raise ValueError(f"need at least {self.batches} samples for batch means")
        if self.batches < 2:
            raise ValueError("need at least two batches")

    @property
    def kind(self) -> str:
        return "montecarlo"

    def n_chunks(self) -> int:
        return -(-self.samples // self.chunk)

    def chunk_points(self, c: int) -> tuple[np.ndarray, np.ndarray]:
        """Points of chunk ``c`` and the batch id of each."""
        start = c * self.chunk
        stop = min(self.samples, start + self.chunk)
        pts = self.draw(stream(self.seed, c), stop - start)
        ids = np.arange(start, stop) * self.batches // self.samples
        return pts, ids


@dataclass
class ModelSpec:
    """A matrix model of ``C(G)`` on a sample space.

    ``kind`` selects the per-point validator: ``"magic"`` for quantum
    permutation models, ``"biunitary"`` otherwise. ``group_dual`` marks
    diagonal models of discrete group duals, whose generators are ``u_ii``.
    """

    name: str
    N: int
    K: int
    self_adjoint: bool
    kind: str
    backend: ExactBackend | MonteCarloBackend
    evaluate_batch: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    params: dict = field(default_factory=dict)
    group_dual: bool = False

    def evaluate(self, x) -> np.ndarray:
        return self.evaluate_batch(np.asarray(x)[None])[0]

    def validate(self, u, tol: float = DEFAULT_TOL):
        return validate_magic(u, tol) if self.kind == "magic" else validate_biunitary(u, tol)

    def sample_points(self, count: int, seed: int = 0) -> np.ndarray:
        """A few points for spot checks: exact points in order, or fresh MC draws."""
        if isinstance(self.backend, ExactBackend):
            return self.backend.points[:count]
        return self.backend.draw(stream(seed, 2**31), count)

    def describe(self) -> dict:
        out = {"name": self.name, "N": self.N, "K": self.K, "self_adjoint": self.self_adjoint,
               "kind": self.kind, "backend": self.backend.kind}
        if isinstance(self.backend, ExactBackend):
            out["points"] = len(self.backend.points)
        else:
            out.update(sampler=self.backend.sampler, samples=self.backend.samples, seed=self.backend.seed)
        return out


# ---------------------------------------------------------------------------
# Weyl matrices


def weyl_matrix(H: FiniteAbelianGroup, i, a) -> np.ndarray:
    """``W_ia : e_b -> <i, b> e_{a+b}`` as an ``n x n`` matrix."""
    i, a = H.index(i), H.index(a)
    n = H.order
    w = np.zeros((n, n), dtype=complex)
    for b in H.elements():
        w[H.flat(index_add(H, a, b)), H.flat(b)] = coupling(H, i, b)
    return w


@dataclass(frozen=True)
class WeylMatrixSet:
    """All ``W_ia``; position ``flat(i) * n + flat(a)`` holds ``W_ia``."""

    H: FiniteAbelianGroup
    matrices: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, H: FiniteAbelianGroup) -> "WeylMatrixSet":
        mats = np.array([weyl_matrix(H, i, a) for i in H.elements() for a in H.elements()])
        return cls(H, mats.reshape(H.order**2, H.order, H.order))

    @property
    def n(self) -> int:
        return self.H.order

    def position(self, i, a) -> int:
        return self.H.flat(i) * self.n + self.H.flat(a)

    def __getitem__(self, ia) -> np.ndarray:
        return self.matrices[self.position(*ia)]


@dataclass(frozen=True)
class WeylIdentityReport:
    unitarity: float
    adjoint: float
    product: float
    product_adjoint: float
    adjoint_product: float
    trace: float
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.unitarity, self.adjoint, self.product, self.product_adjoint,
                   self.adjoint_product, self.trace)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol


def weyl_identities_check(H: FiniteAbelianGroup, tol: float = 1e-12) -> WeylIdentityReport:
    """Exhaustively check unitarity, the four product/adjoint identities and ``tr(W_ia)``."""
    if H.order > 16:
        raise ValueError("identity check is limited to |H| <= 16")
    W = WeylMatrixSet.build(H)
    els = list(H.elements())
    zero = H.zero()
    adj = lambda m: m.conj().T  # noqa: E731
    res = dict(unitarity=0.0, adjoint=0.0, product=0.0, product_adjoint=0.0, adjoint_product=0.0, trace=0.0)

    def bump(key, val):
        res[key] = max(res[key], float(val))

    for i, a in itertools.product(els, els):
        w = W[i, a]
        bump("unitarity", unitarity_residual(w))
        bump("adjoint", np.abs(adj(w) - coupling(H, i, a) * W[index_neg(H, i), index_neg(H, a)]).max())
        expected_tr = 1.0 if (i, a) == (zero, zero) else 0.0
        bump("trace", abs(np.trace(w) / H.order - expected_tr))
        for j, b in itertools.product(els, els):
            v = W[j, b]
            rhs = coupling(H, i, b) * W[index_add(H, i, j), index_add(H, a, b)]
            bump("product", np.abs(w @ v - rhs).max())
            rhs = coupling(H, index_sub(H, j, i), b) * W[index_sub(H, i, j), index_sub(H, a, b)]
            bump("product_adjoint", np.abs(w @ adj(v) - rhs).max())
            rhs = coupling(H, i, index_sub(H, a, b)) * W[index_sub(H, j, i), index_sub(H, b, a)]
            bump("adjoint_product", np.abs(adj(w) @ v - rhs).max())
    return WeylIdentityReport(tol=tol, **res)


def _weyl_evaluator(W: WeylMatrixSet) -> Callable[[np.ndarray], np.ndarray]:
    mats = W.matrices
    adjs = np.swapaxes(mats.conj(), -1, -2)
    n = W.n

    def evaluate_batch(us: np.ndarray) -> np.ndarray:
        us = np.asarray(us, dtype=complex)
        left = np.einsum("xpq,bqr->bxpr", mats, us)
        # xi[b, x, y] = W_x U W_y^*, flattened row-major and scaled to unit norm
        xi = np.einsum("bxpr,yrs->bxyps", left, adjs).reshape(len(us), n * n, n * n, n * n) / np.sqrt(n)
        return np.einsum("bxyk,bxyl->bxykl", xi, xi.conj())

    return evaluate_batch


def weyl_model(
    H: FiniteAbelianGroup | str,
    E: str | Sequence = "projective",
    samples: int | None = None,
    seed: int | None = None,
    tol: float = 1e-8,
) -> ModelSpec:
    """The model ``w_{ia,jb} -> [U -> Proj(W_ia U W_jb^*)]`` over ``U in E``.

    ``E`` is ``"projective"`` (the Weyl group modulo phases, exact),
    ``"haar"`` (Haar measure on ``U_n``, Monte Carlo with ``samples`` and
    ``seed``), or an explicit list of unitaries containing every Weyl matrix
    up to phase, integrated uniformly.
    """
    if isinstance(H, str):
        H = FiniteAbelianGroup.parse(H)
    W = WeylMatrixSet.build(H)
    n = H.order
    N = n * n
    if isinstance(E, str) and E.lower() == "projective":
        reps = projective_closure(list(W.matrices), tol=tol)
        backend = ExactBackend.uniform(np.array(reps))
        e_label = "projective"
    elif isinstance(E, str) and E.lower() in ("haar", "u", f"u{n}"):
        if samples is None or seed is None:
            raise ValueError("Haar sampling needs both samples and seed")

        def draw(rng, count, n=n):
            return haar_unitaries(n, count, rng)

        backend = MonteCarloBackend(f"haar_U{n}", int(samples), int(seed), draw)
        e_label = "haar"
    elif isinstance(E, str):
        raise ValueError(f"unknown E choice {E!r}; use 'projective', 'haar' or a list of unitaries")
    else:
        elems = np.array([np.asarray(e, dtype=complex) for e in E])
        if elems.ndim != 3 or elems.shape[1:] != (n, n):
            raise ValueError(f"E must be a list of {n}x{n} matrices")
        for e in elems:
            if unitarity_residual(e) > tol:
                raise ValueError("E contains a non-unitary matrix")
        for x, w in enumerate(W.matrices):
            if not any(phase_equal(w, e, tol) for e in elems):
                raise ValueError(f"E does not contain Weyl matrix #{x} up to phase (need W inside E)")
        backend = ExactBackend.uniform(elems)
        e_label = "list"
    return ModelSpec(
        name=f"weyl[{H}]",
        N=N,
        K=N,
        self_adjoint=True,
        kind="magic",
        backend=backend,
        evaluate_batch=_weyl_evaluator(W),
        params={"H": H, "E": e_label, "weyl": W},
    )


# ---------------------------------------------------------------------------
# classical and Latin square models


def classical_permutation_model(N: int) -> ModelSpec:
    """``w_ij -> chi(sigma(j) = i)`` on ``S_N`` with the uniform measure, ``K = 1``."""
    if not 1 <= N <= 8:
        raise ValueError("classical permutation model supports 1 <= N <= 8")
    perms = np.array(list(itertools.permutations(range(N))), dtype=np.int64)
    rows = np.arange(N)

    def evaluate_batch(sigmas):
        sigmas = np.asarray(sigmas)
        # u[b, i, j] = 1 when sigma(j) = i
        u = (sigmas[:, None, :] == rows[None, :, None]).astype(complex)
        return u[..., None, None]

    return ModelSpec(f"classical[S{N}]", N, 1, True, "magic", ExactBackend.uniform(perms), evaluate_batch,
                     params={"N": N})


def latin_fiber_model(N: int, basis: Sequence | None = None) -> ModelSpec:
    """Flat model ``u_ij = Proj(x_{L_ij})`` with a fixed orthonormal frame and ``L`` uniform
    over half-normalized Latin squares."""
    squares = latin_enumerate(N, "half")
    frame = np.eye(N, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    arrays = np.array([L.array() for L in squares])
    # validate the frame once through the reference constructor
    latin_flat_model(frame, squares[0])
    projs = np.einsum("ka,kb->kab", frame, frame.conj())

    def evaluate_batch(Ls):
        return projs[np.asarray(Ls) - 1]

    return ModelSpec(f"latin_fiber[{N}]", N, N, True, "magic", ExactBackend.uniform(arrays), evaluate_batch,
                     params={"N": N, "frame": frame})


# ---------------------------------------------------------------------------
# half-classical and group dual models


def half_classical_model(H: Sequence, tol: float = 1e-9) -> ModelSpec:
    """``u_ij = [[0, v_ij], [conj(v_ij), 0]]`` with ``v`` uniform on a finite self-conjugate group."""
    elems = np.array([np.asarray(v, dtype=complex) for v in H])
    if elems.ndim != 3 or elems.shape[1] != elems.shape[2]:
        raise ValueError("H must be a list of square matrices")
    for v in elems:
        if unitarity_residual(v) > tol:
            raise ValueError("H contains a non-unitary matrix")
    for a in elems:
        for b in elems:
            if find_matrix(elems, a @ b, tol) < 0:
                raise ValueError("H is not closed under matrix multiplication")
    for a in elems:
        if find_matrix(elems, a.conj(), tol) < 0:
            raise ValueError("H is not closed under entrywise complex conjugation")
    N = elems.shape[1]

    def evaluate_batch(vs):
        vs = np.asarray(vs, dtype=complex)
        u = np.zeros(vs.shape + (2, 2), dtype=complex)
        u[..., 0, 1] = vs
        u[..., 1, 0] = vs.conj()
        return u

    return ModelSpec(f"half_classical[{len(elems)}]", N, 2, True, "biunitary", ExactBackend.uniform(elems),
                     evaluate_batch, params={"H": elems})


def dihedral_example() -> list[np.ndarray]:
    """The 8-element self-conjugate group generated by ``diag(i, -i)`` and the flip."""
    return group_closure([np.diag([1j, -1j]), np.array([[0, 1], [1, 0]], dtype=complex)])


def _characters(Lam: FiniteAbelianGroup, characters) -> np.ndarray:
    if characters is None:
        return Lam.element_table.copy()
    return np.array([Lam.index(c) for c in characters], dtype=np.int64).reshape(-1, Lam.rank)


def _character_values(Lam: FiniteAbelianGroup, gens: np.ndarray, chis: np.ndarray) -> np.ndarray:
    """``vals[b, i] = chi_b(h_i) = <h_i, chi_b>``."""
    orders = np.array(Lam.cyclic_orders, dtype=np.int64)
    if Lam.rank == 0:
        return np.ones((len(chis), len(gens)), dtype=complex)
    phase = ((gens[None, :, :] * chis[:, None, :]) % orders / orders).sum(axis=-1)
    return np.exp(2j * np.pi * phase)


def abelian_dual_model(Lam: FiniteAbelianGroup | str, generators: Sequence, characters: Sequence | None = None) -> ModelSpec:
    """``g_i -> [chi -> chi(h_i)]`` with ``K = 1``, uniform over ``characters`` (default: all)."""
    if isinstance(Lam, str):
        Lam = FiniteAbelianGroup.parse(Lam)
    gens = np.array([Lam.index(h) for h in generators], dtype=np.int64).reshape(-1, Lam.rank)
    if len(gens) == 0:
        raise ValueError("need at least one generator")
    chis = _characters(Lam, characters)
    N = len(gens)

    def evaluate_batch(cs):
        vals = _character_values(Lam, gens, np.asarray(cs).reshape(-1, Lam.rank))
        u = np.zeros((len(vals), N, N, 1, 1), dtype=complex)
        u[:, np.arange(N), np.arange(N), 0, 0] = vals
        return u

    return ModelSpec(f"abelian_dual[{Lam}]", N, 1, False, "biunitary", ExactBackend.uniform(chis),
                     evaluate_batch, params={"Lambda": Lam, "generators": gens}, group_dual=True)


def dual_reflection_model(Lam: FiniteAbelianGroup | str, generators: Sequence) -> ModelSpec:
    """``g_i -> [chi -> [[0, chi(h_i)], [conj chi(h_i), 0]]]``, uniform over the characters of ``Lam``."""
    if isinstance(Lam, str):
        Lam = FiniteAbelianGroup.parse(Lam)
    gens = np.array([Lam.index(h) for h in generators], dtype=np.int64).reshape(-1, Lam.rank)
    if len(gens) == 0:
        raise ValueError("need at least one generator")
    chis = _characters(Lam, None)
    N = len(gens)

    def evaluate_batch(cs):
        vals = _character_values(Lam, gens, np.asarray(cs).reshape(-1, Lam.rank))
        u = np.zeros((len(vals), N, N, 2, 2), dtype=complex)
        idx = np.arange(N)
        u[:, idx, idx, 0, 1] = vals
        u[:, idx, idx, 1, 0] = vals.conj()
        return u

    return ModelSpec(f"dual_reflection[{Lam}]", N, 2, False, "biunitary", ExactBackend.uniform(chis),
                     evaluate_batch, params={"Lambda": Lam, "generators": gens}, group_dual=True)


def check_cayley_table(table) -> tuple[np.ndarray, int]:
    """Validate a group multiplication table ``table[g, h] = gh``; returns it and the identity."""
    t = np.asarray(table, dtype=np.int64)
    n = t.shape[0]
    if t.ndim != 2 or t.shape != (n, n) or n == 0:
        raise ValueError("Cayley table must be a nonempty square array")
    if t.min() < 0 or t.max() >= n:
        raise ValueError("Cayley table entries out of range")
    ids = [e for e in range(n) if np.array_equal(t[e], np.arange(n)) and np.array_equal(t[:, e], np.arange(n))]
    if not ids:
        raise ValueError("Cayley table has no identity element")
    e = ids[0]
    if not all(np.any(t[g] == e) and np.any(t[:, g] == e) for g in range(n)):
        raise ValueError("Cayley table has an element without inverse")
    # associativity: t[t[g, h], k] == t[g, t[h, k]]
    if not np.array_equal(t[t[:, :, None], np.arange(n)[None, None, :]], t[np.arange(n)[:, None, None], t[None, :, :]]):
        raise ValueError("Cayley table is not associative")
    return t, e


def permutation_group_table(N: int) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Cayley table of ``S_N`` (composition ``(gh)(x) = g(h(x))``) with elements in lex order."""
    perms = list(itertools.permutations(range(N)))
    pos = {p: k for k, p in enumerate(perms)}
    table = np.array([[pos[tuple(g[h[x]] for x in range(N))] for h in perms] for g in perms], dtype=np.int64)
    return table, perms


def cyclic_group_table(n: int) -> np.ndarray:
    return (np.arange(n)[:, None] + np.arange(n)[None, :]) % n


def regular_representation_model(table) -> ModelSpec:
    """Left regular representation ``g -> [h -> gh]`` of a finite group, single point, ``K = |G|``."""
    t, e = check_cayley_table(table)
    n = len(t)
    lam = np.zeros((n, n, n), dtype=complex)
    for g in range(n):
        lam[g, t[g], np.arange(n)] = 1.0
    u = np.zeros((n, n, n, n), dtype=complex)
    u[np.arange(n), np.arange(n)] = lam

    def evaluate_batch(xs):
        return np.broadcast_to(u, (len(xs),) + u.shape).copy()

    return ModelSpec(f"regular[{n}]", n, n, False, "biunitary", ExactBackend.uniform(np.zeros(1)),
                     evaluate_batch, params={"table": t, "identity": e}, group_dual=True)


# ---------------------------------------------------------------------------
# model-spec files

MODEL_TYPES = ("weyl", "classical", "latin", "half_classical", "dual_reflection", "abelian_dual", "regular")


def _parse_int_list(text: str) -> list:
    text = text.strip()
    if text.startswith("["):
        return json.loads(text)
    return [int(x) for x in text.replace(",", " ").split()]


def _parse_matrices(text: str) -> list[np.ndarray]:
    data = np.asarray(json.loads(text), dtype=float)
    if data.ndim != 4 or data.shape[-1] != 2:
        raise ValueError("matrices must be a JSON list of matrices of [re, im] pairs")
    return list(data[..., 0] + 1j * data[..., 1])


def parse_model_config(text: str) -> dict:
    """Parse a key = value model file; section names are informational only.

    Recognised keys: ``type``, ``group``, ``E``, ``N``, ``generators``,
    ``characters``, ``cayley``, ``matrices``, ``samples`` (alias ``M``),
    ``seed``, ``p_max``, ``tol``, ``cesaro_k``.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text if text.lstrip().startswith("[") else "[model]\n" + text)
    except configparser.Error as exc:
        raise ValueError(f"cannot parse model file: {exc}") from exc
    cfg: dict[str, str] = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            cfg[key] = value.strip()
    if "m" in cfg and "samples" not in cfg:
        cfg["samples"] = cfg.pop("m")
    if "type" not in cfg:
        raise ValueError("model file needs a 'type' key")
    if cfg["type"].lower() not in MODEL_TYPES:
        raise ValueError(f"unknown model type {cfg['type']!r}; expected one of {', '.join(MODEL_TYPES)}")
    cfg["type"] = cfg["type"].lower()
    return cfg


def build_model(cfg: dict) -> tuple[ModelSpec, dict]:
    """Build a model from a parsed config; returns it with the resolved echo."""
    kind = cfg["type"]
    echo: dict[str, Any] = {"type": kind}
    try:
        if kind == "weyl":
            group = cfg.get("group", "Z2")
            E = cfg.get("e", "projective").lower()
            echo.update(group=group, E=E)
            samples = seed = None
            if E == "haar":
                if "seed" not in cfg:
                    raise ValueError("a seed is required for Monte Carlo backends")
                samples, seed = int(float(cfg.get("samples", 200000))), int(cfg["seed"])
                echo.update(samples=samples, seed=seed)
            model = weyl_model(group, E, samples=samples, seed=seed)
        elif kind == "classical":
            N = int(cfg.get("n", 4))
            echo["N"] = N
            model = classical_permutation_model(N)
        elif kind == "latin":
            N = int(cfg.get("n", 4))
            echo["N"] = N
            model = latin_fiber_model(N)
        elif kind == "half_classical":
            if "matrices" in cfg:
                mats = _parse_matrices(cfg["matrices"])
                echo["matrices"] = len(mats)
                model = half_classical_model(mats)
            else:
                preset = cfg.get("group", "dihedral8")
                if preset.lower() != "dihedral8":
                    raise ValueError("half_classical needs 'matrices' or group = dihedral8")
                echo["group"] = "dihedral8"
                model = half_classical_model(dihedral_example())
        elif kind in ("dual_reflection", "abelian_dual"):
            group = cfg.get("group", "Z4")
            gens = _parse_int_list(cfg.get("generators", "1"))
            echo.update(group=group, generators=gens)
            if kind == "dual_reflection":
                model = dual_reflection_model(group, gens)
            else:
                chars = _parse_int_list(cfg["characters"]) if "characters" in cfg else None
                echo["characters"] = chars
                model = abelian_dual_model(group, gens, chars)
        else:
            if "cayley" in cfg:
                table = json.loads(cfg["cayley"])
                echo["cayley"] = table
            else:
                group = cfg.get("group", "S3")
                echo["group"] = group
                g = group.strip().upper()
                if g.startswith("S"):
                    table, _ = permutation_group_table(int(g[1:]))
                elif g.startswith("Z") and "X" not in g:
                    table = cyclic_group_table(int(g[1:]))
                else:
                    raise ValueError(f"unsupported group {group!r} for the regular model; give a cayley table")
            model = regular_representation_model(table)
    except (KeyError, json.JSONDecodeError) as exc:
        raise ValueError(f"bad model file: {exc}") from exc
    return model, echo


def load_model_spec(path) -> tuple[ModelSpec, dict, dict]:
    """Read a model file; returns ``(model, echo, raw_config)``."""
    with open(path, encoding="utf-8") as fh:
        cfg = parse_model_config(fh.read())
    model, echo = build_model(cfg)
    return model, echo, cfg


def iter_exact_chunks(backend: ExactBackend, size: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    for start in range(0, len(backend.points), size):
        yield backend.points[start:start + size], backend.weights[start:start + size]
