"""Finite abelian groups as products of cyclic groups, and their Fourier coupling.

A group ``Z_{n_1} x ... x Z_{n_k}`` is identified with its dual through the
fixed cyclic presentation, so elements and characters are both plain tuples of
integers, reduced componentwise.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

GroupIndex = tuple[int, ...]


@dataclass(frozen=True)
class FiniteAbelianGroup:
    cyclic_orders: tuple[int, ...] = ()
    _order: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        orders = tuple(int(n) for n in self.cyclic_orders)
        if any(n < 1 for n in orders):
            raise ValueError(f"cyclic orders must be >= 1, got {orders}")
        object.__setattr__(self, "cyclic_orders", orders)
        object.__setattr__(self, "_order", int(np.prod(orders, dtype=np.int64)) if orders else 1)

    @classmethod
    def parse(cls, literal: str) -> "FiniteAbelianGroup":
        """Parse ``"Z2"``, ``"z3"``, ``"Z2xZ2"``...; ``"1"`` or ``""`` is the trivial group."""
        text = literal.strip().lower().replace(" ", "")
        if text in ("", "1", "trivial"):
            return cls(())
        parts = text.split("x")
        orders = []
        for part in parts:
            m = re.fullmatch(r"z(\d+)", part)
            if m is None:
                raise ValueError(f"bad group literal {literal!r}; expected e.g. 'Z2xZ3'")
            orders.append(int(m.group(1)))
        return cls(tuple(orders))

    @property
    def order(self) -> int:
        return self._order

    @property
    def rank(self) -> int:
        return len(self.cyclic_orders)

    def __str__(self):
        return "x".join(f"Z{n}" for n in self.cyclic_orders) or "1"

    def index(self, x) -> GroupIndex:
        """Validate and reduce ``x`` (an int for cyclic groups, or a sequence)."""
        if isinstance(x, (int, np.integer)):
            x = (int(x),)
        comps = tuple(int(c) for c in x)
        if len(comps) != self.rank:
            raise ValueError(f"index {comps} has length {len(comps)}, group {self} has rank {self.rank}")
        return tuple(c % n for c, n in zip(comps, self.cyclic_orders))

    def zero(self) -> GroupIndex:
        return (0,) * self.rank

    def elements(self) -> Iterator[GroupIndex]:
        """All elements in mixed-radix order (first factor most significant)."""
        return itertools.product(*(range(n) for n in self.cyclic_orders))

    def flat(self, x) -> int:
        out = 0
        for c, n in zip(self.index(x), self.cyclic_orders):
            out = out * n + c
        return out

    def unflat(self, k: int) -> GroupIndex:
        if not 0 <= k < self.order:
            raise ValueError(f"flat index {k} out of range for group of order {self.order}")
        comps = []
        for n in reversed(self.cyclic_orders):
            k, c = divmod(k, n)
            comps.append(c)
        return tuple(reversed(comps))

    @cached_property
    def element_table(self) -> np.ndarray:
        """``(order, rank)`` integer array listing the elements in flat order."""
        if self.rank == 0:
            return np.zeros((1, 0), dtype=np.int64)
        return np.array(list(self.elements()), dtype=np.int64).reshape(self.order, self.rank)

    @cached_property
    def add_table(self) -> np.ndarray:
        """``add_table[x, y]`` is the flat index of ``x + y``."""
        return self._binary_table(lambda a, b: a + b)

    @cached_property
    def sub_table(self) -> np.ndarray:
        """``sub_table[x, y]`` is the flat index of ``x - y``."""
        return self._binary_table(lambda a, b: a - b)

    @cached_property
    def coupling_table(self) -> np.ndarray:
        """``coupling_table[i, b] = <i, b>`` over flat indices."""
        el = self.element_table
        orders = np.array(self.cyclic_orders, dtype=float)
        if self.rank == 0:
            return np.ones((1, 1), dtype=complex)
        phase = (el[:, None, :] * el[None, :, :] % np.array(self.cyclic_orders)) / orders
        return np.exp(2j * np.pi * phase.sum(axis=-1))

    def _binary_table(self, op) -> np.ndarray:
        el = self.element_table
        orders = np.array(self.cyclic_orders, dtype=np.int64)
        comb = op(el[:, None, :], el[None, :, :]) % orders if self.rank else el[:, None, :] + el[None, :, :]
        flat = np.zeros(comb.shape[:2], dtype=np.int64)
        for t, n in enumerate(self.cyclic_orders):
            flat = flat * n + comb[..., t]
        return flat


def coupling(H: FiniteAbelianGroup, i: Sequence[int] | int, b: Sequence[int] | int) -> complex:
    """Fourier coupling ``<i, b> = prod_t exp(2 pi i i_t b_t / n_t)``."""
    i, b = H.index(i), H.index(b)
    # reduce the product first so the phase argument stays in [0, 1)
    phase = sum(((x * y) % n) / n for x, y, n in zip(i, b, H.cyclic_orders))
    return complex(np.exp(2j * np.pi * (phase % 1.0)))


def index_add(H: FiniteAbelianGroup, i, j) -> GroupIndex:
    i, j = H.index(i), H.index(j)
    return tuple((x + y) % n for x, y, n in zip(i, j, H.cyclic_orders))


def index_neg(H: FiniteAbelianGroup, i) -> GroupIndex:
    return tuple((-x) % n for x, n in zip(H.index(i), H.cyclic_orders))


def index_sub(H: FiniteAbelianGroup, i, j) -> GroupIndex:
    return index_add(H, i, index_neg(H, j))
