"""Concrete vertex groups with a positive integer length function.

Three kinds are supported: a finite group given by its Cayley table, the
cyclic group Z/n, and the integers. Elements are plain ints; 0 is always the
identity.
"""
from __future__ import annotations

from itertools import product
from typing import Sequence


class VertexGroupError(ValueError):
    pass


class VertexGroup:
    """An immutable group acting as the coefficient group of one vertex.

    Use the constructors :meth:`cyclic`, :meth:`integers` and
    :meth:`from_table` rather than calling ``__init__`` directly.
    """

    __slots__ = ("kind", "order", "_table", "_inv", "_lengths")

    def __init__(self, kind, order=None, table=None, lengths=None):
        self.kind = kind
        self.order = order
        self._table = table
        self._inv = None
        self._lengths = lengths
        if table is not None:
            self._inv = tuple(row.index(0) for row in table)

    # -- constructors -----------------------------------------------------

    @classmethod
    def cyclic(cls, n: int, lengths: Sequence[int] | None = None) -> VertexGroup:
        if n < 1:
            raise VertexGroupError(f"cyclic group order must be >= 1, got {n}")
        g = cls("cyclic", order=n, lengths=None if lengths is None else tuple(lengths))
        if lengths is not None:
            g._check_length_table()
        return g

    @classmethod
    def integers(cls) -> VertexGroup:
        return cls("integers")

    @classmethod
    def from_table(
        cls, table: Sequence[Sequence[int]], lengths: Sequence[int] | None = None
    ) -> VertexGroup:
        """Build a finite group from its multiplication table.

        ``table[a][b]`` is the product ``a*b``. Group axioms are checked
        exhaustively; a bad table raises :class:`VertexGroupError`.
        """
        rows = tuple(tuple(int(x) for x in row) for row in table)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise VertexGroupError("Cayley table must be a non-empty square")
        if any(not 0 <= x < n for r in rows for x in r):
            raise VertexGroupError("Cayley table entries out of range")
        if rows[0] != tuple(range(n)) or any(r[0] != i for i, r in enumerate(rows)):
            raise VertexGroupError("element 0 must be the identity")
        for i, r in enumerate(rows):
            if 0 not in r:
                raise VertexGroupError(f"element {i} has no inverse")
        for a, b, c in product(range(n), repeat=3):
            if rows[rows[a][b]][c] != rows[a][rows[b][c]]:
                raise VertexGroupError(f"table is not associative at ({a}, {b}, {c})")
        g = cls("table", order=n, table=rows,
                lengths=None if lengths is None else tuple(int(x) for x in lengths))
        if lengths is not None:
            g._check_length_table()
        return g

    # -- group structure --------------------------------------------------

    @property
    def is_finite(self) -> bool:
        return self.kind != "integers"

    identity = 0

    def check_element(self, a: int) -> None:
        if self.kind == "integers":
            if not isinstance(a, int):
                raise VertexGroupError(f"integer element expected, got {a!r}")
        elif not (isinstance(a, int) and 0 <= a < self.order):
            raise VertexGroupError(
                f"element {a!r} out of range for group of order {self.order}"
            )

    def multiply(self, a: int, b: int) -> int:
        if self.kind == "integers":
            return a + b
        if self.kind == "cyclic":
            if not (0 <= a < self.order and 0 <= b < self.order):
                self.check_element(a)
                self.check_element(b)
            return (a + b) % self.order
        return self._table[a][b]

    def inverse(self, a: int) -> int:
        if self.kind == "integers":
            return -a
        if self.kind == "cyclic":
            return (-a) % self.order
        return self._inv[a]

    def length(self, a: int) -> int:
        if self._lengths is not None:
            return self._lengths[a]
        if self.kind == "integers":
            return abs(a)
        if self.kind == "cyclic":
            return min(a, self.order - a)
        return 0 if a == 0 else 1

    def elements(self) -> list[int]:
        if not self.is_finite:
            raise VertexGroupError("the integers cannot be enumerated without a length cap")
        return list(range(self.order))

    def enumerate_up_to_length(self, cap: int) -> list[int]:
        """Elements ``y`` with ``length(y) <= cap``, in a fixed order."""
        if cap < 0:
            raise VertexGroupError(f"length cap must be >= 0, got {cap}")
        if self.kind == "integers" and self._lengths is None:
            out = [0]
            for n in range(1, cap + 1):
                out += [n, -n]
            return out
        return [a for a in range(self.order) if self.length(a) <= cap]

    def nontrivial_up_to_length(self, cap: int | None) -> list[int]:
        """Nontrivial elements, all of them for finite groups when ``cap`` is None."""
        if cap is None:
            return [a for a in self.elements() if a != 0]
        return [a for a in self.enumerate_up_to_length(cap) if a != 0]

    # -- validation -------------------------------------------------------

    def _check_length_table(self) -> None:
        lengths = self._lengths
        if len(lengths) != self.order:
            raise VertexGroupError("length table must have one entry per element")
        self.check_length_axioms(range(self.order))

    def check_length_axioms(self, sample) -> None:
        """Raise unless the length function is positive, symmetric and subadditive on ``sample``."""
        sample = list(sample)
        for a in sample:
            la = self.length(a)
            if a == 0 and la != 0:
                raise VertexGroupError("identity must have length 0")
            if a != 0 and la < 1:
                raise VertexGroupError(f"nontrivial element {a} must have length >= 1")
            if self.length(self.inverse(a)) != la:
                raise VertexGroupError(f"length is not symmetric at {a}")
        for a in sample:
            for b in sample:
                if self.length(self.multiply(a, b)) > self.length(a) + self.length(b):
                    raise VertexGroupError(f"length is not subadditive at ({a}, {b})")

    def describe(self) -> dict:
        if self.kind == "integers":
            d = {"kind": "integers"}
        elif self.kind == "cyclic":
            d = {"kind": "cyclic", "order": self.order}
        else:
            d = {"kind": "table", "table": [list(r) for r in self._table]}
        if self._lengths is not None:
            d["lengths"] = list(self._lengths)
        return d

    def __repr__(self) -> str:
        if self.kind == "integers":
            return "VertexGroup.integers()"
        if self.kind == "cyclic":
            return f"VertexGroup.cyclic({self.order})"
        return f"VertexGroup.from_table(<order {self.order}>)"
