"""Reduced expressions and canonical normal forms in a graph product.

An expression is a sequence of syllables ``(vertex, value)`` with ``value`` a
nontrivial element of that vertex's group. :func:`reduce` turns any
expression into the canonical reduced expression of the element it
represents: the reduced expression whose vertex-id sequence is
lexicographically least among all its commuting shuffles.
"""
from __future__ import annotations

import random
import re
from typing import Iterable, Sequence

from .graph import PresentationGraph

Syllable = tuple  # (vertex, value)


class NormalFormError(ValueError):
    pass


class NormalForm:
    """Canonical reduced syllable sequence of one group element.

    Equality and hashing use the syllable tuple plus the identity of the
    graph, so forms over different graphs never compare equal.
    """

    __slots__ = ("syllables", "graph", "_hash", "_ell")

    def __init__(self, graph: PresentationGraph, syllables: tuple):
        self.graph = graph
        self.syllables = syllables
        self._hash = hash(syllables)
        self._ell = None

    @property
    def lam(self) -> int:
        """Syllable length."""
        return len(self.syllables)

    @property
    def ell(self) -> int:
        """Weighted length: sum of the vertex lengths of the syllables."""
        if self._ell is None:
            groups = self.graph.groups
            self._ell = sum(groups[v].length(y) for v, y in self.syllables)
        return self._ell

    @property
    def support(self) -> frozenset:
        return frozenset(v for v, _ in self.syllables)

    def is_identity(self) -> bool:
        return not self.syllables

    def __mul__(self, other: NormalForm) -> NormalForm:
        return multiply(self, other)

    def __invert__(self) -> NormalForm:
        return invert(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NormalForm):
            return NotImplemented
        return self.graph is other.graph and self.syllables == other.syllables

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: NormalForm) -> bool:
        return self.syllables < other.syllables

    def __len__(self) -> int:
        return len(self.syllables)

    def __str__(self) -> str:
        return format_element(self)

    def __repr__(self) -> str:
        return f"NormalForm({format_element(self)!r})"


def identity(graph: PresentationGraph) -> NormalForm:
    return NormalForm(graph, ())


def _check_syllable(graph: PresentationGraph, syl) -> tuple:
    try:
        v, y = syl
    except (TypeError, ValueError):
        raise NormalFormError(f"syllable must be a (vertex, value) pair, got {syl!r}") from None
    graph.check_vertex(v)
    graph.groups[v].check_element(y)
    if y == 0:
        raise NormalFormError(f"syllable on vertex {v} has the identity as value")
    return (v, y)


def _push(graph: PresentationGraph, word: list, v: int, y: int) -> None:
    # word is reduced; append (v, y) and keep it reduced
    comm = graph.commute[v]
    i = len(word) - 1
    while i >= 0:
        u, x = word[i]
        if u == v:
            z = graph.groups[v].multiply(x, y)
            if z == 0:
                del word[i]
            else:
                word[i] = (v, z)
            return
        if not comm[u]:
            break
        i -= 1
    word.append((v, y))


def _canonical(graph: PresentationGraph, word: list) -> tuple:
    # lexicographically least linearisation of the dependency order
    nbrs = graph.neighbours
    remaining = word
    out = []
    while remaining:
        earlier = set()
        best = -1
        best_v = None
        for idx, (v, _) in enumerate(remaining):
            if (best_v is None or v < best_v) and earlier <= nbrs[v]:
                best, best_v = idx, v
            earlier.add(v)
            if best_v == 0:
                break
        out.append(remaining.pop(best))
    return tuple(out)


def reduce(graph: PresentationGraph, expression: Iterable, check: bool = True) -> NormalForm:
    """Canonical normal form of the element represented by ``expression``."""
    word: list = []
    for syl in expression:
        if check:
            syl = _check_syllable(graph, syl)
        _push(graph, word, syl[0], syl[1])
    return NormalForm(graph, _canonical(graph, word))


def multiply(g: NormalForm, h: NormalForm) -> NormalForm:
    if g.graph is not h.graph:
        raise NormalFormError("cannot multiply normal forms over different graphs")
    if not h.syllables:
        return g
    if not g.syllables:
        return h
    graph = g.graph
    word = list(g.syllables)
    for v, y in h.syllables:
        _push(graph, word, v, y)
    return NormalForm(graph, _canonical(graph, word))


def invert(g: NormalForm) -> NormalForm:
    groups = g.graph.groups
    word = [(v, groups[v].inverse(y)) for v, y in reversed(g.syllables)]
    return NormalForm(g.graph, _canonical(g.graph, word))


def syllable_length(g: NormalForm) -> int:
    return g.lam


def ell(g: NormalForm) -> int:
    return g.ell


def is_left_divisor(h: NormalForm, g: NormalForm) -> bool:
    """``h`` is a left divisor of ``g`` iff lambda(g) = lambda(h) + lambda(h^-1 g)."""
    return g.lam == h.lam + multiply(invert(h), g).lam


def is_right_divisor(h: NormalForm, g: NormalForm) -> bool:
    return g.lam == h.lam + multiply(g, invert(h)).lam


def is_reduced(graph: PresentationGraph, expression: Sequence) -> bool:
    """True iff no merge or deletion applies after commuting shuffles."""
    comm = graph.commute
    for j, (v, _) in enumerate(expression):
        for i in range(j - 1, -1, -1):
            u = expression[i][0]
            if u == v:
                return False
            if not comm[u][v]:
                break
    return True


# -- element literal syntax ------------------------------------------------

_SYLLABLE_RE = re.compile(r"^v(\d+):(-?\d+)$")


def parse_element(graph: PresentationGraph, text: str) -> NormalForm:
    """Parse ``"v0:1 v2:-3"`` style text; the empty string is the identity."""
    return reduce(graph, parse_expression(graph, text))


def parse_expression(graph: PresentationGraph, text: str) -> list:
    out = []
    for found in re.finditer(r"\S+", text):
        tok, col = found.group(), found.start() + 1
        m = _SYLLABLE_RE.match(tok)
        if not m:
            raise NormalFormError(f"bad syllable {tok!r} at column {col}; expected v<i>:<elt>")
        syl = (int(m.group(1)), int(m.group(2)))
        try:
            out.append(_check_syllable(graph, syl))
        except ValueError as exc:
            raise NormalFormError(f"bad syllable {tok!r} at column {col}: {exc}") from None
    return out


def format_element(g) -> str:
    sylls = g.syllables if isinstance(g, NormalForm) else g
    return " ".join(f"v{v}:{y}" for v, y in sylls)


# -- rewriting moves -------------------------------------------------------

def legal_moves(graph: PresentationGraph, expression: Sequence) -> list:
    """All expressions reachable by one shuffle, merge or deletion move."""
    expr = list(expression)
    out = []
    for i in range(len(expr) - 1):
        (u, x), (v, y) = expr[i], expr[i + 1]
        if graph.commute[u][v]:
            out.append(expr[:i] + [(v, y), (u, x)] + expr[i + 2:])
        elif u == v:
            z = graph.groups[v].multiply(x, y)
            mid = [] if z == 0 else [(v, z)]
            out.append(expr[:i] + mid + expr[i + 2:])
    return out


def random_moves(graph: PresentationGraph, expression: Sequence, n_moves: int,
                 rng: random.Random) -> list:
    """Apply up to ``n_moves`` randomly chosen legal moves."""
    expr = list(expression)
    for _ in range(n_moves):
        moves = legal_moves(graph, expr)
        if not moves:
            break
        expr = rng.choice(moves)
    return expr


def random_expression(graph: PresentationGraph, n_syllables: int, rng: random.Random,
                      value_cap: int = 3) -> list:
    """A random (generally unreduced) expression; integer values are drawn from ``[-cap, cap]``."""
    out = []
    for _ in range(n_syllables):
        v = rng.randrange(graph.n_vertices)
        grp = graph.groups[v]
        if grp.is_finite:
            y = rng.randrange(1, grp.order) if grp.order > 1 else None
        else:
            y = rng.choice([a for a in range(-value_cap, value_cap + 1) if a])
        if y is not None:
            out.append((v, y))
    return out
