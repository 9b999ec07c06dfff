"""Finite simplicial graphs carrying one vertex group per vertex."""
from __future__ import annotations

from functools import cached_property
from typing import Iterable, Sequence

from .vertex_group import VertexGroup


class GraphError(ValueError):
    pass


class PresentationGraph:
    """The graph Gamma = (V, E) of a graph product, with its vertex groups.

    Vertices are ``0..n-1``; their id order is the global order used for
    canonical normal forms. Instances are immutable and compare by identity,
    so normal forms over two separately built (even equal) graphs never mix.
    """

    def __init__(self, groups: Sequence[VertexGroup], edges: Iterable[Sequence[int]] = ()):
        self.groups = tuple(groups)
        n = len(self.groups)
        if n == 0:
            raise GraphError("graph needs at least one vertex")
        adj = [set() for _ in range(n)]
        seen = set()
        for e in edges:
            u, v = (int(x) for x in e)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) references a missing vertex")
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphError(f"duplicate edge {key}")
            seen.add(key)
            adj[u].add(v)
            adj[v].add(u)
        self.edges = tuple(sorted(seen))
        self.neighbours = tuple(frozenset(a) for a in adj)
        # commute[u][v] is True iff u, v are distinct adjacent vertices
        self.commute = tuple(
            tuple(v in adj[u] for v in range(n)) for u in range(n)
        )

    @property
    def n_vertices(self) -> int:
        return len(self.groups)

    @property
    def is_finite_type(self) -> bool:
        """True when every vertex group is finite."""
        return all(g.is_finite for g in self.groups)

    def check_vertex(self, v: int) -> None:
        if not (isinstance(v, int) and 0 <= v < self.n_vertices):
            raise GraphError(f"invalid vertex id {v!r}")

    def adjacent(self, u: int, v: int) -> bool:
        self.check_vertex(u)
        self.check_vertex(v)
        return self.commute[u][v]

    @cached_property
    def _cliques(self) -> tuple[frozenset, ...]:
        # expand cliques by adding larger-id neighbours only, so each set appears once
        out = [frozenset()]
        frontier = [(frozenset(), frozenset(range(self.n_vertices)))]
        while frontier:
            nxt = []
            for clique, cand in frontier:
                for v in sorted(cand):
                    bigger = clique | {v}
                    out.append(bigger)
                    nxt.append((bigger, frozenset(u for u in cand if u > v) & self.neighbours[v]))
            frontier = nxt
        out.sort(key=lambda c: (len(c), sorted(c)))
        return tuple(out)

    def cliques(self, size: int | None = None) -> list[frozenset]:
        """All cliques including the empty one, or only those of the given size."""
        if size is None:
            return list(self._cliques)
        return [c for c in self._cliques if len(c) == size]

    def is_clique(self, J: Iterable[int]) -> bool:
        J = list(J)
        for v in J:
            self.check_vertex(v)
        return len(set(J)) == len(J) and all(
            self.commute[u][v] for i, u in enumerate(J) for v in J[i + 1:]
        )

    def support_in_clique(self, g, J: Iterable[int]) -> bool:
        """True iff every syllable of the normal form ``g`` lives on a vertex of ``J``."""
        J = set(J)
        return all(v in J for v, _ in g.syllables)

    def describe(self) -> dict:
        return {
            "vertices": [g.describe() for g in self.groups],
            "edges": [list(e) for e in self.edges],
        }

    def __repr__(self) -> str:
        return f"PresentationGraph(n_vertices={self.n_vertices}, edges={list(self.edges)})"
