"""Finite windows of the group: spheres, divisors and factorisations.

Everything here is exact and combinatorial. Divisors are enumerated as order
ideals of the dependency poset on the syllables of a normal form: syllable
``i`` must precede ``j`` whenever ``i < j`` and their vertices are equal or
non-adjacent. The left divisors of length ``k`` are exactly the ideals of size
``k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable

from .graph import PresentationGraph
from .normal_form import NormalForm, identity, invert, multiply, _canonical


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class BallSpec:
    """A finite window: syllable length at most ``lambda_max`` and, when the
    graph has an infinite vertex group, weighted length at most ``ell_max``."""

    lambda_max: int
    ell_max: int | None = None

    def __post_init__(self):
        if not isinstance(self.lambda_max, int) or self.lambda_max < 0:
            raise WindowError(f"lambda_max must be a natural number, got {self.lambda_max!r}")
        if self.ell_max is not None and (not isinstance(self.ell_max, int) or self.ell_max < 0):
            raise WindowError(f"ell_max must be a natural number, got {self.ell_max!r}")

    def validate_for(self, graph: PresentationGraph) -> None:
        if not graph.is_finite_type and self.ell_max is None:
            raise WindowError("ell_max is required when a vertex group is infinite")

    def ell_cap(self, graph: PresentationGraph) -> int | None:
        return None if graph.is_finite_type else self.ell_max


class Ball:
    """Breadth-first enumeration of a window, sphere by sphere.

    Spheres are built by right-multiplying sphere ``k-1`` by every allowed
    syllable and keeping products whose syllable length grew to ``k``.
    """

    def __init__(self, graph: PresentationGraph, spec: BallSpec):
        spec.validate_for(graph)
        self.graph = graph
        self.spec = spec
        self.cap = spec.ell_cap(graph)
        self.syllable_forms = [
            NormalForm(graph, ((v, y),))
            for v, grp in enumerate(graph.groups)
            for y in grp.nontrivial_up_to_length(self.cap)
        ]
        self._spheres = [frozenset([identity(graph)])]

    def sphere(self, k: int) -> frozenset:
        if k < 0:
            raise WindowError(f"sphere index must be >= 0, got {k}")
        if k > self.spec.lambda_max:
            raise WindowError(
                f"sphere {k} lies outside the window (lambda_max={self.spec.lambda_max})"
            )
        while len(self._spheres) <= k:
            j = len(self._spheres)
            nxt = set()
            for g in self._spheres[-1]:
                for s in self.syllable_forms:
                    h = multiply(g, s)
                    if h.lam == j and (self.cap is None or h.ell <= self.cap):
                        nxt.add(h)
            self._spheres.append(frozenset(nxt))
        return self._spheres[k]

    def sorted_sphere(self, k: int) -> list:
        return sorted(self.sphere(k))

    def elements(self) -> list:
        return [g for k in range(self.spec.lambda_max + 1) for g in sorted(self.sphere(k))]

    def ell_level(self, k: int) -> list:
        """Elements with weighted length exactly ``k``; complete only if ``k <= lambda_max``."""
        if k > self.spec.lambda_max or (self.cap is not None and k > self.cap):
            raise WindowError(f"ell-level {k} is not fully enumerated by this window")
        return sorted(g for j in range(k + 1) for g in self.sphere(j) if g.ell == k)

    def level(self, k: int, mode: str = "lambda") -> list:
        if mode == "lambda":
            return self.sorted_sphere(k)
        if mode == "ell":
            return self.ell_level(k)
        raise WindowError(f"unknown level mode {mode!r}")

    def __contains__(self, g: NormalForm) -> bool:
        return (g.graph is self.graph and g.lam <= self.spec.lambda_max
                and (self.cap is None or g.ell <= self.cap))


@lru_cache(maxsize=64)
def ball(graph: PresentationGraph, spec: BallSpec) -> Ball:
    return Ball(graph, spec)


def sphere(graph: PresentationGraph, k: int, spec: BallSpec) -> frozenset:
    return ball(graph, spec).sphere(k)


# -- divisors ---------------------------------------------------------------

def _predecessor_masks(g: NormalForm) -> list:
    comm = g.graph.commute
    sy = g.syllables
    masks = []
    for j, (v, _) in enumerate(sy):
        m = 0
        for i in range(j):
            if not comm[sy[i][0]][v]:
                m |= 1 << i
        masks.append(m)
    return masks


@lru_cache(maxsize=1 << 15)
def ideals(g: NormalForm, k: int) -> tuple:
    """Bitmasks of the order ideals of size ``k`` of the syllable poset of ``g``."""
    n = g.lam
    if not 0 <= k <= n:
        raise WindowError(f"divisor length {k} not in [0, {n}]")
    pred = _predecessor_masks(g)
    level = {0}
    for _ in range(k):
        nxt = set()
        for s in level:
            for j in range(n):
                bit = 1 << j
                if not s & bit and pred[j] & s == pred[j]:
                    nxt.add(s | bit)
        level = nxt
    return tuple(sorted(level))


def _sub(g: NormalForm, mask: int) -> NormalForm:
    word = [syl for i, syl in enumerate(g.syllables) if mask >> i & 1]
    return NormalForm(g.graph, _canonical(g.graph, word))


def left_divisors(g: NormalForm, k: int) -> list:
    """All left divisors of ``g`` of syllable length ``k``."""
    return sorted(_sub(g, s) for s in ideals(g, k))


def right_divisors(g: NormalForm, k: int) -> list:
    full = (1 << g.lam) - 1
    return sorted(_sub(g, full ^ s) for s in ideals(g, g.lam - k))


def factorisations(g: NormalForm, k: int, l: int) -> list:
    """The pairs ``(g1, g2)`` with ``g = g1 g2``, ``lambda(g1) = k``, ``lambda(g2) = l``."""
    if g.lam != k + l:
        raise WindowError(f"need lambda(g) = k + l, got {g.lam} != {k} + {l}")
    full = (1 << g.lam) - 1
    return sorted((_sub(g, s), _sub(g, full ^ s)) for s in ideals(g, k))


@dataclass(frozen=True)
class Factorisation:
    g1: NormalForm
    s: NormalForm
    g2: NormalForm
    J: frozenset


def factorisations_clique(g: NormalForm, k: int, l: int, J: Iterable[int]) -> list:
    """The triples ``(g1, s, g2)`` with ``g = g1 s g2``, ``s`` in ``G_J`` and
    syllable lengths ``k``, ``|J|``, ``l``."""
    J = frozenset(J)
    graph = g.graph
    if not graph.is_clique(J):
        raise WindowError(f"{sorted(J)} is not a clique")
    if g.lam != k + l + len(J):
        raise WindowError(
            f"need lambda(g) = k + l + |J|, got {g.lam} != {k} + {l} + {len(J)}"
        )
    full = (1 << g.lam) - 1
    sy = g.syllables
    out = set()
    outer = set(ideals(g, k + len(J)))
    for s1 in ideals(g, k):
        for s12 in outer:
            if s12 & s1 != s1:
                continue
            mid = s12 ^ s1
            verts = [sy[i][0] for i in range(g.lam) if mid >> i & 1]
            if frozenset(verts) == J:
                out.add((_sub(g, s1), _sub(g, mid), _sub(g, full ^ s12)))
    return [Factorisation(a, b, c, J) for a, b, c in sorted(out, key=lambda t: (t[0], t[1], t[2]))]


def ff_empirical(graph: PresentationGraph, k: int, l: int, J: Iterable[int],
                 spec: BallSpec) -> int:
    """Largest ``|Factors_{k,l}(J, g)|`` over the windowed sphere of radius ``k + l + |J|``.

    A lower bound for the supremum over the whole group.
    """
    J = frozenset(J)
    n = k + l + len(J)
    if n > spec.lambda_max:
        raise WindowError(f"k + l + |J| = {n} exceeds lambda_max = {spec.lambda_max}")
    return max((len(factorisations_clique(g, k, l, J)) for g in sphere(graph, n, spec)),
               default=0)


def p1_bound(graph: PresentationGraph, k: int, J: Iterable[int]) -> int:
    """The factorisation-count bound ``(k+1)^|V| * (|J|+1)^|J|``."""
    j = len(frozenset(J))
    return (k + 1) ** graph.n_vertices * (j + 1) ** j


# -- unconstrained syllables -------------------------------------------------

def unconstrained_syllables(graph: PresentationGraph, w, k: int) -> frozenset:
    """Positions ``i < k`` (0-based) of the reduced expression ``w`` whose vertex
    commutes with the vertex of every later position before ``k``.

    Position ``k - 1`` is always included when ``k >= 1``.
    """
    sy = w.syllables if isinstance(w, NormalForm) else tuple(w)
    if not 0 <= k <= len(sy):
        raise WindowError(f"k = {k} not in [0, {len(sy)}]")
    comm = graph.commute
    out = set()
    for i in range(k):
        vi = sy[i][0]
        if all(comm[vi][sy[j][0]] for j in range(i + 1, k)):
            out.add(i)
    return frozenset(out)


def unconstrained_signature(g: NormalForm, mask: int) -> frozenset:
    """Unconstrained syllables of the left divisor given by ideal ``mask``,
    as positions in the canonical word of ``g``."""
    inside = [i for i in range(g.lam) if mask >> i & 1]
    outside = [i for i in range(g.lam) if not mask >> i & 1]
    order = inside + outside
    w = [g.syllables[i] for i in order]
    return frozenset(order[i] for i in unconstrained_syllables(g.graph, w, len(inside)))


# -- the cancellation decomposition of a product -----------------------------

@dataclass(frozen=True)
class P2Decomposition:
    g1: NormalForm
    s1: NormalForm
    w: NormalForm
    s2: NormalForm
    g2: NormalForm
    J: frozenset
    q: int


def _p2_candidates(h1: NormalForm, h2: NormalForm):
    q = h1.lam + h2.lam - multiply(h1, h2).lam
    # w: longest right divisor of h1 whose inverse left-divides h2
    w = None
    for t in range(min(h1.lam, h2.lam), -1, -1):
        heads = set(left_divisors(h2, t))
        cands = [c for c in right_divisors(h1, t) if invert(c) in heads]
        if cands:
            w = min(cands)
            break
    h1p = multiply(h1, invert(w))
    h2p = multiply(w, h2)
    t = q - 2 * w.lam
    if t < 0:
        raise ArithmeticError(f"cancellation exceeds q for {h1} * {h2}")
    out = []
    heads = left_divisors(h2p, t)
    for s1 in right_divisors(h1p, t):
        J = s1.support
        if len(J) != t or not h1.graph.is_clique(J):
            continue
        for s2 in heads:
            if s2.support == J and multiply(s1, s2).lam == t:
                g1 = multiply(h1p, invert(s1))
                g2 = multiply(invert(s2), h2p)
                out.append(P2Decomposition(g1, s1, w, s2, g2, J, q))
    out.sort(key=lambda d: (sorted(d.J), d.s1, d.s2))
    return out


def p2_witnesses(h1: NormalForm, h2: NormalForm) -> list:
    """Every decomposition with the longest cancelling part ``w``."""
    return _p2_candidates(h1, h2)


def p2_decompose(h1: NormalForm, h2: NormalForm) -> P2Decomposition:
    """Split ``h1 = g1 s1 w`` and ``h2 = w^-1 s2 g2`` with ``s1, s2`` in a clique
    subgroup ``G_J`` and ``q = |J| + 2 lambda(w)``.

    Ties are broken by the least ``w``, then least ``J``, then least ``s1``.
    """
    if h1.graph is not h2.graph:
        raise WindowError("operands live over different graphs")
    cands = _p2_candidates(h1, h2)
    if not cands:
        raise ArithmeticError(f"no clique decomposition found for {h1} * {h2}")
    return cands[0]


def check_p2(h1: NormalForm, h2: NormalForm, d: P2Decomposition) -> list:
    """Names of the decomposition invariants that fail (empty when all hold)."""
    bad = []
    J = d.J
    if multiply(multiply(d.g1, d.s1), d.w) != h1:
        bad.append("h1 = g1 s1 w")
    if multiply(multiply(invert(d.w), d.s2), d.g2) != h2:
        bad.append("h2 = w^-1 s2 g2")
    s12 = multiply(d.s1, d.s2)
    for name, s in (("s1", d.s1), ("s2", d.s2), ("s1 s2", s12)):
        if not s.support <= J or s.lam != len(J):
            bad.append(f"lambda({name}) = |J| with support in J")
    if not h1.graph.is_clique(J):
        bad.append("J is a clique")
    if d.q != h1.lam + h2.lam - multiply(h1, h2).lam or d.q != len(J) + 2 * d.w.lam:
        bad.append("q = |J| + 2 lambda(w)")
    if multiply(multiply(d.g1, s12), d.g2) != multiply(h1, h2):
        bad.append("h1 h2 = g1 s1 s2 g2")
    return bad


def all_pairs(graph: PresentationGraph, spec: BallSpec, max_len: int) -> Iterable:
    b = ball(graph, spec)
    elems = [g for k in range(min(max_len, spec.lambda_max) + 1) for g in b.sorted_sphere(k)]
    return product(elems, repeat=2)


# -- window-wide verification ---------------------------------------------------

def verify_p1(graph: PresentationGraph, spec: BallSpec, k_max: int = 4, l_max: int = 4) -> dict:
    """Check the factorisation-count bound, the (k, l) symmetry of the windowed
    maxima, and injectivity of unconstrained-syllable signatures."""
    rows = []
    ok = True
    for J in graph.cliques():
        for k in range(k_max + 1):
            for l in range(l_max + 1):
                n = k + l + len(J)
                if n > spec.lambda_max:
                    continue
                counts = [len(factorisations_clique(g, k, l, J)) for g in sphere(graph, n, spec)]
                ff = max(counts, default=0)
                mirror = ff_empirical(graph, l, k, J, spec) if l <= k_max else ff
                bound = p1_bound(graph, k, J)
                row_ok = ff <= bound and ff == mirror
                ok &= row_ok
                rows.append({"J": sorted(J), "k": k, "l": l, "ff": ff, "ff_mirror": mirror,
                             "bound": bound, "elements": len(counts), "ok": row_ok})
    injective = True
    for g in ball(graph, spec).elements():
        for k in range(g.lam + 1):
            sigs = [unconstrained_signature(g, s) for s in ideals(g, k)]
            if len(set(sigs)) != len(sigs):
                injective = False
    return {"ok": ok and injective, "injective": injective, "rows": rows}


def verify_p2(graph: PresentationGraph, spec: BallSpec, max_len: int = 4) -> dict:
    """Decompose every pair of window elements of syllable length <= ``max_len``."""
    failures = []
    n = 0
    for h1, h2 in all_pairs(graph, spec, max_len):
        n += 1
        d = p2_decompose(h1, h2)
        bad = check_p2(h1, h2, d)
        if bad:
            failures.append({"h1": str(h1), "h2": str(h2), "failed": bad})
    return {"ok": not failures, "pairs": n, "failures": failures}
