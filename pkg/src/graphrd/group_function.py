"""Finitely supported functions on a graph product, i.e. elements of CG.

:class:`GroupFunction` is the exact, dictionary-backed representation used
for reference computations. :class:`ProductTable` precomputes the products of
two fixed element lists so many random convolutions can be evaluated with
numpy.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .enumeration import BallSpec, ball, ideals, _sub
from .graph import PresentationGraph
from .normal_form import NormalForm, identity, invert, multiply, parse_element, format_element


class GroupFunctionError(ValueError):
    pass


def _fsum_complex(terms) -> complex:
    terms = list(terms)
    return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))


class GroupFunction:
    """A complex function with finite support on the elements of a graph product.

    Zero values are never stored. Instances are treated as immutable.
    """

    __slots__ = ("graph", "values")

    def __init__(self, graph: PresentationGraph, values: Mapping | None = None):
        self.graph = graph
        vals = {}
        for g, c in (values or {}).items():
            if g.graph is not graph:
                raise GroupFunctionError("support element belongs to another graph")
            c = complex(c)
            if c != 0:
                vals[g] = c
        self.values = vals

    @classmethod
    def delta(cls, g: NormalForm, coeff: complex = 1.0) -> GroupFunction:
        return cls(g.graph, {g: coeff})

    @classmethod
    def random(cls, graph: PresentationGraph, elements: Sequence[NormalForm],
               rng: np.random.Generator, real: bool = False) -> GroupFunction:
        """Standard Gaussian values on ``elements``."""
        n = len(elements)
        re = rng.standard_normal(n)
        im = np.zeros(n) if real else rng.standard_normal(n)
        return cls(graph, {g: complex(a, b) for g, a, b in zip(elements, re, im)})

    def __getitem__(self, g: NormalForm) -> complex:
        return self.values.get(g, 0j)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def items(self):
        return self.values.items()

    @property
    def support(self) -> frozenset:
        return frozenset(self.values)

    def __add__(self, other: GroupFunction) -> GroupFunction:
        self._same_graph(other)
        out = dict(self.values)
        for g, c in other.values.items():
            out[g] = out.get(g, 0j) + c
        return GroupFunction(self.graph, out)

    def __sub__(self, other: GroupFunction) -> GroupFunction:
        return self + other.scale(-1.0)

    def scale(self, c: complex) -> GroupFunction:
        return GroupFunction(self.graph, {g: c * v for g, v in self.values.items()})

    def __mul__(self, other: GroupFunction) -> GroupFunction:
        return convolve(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupFunction):
            return NotImplemented
        return self.graph is other.graph and self.values == other.values

    def _same_graph(self, other: GroupFunction) -> None:
        if self.graph is not other.graph:
            raise GroupFunctionError("group functions live over different graphs")

    def map_support(self, keep: Callable[[NormalForm], bool]) -> GroupFunction:
        return GroupFunction(self.graph, {g: c for g, c in self.values.items() if keep(g)})

    def to_records(self) -> list:
        return [{"element": format_element(g), "re": c.real, "im": c.imag}
                for g, c in sorted(self.values.items())]

    def __repr__(self) -> str:
        return f"GroupFunction(<{len(self.values)} support points>)"


# -- restrictions and norms --------------------------------------------------

def restrict_by_ell(phi: GroupFunction, k: int) -> GroupFunction:
    """Pointwise product with the indicator of ``{g : ell(g) = k}``."""
    return phi.map_support(lambda g: g.ell == k)


def restrict_by_lambda(phi: GroupFunction, k: int) -> GroupFunction:
    """Pointwise product with the indicator of ``{g : lambda(g) = k}``."""
    return phi.map_support(lambda g: g.lam == k)


def l2_norm(phi: GroupFunction) -> float:
    return math.sqrt(math.fsum(abs(c) ** 2 for c in phi.values.values()))


def l1_norm(phi: GroupFunction) -> float:
    return math.fsum(abs(c) for c in phi.values.values())


def sobolev_norm(phi: GroupFunction, r: float, length: str | Callable = "ell") -> float:
    """sqrt(sum |phi(g)|^2 (1 + L(g))^(2r)) with L the weighted length ``ell``,
    the syllable length ``lambda``, or any callable.

    On a clique subgroup ``G_J`` the weighted length restricts to ``ell_J``, so
    ``length="ell"`` also gives the per-clique norm.
    """
    if r < 0:
        raise GroupFunctionError(f"Sobolev order must be >= 0, got {r}")
    if length == "ell":
        L = lambda g: g.ell
    elif length == "lambda":
        L = lambda g: g.lam
    elif callable(length):
        L = length
    else:
        raise GroupFunctionError(f"unknown length {length!r}")
    return math.sqrt(math.fsum(abs(c) ** 2 * (1 + L(g)) ** (2 * r)
                               for g, c in phi.values.items()))


def cs_bound(a: Sequence[float]) -> float:
    """``M * sum(a_i^2)``, an upper bound for ``(sum a_i)^2`` over ``M`` reals."""
    a = list(a)
    return len(a) * math.fsum(x * x for x in a)


# -- convolution ----------------------------------------------------------------

def convolve(phi: GroupFunction, psi: GroupFunction) -> GroupFunction:
    """(phi * psi)(g) = sum_h phi(h) psi(h^-1 g), evaluated over the product of supports.

    Each output value is summed with exact rounding so the result does not
    depend on iteration order.
    """
    phi._same_graph(psi)
    terms = defaultdict(list)
    for h, a in phi.values.items():
        for k, b in psi.values.items():
            terms[multiply(h, k)].append(a * b)
    return GroupFunction(phi.graph, {g: _fsum_complex(t) for g, t in terms.items()})


def _clique_coords(g: NormalForm, order: Sequence[int]) -> tuple:
    vals = dict(g.syllables)
    return tuple(vals.get(v, 0) for v in order)


def convolve_in_clique(alpha: GroupFunction, beta: GroupFunction,
                       J: Iterable[int]) -> GroupFunction:
    """Convolution inside the direct product ``G_J`` of the vertex groups of a clique.

    Multiplication is done coordinatewise in the vertex groups, independently
    of the normal-form machinery.
    """
    alpha._same_graph(beta)
    graph = alpha.graph
    order = sorted(set(J))
    if not graph.is_clique(order):
        raise GroupFunctionError(f"{order} is not a clique")
    Jset = set(order)
    for f in (alpha, beta):
        for g in f.values:
            if not g.support <= Jset:
                raise GroupFunctionError(f"support element {g} lies outside G_J for J={order}")
    groups = [graph.groups[v] for v in order]
    terms = defaultdict(list)
    for g, a in alpha.values.items():
        x = _clique_coords(g, order)
        for h, b in beta.values.items():
            y = _clique_coords(h, order)
            z = tuple(G.multiply(p, q) for G, p, q in zip(groups, x, y))
            terms[z].append(a * b)
    out = {}
    for z, t in terms.items():
        sylls = tuple((v, c) for v, c in zip(order, z) if c != 0)
        out[NormalForm(graph, sylls)] = _fsum_complex(t)
    return GroupFunction(graph, out)


class ProductTable:
    """Products ``left[i] * right[j]`` for two fixed element lists.

    ``targets`` lists the distinct products; ``index[i, j]`` points into it.
    Used to evaluate many convolutions of functions supported on ``left``
    and ``right`` with array arithmetic.
    """

    def __init__(self, left: Sequence[NormalForm], right: Sequence[NormalForm]):
        self.left = list(left)
        self.right = list(right)
        pos = {}
        idx = np.empty((len(self.left), len(self.right)), dtype=np.int64)
        for i, g in enumerate(self.left):
            for j, h in enumerate(self.right):
                p = multiply(g, h)
                idx[i, j] = pos.setdefault(p, len(pos))
        self.targets = list(pos)
        self.index = idx
        self.target_lam = np.array([t.lam for t in self.targets], dtype=np.int64)
        self.target_ell = np.array([t.ell for t in self.targets], dtype=np.int64)

    def convolve(self, phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
        """Values of ``phi * psi`` on ``targets``; a leading batch axis is allowed."""
        phi = np.asarray(phi)
        psi = np.asarray(psi)
        prod = phi[..., :, None] * psi[..., None, :]
        batch = prod.shape[:-2]
        flat = prod.reshape((-1, self.index.size))
        n_t = len(self.targets)
        offsets = (np.arange(flat.shape[0]) * n_t)[:, None]
        idx = (self.index.ravel()[None, :] + offsets).ravel()
        size = flat.shape[0] * n_t
        out = np.bincount(idx, weights=flat.real.ravel(), minlength=size).astype(complex)
        if np.iscomplexobj(flat):
            out += 1j * np.bincount(idx, weights=flat.imag.ravel(), minlength=size)
        else:
            out = out.real
        return out.reshape(batch + (n_t,))

    def level_mask(self, m: int, mode: str = "lambda") -> np.ndarray:
        lv = self.target_lam if mode == "lambda" else self.target_ell
        return lv == m


# -- derived functions ----------------------------------------------------------

def _check_level(phi: GroupFunction, k: int, spec: BallSpec | None) -> None:
    for g in phi.values:
        if g.lam != k:
            raise GroupFunctionError(f"support element {g} is not in sphere {k}")
    if spec is not None:
        b = ball(phi.graph, spec)
        for g in phi.values:
            if g not in b:
                raise GroupFunctionError(f"support element {g} lies outside the window")


def derived_right(phi: GroupFunction, k: int, p: int,
                  spec: BallSpec | None = None) -> GroupFunction:
    """u -> sqrt(sum over w in sphere p of |phi(u w)|^2), for u in sphere ``k - p``.

    ``phi`` must be supported in sphere ``k``. Since ``u w`` has length ``k``
    only when ``w`` right-divides it, the sum is taken over the divisor
    structure of each support point; for window-supported ``phi`` this equals
    the sum over the windowed sphere ``p``.
    """
    if not 0 <= p <= k:
        raise GroupFunctionError(f"need 0 <= p <= k, got p={p}, k={k}")
    _check_level(phi, k, spec)
    acc = defaultdict(list)
    for h, c in phi.values.items():
        a2 = abs(c) ** 2
        for s in ideals(h, k - p):
            acc[_sub(h, s)].append(a2)
    return GroupFunction(phi.graph, {u: math.sqrt(math.fsum(t)) for u, t in acc.items()})


def derived_left(phi: GroupFunction, k: int, p: int,
                 spec: BallSpec | None = None) -> GroupFunction:
    """u -> sqrt(sum over w in sphere p of |phi(w^-1 u)|^2), for u in sphere ``k - p``."""
    if not 0 <= p <= k:
        raise GroupFunctionError(f"need 0 <= p <= k, got p={p}, k={k}")
    _check_level(phi, k, spec)
    acc = defaultdict(list)
    for h, c in phi.values.items():
        a2 = abs(c) ** 2
        full = (1 << h.lam) - 1
        for s in ideals(h, p):
            acc[_sub(h, full ^ s)].append(a2)
    return GroupFunction(phi.graph, {u: math.sqrt(math.fsum(t)) for u, t in acc.items()})


def slice_function(phi: GroupFunction, k: int, g: NormalForm,
                   side: str = "right") -> GroupFunction:
    """``v -> phi(v g)`` (right) or ``v -> phi(g v)`` (left), kept where the product is in sphere ``k``.

    ``phi`` is supported in sphere ``k`` and ``g`` has syllable length ``k - i``;
    the result is supported in sphere ``i``.
    """
    if side not in ("right", "left"):
        raise GroupFunctionError(f"side must be 'left' or 'right', got {side!r}")
    i = k - g.lam
    if i < 0:
        raise GroupFunctionError(f"lambda(g) = {g.lam} exceeds k = {k}")
    _check_level(phi, k, None)
    ginv = invert(g)
    out = {}
    for h, c in phi.values.items():
        v = multiply(h, ginv) if side == "right" else multiply(ginv, h)
        if v.lam == i:
            out[v] = c
    return GroupFunction(phi.graph, out)


# -- serialisation ---------------------------------------------------------------

def to_json(phi: GroupFunction) -> str:
    return json.dumps(phi.to_records(), indent=1)


def from_json(graph: PresentationGraph, text: str) -> GroupFunction:
    out = {}
    for rec in json.loads(text):
        g = parse_element(graph, rec["element"])
        out[g] = out.get(g, 0j) + complex(float(rec["re"]), float(rec.get("im", 0.0)))
    return GroupFunction(graph, out)


def to_csv(phi: GroupFunction) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["element", "re", "im"])
    for rec in phi.to_records():
        w.writerow([rec["element"], format(rec["re"], ".17g"), format(rec["im"], ".17g")])
    return buf.getvalue()


def from_csv(graph: PresentationGraph, text: str) -> GroupFunction:
    out = {}
    for row in csv.DictReader(io.StringIO(text)):
        g = parse_element(graph, row["element"])
        out[g] = out.get(g, 0j) + complex(float(row["re"]), float(row["im"]))
    return GroupFunction(graph, out)


def identity_delta(graph: PresentationGraph) -> GroupFunction:
    return GroupFunction.delta(identity(graph))
