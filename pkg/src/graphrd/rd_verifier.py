"""Numerical checks of the rapid-decay inequalities on finite windows.

The central quantity is the trilinear convolution norm

    sup ||(phi_k * psi_l)_m||_2 / (||phi_k|| ||psi_l||_2)

over functions supported on level sets ``k`` and ``l`` (spheres of ``lambda``
or of ``ell``). It equals the spectral norm of the 0/1 tensor
``T[g1, g2, g] = [g1 g2 = g]`` restricted to the three level sets; a Sobolev
weight on ``phi`` becomes a row rescaling of that tensor. The norm is
estimated by alternating power iteration, which only ever reports values
attained by concrete unit vectors, so every estimate is a lower bound of the
true supremum.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np
import scipy.optimize
import scipy.sparse
from sklearn.base import BaseEstimator

from .enumeration import BallSpec, WindowError, ball, ff_empirical, p1_bound
from .graph import PresentationGraph
from .group_function import (GroupFunction, ProductTable, convolve, cs_bound, l2_norm,
                             restrict_by_ell, restrict_by_lambda)
from .normal_form import format_element
from .validation import SparseTensor3, check_nonneg_int, check_tensor, check_window

logger = logging.getLogger(__name__)


# -- level tensors -------------------------------------------------------------

@lru_cache(maxsize=256)
def product_table(graph: PresentationGraph, spec: BallSpec, k: int, l: int,
                  mode: str = "lambda") -> ProductTable:
    b = ball(graph, spec)
    return ProductTable(b.level(k, mode), b.level(l, mode))


@dataclass
class LevelTensor:
    """The multiplication tensor over (level k) x (level l) x (level m)."""

    rows: list
    cols: list
    outs: list
    tensor: SparseTensor3
    k: int
    l: int
    m: int
    mode: str

    @classmethod
    def build(cls, graph: PresentationGraph, spec: BallSpec, k: int, l: int, m: int,
              mode: str = "lambda") -> LevelTensor:
        if mode == "lambda":
            check_window(graph, spec, lam=max(k, l), what=f"levels ({k}, {l})")
        elif mode == "ell":
            check_window(graph, spec, ell=max(k, l), what=f"ell-levels ({k}, {l})")
        else:
            raise ValueError(f"mode must be 'lambda' or 'ell', got {mode!r}")
        pt = product_table(graph, spec, k, l, mode)
        at_m = pt.level_mask(m, mode)
        out_index = -np.ones(len(pt.targets), dtype=np.int64)
        out_index[at_m] = np.arange(int(at_m.sum()))
        I, J = np.nonzero(at_m[pt.index])
        O = out_index[pt.index[I, J]]
        outs = [t for t, keep in zip(pt.targets, at_m) if keep]
        T = SparseTensor3(I, J, O, np.ones(len(I)), (len(pt.left), len(pt.right), len(outs)))
        return cls(pt.left, pt.right, outs, T, k, l, m, mode)

    def sobolev_weights(self, r: float) -> np.ndarray:
        """(1 + ell(g))^(-r) for each row element."""
        return np.array([(1.0 + g.ell) ** (-r) for g in self.rows])

    def weighted(self, r: float) -> SparseTensor3:
        if r == 0:
            return self.tensor
        return self.tensor.reweight_rows(self.sobolev_weights(r))


def clique_tensor(graph: PresentationGraph, spec: BallSpec, J, cap: int | None = None) -> LevelTensor:
    """Multiplication tensor of the windowed clique subgroup ``G_J`` against itself.

    Rows and columns are the window elements supported in ``J`` (with weighted
    length at most ``cap`` when given); outputs are all their products.
    """
    J = frozenset(J)
    if not graph.is_clique(J):
        raise ValueError(f"{sorted(J)} is not a clique")
    b = ball(graph, spec)
    elems = [g for g in b.elements() if g.support <= J and (cap is None or g.ell <= cap)]
    pt = ProductTable(elems, elems)
    I, Jc = np.indices(pt.index.shape)
    T = SparseTensor3(I.ravel(), Jc.ravel(), pt.index.ravel(), np.ones(pt.index.size),
                      (len(elems), len(elems), len(pt.targets)))
    return LevelTensor(elems, elems, pt.targets, T, -1, -1, -1, "clique")


# -- contraction kernels ------------------------------------------------------------

class _Contractor:
    def __init__(self, T: SparseTensor3):
        self.T = T
        e = np.arange(T.nnz)
        ones = np.ones(T.nnz)
        d1, d2, d3 = T.shape
        self.PI = scipy.sparse.csr_matrix((ones, (T.I, e)), shape=(d1, T.nnz))
        self.PJ = scipy.sparse.csr_matrix((ones, (T.J, e)), shape=(d2, T.nnz))
        self.PO = scipy.sparse.csr_matrix((ones, (T.O, e)), shape=(d3, T.nnz))
        self.v = T.vals[:, None]

    def to_rows(self, y, z):
        return self.PI @ (self.v * y[self.T.J] * z[self.T.O])

    def to_cols(self, x, z):
        return self.PJ @ (self.v * x[self.T.I] * z[self.T.O])

    def to_outs(self, x, y):
        return self.PO @ (self.v * x[self.T.I] * y[self.T.J])


def _normalise(a: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(a, axis=0)
    n[n == 0] = 1.0
    return a / n


def _start_vectors(d: int, seed: int, restart: int) -> np.ndarray:
    if restart == 0:
        return np.ones(d)
    rng = np.random.default_rng([seed, restart])
    return np.abs(rng.standard_normal(d)) + 1e-3


class TrilinearNormEstimator(BaseEstimator):
    """Spectral norm of a nonnegative 3-way tensor by alternating power iteration.

    Each restart alternately maximises over the row, column and output
    vectors with the other two fixed; every step can only increase the
    objective. Restart 0 starts from constant vectors, restart ``i > 0``
    from a positive random vector seeded by ``(random_state, i)``, so adding
    restarts never lowers the result.

    Parameters
    ----------
    n_restarts : int
    max_iter : int
    tol : float
        Relative change of the objective below which a restart stops.
    random_state : int
    """

    def __init__(self, n_restarts=16, max_iter=200, tol=1e-10, random_state=0):
        self.n_restarts = n_restarts
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None):
        T = check_tensor(X)
        n_restarts = check_nonneg_int(self.n_restarts, "n_restarts")
        if n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        d1, d2, d3 = T.shape
        self.shape_ = T.shape
        self.empty_ = T.nnz == 0
        if self.empty_:
            logger.debug("zero tensor of shape %s", T.shape)
            self.norm_ = 0.0
            self.restart_norms_ = np.zeros(n_restarts)
            self.row_vector_ = np.zeros(d1)
            self.col_vector_ = np.zeros(d2)
            self.n_iter_ = np.zeros(n_restarts, dtype=int)
            return self

        C = _Contractor(T)
        seed = int(self.random_state)
        x = _normalise(np.stack([_start_vectors(d1, seed, i) for i in range(n_restarts)], axis=1))
        yv = _normalise(np.stack([_start_vectors(d2, seed + 1, i) for i in range(n_restarts)], axis=1))
        zraw = C.to_outs(x, yv)
        value = np.linalg.norm(zraw, axis=0)
        z = _normalise(zraw)
        active = np.ones(n_restarts, dtype=bool)
        n_iter = np.zeros(n_restarts, dtype=int)
        for _ in range(self.max_iter):
            a = np.flatnonzero(active)
            if not len(a):
                break
            xa = _normalise(C.to_rows(yv[:, a], z[:, a]))
            ya = _normalise(C.to_cols(xa, z[:, a]))
            zr = C.to_outs(xa, ya)
            va = np.linalg.norm(zr, axis=0)
            x[:, a], yv[:, a], z[:, a] = xa, ya, _normalise(zr)
            done = np.abs(va - value[a]) <= self.tol * np.maximum(va, 1e-300)
            value[a] = va
            n_iter[a] += 1
            active[a[done]] = False
        best = int(np.argmax(value))
        self.norm_ = float(value[best])
        self.restart_norms_ = value
        self.row_vector_ = x[:, best]
        self.col_vector_ = yv[:, best]
        self.n_iter_ = n_iter
        return self

    def score(self, X, y=None):
        return self.norm_


def bilinear_value(T: SparseTensor3, x: np.ndarray, y: np.ndarray) -> float:
    """||T(x, y, .)||_2 for given row and column vectors."""
    out = np.zeros(T.shape[2], dtype=np.result_type(x, y, float))
    np.add.at(out, T.O, T.vals * x[T.I] * y[T.J])
    return float(np.linalg.norm(out))


def tensor_norm_oracle(X, grid: int = 2001) -> float:
    """Exhaustive spectral norm of a small nonnegative 3-way tensor.

    The tensor is contracted along its shortest mode with a unit vector ``u``;
    the norm is the maximum over ``u`` of the largest singular value of the
    resulting matrix. ``u`` ranges over the nonnegative part of the unit
    sphere, which suffices for nonnegative tensors. Length 1 needs a single
    SVD, length 2 a fine angle grid, length 3 a grid over two angles; the
    best grid point is then polished by a bounded local search.
    """
    T = check_tensor(X)
    if sum(T.shape) > 64:
        raise ValueError(f"oracle limited to total dimension <= 64, got {sum(T.shape)}")
    if T.nnz == 0:
        return 0.0
    A = T.todense()
    mode = int(np.argmin(A.shape))
    A = np.moveaxis(A, mode, 0)
    d = A.shape[0]
    if d > 3:
        raise ValueError(f"oracle needs a mode of length <= 3, shortest is {d}")

    def sigma(u):
        return np.linalg.norm(np.tensordot(u, A, axes=1), 2)

    if d == 1:
        return float(sigma(np.ones(1)))
    if d == 2:
        f = lambda t: -sigma(np.array([math.cos(t), math.sin(t)]))
        ts = np.linspace(0.0, math.pi / 2, grid)
        vals = np.array([f(t) for t in ts])
        i = int(np.argmin(vals))
        step = ts[1] - ts[0]
        res = scipy.optimize.minimize_scalar(
            f, bounds=(max(0.0, ts[i] - step), min(math.pi / 2, ts[i] + step)),
            method="bounded", options={"xatol": 1e-13})
        return float(max(-vals[i], -res.fun))

    def u3(a, b):
        return np.array([math.cos(a) * math.cos(b), math.cos(a) * math.sin(b), math.sin(a)])

    n = max(61, int(math.sqrt(grid)) * 3)
    ang = np.linspace(0.0, math.pi / 2, n)
    best, arg = -1.0, (0.0, 0.0)
    for a in ang:
        for b in ang:
            s = sigma(u3(a, b))
            if s > best:
                best, arg = s, (a, b)
    step = ang[1] - ang[0]
    res = scipy.optimize.minimize(
        lambda p: -sigma(u3(*p)), np.array(arg), method="L-BFGS-B",
        bounds=[(max(0.0, arg[0] - step), min(math.pi / 2, arg[0] + step)),
                (max(0.0, arg[1] - step), min(math.pi / 2, arg[1] + step))],
        options={"ftol": 1e-15, "gtol": 1e-12})
    return float(max(best, -res.fun))


# -- trilinear ratios ------------------------------------------------------------------

def trilinear_ratio(graph: PresentationGraph, k: int, l: int, m: int, spec: BallSpec,
                    r: float = 0.0, mode: str = "lambda", budget: int = 16, seed: int = 0,
                    max_iter: int = 200, tol: float = 1e-10, return_estimator: bool = False,
                    warn_empty: bool = True):
    """Estimate sup ||(phi_k * psi_l)_m||_2 over ||phi_k||_{2,r,ell} = ||psi_l||_2 = 1.

    ``r = 0`` is the plain l2 ratio. Returns 0.0 (with a logged warning)
    when a level set in the window is empty.
    """
    if not abs(k - l) <= m <= k + l:
        raise ValueError(f"m = {m} outside [|k-l|, k+l] = [{abs(k - l)}, {k + l}]")
    lt = LevelTensor.build(graph, spec, k, l, m, mode)
    if warn_empty and (not lt.rows or not lt.cols):
        logger.warning("level %d or %d is empty in the window; ratio is 0", k, l)
    est = TrilinearNormEstimator(n_restarts=budget, max_iter=max_iter, tol=tol,
                                 random_state=seed).fit(lt.weighted(r))
    if return_estimator:
        return est.norm_, est, lt
    return est.norm_


# -- vanishing condition ----------------------------------------------------------

def vanishing_check(graph: PresentationGraph, spec: BallSpec, trials: int = 1000,
                    k_max: int = 4, l_max: int = 4, seed: int = 0,
                    modes=("lambda", "ell")) -> dict:
    """Check that (phi_k * psi_l)_m vanishes for m outside [|k-l|, k+l].

    Two routes per (k, l): every product of the two level sets is inspected,
    and ``trials`` random function pairs are convolved and restricted to each
    out-of-range level; the restricted l2 norm must be exactly 0.0.
    A nonzero witness at ``m = k + l`` is recorded when one exists.
    """
    rng = np.random.default_rng(seed)
    rows = []
    ok = True
    for mode in modes:
        top = spec.lambda_max
        cap = spec.ell_cap(graph)
        if mode == "ell" and cap is not None:
            top = min(top, cap)
        for k, l in product(range(min(k_max, top) + 1), range(min(l_max, top) + 1)):
            pt = product_table(graph, spec, k, l, mode)
            if not pt.left or not pt.right:
                continue
            levels = pt.target_lam if mode == "lambda" else pt.target_ell
            outside_levels = set(range(0, k + l + 3)) - set(range(abs(k - l), k + l + 1))
            structural = bool(np.all((levels >= abs(k - l)) & (levels <= k + l)))
            phi = rng.standard_normal((trials, len(pt.left))) + 1j * rng.standard_normal((trials, len(pt.left)))
            psi = rng.standard_normal((trials, len(pt.right))) + 1j * rng.standard_normal((trials, len(pt.right)))
            conv = pt.convolve(phi, psi)
            worst = 0.0
            for m in sorted(outside_levels):
                mask = pt.level_mask(m, mode)
                norms = np.sqrt(np.sum(np.abs(conv[:, mask]) ** 2, axis=1))
                worst = max(worst, float(norms.max(initial=0.0)))
            witness = bool(np.any(levels == k + l))
            row_ok = structural and worst == 0.0
            ok &= row_ok
            rows.append({"mode": mode, "k": k, "l": l, "trials": trials,
                         "max_outside_norm": worst, "products_in_range": structural,
                         "boundary_witness": witness, "ok": row_ok})
    return {"ok": ok, "rows": rows}


# -- growth fits -------------------------------------------------------------------------

class GrowthFit(BaseEstimator):
    """Least-squares fit of ``log(ratio)`` against ``log(k + 1)``.

    With ``envelope=True`` the ratios are first replaced by their running
    maximum over increasing ``k``, the growth of the smallest nondecreasing
    bound; this keeps families meaningful on groups whose spheres run out.
    Points with ``k < min_k`` are used for the envelope but not for the fit.
    """

    def __init__(self, min_k=2, envelope=True, min_points=4):
        self.min_k = min_k
        self.envelope = envelope
        self.min_points = min_points

    def fit(self, X, y):
        k = np.asarray(X, dtype=float).ravel()
        ratio = np.asarray(y, dtype=float).ravel()
        if k.shape != ratio.shape:
            raise ValueError("k and ratios differ in length")
        order = np.argsort(k, kind="stable")
        k, ratio = k[order], ratio[order]
        if self.envelope:
            ratio = np.maximum.accumulate(ratio)
        keep = (k >= self.min_k) & (ratio > 0)
        if not np.any(ratio[k >= self.min_k] > 0):
            raise ValueError("degenerate growth data: all ratios are zero")
        if keep.sum() < self.min_points:
            raise ValueError(f"need at least {self.min_points} points with k >= {self.min_k}, "
                             f"got {int(keep.sum())}")
        xs, ys = np.log(k[keep] + 1), np.log(ratio[keep])
        A = np.stack([xs, np.ones_like(xs)], axis=1)
        (slope, intercept), *_ = np.linalg.lstsq(A, ys, rcond=None)
        resid = ys - (slope * xs + intercept)
        self.slope_ = float(slope) + 0.0  # no negative zeros in reports
        self.intercept_ = float(intercept) + 0.0
        self.residual_rms_ = float(np.sqrt(np.mean(resid ** 2)))
        self.n_points_ = int(keep.sum())
        return self

    def predict(self, X):
        k = np.asarray(X, dtype=float)
        return np.exp(self.intercept_) * (k + 1) ** self.slope_


# -- per-clique RD constants ------------------------------------------------------

@dataclass
class RdConstants:
    c: float
    r: float
    scope: str
    window: dict = field(default_factory=dict)
    budget: int = 0
    exact: bool = False
    table: list = field(default_factory=list)


class CliqueRDConstants(BaseEstimator):
    """Empirical RD constants ``(c_J, r_J)`` of a clique subgroup on a window.

    For each ``r`` on the grid, ``c(r)`` is the weighted trilinear norm of
    ``G_J`` on the window. Finite clique groups are covered completely, so
    ``r = 0`` is exact. For infinite ones, ``r`` is accepted once ``c(r)`` on
    the window exceeds ``c(r)`` on the window shrunk by one length unit by at
    most ``stability_tol`` (relative); the smallest accepted grid point wins.
    """

    def __init__(self, spec=None, r_grid=(0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0),
                 stability_tol=0.05, n_restarts=16, max_iter=200, tol=1e-10, random_state=0):
        self.spec = spec
        self.r_grid = r_grid
        self.stability_tol = stability_tol
        self.n_restarts = n_restarts
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _norm(self, T):
        return TrilinearNormEstimator(self.n_restarts, self.max_iter, self.tol,
                                      self.random_state).fit(T).norm_

    def fit(self, graph: PresentationGraph, J):
        J = frozenset(J)
        spec = self.spec
        if spec is None:
            raise ValueError("CliqueRDConstants needs a window (spec)")
        spec.validate_for(graph)
        if not graph.is_clique(J):
            raise ValueError(f"{sorted(J)} is not a clique")
        window = {"lambda_max": spec.lambda_max, "ell_max": spec.ell_max}
        finite = all(graph.groups[v].is_finite for v in J)
        if len(J) > spec.lambda_max:
            raise WindowError(f"clique of size {len(J)} exceeds lambda_max = {spec.lambda_max}")
        if not J:
            self.constants_ = RdConstants(1.0, 0.0, "clique []", window, self.n_restarts, True,
                                          [{"r": 0.0, "c": 1.0}])
            return self
        cap = spec.ell_cap(graph)
        full = clique_tensor(graph, spec, J)
        table = []
        if finite:
            c = self._norm(full.weighted(0.0))
            table.append({"r": 0.0, "c": c})
            self.constants_ = RdConstants(c, 0.0, f"clique {sorted(J)}", window,
                                          self.n_restarts, True, table)
            return self
        if cap is None or cap < 1:
            raise WindowError("an infinite clique group needs ell_max >= 1")
        inner = clique_tensor(graph, spec, J, cap=cap - 1)
        chosen = None
        for r in sorted(self.r_grid):
            c_full = self._norm(full.weighted(r))
            c_inner = self._norm(inner.weighted(r))
            stable = c_full <= (1 + self.stability_tol) * c_inner
            table.append({"r": float(r), "c": c_full, "c_inner": c_inner, "stable": stable})
            if stable:
                chosen = (c_full, float(r))
                break
        if chosen is None:
            raise ArithmeticError(f"no stable r on the grid for clique {sorted(J)}")
        self.constants_ = RdConstants(chosen[0], chosen[1], f"clique {sorted(J)}", window,
                                      self.n_restarts, False, table)
        return self


def clique_rd_constants(graph: PresentationGraph, J, spec: BallSpec, budget: int = 16,
                        seed: int = 0, **kw) -> RdConstants:
    return CliqueRDConstants(spec=spec, n_restarts=budget, random_state=seed, **kw).fit(graph, J).constants_


def global_constants(graph: PresentationGraph, spec: BallSpec, budget: int = 16, seed: int = 0,
                     **kw) -> tuple:
    """``(c, r)`` as the maxima of the per-clique constants, plus the per-clique list."""
    per = [clique_rd_constants(graph, J, spec, budget, seed, **kw)
           for J in graph.cliques() if len(J) <= spec.lambda_max]
    return max(p.c for p in per), max(p.r for p in per), per


# -- proposition check and scans ----------------------------------------------

@dataclass
class ScanReport:
    rows: list
    fits: dict
    seed: int

    CSV_COLUMNS = ("k", "l", "m", "mode", "ratio", "bound", "ratio_over_bound", "samples", "seed")

    @property
    def violations(self) -> list:
        return [r for r in self.rows if r["ratio_over_bound"] > 1 + 1e-9]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r["k"], r["l"], r["m"], r["mode"], format(r["ratio"], ".17g"),
                        format(r["bound"], ".17g"), format(r["ratio_over_bound"], ".17g"),
                        r["samples"], r["seed"]])
        return buf.getvalue()

    def fits_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["mode", "l_minus_k", "m_offset", "slope", "intercept", "residual_rms", "points"])
        for key in sorted(self.fits):
            f = self.fits[key]
            w.writerow([key[0], key[1], key[2], format(f["slope"], ".17g"),
                        format(f["intercept"], ".17g"), format(f["residual_rms"], ".17g"),
                        f["points"]])
        return buf.getvalue()

    def to_json(self) -> str:
        fits = [{"mode": k[0], "l_minus_k": k[1], "m_offset": k[2], **v}
                for k, v in sorted(self.fits.items())]
        return json.dumps({"seed": self.seed, "rows": self.rows, "fits": fits}, indent=1)


def _witness(lt: LevelTensor, est: TrilinearNormEstimator) -> dict:
    phi = {format_element(g): float(v) for g, v in zip(lt.rows, est.row_vector_) if v}
    psi = {format_element(g): float(v) for g, v in zip(lt.cols, est.col_vector_) if v}
    return {"phi": phi, "psi": psi}


def proposition_check(graph: PresentationGraph, k: int, l: int, m: int, spec: BallSpec,
                      c: float, r: float, budget: int = 16, seed: int = 0, samples: int = 8,
                      max_iter: int = 200, tol: float = 1e-10, warn_empty: bool = True) -> dict:
    """One report row for ||(phi_(k) * psi_(l))_(m)|| <= c ||phi_(k)||_{2,r,ell} ||psi_(l)||.

    The ratio is the larger of the optimiser's estimate and ``samples``
    explicit random pairs. A violation carries the maximising pair.
    """
    ratio, est, lt = trilinear_ratio(graph, k, l, m, spec, r=r, budget=budget, seed=seed,
                                     max_iter=max_iter, tol=tol, return_estimator=True,
                                     warn_empty=warn_empty)
    T = lt.weighted(r)
    rng = np.random.default_rng([seed, k, l, m])
    d1, d2, _ = T.shape
    for _ in range(samples if T.nnz else 0):
        x = rng.standard_normal(d1) + 1j * rng.standard_normal(d1)
        y = rng.standard_normal(d2) + 1j * rng.standard_normal(d2)
        ratio = max(ratio, bilinear_value(T, x, y) / (np.linalg.norm(x) * np.linalg.norm(y)))
    row = {"k": k, "l": l, "m": m, "mode": f"sobolev(r={r:g})", "ratio": ratio, "bound": c,
           "ratio_over_bound": ratio / c, "samples": budget + samples, "seed": seed,
           "empty_level": not lt.rows or not lt.cols}
    if row["ratio_over_bound"] > 1 + 1e-9:
        row["witness"] = _witness(lt, est)
    return row


def plain_row(graph: PresentationGraph, k: int, l: int, m: int, spec: BallSpec, c: float,
              r: float, budget: int = 16, seed: int = 0, max_iter: int = 200,
              tol: float = 1e-10, warn_empty: bool = True) -> dict:
    """Plain l2 ratio; its implied bound is ``c (1 + max ell on level k)^r``."""
    ratio, est, lt = trilinear_ratio(graph, k, l, m, spec, r=0.0, budget=budget, seed=seed,
                                     max_iter=max_iter, tol=tol, return_estimator=True,
                                     warn_empty=warn_empty)
    top = max((g.ell for g in lt.rows), default=0)
    bound = c * (1.0 + top) ** r
    row = {"k": k, "l": l, "m": m, "mode": "plain", "ratio": ratio, "bound": bound,
           "ratio_over_bound": ratio / bound, "samples": budget, "seed": seed,
           "empty_level": not lt.rows or not lt.cols}
    if row["ratio_over_bound"] > 1 + 1e-9:
        row["witness"] = _witness(lt, est)
    return row


def rd_scan(graph: PresentationGraph, spec: BallSpec, k_max: int = 4, l_max: int = 4,
            budget: int = 16, seed: int = 0, constants: tuple | None = None,
            max_iter: int = 200, tol: float = 1e-10, threads: int = 1,
            fit_families: bool = True) -> ScanReport:
    """Plain and Sobolev rows for every admissible (k, l, m) in the window, plus growth fits."""
    check_window(graph, spec, lam=max(k_max, l_max), what="rd-scan")
    if constants is None:
        c, r, _ = global_constants(graph, spec, budget, seed, max_iter=max_iter, tol=tol)
    else:
        c, r = constants
    jobs = []
    for k, l in product(range(k_max + 1), range(l_max + 1)):
        for m in range(abs(k - l), k + l + 1):
            jobs.append((k, l, m))
    b = ball(graph, spec)
    for k in range(max(k_max, l_max) + 1):
        b.sphere(k)
    for k, l, _ in jobs:
        product_table(graph, spec, k, l, "lambda")

    def run(job):
        k, l, m = job
        return [plain_row(graph, k, l, m, spec, c, r, budget, seed, max_iter, tol, False),
                proposition_check(graph, k, l, m, spec, c, r, budget, seed, 0, max_iter, tol,
                                  False)]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    rows = [row for pair in results for row in pair]
    empty = sorted({(r["k"], r["l"]) for r in rows if r["empty_level"]})
    if empty:
        logger.warning("%d (k, l) pairs have an empty level in the window; their ratios are 0: %s",
                       len(empty), " ".join(f"({k},{l})" for k, l in empty))
    fits = fit_growth(rows) if fit_families else {}
    return ScanReport(rows, fits, seed)


def fit_growth(rows: list, mode: str = "plain", **kw) -> dict:
    """Growth fit per family of fixed ``(l - k, m - |k - l|)`` over the rows of one mode.

    Families that cannot be fitted (too few points, all zero) are skipped.
    """
    fams = {}
    for r in rows:
        if r["mode"] != mode:
            continue
        key = (mode, r["l"] - r["k"], r["m"] - abs(r["k"] - r["l"]))
        fams.setdefault(key, []).append((r["k"], r["ratio"]))
    out = {}
    for key, pts in fams.items():
        ks, ratios = zip(*pts)
        try:
            g = GrowthFit(**kw).fit(ks, ratios)
        except ValueError:
            continue
        out[key] = {"slope": g.slope_, "intercept": g.intercept_,
                    "residual_rms": g.residual_rms_, "points": g.n_points_}
    return out


# -- factorisation-count bounds ---------------------------------------------------

def mf_check(graph: PresentationGraph, spec: BallSpec, k: int, q: int, l: int) -> dict:
    """Empirical MF(k, q, l) against the polynomial Q(k) assembled from the P1 bound.

    MF sums FF_{k-q+p, l-q+p}(J) over p and cliques J of size q - 2p. The sum
    starts at p = 0 so the no-cancellation case is included; terms with a
    negative index are empty.
    """
    mf = 0
    Q = 0
    for p in range(0, q // 2 + 1):
        a, b = k - q + p, l - q + p
        if a < 0 or b < 0:
            continue
        for J in graph.cliques(q - 2 * p):
            if a + b + len(J) > spec.lambda_max:
                raise WindowError(f"MF({k}, {q}, {l}) needs lambda_max >= {a + b + len(J)}")
            mf += ff_empirical(graph, a, b, J, spec)
            Q += p1_bound(graph, k, J)
    return {"k": k, "q": q, "l": l, "MF": mf, "Q": Q, "ok": mf <= Q}


def ell_reduction_check(graph: PresentationGraph, spec: BallSpec, phi: GroupFunction,
                        psi: GroupFunction, k: int, l: int, m: int) -> dict:
    """The first step of deriving the ell-level bound from the lambda-level one.

    With phi supported on ell-level k and psi on ell-level l, checks
    ||(phi * psi)_m||^2 <= (k + 1) sum_j ||(phi_(j) * psi)_m||^2, where
    phi_(j) is the restriction of phi to sphere j.
    """
    lhs = l2_norm(restrict_by_ell(convolve(phi, psi), m)) ** 2
    parts = [l2_norm(restrict_by_ell(convolve(restrict_by_lambda(phi, j), psi), m))
             for j in range(k + 1)]
    rhs = cs_bound(parts)
    return {"lhs": lhs, "rhs": rhs, "ok": lhs <= rhs * (1 + 1e-9) + 1e-300}
