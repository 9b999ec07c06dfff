"""Input validation helpers shared by the estimators and the CLI."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .enumeration import BallSpec, WindowError
from .graph import PresentationGraph


@dataclass(frozen=True)
class SparseTensor3:
    """A real 3-way tensor in coordinate form; ``(I[e], J[e], O[e])`` carries ``vals[e]``."""

    I: np.ndarray
    J: np.ndarray
    O: np.ndarray
    vals: np.ndarray
    shape: tuple

    @property
    def nnz(self) -> int:
        return len(self.vals)

    def todense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        np.add.at(out, (self.I, self.J, self.O), self.vals)
        return out

    def reweight_rows(self, w: np.ndarray) -> SparseTensor3:
        return SparseTensor3(self.I, self.J, self.O, self.vals * np.asarray(w)[self.I], self.shape)


def check_tensor(X) -> SparseTensor3:
    """Coerce ``X`` to a :class:`SparseTensor3` with finite nonnegative entries.

    Accepts a :class:`SparseTensor3`, anything with a ``tensor`` attribute
    holding one, or a dense array of shape ``(d1, d2, d3)``.
    """
    if hasattr(X, "tensor") and isinstance(X.tensor, SparseTensor3):
        X = X.tensor
    if isinstance(X, SparseTensor3):
        T = X
    else:
        arr = np.asarray(X, dtype=float)
        if arr.ndim != 3:
            raise ValueError(f"expected a 3-way tensor, got array with shape {arr.shape}")
        I, J, O = np.nonzero(arr)
        T = SparseTensor3(I, J, O, arr[I, J, O], arr.shape)
    if len(T.shape) != 3 or any(d < 0 for d in T.shape):
        raise ValueError(f"bad tensor shape {T.shape}")
    if not (len(T.I) == len(T.J) == len(T.O) == len(T.vals)):
        raise ValueError("coordinate arrays differ in length")
    if T.nnz:
        if not np.all(np.isfinite(T.vals)):
            raise ValueError("tensor has non-finite entries")
        if np.any(T.vals < 0):
            raise ValueError("tensor entries must be nonnegative")
        for arr, d in ((T.I, T.shape[0]), (T.J, T.shape[1]), (T.O, T.shape[2])):
            if arr.min() < 0 or arr.max() >= d:
                raise ValueError("tensor coordinate out of range")
    return T


def check_window(graph: PresentationGraph, spec: BallSpec, *, lam: int | None = None,
                 ell: int | None = None, what: str = "request") -> None:
    """Refuse requests the window cannot answer exactly."""
    spec.validate_for(graph)
    if lam is not None and lam > spec.lambda_max:
        raise WindowError(f"{what} needs syllable length {lam} > lambda_max = {spec.lambda_max}")
    cap = spec.ell_cap(graph)
    if ell is not None:
        if ell > spec.lambda_max:
            raise WindowError(f"{what} needs ell-level {ell} > lambda_max = {spec.lambda_max}")
        if cap is not None and ell > cap:
            raise WindowError(f"{what} needs ell-level {ell} > ell_max = {cap}")


def check_nonneg_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 0:
        raise ValueError(f"{name} must be a natural number, got {value!r}")
    return int(value)
