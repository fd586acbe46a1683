"""Nonlinear maps F: R^n -> R^n, their Jacobians and residue reporting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
import scipy.sparse as sp

from .errors import NonFinite, ZeroRhs

Vector = np.ndarray


@dataclass(frozen=True)
class MapHandle:
    """A dimension-n map with an optional analytic Jacobian.

    ``jac`` may return a dense array or a scipy sparse matrix. When it is
    missing, Jacobians come from central differences. ``symmetric`` marks
    maps whose Jacobian is self-adjoint, which enables the spectral fold
    machinery. ``pieces`` carries the orthant structure of piecewise-linear
    maps (see :class:`foldcont.sturm.PiecewiseLinearStructure`).
    """

    dimension: int
    func: Callable[[Vector], Vector]
    jac: Callable[[Vector], Any] | None = None
    symmetric: bool = False
    name: str = ""
    pieces: Any = None
    det: Callable[[Vector], float] | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")

    @property
    def jac_mode(self) -> str:
        return "analytic" if self.jac is not None else "finite-difference"

    @property
    def planar(self) -> bool:
        return self.dimension == 2 and not self.symmetric

    def __call__(self, u: Vector) -> Vector:
        u = as_state(u, self.dimension)
        out = np.asarray(self.func(u), dtype=float)
        if out.shape != (self.dimension,):
            raise ValueError(f"map returned shape {out.shape}, expected ({self.dimension},)")
        if not np.all(np.isfinite(out)):
            raise NonFinite(f"F(u) not finite for {self.name or 'map'}")
        return out

    def jacobian(self, u: Vector):
        u = as_state(u, self.dimension)
        if self.jac is None:
            return fd_jacobian(self, u)
        J = self.jac(u)
        if sp.issparse(J):
            return J.tocsc()
        return np.asarray(J, dtype=float)

    def dense_jacobian(self, u: Vector) -> np.ndarray:
        J = self.jacobian(u)
        return J.toarray() if sp.issparse(J) else J


def as_state(u, n: int | None = None) -> Vector:
    """Validate a state vector: 1-D, finite, optionally of length n."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if n is not None and u.shape[0] != n:
        raise ValueError(f"state has length {u.shape[0]}, expected {n}")
    if not np.all(np.isfinite(u)):
        raise NonFinite("state contains NaN or Inf")
    return u


@dataclass(frozen=True)
class ResidueReport:
    residue: float
    threshold: float
    accepted: bool


@dataclass
class Solution:
    u: np.ndarray
    morse_index: int
    residue: float
    orthant: str = ""
    source: str = ""


@dataclass
class SolutionSet:
    items: list[Solution] = field(default_factory=list)
    dedupe_tol: float = 1e-8

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def vectors(self) -> np.ndarray:
        if not self.items:
            return np.empty((0, 0))
        return np.array([s.u for s in self.items])

    def find(self, u: np.ndarray, tol: float | None = None) -> int | None:
        tol = self.dedupe_tol if tol is None else tol
        for i, s in enumerate(self.items):
            if np.linalg.norm(s.u - u) <= tol * (1.0 + np.linalg.norm(u)):
                return i
        return None

    def add(self, sol: Solution, check: bool = True) -> bool:
        """Insert unless a duplicate exists; keeps the smaller residue."""
        i = self.find(sol.u) if check else None
        if i is None:
            self.items.append(sol)
            return True
        if sol.residue < self.items[i].residue:
            src = self.items[i].source
            self.items[i] = sol
            if src and not sol.source:
                sol.source = src
        return False

    def canonical(self) -> "SolutionSet":
        """Copy sorted lexicographically by rounded coordinates."""
        items = sorted(self.items, key=lambda s: tuple(np.round(s.u, 9)))
        return SolutionSet(list(items), self.dedupe_tol)

    def morse_histogram(self, size: int | None = None) -> list[int]:
        if not self.items:
            return [0] * (size or 0)
        top = max(s.morse_index for s in self.items)
        size = max(size or 0, top + 1)
        h = [0] * size
        for s in self.items:
            h[s.morse_index] += 1
        return h

    def contains_all(self, other: "SolutionSet", tol: float) -> bool:
        return all(self.find(s.u, tol) is not None for s in other)


def relative_residue(F: MapHandle, u: Vector, g: Vector, threshold: float = 1e-12) -> ResidueReport:
    """eps(u) = ||F(u) - g|| / ||g|| in the Euclidean norm."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    g = as_state(g, F.dimension)
    gnorm = np.linalg.norm(g)
    if gnorm == 0.0:
        raise ZeroRhs("||g|| = 0; use an absolute residue instead")
    eps = float(np.linalg.norm(F(u) - g) / gnorm)
    return ResidueReport(eps, threshold, eps <= threshold)


def default_fd_step(u: Vector) -> float:
    return 1e-6 * (1.0 + np.max(np.abs(u), initial=0.0))


def fd_jacobian(F: MapHandle, u: Vector, step: float | None = None) -> np.ndarray:
    """Central-difference Jacobian, one column per coordinate direction."""
    u = as_state(u, F.dimension)
    if step is None:
        step = default_fd_step(u)
    if step <= 0:
        raise ValueError("step must be positive")
    n = F.dimension
    J = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = step
        J[:, j] = (F(u + e) - F(u - e)) / (2.0 * step)
        e[j] = 0.0
    return J


def linear_map(A) -> MapHandle:
    """F(u) = A u."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    sym = bool(np.allclose(A, A.T))
    return MapHandle(A.shape[0], lambda u: A @ u, lambda u: A, symmetric=sym, name="linear")


def affine_map(A, b) -> MapHandle:
    """F(u) = A u + b."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    sym = bool(np.allclose(A, A.T))
    return MapHandle(A.shape[0], lambda u: A @ u + b, lambda u: A, symmetric=sym, name="affine")


def newton_solve(F: MapHandle, g: Vector, u0: Vector, tol: float = 1e-12, max_iter: int = 50,
                 damping: bool = True) -> tuple[Vector, bool, int]:
    """Damped Newton on F(u) = g. Returns (u, converged, iterations).

    Convergence is declared on the relative residue ``||F(u)-g|| <= tol*(1+||g||)``.
    """
    from .spectral import solve_linear

    u = as_state(u0, F.dimension).copy()
    g = as_state(g, F.dimension)
    scale = 1.0 + np.linalg.norm(g)
    r = F(u) - g
    rn = np.linalg.norm(r)
    for it in range(max_iter):
        if rn <= tol * scale:
            return u, True, it
        try:
            du = solve_linear(F.jacobian(u), -r)
        except (np.linalg.LinAlgError, RuntimeError, ValueError):
            return u, False, it
        if not np.all(np.isfinite(du)):
            return u, False, it
        lam = 1.0
        while True:
            trial = u + lam * du
            try:
                rt = F(trial) - g
            except NonFinite:
                rt = None
            if rt is not None and (not damping or np.linalg.norm(rt) < (1 - 1e-4 * lam) * rn or lam < 1e-3):
                break
            lam *= 0.5
        u = trial
        if rt is None:
            return u, False, it + 1
        r = rt
        rn = np.linalg.norm(r)
    return u, bool(rn <= tol * scale), max_iter
