"""Discretized nonlinear Sturm-Liouville problems on [0, pi].

F(u) = A^h u - f(u) with A^h the Dirichlet second-difference matrix and f
either piecewise linear (slopes l_minus / l_plus) or asymptotically linear
with f'(x) = alpha*arctan(x) + beta.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import MapHandle, Solution, SolutionSet, as_state
from .errors import EigenvalueStraddle, SingularAdjacent
from .spectral import full_spectrum

log = logging.getLogger(__name__)

MAX_CENSUS_DIM = 24


@dataclass(frozen=True)
class MeshSpec:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def h(self) -> float:
        return np.pi / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(1, self.n + 1) * self.h


@dataclass(frozen=True)
class TridiagonalOperator:
    """A^h = (1/h^2) tridiag(-1, 2, -1)."""

    mesh: MeshSpec

    @property
    def n(self) -> int:
        return self.mesh.n

    @property
    def h(self) -> float:
        return self.mesh.h

    @property
    def scale(self) -> float:
        return 1.0 / self.h**2

    def dense(self) -> np.ndarray:
        n = self.n
        A = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
        return self.scale * A

    def sparse(self) -> sp.csc_matrix:
        n = self.n
        return (self.scale * sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1])).tocsc()

    def eigenvalues(self) -> np.ndarray:
        """Closed form (2/h^2)(1 - cos kh), k = 1..n."""
        k = np.arange(1, self.n + 1)
        return 2.0 / self.h**2 * (1.0 - np.cos(k * self.h))

    def eigenvector(self, k: int, normalized: bool = False) -> np.ndarray:
        """sin(k I_h); unit Euclidean norm when ``normalized``."""
        v = np.sin(k * self.mesh.nodes)
        return v / np.linalg.norm(v) if normalized else v

    def mode_mix(self, coeffs: dict[int, float]) -> np.ndarray:
        """sum_k c_k sin(k I_h), e.g. {1: 1.0, 2: -0.1} for sin - 0.1 sin 2."""
        return sum(c * self.eigenvector(k) for k, c in coeffs.items())


def build_operator(mesh: MeshSpec | int) -> TridiagonalOperator:
    if isinstance(mesh, int):
        mesh = MeshSpec(mesh)
    op = TridiagonalOperator(mesh)
    w = full_spectrum(op.dense()).eigenvalues
    if not np.allclose(w, op.eigenvalues(), rtol=0, atol=1e-10 * max(1.0, w[-1])):
        raise AssertionError("tridiagonal spectrum deviates from the closed form")
    return op


@dataclass(frozen=True)
class PLNonlinearity:
    """f(x) = l_minus*x for x < 0, l_plus*x for x > 0."""

    ell_minus: float
    ell_plus: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, self.ell_minus * x, self.ell_plus * x)

    def slope(self, x):
        # zero counts as positive
        return np.where(np.asarray(x) < 0, self.ell_minus, self.ell_plus)


@dataclass(frozen=True)
class ALNonlinearity:
    """Convex f with f'(x) = alpha*arctan(x) + beta and f(0) = 0."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive (l_minus < l_plus)")

    @property
    def ell_minus(self) -> float:
        return self.beta - self.alpha * np.pi / 2

    @property
    def ell_plus(self) -> float:
        return self.beta + self.alpha * np.pi / 2

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.alpha * (x * np.arctan(x) - 0.5 * np.log1p(x * x)) + self.beta * x

    def slope(self, x):
        return self.alpha * np.arctan(x) + self.beta

    def curvature(self, x):
        x = np.asarray(x, dtype=float)
        return self.alpha / (1.0 + x * x)


def calibrate_arctan(ell_minus: float, ell_plus: float) -> ALNonlinearity:
    """Choose alpha, beta so that f' tends to l_minus / l_plus at -inf / +inf."""
    if not ell_minus < ell_plus:
        raise ValueError("need l_minus < l_plus")
    return ALNonlinearity((ell_plus - ell_minus) / np.pi, 0.5 * (ell_plus + ell_minus))


@dataclass(frozen=True)
class PiecewiseLinearStructure:
    """Orthant data of F(u) = A u - f_pl(u): F restricted to orthant O is A - D^O."""

    A: np.ndarray
    ell_minus: float
    ell_plus: float

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def signs(self, u) -> np.ndarray:
        """Orthant of u as a boolean 'positive' mask; zero counts as positive."""
        return np.asarray(u) >= 0

    def matrix(self, positive: np.ndarray) -> np.ndarray:
        d = np.where(positive, self.ell_plus, self.ell_minus)
        return self.A - np.diag(d)

    def solve(self, positive: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        return np.linalg.solve(self.matrix(positive), rhs)


def pl_map(op: TridiagonalOperator | np.ndarray, nl: PLNonlinearity) -> MapHandle:
    A = op.dense() if isinstance(op, TridiagonalOperator) else np.asarray(op, dtype=float)
    pieces = PiecewiseLinearStructure(A, nl.ell_minus, nl.ell_plus)

    def func(u):
        return A @ u - nl(u)

    def jac(u):
        return pieces.matrix(pieces.signs(u))

    return MapHandle(A.shape[0], func, jac, symmetric=True, name="sturm-pl", pieces=pieces)


def al_map(op: TridiagonalOperator, nl: ALNonlinearity, sparse: bool = False) -> MapHandle:
    A = op.sparse() if sparse else op.dense()

    def func(u):
        return A @ u - nl(u)

    if sparse:
        def jac(u):
            return (A - sp.diags(nl.slope(u))).tocsc()
    else:
        def jac(u):
            return A - np.diag(nl.slope(u))

    return MapHandle(op.n, func, jac, symmetric=True, name="sturm-al")


def table1_parameters(op: TridiagonalOperator) -> tuple[float, list[float]]:
    """l_minus = lambda_1/2 and the ladder l_plus^k, k = 1..n."""
    lam = op.eigenvalues()
    n = op.n
    ladder = [(lam[k - 1] + lam[k]) / 2 for k in range(1, n)]
    ladder.append(lam[n - 1] + lam[0] / 2)
    return lam[0] / 2, ladder


@dataclass
class OrthantCensus:
    solutions: SolutionSet
    consistent: int
    inconsistent: int
    singular: int
    nongeneric_hits: int = 0

    @property
    def total(self) -> int:
        return self.consistent + self.inconsistent + self.singular


def _orthant_label(positive: np.ndarray) -> str:
    return "".join("+" if p else "-" for p in positive)


def enumerate_pl_solutions(op, nl: PLNonlinearity, g, chunk: int = 4096, executor=None) -> OrthantCensus:
    """Solve (A - D^O) u = g in every orthant O and keep sign-consistent solutions.

    Orthants are enumerated in lexicographic order with '+' before '-' at
    each coordinate. A zero coordinate is consistent with both signs; the
    duplicate is removed by deduplication.
    """
    A = op.dense() if isinstance(op, TridiagonalOperator) else np.asarray(op, dtype=float)
    n = A.shape[0]
    if n > MAX_CENSUS_DIM:
        raise ValueError(f"census limited to n <= {MAX_CENSUS_DIM}")
    g = as_state(g, n)
    total = 1 << n
    bits = np.arange(n)[::-1]
    diag = np.arange(n)

    def run(start):
        idx = np.arange(start, min(start + chunk, total))
        positive = ((idx[:, None] >> bits) & 1) == 0
        M = np.broadcast_to(A, (len(idx), n, n)).copy()
        M[:, diag, diag] -= np.where(positive, nl.ell_plus, nl.ell_minus)
        sign, logdet = np.linalg.slogdet(M)
        cond_ok = (sign != 0) & np.isfinite(logdet)
        u = np.full((len(idx), n), np.nan)
        if np.any(cond_ok):
            u[cond_ok] = np.linalg.solve(M[cond_ok], np.broadcast_to(g, (int(cond_ok.sum()), n))[..., None])[..., 0]
        return idx, positive, cond_ok, u, M

    starts = range(0, total, chunk)
    results = executor.map(run, starts) if executor is not None else map(run, starts)
    sols = SolutionSet(dedupe_tol=1e-10)
    consistent = inconsistent = singular = nongeneric = 0
    for idx, positive, cond_ok, u, M in results:
        singular += int((~cond_ok).sum())
        if (~cond_ok).any():
            log.info("%d singular orthant matrices skipped", int((~cond_ok).sum()))
        ok = cond_ok & np.all(np.where(positive, u >= 0, u <= 0), axis=1)
        inconsistent += int((cond_ok & ~ok).sum())
        consistent += int(ok.sum())
        for j in np.flatnonzero(ok):
            if np.any(u[j] == 0):
                nongeneric += 1
                log.info("nongeneric hit: solution with a zero entry in orthant %s", _orthant_label(positive[j]))
            w = np.linalg.eigvalsh(M[j])
            res = float(np.linalg.norm(A @ u[j] - nl(u[j]) - g) / np.linalg.norm(g))
            sol = Solution(u[j].copy(), int(np.sum(w < 0)), res, _orthant_label(positive[j]), "census")
            # only zero-entry solutions can be claimed by two orthants
            sols.add(sol, check=bool(np.any(u[j] == 0)))
    return OrthantCensus(sols, consistent, inconsistent, singular, nongeneric)


def lazer_mckenna_seeds(op: TridiagonalOperator, nl: PLNonlinearity, t: float) -> tuple[np.ndarray, np.ndarray]:
    """The explicit positive and negative solutions of F(u) = -t*phi_1."""
    lam1 = op.eigenvalues()[0]
    if not (nl.ell_minus < lam1 < nl.ell_plus):
        raise EigenvalueStraddle(f"lambda_1 = {lam1} not in ({nl.ell_minus}, {nl.ell_plus})")
    if t <= 0:
        raise ValueError("t must be positive")
    phi = op.eigenvector(1)
    return t * phi / (nl.ell_plus - lam1), t * phi / (nl.ell_minus - lam1)


def slab_fold_test(op, nl: PLNonlinearity, u, zero_tol: float = 0.0) -> str:
    """Classify a point with exactly one zero entry: 'Fold', 'NotCritical' or 'Degenerate'."""
    A = op.dense() if isinstance(op, TridiagonalOperator) else np.asarray(op, dtype=float)
    u = np.asarray(u, dtype=float)
    zeros = np.flatnonzero(np.abs(u) <= zero_tol)
    if len(zeros) != 1:
        return "Degenerate"
    i = zeros[0]
    pieces = PiecewiseLinearStructure(A, nl.ell_minus, nl.ell_plus)
    pos = u > 0
    pos[i] = True
    s1 = np.linalg.slogdet(pieces.matrix(pos))[0]
    pos[i] = False
    s2 = np.linalg.slogdet(pieces.matrix(pos))[0]
    if s1 == 0 or s2 == 0:
        raise SingularAdjacent(f"adjacent orthant matrix singular at coordinate {i}")
    return "Fold" if s1 != s2 else "NotCritical"
