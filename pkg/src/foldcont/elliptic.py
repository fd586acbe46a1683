"""Semilinear Dirichlet problems -Lap(u) - f(u) = g on masked finite-difference grids.

Operators are stored as a stiffness/mass pair (S, M) with M diagonal, so
ingested finite-element matrices and finite-difference grids share one
code path: F(u) = S u - M f(u) is solved against the load M g. For the
5-point grid S is the unscaled stencil and M = h^2 I, which makes the
pencil spectrum equal to that of the fd Laplacian and the M-norm the
discrete L2 norm.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage
from scipy.optimize import brentq

from .core import MapHandle, SolutionSet, newton_solve
from .errors import BadFormat, ConvergenceFailure, DisconnectedDomain, NoInitialSolution, NotSymmetric
from .spectral import DENSE_LIMIT, stabilize_sign

log = logging.getLogger(__name__)


@dataclass
class GridDomain:
    """Interior nodes of a uniform grid on [0, nx+1]h x [0, ny+1]h, restricted by ``mask``."""

    nx: int
    ny: int
    spacing: float
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.mask is None:
            self.mask = np.ones((self.nx, self.ny), dtype=bool)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != (self.nx, self.ny):
            raise ValueError("mask shape must be (nx, ny)")
        if not self.mask.any():
            raise ValueError("grid has no interior node")
        _, k = ndimage.label(self.mask)
        if k != 1:
            raise DisconnectedDomain(f"mask has {k} connected components")

    @classmethod
    def square(cls, n: int, length: float = 1.0) -> "GridDomain":
        return cls(n, n, length / (n + 1))

    @classmethod
    def strip(cls, n: int, length: float = np.pi) -> "GridDomain":
        """One row of nodes: the 1-D Dirichlet problem on [0, length]."""
        return cls(n, 1, length / (n + 1))

    @classmethod
    def disk_with_hole(cls, n: int, radius: float = 1.0, hole_center=(-0.3, -0.3),
                       hole_radius: float = 0.2) -> "GridDomain":
        """Nodes of the (n+2)^2 lattice on [-radius, radius]^2 inside the disk and outside the hole."""
        h = 2 * radius / (n + 1)
        xs = -radius + h * np.arange(1, n + 1)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        inside = X**2 + Y**2 < radius**2
        hole = (X - hole_center[0]) ** 2 + (Y - hole_center[1]) ** 2 <= hole_radius**2
        return cls(n, n, h, inside & ~hole)

    @classmethod
    def square_with_hole(cls, n: int, hole: tuple[int, int, int, int], length: float = 1.0) -> "GridDomain":
        mask = np.ones((n, n), dtype=bool)
        i0, i1, j0, j1 = hole
        mask[i0:i1, j0:j1] = False
        return cls(n, n, length / (n + 1), mask)

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def coordinates(self) -> np.ndarray:
        I, J = np.nonzero(self.mask)
        return np.column_stack([(I + 1) * self.spacing, (J + 1) * self.spacing])

    def to_field(self, u) -> np.ndarray:
        out = np.full(self.mask.shape, np.nan)
        out[self.mask] = u
        return out


@dataclass
class SparseOperator:
    stiffness: sp.csr_matrix
    mass: np.ndarray  # lumped diagonal
    provenance: str = "fd-5point"
    grid: GridDomain | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        S = sp.csr_matrix(self.stiffness, dtype=float)
        n = S.shape[0]
        if S.shape != (n, n):
            raise BadFormat("operator must be square")
        asym = abs(S - S.T).max() if S.nnz else 0.0
        if asym > 1e-12 * max(1.0, abs(S).max()):
            raise NotSymmetric(f"max |S - S^T| = {asym:.3e}")
        self.stiffness = S
        self.mass = np.asarray(self.mass, dtype=float).reshape(-1)
        if self.mass.shape != (n,) or np.any(self.mass <= 0):
            raise BadFormat("mass must be a positive diagonal of matching size")

    @property
    def dimension(self) -> int:
        return self.stiffness.shape[0]

    @property
    def dense(self) -> bool:
        return self.dimension <= DENSE_LIMIT

    def nodal_matrix(self) -> sp.csr_matrix:
        """M^{-1} S, the operator acting on nodal values."""
        return sp.diags(1.0 / self.mass) @ self.stiffness

    def eigenpairs(self, m: int, shift: np.ndarray | None = None, vectors: bool = True):
        """Lowest m eigenpairs of (S - M diag(shift), M), vectors M-orthonormal."""
        n = self.dimension
        m = min(m, n)
        A = self.stiffness if shift is None else self.stiffness - sp.diags(self.mass * shift)
        if self.dense or m >= n - 1:
            # symmetric scaling by M^{-1/2} keeps a standard eigenproblem
            r = 1.0 / np.sqrt(self.mass)
            B = (A.toarray() * r[:, None]) * r[None, :]
            w, V = sla.eigh(B, subset_by_index=[0, m - 1])
            V = V * r[:, None]
        else:
            lower = -float(np.max(np.abs(shift))) if shift is not None else 0.0
            try:
                w, V = spla.eigsh(A.tocsc(), k=m, M=sp.diags(self.mass).tocsc(), sigma=lower - 1.0,
                                  which="LM", tol=1e-12)
            except spla.ArpackNoConvergence as exc:
                raise ConvergenceFailure(str(exc)) from exc
            order = np.argsort(w)
            w, V = w[order], V[:, order]
        return (w, V) if vectors else w

    def eigenvalues(self, m: int) -> np.ndarray:
        key = ("eig", m)
        if key not in self._cache:
            self._cache[key] = self.eigenpairs(m, vectors=False)
        return self._cache[key]

    def ground_state(self) -> tuple[float, np.ndarray]:
        """(lambda_1, phi_1) with phi_1 > 0 and phi_1^T M phi_1 = 1."""
        w, V = self.eigenpairs(1)
        phi = stabilize_sign(V[:, 0])
        phi = phi / np.sqrt(phi @ (self.mass * phi))
        if np.any(phi < -1e-10 * np.abs(phi).max()):
            log.warning("ground state changes sign; domain may be disconnected")
        return float(w[0]), phi

    def modes(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        w, V = self.eigenpairs(m)
        V = np.column_stack([stabilize_sign(V[:, i]) for i in range(V.shape[1])])
        V = V / np.sqrt(np.sum(V * V * self.mass[:, None], axis=0))
        return w, V


def build_fd_laplacian(grid: GridDomain) -> SparseOperator:
    """5-point Dirichlet Laplacian on the masked nodes (3-point stencil for a single row)."""
    mask = grid.mask
    idx = -np.ones(mask.shape, dtype=int)
    idx[mask] = np.arange(mask.sum())
    one_d = grid.ny == 1
    center = 2.0 if one_d else 4.0
    rows, cols, vals = [], [], []
    I, J = np.nonzero(mask)
    n = len(I)
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(np.full(n, center))
    shifts = [(1, 0), (-1, 0)] if one_d else [(1, 0), (-1, 0), (0, 1), (0, -1)]
    for di, dj in shifts:
        I2, J2 = I + di, J + dj
        ok = (I2 >= 0) & (I2 < mask.shape[0]) & (J2 >= 0) & (J2 < mask.shape[1])
        ok[ok] &= mask[I2[ok], J2[ok]]
        rows.append(idx[I[ok], J[ok]])
        cols.append(idx[I2[ok], J2[ok]])
        vals.append(-np.ones(int(ok.sum())))
    h = grid.spacing
    # stiffness scaled so that M = h^d I carries the measure
    d = 1 if one_d else 2
    S = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    S = S * (h ** (d - 2))
    return SparseOperator(S, np.full(n, h**d), "fd-5point", grid)


def export_operator(op: SparseOperator, path, mass_path=None) -> None:
    scipy.io.mmwrite(str(path), sp.coo_matrix(op.stiffness), symmetry="symmetric", precision=17)
    if mass_path is not None:
        scipy.io.mmwrite(str(mass_path), sp.coo_matrix(sp.diags(op.mass)), symmetry="symmetric", precision=17)


def ingest_operator(path, mass_path=None) -> SparseOperator:
    """Read a symmetric stiffness matrix (and optional diagonal mass) in Matrix Market format."""
    try:
        S = scipy.io.mmread(str(path))
    except (ValueError, OSError, IndexError) as exc:
        raise BadFormat(f"{path}: {exc}") from exc
    S = sp.csr_matrix(S, dtype=float)
    if S.shape[0] != S.shape[1]:
        raise BadFormat(f"{path}: matrix is not square")
    mass = np.ones(S.shape[0])
    if mass_path is not None:
        try:
            M = sp.csr_matrix(scipy.io.mmread(str(mass_path)), dtype=float)
        except (ValueError, OSError, IndexError) as exc:
            raise BadFormat(f"{mass_path}: {exc}") from exc
        if M.shape != S.shape:
            raise BadFormat("mass and stiffness sizes differ")
        off = M - sp.diags(M.diagonal())
        if off.nnz and abs(off).max() > 0:
            # consistent mass is lumped by row sums
            log.info("lumping a non-diagonal mass matrix")
        mass = np.asarray(M.sum(axis=1)).ravel()
    return SparseOperator(S, mass, "ingested")


def semilinear_map(op: SparseOperator, nl) -> MapHandle:
    """F(u) = S u - M f(u) with Jacobian S - M diag(f'(u))."""
    S = op.stiffness.tocsc()
    m = op.mass
    dense = op.dense
    Sd = S.toarray() if dense else None

    def func(u):
        return S @ u - m * nl(u)

    if dense:
        def jac(u):
            J = Sd.copy()
            J[np.diag_indices_from(J)] -= m * nl.slope(u)
            return J
    else:
        def jac(u):
            return (S - sp.diags(m * nl.slope(u))).tocsc()

    return MapHandle(op.dimension, func, jac, symmetric=True, name="semilinear")


@dataclass
class VerticalScan:
    base: np.ndarray
    direction: np.ndarray
    t: np.ndarray
    eigenvalues: np.ndarray  # shape (samples, m)
    crossings: list[list[float]]

    @property
    def crossing_count(self) -> int:
        return sum(len(c) for c in self.crossings)

    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.eigenvalues, axis=0) < 0))

    def write_csv(self, path) -> None:
        m = self.eigenvalues.shape[1]
        header = ",".join(["t"] + [f"lambda{i + 1}" for i in range(m)])
        np.savetxt(path, np.column_stack([self.t, self.eigenvalues]), delimiter=",", header=header,
                   comments="", fmt="%.17g")


def enclosed_count(op: SparseOperator, nl, m_max: int = 32) -> int:
    w = op.eigenvalues(min(m_max, op.dimension))
    return int(np.sum((w > nl.ell_minus) & (w < nl.ell_plus)))


def scan_samples(t_range, samples: int, spacing: str = "asinh", scale: float | None = None) -> np.ndarray:
    lo, hi = t_range
    if spacing == "linear":
        return np.linspace(lo, hi, samples)
    c = scale or max(1.0, 0.01 * max(abs(lo), abs(hi)))
    return c * np.sinh(np.linspace(np.arcsinh(lo / c), np.arcsinh(hi / c), samples))


def vertical_scan(op: SparseOperator, nl, base=None, t_range=(-1e4, 1e4), m: int | None = None,
                  samples: int = 201, spacing: str = "asinh", direction=None) -> VerticalScan:
    """Lowest m eigenvalues of DF(base + t*phi_1) over sampled t, with zero crossings bisected."""
    _, phi = op.ground_state()
    direction = phi if direction is None else np.asarray(direction, dtype=float)
    base = np.zeros(op.dimension) if base is None else np.asarray(base, dtype=float)
    if m is None:
        m = enclosed_count(op, nl) + 1
    ts = scan_samples(t_range, samples, spacing)

    def eigs(t):
        return op.eigenpairs(m, shift=nl.slope(base + t * direction), vectors=False)

    E = np.array([eigs(t) for t in ts])
    crossings = []
    for i in range(m):
        ci = []
        lam = E[:, i]
        for k in np.flatnonzero(np.sign(lam[:-1]) * np.sign(lam[1:]) < 0):
            ci.append(brentq(lambda t: eigs(t)[i], ts[k], ts[k + 1], xtol=1e-12 * (1 + abs(ts[k])), rtol=1e-14))
        crossings.append(ci)
    return VerticalScan(base, direction, ts, E, crossings)


def initial_solution(op: SparseOperator, nl, g, max_steps: int = 64) -> np.ndarray:
    """A first solution of S u - M f(u) = M g.

    Newton starts from the linearized negative seed -<g, phi_1>_M phi_1 / (lambda_1 - l_minus);
    if that fails, the load is ramped from 0 (where u = 0 solves) in adaptive steps.
    """
    F = semilinear_map(op, nl)
    lam1, phi = op.ground_state()
    rhs = op.mass * g
    c = float(phi @ (op.mass * g))
    seed = c * phi / (lam1 - nl.ell_minus)
    u, ok, _ = newton_solve(F, rhs, seed, tol=1e-14, max_iter=60)
    if ok:
        return u
    u = np.zeros(op.dimension)
    tau, dtau = 0.0, 0.05
    for _ in range(max_steps * 10):
        if tau >= 1.0:
            break
        trial = min(1.0, tau + dtau)
        v, ok, _ = newton_solve(F, trial * rhs, u, tol=1e-13, max_iter=30)
        if ok:
            u, tau = v, trial
            dtau = min(2 * dtau, 0.25)
        else:
            dtau *= 0.5
            if dtau < 1e-8:
                break
    if tau < 1.0:
        raise NoInitialSolution("load homotopy stalled")
    u, ok, _ = newton_solve(F, rhs, u, tol=1e-14, max_iter=30)
    return u


@dataclass
class SoliminiResult:
    solutions: SolutionSet
    scan: VerticalScan | None
    diagram: object
    initial: np.ndarray
    enclosed: int


def run_solimini_experiment(op: SparseOperator, nl, t_load: float, cfg=None, line_coeffs=(0.8, -0.1, -0.1),
                            s_range=(-1000.0, 1000.0), root_step: float = 0.5, scan: bool = True,
                            scan_samples_count: int = 201, residue_threshold: float = 1e-10):
    """Solve F(u) = -t_load*phi_1 by a diagram along P0 + s(sum_i c_i phi_i)."""
    from .bifurcation import LineSpec, build_diagram
    from .continuation import StepConfig

    cfg = cfg or StepConfig(initial_step=1.0, max_step=20.0, min_step=1e-6, newton_tol=1e-11)
    _, V = op.modes(len(line_coeffs))
    lam1, phi = op.ground_state()
    g = -t_load * phi
    F = semilinear_map(op, nl)
    P0 = initial_solution(op, nl, g)
    d = sum(c * V[:, i] for i, c in enumerate(line_coeffs))
    line = LineSpec(P0, d, tuple(s_range), "solimini")
    diagram = build_diagram(F, line, op.mass * g, cfg, root_step=root_step, residue_threshold=residue_threshold)
    vs = None
    if scan:
        vs = vertical_scan(op, nl, P0, t_range=s_range, samples=scan_samples_count, direction=d)
    return SoliminiResult(diagram.solutions, vs, diagram, P0, enclosed_count(op, nl))


def annulus_test_operator(n: int = 12, targets=(9.0988, 16.3218, 22.9346, 30.4949)) -> SparseOperator:
    """fd operator on the disk-with-hole mask whose lowest eigenvalues are moved onto ``targets``.

    The correction is a symmetric rank-len(targets) update in the M-inner
    product, so the rest of the spectrum and all eigenvectors are unchanged.
    """
    base = build_fd_laplacian(GridDomain.disk_with_hole(n))
    k = len(targets)
    # rescale first (a smaller copy of the domain) so the next eigenvalue clears the targets
    c = targets[0] / base.eigenvalues(1)[0]
    base = SparseOperator(base.stiffness * c, base.mass, "fd-5point", base.grid)
    w, V = base.eigenpairs(k + 1)
    if w[k] <= max(targets):
        raise ValueError("targets must stay below the next eigenvalue")
    MV = V[:, :k] * base.mass[:, None]
    S = base.stiffness.toarray() + MV @ np.diag(np.asarray(targets) - w[:k]) @ MV.T
    S = 0.5 * (S + S.T)
    return SparseOperator(sp.csr_matrix(S), base.mass.copy(), "ingested", base.grid)
