"""Symmetric eigenvalue tools: Morse indices, smallest-modulus eigenpairs,
and the rank-one shifted solve used by the fold predictor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceFailure, SingularShiftedOperator

DENSE_LIMIT = 512


@dataclass(frozen=True)
class EigenProbe:
    lambda_s: float
    phi_s: np.ndarray
    gap: float


@dataclass(frozen=True)
class SpectrumSlice:
    eigenvalues: np.ndarray
    morse_index: int


def stabilize_sign(phi: np.ndarray, prev: np.ndarray | None = None) -> np.ndarray:
    """Fix the sign of an eigenvector.

    Without a reference, the entry of largest magnitude is made positive.
    With one, the sign maximizing <phi, prev> wins.
    """
    if prev is not None:
        return -phi if np.dot(phi, prev) < 0 else phi
    i = int(np.argmax(np.abs(phi)))
    return -phi if phi[i] < 0 else phi


def _is_small(J) -> bool:
    return not sp.issparse(J) or J.shape[0] <= DENSE_LIMIT


def _dense(J) -> np.ndarray:
    return J.toarray() if sp.issparse(J) else np.asarray(J, dtype=float)


def full_spectrum(J) -> SpectrumSlice:
    w = sla.eigh(_dense(J), eigvals_only=True)
    return SpectrumSlice(np.sort(w), int(np.sum(w < 0)))


def lowest_eigenvalues(J, m: int, lower_bound: float | None = None) -> np.ndarray:
    """The m algebraically smallest eigenvalues, sorted ascending."""
    n = J.shape[0]
    m = min(m, n)
    if _is_small(J) or m >= n - 1:
        return sla.eigh(_dense(J), eigvals_only=True, subset_by_index=[0, m - 1])
    if lower_bound is None:
        lower_bound = -spla.norm(J, 1)
    sigma = lower_bound - 1.0
    try:
        w = spla.eigsh(J.tocsc(), k=m, sigma=sigma, which="LM", return_eigenvectors=False, tol=1e-12)
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return np.sort(w)


def smallest_modulus_eigenpair(J, prev_phi: np.ndarray | None = None, max_iter: int | None = None) -> EigenProbe:
    """Eigenpair (lambda_s, phi_s) of a symmetric J minimizing |lambda|."""
    n = J.shape[0]
    if n == 1:
        return EigenProbe(float(_dense(J)[0, 0]), np.ones(1), np.inf)
    if _is_small(J):
        w, V = sla.eigh(_dense(J))
        order = np.argsort(np.abs(w))
        i = order[0]
        gap = float(abs(w[order[1]]) - abs(w[i])) if n > 1 else np.inf
        phi = V[:, i]
    else:
        k = min(3, n - 1)
        try:
            w, V = spla.eigsh(J.tocsc(), k=k, sigma=0.0, which="LM", tol=1e-13, maxiter=max_iter)
        except (spla.ArpackNoConvergence, RuntimeError) as exc:
            # sigma=0 fails when J is exactly singular; shift slightly
            try:
                w, V = spla.eigsh(J.tocsc(), k=k, sigma=1e-9, which="LM", tol=1e-13, maxiter=max_iter)
            except (spla.ArpackNoConvergence, RuntimeError) as exc2:
                raise ConvergenceFailure(str(exc2)) from exc
        order = np.argsort(np.abs(w))
        i = order[0]
        gap = float(abs(w[order[1]]) - abs(w[i]))
        phi = V[:, i]
        # one Rayleigh refinement keeps the residual at roundoff level
        Jphi = J @ phi
        w_i = float(phi @ Jphi)
        w = np.array(w, dtype=float)
        w[i] = w_i
    phi = phi / np.linalg.norm(phi)
    phi = stabilize_sign(phi, prev_phi)
    return EigenProbe(float(w[i]), phi, gap)


def det_sign(J) -> int:
    """Sign of det J (0 when singular to working precision)."""
    if sp.issparse(J) and J.shape[0] > DENSE_LIMIT:
        try:
            lu = spla.splu(J.tocsc(), permc_spec="COLAMD", diag_pivot_thresh=1.0)
        except RuntimeError:
            return 0
        d = lu.U.diagonal()
        if np.any(d == 0):
            return 0
        s = int(np.prod(np.sign(d)))
        return s * _perm_parity(lu.perm_r) * _perm_parity(lu.perm_c)
    s, logdet = np.linalg.slogdet(_dense(J))
    return int(s) if np.isfinite(logdet) else 0


def _perm_parity(p: np.ndarray) -> int:
    p = np.asarray(p)
    seen = np.zeros(len(p), dtype=bool)
    parity = 1
    for i in range(len(p)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            parity = -parity
    return parity


def solve_linear(J, rhs: np.ndarray) -> np.ndarray:
    if sp.issparse(J):
        return spla.spsolve(J.tocsc(), rhs)
    return np.linalg.solve(J, rhs)


def rank_one_shifted_solve(J, phi: np.ndarray, alpha: float, rhs: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Solve (J + alpha phi phi^T) x = rhs.

    Dense J is factorized directly. Sparse J goes through the bordered system
    [[J, phi], [phi^T, -1/alpha]] so the rank-one term never fills in.
    """
    phi = np.asarray(phi, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = phi.shape[0]
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    try:
        if sp.issparse(J):
            B = sp.bmat([[J, sp.csc_matrix(phi[:, None])],
                         [sp.csc_matrix(phi[None, :]), sp.csc_matrix([[-1.0 / alpha]])]], format="csc")
            lu = spla.splu(B)
            x = lu.solve(np.append(rhs, 0.0))[:n]
        else:
            S = np.asarray(J, dtype=float) + alpha * np.outer(phi, phi)
            lu, piv = sla.lu_factor(S, check_finite=True)
            if np.any(np.abs(np.diag(lu)) < np.finfo(float).eps * max(1.0, np.abs(S).max()) * n):
                raise SingularShiftedOperator("shifted operator is numerically singular")
            x = sla.lu_solve((lu, piv), rhs)
    except (RuntimeError, sla.LinAlgError, ValueError) as exc:
        raise SingularShiftedOperator(str(exc)) from exc
    resid = J @ x + alpha * phi * np.dot(phi, x) - rhs
    if not np.all(np.isfinite(x)) or np.linalg.norm(resid) > tol * max(np.linalg.norm(rhs), 1e-300) + 1e-14:
        raise SingularShiftedOperator("shifted solve failed its residual check")
    return x


def morse_index(J, bound: int | None = None) -> int:
    """Number of strictly negative eigenvalues of a symmetric J."""
    if _is_small(J):
        return full_spectrum(J).morse_index
    m = bound + 1 if bound is not None else min(J.shape[0] - 2, 16)
    w = lowest_eigenvalues(J, m)
    return int(np.sum(w < 0))
