"""Predictor-corrector path following for H(u, t) = F(u) - gamma(t) = 0.

Away from the critical set the tangent comes from one linear solve with
DF(u). Near a fold (small smallest-modulus eigenvalue of a symmetric
Jacobian) it comes from the rank-one shifted operator
S = DF + alpha*phi*phi^T, which stays invertible through the fold.
Planar maps use the closed-form kernel of the 2x3 matrix DH instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import MapHandle, as_state
from .errors import (
    FoldcontError,
    MaxIterations,
    NearSingularJacobian,
    NewtonDivergence,
    NonFinite,
    TransversalityFailure,
)
from .spectral import (
    DENSE_LIMIT,
    EigenProbe,
    det_sign,
    rank_one_shifted_solve,
    smallest_modulus_eigenpair,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CodomainPath:
    gamma: Callable[[float], np.ndarray]
    gamma_prime: Callable[[float], np.ndarray]
    t_range: tuple[float, float]

    @classmethod
    def segment(cls, a, b, t_range=(0.0, 1.0)) -> "CodomainPath":
        """gamma(t) = a + t (b - a)."""
        a = np.asarray(a, dtype=float)
        d = np.asarray(b, dtype=float) - a
        return cls(lambda t: a + t * d, lambda t: d, t_range)

    @classmethod
    def ray(cls, a, direction, t_range) -> "CodomainPath":
        a = np.asarray(a, dtype=float)
        d = np.asarray(direction, dtype=float)
        return cls(lambda t: a + t * d, lambda t: d, t_range)

    @classmethod
    def image_of_line(cls, F: MapHandle, base, direction, s_range) -> "CodomainPath":
        """gamma(s) = F(base + s*direction), the image of a domain line."""
        base = np.asarray(base, dtype=float)
        d = np.asarray(direction, dtype=float)

        def gp(s):
            return F.jacobian(base + s * d) @ d

        return cls(lambda s: F(base + s * d), gp, s_range)


@dataclass
class StepConfig:
    initial_step: float = 0.05
    min_step: float = 1e-9
    max_step: float = 0.5
    newton_tol: float = 1e-10
    newton_max_iter: int = 12
    fold_band: float | None = None  # None: 0.05 * spectral gap
    fold_tol: float = 1e-8
    max_steps: int = 20000
    alpha: float = 1.0
    max_angle_cos: float = 0.9
    use_spectral: bool = True

    def __post_init__(self):
        if not (0 < self.min_step <= self.initial_step <= self.max_step):
            raise ValueError("need 0 < min_step <= initial_step <= max_step")
        if self.fold_band is not None and not self.fold_tol < self.fold_band:
            raise ValueError("need fold_tol < fold_band")

    def band(self, gap: float) -> float:
        if self.fold_band is not None:
            return self.fold_band
        return 0.05 * gap if np.isfinite(gap) else 0.05


@dataclass
class Tangent:
    u_dot: np.ndarray
    t_dot: float
    mode: str = "Regular"

    def vector(self) -> np.ndarray:
        return np.append(self.u_dot, self.t_dot)

    def normalized(self) -> "Tangent":
        v = self.vector()
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise TransversalityFailure("zero tangent")
        v = v / nrm
        return Tangent(v[:-1], float(v[-1]), self.mode)

    def flipped(self) -> "Tangent":
        return Tangent(-self.u_dot, -self.t_dot, self.mode)


@dataclass
class TracePoint:
    u: np.ndarray
    t: float
    lambda_s: float = np.nan
    orientation: int = 0
    classification: str = "Regular"
    morse_index: int | None = None
    probe: EigenProbe | None = field(default=None, repr=False, compare=False)


@dataclass
class FoldEvent:
    u: np.ndarray
    t: float
    phi: np.ndarray
    lambda_s: float
    kind: str = "Fold"  # or "Degenerate"
    transversal: bool = True
    derivative: float = np.nan


@dataclass
class TraceResult:
    points: list[TracePoint]
    folds: list[FoldEvent]
    terminal: str
    newton_iterations: int = 0
    notes: list[str] = field(default_factory=list)


def _probe(F: MapHandle, J, prev_phi=None) -> EigenProbe:
    """Fold indicator at a point: eigenpair for symmetric maps, det-based otherwise."""
    if F.symmetric:
        return smallest_modulus_eigenpair(J, prev_phi)
    Jd = J.toarray() if sp.issparse(J) else J
    if F.dimension == 2:
        det = float(np.linalg.det(Jd))
        k = planar_kernel(Jd)
        return EigenProbe(det, k, np.inf)
    U, s, Vt = np.linalg.svd(Jd)
    return EigenProbe(float(np.sign(np.linalg.det(Jd)) * s[-1]), Vt[-1], float(s[-2] - s[-1]) if len(s) > 1 else np.inf)


def planar_kernel(J: np.ndarray) -> np.ndarray:
    """Unit vector spanning (approximately) ker J for a 2x2 J, from the adjugate."""
    rows = [np.array([-J[0, 1], J[0, 0]]), np.array([-J[1, 1], J[1, 0]])]
    k = max(rows, key=np.linalg.norm)
    nrm = np.linalg.norm(k)
    return k / nrm if nrm > 0 else np.array([1.0, 0.0])


def planar_cokernel(J: np.ndarray) -> np.ndarray:
    """Unit psi with psi^T J ~ 0 for a 2x2 J."""
    return planar_kernel(J.T)


def regular_tangent(F: MapHandle, path: CodomainPath, u, t: float, J=None, probe: EigenProbe | None = None,
                    band: float | None = None) -> Tangent:
    """(u_dot, t_dot) = (DF(u)^{-1} gamma'(t), 1)."""
    u = as_state(u, F.dimension)
    J = F.jacobian(u) if J is None else J
    if probe is not None and band is not None and abs(probe.lambda_s) <= band:
        raise NearSingularJacobian(f"|lambda_s| = {abs(probe.lambda_s):.3e} inside fold band")
    gp = np.asarray(path.gamma_prime(t), dtype=float)
    try:
        if sp.issparse(J):
            ud = spla.spsolve(J.tocsc(), gp)
        else:
            ud = np.linalg.solve(J, gp)
    except (np.linalg.LinAlgError, RuntimeError) as exc:
        raise NearSingularJacobian(str(exc)) from exc
    if not np.all(np.isfinite(ud)):
        raise NearSingularJacobian("singular Jacobian")
    return Tangent(ud, 1.0, "Regular")


def spectral_tangent(F: MapHandle, path: CodomainPath, u, t: float, J=None, probe: EigenProbe | None = None,
                     alpha: float = 1.0) -> Tangent:
    """Tangent near a fold from S u_dot = -lam gamma' - alpha <phi, gamma'> phi.

    The solution satisfies DF(u) u_dot = -lam gamma'(t), so (u_dot, -lam)
    lies in ker DH(u, t).
    """
    if not F.symmetric:
        raise ValueError("spectral tangent needs a symmetric Jacobian")
    u = as_state(u, F.dimension)
    J = F.jacobian(u) if J is None else J
    probe = smallest_modulus_eigenpair(J) if probe is None else probe
    lam, phi = probe.lambda_s, probe.phi_s
    gp = np.asarray(path.gamma_prime(t), dtype=float)
    gnorm = np.linalg.norm(gp)
    c = float(np.dot(phi, gp))
    if abs(c) <= 1e-10 * gnorm and abs(lam) <= 1e-10 * max(1.0, _scale(J)):
        raise TransversalityFailure("gamma'(t) lies in Ran DF(u) at a critical point")
    rhs = -lam * gp - alpha * c * phi
    ud = rank_one_shifted_solve(J, phi, alpha, rhs)
    tan = Tangent(ud, -lam, "Spectral")
    if np.linalg.norm(tan.vector()) <= 1e-12 * max(gnorm, 1e-300):
        raise TransversalityFailure("degenerate tangent")
    return tan


def planar_tangent(F: MapHandle, path: CodomainPath, u, t: float, J=None) -> Tangent:
    """Kernel of the 2x3 matrix [DF | -gamma'] as a cross product of its rows."""
    u = as_state(u, 2)
    J = F.dense_jacobian(u) if J is None else J
    gp = np.asarray(path.gamma_prime(t), dtype=float)
    M = np.column_stack([J, -gp])
    k = np.cross(M[0], M[1])
    if np.linalg.norm(k) <= 1e-14 * max(1.0, np.abs(M).max() ** 2):
        raise TransversalityFailure("DH(u, t) is not surjective")
    return Tangent(k[:2], float(k[2]), "Planar")


def _kernel_tangent(F: MapHandle, path: CodomainPath, u, t: float, J=None) -> Tangent:
    J = F.dense_jacobian(u) if J is None else (J.toarray() if sp.issparse(J) else J)
    gp = np.asarray(path.gamma_prime(t), dtype=float)
    M = np.column_stack([J, -gp])
    _, s, Vt = np.linalg.svd(M)
    k = Vt[-1]
    return Tangent(k[:-1], float(k[-1]), "Kernel")


def _scale(J) -> float:
    if sp.issparse(J):
        return float(abs(J).max())
    return float(np.abs(J).max()) if J.size else 1.0


def compute_tangent(F: MapHandle, path: CodomainPath, u, t: float, cfg: StepConfig, J=None,
                    probe: EigenProbe | None = None) -> Tangent:
    J = F.jacobian(u) if J is None else J
    if F.planar:
        return planar_tangent(F, path, u, t, J if not sp.issparse(J) else J.toarray())
    if not F.symmetric:
        return _kernel_tangent(F, path, u, t, J)
    probe = _probe(F, J) if probe is None else probe
    band = cfg.band(probe.gap)
    if cfg.use_spectral and abs(probe.lambda_s) <= band and abs(probe.lambda_s) < 1.0:
        if probe.phi_s is None:
            probe = _probe(F, J)
        try:
            return spectral_tangent(F, path, u, t, J, probe, cfg.alpha)
        except TransversalityFailure:
            raise
        except FoldcontError:
            pass
    return regular_tangent(F, path, u, t, J)


def _orient(tan: Tangent, ref: np.ndarray | None, direction: int) -> Tangent:
    tan = tan.normalized()
    if ref is not None:
        return tan.flipped() if np.dot(tan.vector(), ref) < 0 else tan
    if tan.t_dot * direction < 0 or (tan.t_dot == 0 and direction < 0):
        return tan.flipped()
    return tan


def _residual_scale(path: CodomainPath, t: float) -> float:
    return 1.0 + float(np.linalg.norm(path.gamma(t)))


def _bordered_solve(J, gp, normal_u, normal_t, r1, r2):
    n = len(normal_u)
    if sp.issparse(J):
        B = sp.bmat([[J, sp.csc_matrix(-gp[:, None])],
                     [sp.csc_matrix(normal_u[None, :]), sp.csc_matrix([[normal_t]])]], format="csc")
        x = spla.spsolve(B, np.append(r1, r2))
    else:
        B = np.empty((n + 1, n + 1))
        B[:n, :n] = J
        B[:n, n] = -gp
        B[n, :n] = normal_u
        B[n, n] = normal_t
        x = np.linalg.solve(B, np.append(r1, r2))
    return x[:n], float(x[n])


def correct(F: MapHandle, path: CodomainPath, u_pred, t_pred: float, tangent: Tangent, cfg: StepConfig,
            classify: bool = True) -> tuple[TracePoint, int]:
    """Newton on {F(u) = gamma(t), <(u - u_pred, t - t_pred), tangent> = 0}.

    Convergence: ||F(u) - gamma(t)|| <= newton_tol * (1 + ||gamma(t)||).
    Returns the corrected point and the number of Newton iterations.
    """
    u = as_state(u_pred, F.dimension).copy()
    t = float(t_pred)
    nu, nt = tangent.u_dot, tangent.t_dot
    u_pred = u.copy()
    prev = np.inf
    grow = 0
    for it in range(cfg.newton_max_iter + 1):
        try:
            r = F(u) - path.gamma(t)
        except NonFinite as exc:
            raise NewtonDivergence(str(exc)) from exc
        rn = float(np.linalg.norm(r))
        c = float(np.dot(u - u_pred, nu) + (t - t_pred) * nt)
        if rn <= cfg.newton_tol * _residual_scale(path, t) and abs(c) <= 1e-8 * (1 + np.linalg.norm(u)):
            pt = TracePoint(u, t)
            if classify:
                annotate(F, pt, cfg)
            return pt, it
        if it == cfg.newton_max_iter:
            break
        if rn > 2 * prev:
            grow += 1
            if grow >= 2:
                raise NewtonDivergence(f"residual grew to {rn:.3e}")
        prev = rn
        J = F.jacobian(u)
        try:
            du, dt = _bordered_solve(J, np.asarray(path.gamma_prime(t), dtype=float), nu, nt, -r, -c)
        except (np.linalg.LinAlgError, RuntimeError) as exc:
            raise NewtonDivergence(str(exc)) from exc
        if not (np.all(np.isfinite(du)) and np.isfinite(dt)):
            raise NewtonDivergence("non-finite Newton update")
        u = u + du
        t = t + dt
    raise MaxIterations(f"corrector did not converge in {cfg.newton_max_iter} iterations")


def annotate(F: MapHandle, pt: TracePoint, cfg: StepConfig, J=None, prev_phi=None) -> EigenProbe:
    """Fill lambda_s, orientation, Morse index and classification of ``pt``.

    For small symmetric problems the eigenvalues alone are computed here;
    phi_s is left unset and recomputed on demand, since only the spectral
    tangent needs it.
    """
    J = F.jacobian(pt.u) if J is None else J
    if F.symmetric and F.dimension > 1 and (not sp.issparse(J) or J.shape[0] <= DENSE_LIMIT):
        w = np.linalg.eigvalsh(J.toarray() if sp.issparse(J) else J)
        order = np.argsort(np.abs(w))
        i = order[0]
        probe = EigenProbe(float(w[i]), None, float(abs(w[order[1]]) - abs(w[i])))
        pt.morse_index = int(np.sum(w < 0))
        pt.orientation = 0 if w[i] == 0.0 else (-1 if pt.morse_index % 2 else 1)
    else:
        probe = _probe(F, J, prev_phi)
        pt.orientation = det_sign(J) if F.symmetric else int(np.sign(probe.lambda_s))
    pt.lambda_s = probe.lambda_s
    pt.probe = probe
    band = cfg.band(probe.gap)
    lam = abs(probe.lambda_s)
    pt.classification = "FoldNode" if lam <= cfg.fold_tol else ("NearFold" if lam <= band else "Regular")
    return probe


def fold_derivative(F: MapHandle, u, phi, eps: float | None = None) -> float:
    """Directional derivative of the fold indicator along phi (central differences).

    Symmetric maps use lambda_s tracked by continuity; planar maps use det DF.
    """
    u = np.asarray(u, dtype=float)
    eps = 1e-6 * (1.0 + np.linalg.norm(u)) if eps is None else eps
    if F.symmetric:
        lp = smallest_modulus_eigenpair(F.jacobian(u + eps * phi), phi).lambda_s
        lm = smallest_modulus_eigenpair(F.jacobian(u - eps * phi), phi).lambda_s
    else:
        lp = float(np.linalg.det(F.dense_jacobian(u + eps * phi)))
        lm = float(np.linalg.det(F.dense_jacobian(u - eps * phi)))
    return (lp - lm) / (2 * eps)


def make_fold_event(F: MapHandle, path: CodomainPath | None, pt: TracePoint, cfg: StepConfig,
                    gamma_prime=None) -> FoldEvent:
    J = F.jacobian(pt.u)
    probe = _probe(F, J)
    phi = probe.phi_s
    if gamma_prime is None and path is not None:
        gamma_prime = path.gamma_prime(pt.t)
    transversal = True
    if gamma_prime is not None:
        gp = np.asarray(gamma_prime, dtype=float)
        if F.symmetric:
            psi = phi
        elif F.dimension == 2:
            psi = planar_cokernel(J.toarray() if sp.issparse(J) else J)
        else:
            U, s, Vt = np.linalg.svd(J.toarray() if sp.issparse(J) else J)
            psi = U[:, -1]
        transversal = abs(np.dot(psi, gp)) > 1e-6 * max(np.linalg.norm(gp), 1e-300)
    kind = "Fold"
    deriv = np.nan
    if F.pieces is None:
        deriv = fold_derivative(F, pt.u, phi)
        if abs(deriv) <= 1e-6:
            kind = "Degenerate"
        if F.symmetric and F.dimension > 1 and np.isfinite(probe.gap) and probe.gap <= cfg.fold_tol:
            kind = "Degenerate"
    return FoldEvent(pt.u.copy(), pt.t, phi, probe.lambda_s, kind, transversal, deriv)


def locate_fold(F: MapHandle, path: CodomainPath, a: TracePoint, b: TracePoint, cfg: StepConfig,
                max_iter: int = 80) -> TracePoint:
    """Bisect along the solution curve between points of opposite orientation."""
    for _ in range(max_iter):
        va = np.append(a.u, a.t)
        vb = np.append(b.u, b.t)
        sec = vb - va
        nrm = np.linalg.norm(sec)
        if nrm <= 1e-13 * (1 + np.linalg.norm(va)):
            break
        mid = 0.5 * (va + vb)
        tan = Tangent(sec[:-1] / nrm, float(sec[-1] / nrm))
        try:
            m, _ = correct(F, path, mid[:-1], mid[-1], tan, cfg)
        except FoldcontError:
            break
        if abs(m.lambda_s) <= cfg.fold_tol:
            return _polish(F, path, m, tan, cfg)
        if m.orientation == a.orientation:
            a = m
        else:
            b = m
    return a if abs(a.lambda_s) <= abs(b.lambda_s) else b


def _polish(F, path, pt, tan, cfg):
    """Extra Newton steps at a fold point so t_c is accurate beyond newton_tol."""
    from dataclasses import replace

    tight = replace(cfg, newton_tol=max(cfg.newton_tol * 1e-6, 1e-16), newton_max_iter=4)
    try:
        q, _ = correct(F, path, pt.u, pt.t, tan, tight)
    except FoldcontError:
        return pt
    return q if abs(q.lambda_s) <= cfg.fold_tol else pt


def trace(F: MapHandle, path: CodomainPath, start: TracePoint, direction: int, cfg: StepConfig,
          initial_tangent: Tangent | None = None,
          stop: Callable[[TracePoint, TracePoint], str | None] | None = None) -> TraceResult:
    """Adaptive predictor-corrector sweep from ``start`` until t leaves t_range.

    Every change of orientation (sign det DF) between accepted points is
    bisected and reported as a FoldEvent. ``stop(prev, new)`` may end the
    trace early by returning a terminal label.
    """
    t_lo, t_hi = path.t_range
    pt = TracePoint(as_state(start.u, F.dimension).copy(), float(start.t))
    annotate(F, pt, cfg)
    points = [pt]
    folds: list[FoldEvent] = []
    notes: list[str] = []
    newton_its = 0
    h = cfg.initial_step
    try:
        tan = compute_tangent(F, path, pt.u, pt.t, cfg, probe=pt.probe)
    except FoldcontError as exc:
        return TraceResult(points, folds, "StepUnderflow", 0, [f"no initial tangent: {exc}"])
    ref = initial_tangent.normalized().vector() if initial_tangent is not None else None
    tan = _orient(tan, ref, direction)
    # without the fold tangent, t only moves one way (natural parametrization)
    natural = F.symmetric and not F.planar and not cfg.use_spectral
    terminal = "MaxSteps"
    steps = 0
    while steps < cfg.max_steps:
        if not (t_lo <= pt.t <= t_hi):
            terminal = "RangeExhausted"
            break
        steps += 1
        u_pred = pt.u + h * tan.u_dot
        t_pred = pt.t + h * tan.t_dot
        try:
            new, its = correct(F, path, u_pred, t_pred, tan, cfg)
            newton_its += its
            new_tan = _orient(compute_tangent(F, path, new.u, new.t, cfg, probe=new.probe),
                              None if natural else tan.vector(), direction)
        except FoldcontError as exc:
            h *= 0.5
            if h < cfg.min_step:
                terminal = "StepUnderflow"
                notes.append(f"step underflow at t={pt.t:.6g}: {exc}")
                log.info("trace truncated: %s", exc)
                break
            continue
        if natural and np.dot(new_tan.vector(), tan.vector()) < 0:
            h *= 0.5
            if h < cfg.min_step:
                terminal = "StepUnderflow"
                notes.append(f"regular tangent reverses at t={pt.t:.6g}; fold not passable")
                break
            continue
        chord = np.append(new.u - pt.u, new.t - pt.t)
        cn = np.linalg.norm(chord)
        if (np.dot(new_tan.vector(), tan.vector()) < cfg.max_angle_cos
                or (cn > 0 and np.dot(chord / cn, tan.vector()) < cfg.max_angle_cos)) and h > cfg.min_step:
            h *= 0.5
            continue
        jump = (new.morse_index is not None and pt.morse_index is not None
                and abs(new.morse_index - pt.morse_index) > 1)
        if jump and h > 4 * cfg.min_step:
            h *= 0.5
            continue
        if new.orientation != pt.orientation and new.orientation != 0 and pt.orientation != 0:
            c = locate_fold(F, path, pt, new, cfg)
            ev = make_fold_event(F, path, c, cfg)
            if jump:
                ev.kind = "Degenerate"
            folds.append(ev)
            c.classification = "FoldNode"
            points.append(c)
        points.append(new)
        if stop is not None:
            label = stop(pt, new)
            if label:
                terminal = label
                pt, tan = new, new_tan
                break
        pt, tan = new, new_tan
        if its <= 3:
            h = min(2 * h, cfg.max_step)
    return TraceResult(points, folds, terminal, newton_its, notes)


def write_trace_csv(path_or_file, points: list[TracePoint]) -> None:
    """CSV columns: t, u1..un, lambda_s, classification."""
    import csv

    n = len(points[0].u) if points else 0
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"u{i + 1}" for i in range(n)] + ["lambda_s", "classification"])
        for p in points:
            w.writerow([repr(float(p.t))] + [repr(float(x)) for x in p.u] + [repr(float(p.lambda_s)), p.classification])
    finally:
        if own:
            fh.close()
