"""Plane maps: critical curves, flowers, and brute-force preimage counts.

All built-in maps have evaluators that broadcast over a leading axis of
size 2, so multistart Newton runs on every start at once.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import MapHandle, as_state
from .errors import ComponentBudgetExceeded, SeedNotNearCritical

log = logging.getLogger(__name__)

DEFAULT_BOX = (-4.0, 4.0, -4.0, 4.0)


def _planar(name, func, jac, det, **meta) -> MapHandle:
    return MapHandle(2, func, jac, symmetric=False, name=name, det=det, meta={"vectorized": True, **meta})


def circle_fold_map() -> MapHandle:
    """(x^2 - y^2 + x, 2xy - y); critical set is the circle of radius 1/2."""

    def f(u):
        x, y = u[0], u[1]
        return np.array([x * x - y * y + x, 2 * x * y - y])

    def j(u):
        x, y = u[0], u[1]
        return np.array([[2 * x + 1, -2 * y], [2 * y, 2 * x - 1]])

    def det(u):
        x, y = u[0], u[1]
        return 4 * x * x + 4 * y * y - 1

    return _planar("circle-fold", f, j, det)


def pleat_map() -> MapHandle:
    """(cos x - x^2 cos x + 2x sin x, y); critical set is x = k*pi."""

    def f(u):
        x, y = u[0], u[1]
        return np.array([np.cos(x) - x * x * np.cos(x) + 2 * x * np.sin(x), y + 0 * x])

    def j(u):
        x = u[0]
        z = 0 * x
        return np.array([[(1 + x * x) * np.sin(x), z], [z, z + 1.0]])

    def det(u):
        x = u[0]
        return (1 + x * x) * np.sin(x)

    return _planar("pleat", f, j, det)


def cubic_map(a: float = 2.4) -> MapHandle:
    """z^3 + a*conj(z)^2 + z in real coordinates."""

    def f(u):
        x, y = u[0], u[1]
        return np.array([x**3 - 3 * x * y * y + a * (x * x - y * y) + x,
                         3 * x * x * y - y**3 - 2 * a * x * y + y])

    def j(u):
        x, y = u[0], u[1]
        fx = 3 * x * x - 3 * y * y + 1
        fy = 6 * x * y
        # holomorphic part p = 3z^2 + 1, antiholomorphic part q = 2a*conj(z)
        return np.array([[fx + 2 * a * x, -fy - 2 * a * y],
                         [fy - 2 * a * y, fx - 2 * a * x]])

    def det(u):
        x, y = u[0], u[1]
        p2 = (3 * x * x - 3 * y * y + 1) ** 2 + (6 * x * y) ** 2
        return p2 - 4 * a * a * (x * x + y * y)

    return _planar("cubic", f, j, det, a=a)


def square_map() -> MapHandle:
    """(x^2, y^2): the non-generic example whose boundary values jump by four."""

    def f(u):
        return np.array([u[0] ** 2, u[1] ** 2])

    def j(u):
        z = 0 * u[0]
        return np.array([[2 * u[0], z], [z, 2 * u[1]]])

    def det(u):
        return 4 * u[0] * u[1]

    return _planar("square", f, j, det)


def linear_planar(A) -> MapHandle:
    A = np.asarray(A, dtype=float)

    def f(u):
        return np.tensordot(A, u, axes=1)

    def j(u):
        u = np.asarray(u)
        return A if u.ndim == 1 else np.broadcast_to(A[..., None], (2, 2) + u.shape[1:])

    def det(u):
        return np.linalg.det(A) + 0 * np.asarray(u)[0]

    return _planar("linear", f, j, det)


def planar_det(F: MapHandle, u) -> float:
    if F.det is not None:
        return float(F.det(np.asarray(u, dtype=float)))
    return float(np.linalg.det(F.dense_jacobian(u)))


def _grad_det(F: MapHandle, u, eps=1e-7) -> np.ndarray:
    e = np.eye(2) * eps * (1 + np.abs(u).max())
    return np.array([(planar_det(F, u + e[i]) - planar_det(F, u - e[i])) / (2 * e[i, i]) for i in range(2)])


@dataclass
class CriticalCurve:
    points: np.ndarray
    closed: bool

    def __len__(self):
        return len(self.points)


def _project_to_critical(F: MapHandle, p, tol=1e-12, max_iter=30):
    p = np.asarray(p, dtype=float).copy()
    for _ in range(max_iter):
        d = planar_det(F, p)
        scale = 1 + np.abs(p).max() ** 2
        if abs(d) <= tol * scale:
            return p, True
        gr = _grad_det(F, p)
        g2 = gr @ gr
        if g2 == 0:
            return p, False
        p = p - d * gr / g2
    return p, abs(planar_det(F, p)) <= 1e-8


def find_critical_seeds(F: MapHandle, box=DEFAULT_BOX, grid: int = 64) -> list[np.ndarray]:
    """Points on det DF = 0 located from sign changes along grid edges."""
    x0, x1, y0, y1 = box
    xs = np.linspace(x0, x1, grid + 1)
    ys = np.linspace(y0, y1, grid + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    D = _det_grid(F, X, Y)
    seeds = []
    for axis in (0, 1):
        a = D[:-1, :] if axis == 0 else D[:, :-1]
        b = D[1:, :] if axis == 0 else D[:, 1:]
        idx = np.argwhere(np.sign(a) * np.sign(b) < 0)
        for i, j in idx:
            p = np.array([X[i, j], Y[i, j]])
            q = np.array([X[i + 1, j], Y[i + 1, j]]) if axis == 0 else np.array([X[i, j + 1], Y[i, j + 1]])
            da = planar_det(F, p)
            for _ in range(60):
                m = 0.5 * (p + q)
                dm = planar_det(F, m)
                if dm == 0:
                    p = q = m
                    break
                if np.sign(dm) == np.sign(da):
                    p, da = m, dm
                else:
                    q = m
            seeds.append(0.5 * (p + q))
    # lattice nodes exactly on the critical set have no strict sign change
    seeds += [np.array([X[i, j], Y[i, j]]) for i, j in np.argwhere(D == 0)]
    return seeds


def _det_grid(F, X, Y):
    if F.meta.get("vectorized") and F.det is not None:
        return np.asarray(F.det(np.array([X, Y])), dtype=float) + 0 * X
    return np.vectorize(lambda x, y: planar_det(F, np.array([x, y])))(X, Y)


def _in_box(p, box) -> bool:
    return box[0] <= p[0] <= box[1] and box[2] <= p[1] <= box[3]


def trace_critical_curve(F: MapHandle, seed, box=DEFAULT_BOX, step: float = 0.02,
                         max_points: int = 20000) -> CriticalCurve:
    """Follow det DF = 0 from ``seed`` until the curve closes or leaves ``box``."""
    seed = as_state(seed, 2)
    p, ok = _project_to_critical(F, seed)
    if not ok or np.linalg.norm(p - seed) > 10 * step:
        raise SeedNotNearCritical(f"no critical point near {seed}")

    def walk(start, sign):
        pts = [start]
        p = start
        prev_t = None
        for _ in range(max_points):
            gr = _grad_det(F, p)
            t = sign * np.array([-gr[1], gr[0]]) / np.linalg.norm(gr)
            if prev_t is not None and t @ prev_t < 0:
                t = -t
            h = step
            while True:
                q, ok = _project_to_critical(F, p + h * t)
                if ok and np.linalg.norm(q - p) <= 1.5 * h and (prev_t is None or (q - p) @ t > 0):
                    break
                h *= 0.5
                if h < 1e-6 * step:
                    return pts, False
            # keep consecutive vertices within one step
            if np.linalg.norm(q - p) > step:
                q = p + (q - p) * step / np.linalg.norm(q - p)
                q, _ = _project_to_critical(F, q)
            prev_t = t
            p = q
            if not _in_box(p, box):
                return pts, False
            pts.append(p)
            if len(pts) > 3 and np.linalg.norm(p - start) < step:
                return pts, True
        return pts, False

    fwd, closed = walk(p, 1)
    if closed:
        return CriticalCurve(np.array(fwd), True)
    bwd, _ = walk(p, -1)
    pts = bwd[::-1] + fwd[1:]
    return CriticalCurve(np.array(pts), False)


def critical_curves(F: MapHandle, box=DEFAULT_BOX, grid: int = 64, step: float = 0.02) -> list[CriticalCurve]:
    """All critical curves meeting the grid, each traced once."""
    curves: list[CriticalCurve] = []
    for s in find_critical_seeds(F, box, grid):
        if any(np.min(np.linalg.norm(c.points - s, axis=1)) < 3 * step for c in curves):
            continue
        try:
            curves.append(trace_critical_curve(F, s, box, step))
        except SeedNotNearCritical:
            continue
    return curves


@dataclass
class PreimageCount:
    count: int
    roots: np.ndarray
    suspect_undercount: bool = False

    def __int__(self):
        return self.count


def _eval_many(F: MapHandle, U: np.ndarray):
    """F and DF at the columns of U (shape (2, N))."""
    if F.meta.get("vectorized"):
        Fv = np.asarray(F.func(U), dtype=float)
        Jv = np.asarray(F.jac(U), dtype=float)
        return Fv, Jv
    Fv = np.stack([F(U[:, k]) for k in range(U.shape[1])], axis=1)
    Jv = np.stack([F.dense_jacobian(U[:, k]) for k in range(U.shape[1])], axis=2)
    return Fv, Jv


def multistart_newton(F: MapHandle, y, starts: np.ndarray, max_iter: int = 60, tol: float = 1e-12,
                      radius: float = 1e3) -> np.ndarray:
    """Vectorized Newton for F(u) = y from every column of ``starts``; returns converged roots."""
    y = np.asarray(y, dtype=float).reshape(2, 1)
    U = np.array(starts, dtype=float)
    alive = np.ones(U.shape[1], dtype=bool)
    scale = 1 + np.linalg.norm(y)
    for _ in range(max_iter):
        Fv, J = _eval_many(F, U)
        R = Fv - y
        a, b, c, d = J[0, 0], J[0, 1], J[1, 0], J[1, 1]
        det = a * d - b * c
        with np.errstate(divide="ignore", invalid="ignore"):
            dx = (d * R[0] - b * R[1]) / det
            dy = (-c * R[0] + a * R[1]) / det
        step = np.array([dx, dy])
        bad = ~np.all(np.isfinite(step), axis=0)
        step[:, bad] = 0
        alive &= ~bad
        # cap wild steps so starts near the critical set do not fly off
        nrm = np.linalg.norm(step, axis=0)
        cap = 1.0 + np.linalg.norm(U, axis=0)
        step *= np.minimum(1.0, cap / np.maximum(nrm, 1e-300))
        U = U - step
        alive &= np.linalg.norm(U, axis=0) < radius
        if np.all(nrm[alive] <= 1e-15 * cap[alive]):
            break
    Fv, _ = _eval_many(F, U)
    res = np.linalg.norm(Fv - y, axis=0)
    ok = alive & (res <= tol * scale * 100) & np.all(np.isfinite(U), axis=0)
    return U[:, ok]


def _dedupe_points(P: np.ndarray, tol: float) -> np.ndarray:
    """Greedy clustering of the columns of P; returns one representative per cluster."""
    if P.shape[1] == 0:
        return np.empty((0, 2))
    order = np.lexsort((P[1], P[0]))
    reps: list[np.ndarray] = []
    for k in order:
        p = P[:, k]
        if not any(np.linalg.norm(p - r) <= tol * (1 + np.linalg.norm(p)) for r in reps):
            reps.append(p)
    R = np.array(reps)
    return R[np.lexsort((np.round(R[:, 1], 9), np.round(R[:, 0], 9)))]


def count_preimages(F: MapHandle, y, box=DEFAULT_BOX, grid: int = 64, dedupe_tol: float = 1e-8) -> PreimageCount:
    """Number of solutions of F(u) = y found by Newton from a grid x grid lattice of starts."""
    x0, x1, y0, y1 = box
    xs = np.linspace(x0, x1, grid)
    ys = np.linspace(y0, y1, grid)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    roots = multistart_newton(F, y, np.array([X.ravel(), Y.ravel()]))
    R = _dedupe_points(roots, 1e-6)
    suspect = False
    for i in range(len(R)):
        for j in range(i + 1, len(R)):
            if np.linalg.norm(R[i] - R[j]) < 10 * dedupe_tol:
                suspect = True
    return PreimageCount(len(R), R, suspect)


def cokernel(J: np.ndarray) -> np.ndarray:
    rows = [np.array([J[1, 0], -J[0, 0]]), np.array([J[1, 1], -J[0, 1]])]
    k = max(rows, key=np.linalg.norm)
    return k / np.linalg.norm(k)


def is_fold_point(F: MapHandle, v, tol: float = 1e-6) -> bool:
    """grad det DF not orthogonal to ker DF at a critical point.

    ``tol`` bounds |<grad det, k>| / ||grad det|| from below; a larger value
    also rejects points close to a cusp.
    """
    J = F.dense_jacobian(v)
    rows = [np.array([-J[0, 1], J[0, 0]]), np.array([-J[1, 1], J[1, 0]])]
    k = max(rows, key=np.linalg.norm)
    if np.linalg.norm(k) == 0:
        return False
    k /= np.linalg.norm(k)
    gr = _grad_det(F, np.asarray(v, dtype=float))
    return abs(gr @ k) > tol * max(1.0, np.linalg.norm(gr))


@dataclass
class TileReport:
    probe_points: list[tuple[np.ndarray, int]] = field(default_factory=list)
    adjacency_checks: list[tuple[tuple[int, int], int]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def _image_samples(F, curves, per_curve):
    out = []
    for c in curves:
        idx = np.linspace(0, len(c) - 1, min(per_curve, len(c))).astype(int)
        out.append(np.array([F(c.points[i]) for i in idx]))
    return np.vstack(out) if out else np.empty((0, 2))


def make_tile_report(F: MapHandle, curves: list[CriticalCurve], probes_per_curve: int = 6, margin: float = 1e-2,
                     box=DEFAULT_BOX, grid: int = 64, extra_probes=(), cusp_clearance: float = 0.3) -> TileReport:
    """Probe pairs straddling fold images, plus any extra probe points."""
    rep = TileReport()
    image = _image_samples(F, curves, 4000)
    for c in curves:
        n = len(c)
        for i in np.linspace(0, n - 1, probes_per_curve + 2)[1:-1].astype(int):
            v = c.points[i]
            if not is_fold_point(F, v, cusp_clearance):
                continue
            yv = F(v)
            psi = cokernel(F.dense_jacobian(v))
            pair = [yv + margin * psi, yv - margin * psi]
            # both probes must stay clear of the rest of F(C)
            if any(np.min(np.linalg.norm(image - q, axis=1)) < 0.5 * margin for q in pair):
                continue
            ids = []
            for q in pair:
                cnt = count_preimages(F, q, box, grid)
                rep.probe_points.append((q, cnt.count))
                ids.append(len(rep.probe_points) - 1)
            diff = rep.probe_points[ids[0]][1] - rep.probe_points[ids[1]][1]
            rep.adjacency_checks.append(((ids[0], ids[1]), abs(diff)))
    for q in extra_probes:
        rep.probe_points.append((np.asarray(q, float), count_preimages(F, q, box, grid).count))
    return rep


def probe_pair_report(F: MapHandle, pairs, box=DEFAULT_BOX, grid: int = 64) -> TileReport:
    """Tile report from explicit probe pairs placed on both sides of an image curve."""
    rep = TileReport()
    for a, b in pairs:
        ca = count_preimages(F, a, box, grid).count
        cb = count_preimages(F, b, box, grid).count
        rep.probe_points += [(np.asarray(a, float), ca), (np.asarray(b, float), cb)]
        k = len(rep.probe_points)
        rep.adjacency_checks.append(((k - 2, k - 1), abs(ca - cb)))
    return rep


@dataclass
class ParityResult:
    ok: bool
    notes: list[str]

    def __bool__(self):
        return self.ok


def verify_tile_parity(F: MapHandle, report: TileReport) -> ParityResult:
    """True iff every adjacent probe pair differs by exactly 2."""
    notes = []
    for (i, j), diff in report.adjacency_checks:
        if diff != 2:
            a, b = report.probe_points[i][1], report.probe_points[j][1]
            notes.append(f"NonFoldBoundary: probes {i},{j} have counts {a},{b} (difference {diff})")
    if not report.adjacency_checks:
        notes.append("no adjacency checks")
    return ParityResult(not notes, notes)


def compute_flower(F: MapHandle, curves: list[CriticalCurve], box=DEFAULT_BOX, samples: int = 400,
                   grid: int = 48, max_components: int = 200) -> list[np.ndarray]:
    """Preimages of the image curves F(C_i), chained into polylines."""
    polylines: list[np.ndarray] = []
    for c in curves:
        idx = np.linspace(0, len(c) - 1, min(samples, len(c))).astype(int)
        x0, x1, y0, y1 = box
        xs = np.linspace(x0, x1, grid)
        X, Y = np.meshgrid(xs, np.linspace(y0, y1, grid), indexing="ij")
        starts = np.array([X.ravel(), Y.ravel()])
        open_chains: list[list[np.ndarray]] = []
        step = np.max(np.linalg.norm(np.diff(c.points[idx], axis=0), axis=1), initial=0.05)
        prev_roots = None
        for i in idx:
            y = F(c.points[i])
            st = starts if prev_roots is None else np.hstack([starts[:, ::7], prev_roots.T])
            R = _dedupe_points(multistart_newton(F, y, st), 1e-6)
            R = np.array([r for r in R if _in_box(r, box)]).reshape(-1, 2)
            used = set()
            for chain in open_chains:
                if not len(R):
                    break
                d = np.linalg.norm(R - chain[-1], axis=1)
                k = int(np.argmin(d))
                if k not in used and d[k] < 8 * step:
                    chain.append(R[k])
                    used.add(k)
            for k in range(len(R)):
                if k not in used:
                    open_chains.append([R[k]])
            if len(open_chains) > max_components:
                raise ComponentBudgetExceeded(f"more than {max_components} flower components")
            prev_roots = R
        polylines += [np.array(ch) for ch in open_chains if len(ch) > 1]
    return polylines


def count_domain_tiles(curves: list[CriticalCurve], flower: list[np.ndarray], box=DEFAULT_BOX, res: int = 800,
                       min_pixels: int = 20) -> int:
    """Connected components of the box minus the rasterized critical set and flower."""
    x0, x1, y0, y1 = box
    wall = np.zeros((res, res), dtype=bool)

    def stamp(P):
        for p, q in zip(P[:-1], P[1:]):
            n = int(max(2, 3 * res * np.linalg.norm(q - p) / (x1 - x0)))
            seg = p[None, :] + np.linspace(0, 1, n)[:, None] * (q - p)[None, :]
            i = np.clip(((seg[:, 0] - x0) / (x1 - x0) * (res - 1)).round().astype(int), 0, res - 1)
            j = np.clip(((seg[:, 1] - y0) / (y1 - y0) * (res - 1)).round().astype(int), 0, res - 1)
            wall[i, j] = True

    for c in curves:
        P = c.points if not c.closed else np.vstack([c.points, c.points[:1]])
        stamp(P)
    for P in flower:
        stamp(P)
    wall = ndimage.binary_dilation(wall, iterations=1)
    lab, k = ndimage.label(~wall)
    sizes = np.bincount(lab.ravel())[1:]
    return int(np.sum(sizes >= min_pixels))


def write_zeros_csv(path, roots: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"])
        for r in roots:
            w.writerow([repr(float(r[0])), repr(float(r[1]))])


def write_planar_svg(path, curves, flower=(), probes=(), title: str = "", box=DEFAULT_BOX) -> None:
    from .plotting import new_figure, save_svg

    fig, ax = new_figure()
    for c in curves:
        P = c.points if not c.closed else np.vstack([c.points, c.points[:1]])
        ax.plot(P[:, 0], P[:, 1], "k-", lw=1.2)
    for P in flower:
        ax.plot(P[:, 0], P[:, 1], "b--", lw=0.7)
    for p, label in probes:
        ax.annotate(str(label), xy=(p[0], p[1]), fontsize=7, color="r")
    ax.set_xlim(box[0], box[1])
    ax.set_ylim(box[2], box[3])
    ax.set_aspect("equal")
    ax.set_title(title)
    save_svg(fig, path)
