"""Bifurcation diagrams: the component of F^{-1}(F(c)) through u0 for a line c.

The root branch is the line itself. Each fold crossing of the line is a
branch point of the diagram, from which the two halves of a mirror branch
are traced. Points of the diagram at the base parameter s0 are preimages
of g = F(u0).
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .continuation import (
    CodomainPath,
    FoldEvent,
    StepConfig,
    Tangent,
    TracePoint,
    annotate,
    correct,
    make_fold_event,
    trace,
)
from .core import MapHandle, Solution, SolutionSet, as_state, newton_solve, relative_residue
from .errors import FoldcontError, SeedNotOnDiagram, SingularOrthantMatrix
from .pltrace import PLLineProblem
from .spectral import det_sign, morse_index

log = logging.getLogger(__name__)

RESIDUE_THRESHOLD = 1e-10
DEDUPE_TOL = 1e-6


@dataclass
class LineSpec:
    base: np.ndarray
    direction: np.ndarray
    s_range: tuple[float, float] = (-1.0, 1.0)
    description: str = ""

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        self.direction = np.asarray(self.direction, dtype=float)
        if not np.any(self.direction):
            raise ValueError("line direction must be nonzero")
        if not self.s_range[0] < self.s_range[1]:
            raise ValueError("empty s_range")

    def point(self, s: float) -> np.ndarray:
        return self.base + s * self.direction


@dataclass
class Branch:
    id: int
    parent_fold: FoldEvent | None
    points: list[TracePoint]
    terminal: str = "RangeExhausted"
    merged_with: int | None = None
    depth: int = 0

    @property
    def terminal_label(self) -> str:
        if self.terminal == "MergedWithBranch":
            return f"MergedWithBranch({self.merged_with})"
        return self.terminal


@dataclass
class BudgetCounters:
    traces: int = 0
    fold_events: int = 0
    newton_iterations: int = 0


@dataclass
class BifurcationDiagram:
    line: LineSpec
    branches: list[Branch] = field(default_factory=list)
    folds: list[FoldEvent] = field(default_factory=list)
    solutions: SolutionSet = field(default_factory=SolutionSet)
    candidates: list[np.ndarray] = field(default_factory=list)
    budget_spent: BudgetCounters = field(default_factory=BudgetCounters)
    exhausted: bool = False
    degenerate_line: bool = False
    s0: float = 0.0

    def to_json(self) -> dict:
        fold_ids = {id(f): i for i, f in enumerate(self.folds)}
        return {
            "line": {
                "base": self.line.base.tolist(),
                "direction": self.line.direction.tolist(),
                "s_range": list(self.line.s_range),
                "description": self.line.description,
            },
            "branches": [
                {
                    "id": b.id,
                    "parent_fold": fold_ids.get(id(b.parent_fold)),
                    "terminal": b.terminal_label,
                    "points": [{"t": p.t, "u": p.u.tolist(), "lambda_s": _num(p.lambda_s),
                                "classification": p.classification} for p in b.points],
                }
                for b in self.branches
            ],
            "folds": [{"u": f.u.tolist(), "t": f.t, "lambda_s": _num(f.lambda_s), "kind": f.kind,
                       "transversal": bool(f.transversal)} for f in self.folds],
            "solutions": [{"u": s.u.tolist(), "morse_index": s.morse_index, "residue": s.residue}
                          for s in self.solutions.canonical()],
            "budget": vars(self.budget_spent),
            "exhausted": self.exhausted,
        }


def _num(x):
    x = float(x)
    return x if np.isfinite(x) else None


def perturbed_direction(modes: dict[int, np.ndarray] | Sequence[np.ndarray], eps: Iterable[float] | None = None,
                        lead: float = 1.0) -> np.ndarray:
    """lead*phi_1 + sum_i eps_i*phi_i over the higher modes (default eps_i = -0.1)."""
    vecs = list(modes.values()) if isinstance(modes, dict) else list(modes)
    eps = [-0.1] * (len(vecs) - 1) if eps is None else list(eps)
    if len(eps) != len(vecs) - 1:
        raise ValueError("need one coefficient per higher mode")
    return lead * vecs[0] + sum(e * v for e, v in zip(eps, vecs[1:]))


def _refine(F: MapHandle, g: np.ndarray, u: np.ndarray, threshold: float, source: str) -> Solution | None:
    if F.pieces is not None:
        pos = F.pieces.signs(u)
        M = F.pieces.matrix(pos)
        try:
            v = np.linalg.solve(M, g)
        except np.linalg.LinAlgError:
            return None
        w = np.linalg.eigvalsh(M)
        mi = int(np.sum(w < 0))
    else:
        v, ok, _ = newton_solve(F, g, u, tol=1e-14, max_iter=8)
        mi = morse_index(F.jacobian(v)) if F.symmetric else _planar_morse(F, v)
    try:
        rep = relative_residue(F, v, g, threshold)
    except FoldcontError:
        return None
    if not rep.accepted:
        return None
    return Solution(v, mi, rep.residue, source=source)


def _planar_morse(F: MapHandle, u) -> int:
    # orientation stands in for the Morse index on non-symmetric maps
    return 0 if det_sign(F.dense_jacobian(u)) > 0 else 1


def harvest_solutions(diagram: BifurcationDiagram, F: MapHandle, g, threshold: float = RESIDUE_THRESHOLD,
                      dedupe_tol: float = DEDUPE_TOL) -> SolutionSet:
    """Refine the candidates at s = s0, filter by relative residue, deduplicate."""
    g = as_state(g, F.dimension)
    out = SolutionSet(dedupe_tol=dedupe_tol)
    for i, u in enumerate(diagram.candidates):
        sol = _refine(F, g, u, threshold, source=diagram.line.description or "diagram")
        if sol is not None:
            out.add(sol)
    return out


def _collect_candidates(points: list[TracePoint], s0: float) -> list[tuple[int, int]]:
    idx = []
    for k in range(len(points)):
        if points[k].t == s0:
            idx.append((k, k))
        elif k + 1 < len(points) and (points[k].t - s0) * (points[k + 1].t - s0) < 0:
            idx.append((k, k + 1))
    return idx


def build_diagram(F: MapHandle, line: LineSpec, g=None, cfg: StepConfig | None = None, depth_limit: int = 4,
                  s0: float = 0.0, root_step: float | None = None, max_traces: int = 400,
                  residue_threshold: float = RESIDUE_THRESHOLD) -> BifurcationDiagram:
    """Trace the component of F^{-1}(F(c)) through c(s0) and harvest preimages of g."""
    cfg = StepConfig() if cfg is None else cfg
    u0 = line.point(s0)
    g = F(u0) if g is None else as_state(g, F.dimension)
    if np.linalg.norm(g) > 0:
        if relative_residue(F, u0, g, max(residue_threshold, 1e-10)).residue > max(residue_threshold, 1e-10):
            raise SeedNotOnDiagram("F(u0) != g")
    elif np.linalg.norm(F(u0)) > 1e-10:
        raise SeedNotOnDiagram("F(u0) != g")
    if F.pieces is not None:
        diagram = _build_pl(F, line, cfg, s0, max_traces)
    else:
        diagram = _build_smooth(F, line, cfg, depth_limit, s0, root_step, max_traces)
    diagram.solutions = harvest_solutions(diagram, F, g, residue_threshold) if np.linalg.norm(g) > 0 else \
        _harvest_zero_rhs(diagram, F)
    return diagram


def _harvest_zero_rhs(diagram, F):
    out = SolutionSet(dedupe_tol=DEDUPE_TOL)
    for u in diagram.candidates:
        v, ok, _ = newton_solve(F, np.zeros(F.dimension), u, tol=1e-14, max_iter=8)
        res = float(np.linalg.norm(F(v)))
        if res <= 1e-10:
            mi = morse_index(F.jacobian(v)) if F.symmetric else _planar_morse(F, v)
            out.add(Solution(v, mi, res, source=diagram.line.description or "diagram"))
    return out


def _build_pl(F: MapHandle, line: LineSpec, cfg: StepConfig, s0: float, max_traces: int) -> BifurcationDiagram:
    prob = PLLineProblem(F.pieces, line.base, line.direction, line.s_range)
    diagram = BifurcationDiagram(line, s0=s0, degenerate_line=prob.degenerate)
    visited: dict = {}
    root_pts = [TracePoint(prob.root(s), s) for s in prob.edges]
    for j in range(len(prob.edges) - 1):
        visited[(prob.piece_orthant(j).tobytes(), j)] = 0
    root = Branch(0, None, root_pts)
    diagram.branches.append(root)
    diagram.candidates.append(line.point(s0))
    diagram.budget_spent.traces = 1
    for m, (coord, s_c) in enumerate(zip(prob.crossing_coord, prob.breaks)):
        before, after = prob.piece_orthant(m), prob.piece_orthant(m + 1)
        d1, d2 = prob.det_sign(before), prob.det_sign(after)
        u_c = prob.root(s_c)
        u_c[coord] = 0.0
        if d1 == 0 or d2 == 0:
            log.info("singular adjacent orthant at s=%g", s_c)
            continue
        if d1 == d2:
            continue
        phi = np.zeros(F.dimension)
        phi[coord] = 1.0
        ev = FoldEvent(u_c, float(s_c), phi, 0.0, "Fold", transversal=False)
        diagram.folds.append(ev)
        diagram.budget_spent.fold_events += 1
        for pos, direction, piece in ((before, 1, m + 1), (after, -1, m)):
            if diagram.budget_spent.traces >= max_traces:
                diagram.exhausted = True
                break
            bid = len(diagram.branches)
            ray = prob.trace_ray(u_c, s_c, pos, direction, piece, visited, bid)
            diagram.budget_spent.traces += 1
            pts = [TracePoint(u_c.copy(), float(s_c), classification="FoldNode")]
            for seg in ray.segments:
                pts.append(TracePoint(seg.at(seg.s_end), float(seg.s_end)))
                lo, hi = sorted((seg.s_start, seg.s_end))
                if lo <= s0 <= hi:
                    diagram.candidates.append(seg.at(s0))
            for u_t, s_t, i in ray.turns:
                diagram.folds.append(FoldEvent(u_t, s_t, np.eye(F.dimension)[i], 0.0, "Fold", True))
                diagram.budget_spent.fold_events += 1
            diagram.branches.append(Branch(bid, ev, pts, ray.terminal, ray.merged_with, 1))
    return diagram


def _scan_root(F: MapHandle, line: LineSpec, cfg: StepConfig, step: float) -> tuple[list[TracePoint], list[float]]:
    """Sample sign det DF(c(s)) on the line, then bisect each sign change in s."""
    lo, hi = line.s_range
    ss = np.linspace(lo, hi, max(2, int(np.ceil((hi - lo) / step)) + 1))

    def orient(s):
        return det_sign(F.jacobian(line.point(s)))

    signs = [orient(s) for s in ss]
    pts = [TracePoint(line.point(s), float(s), orientation=o) for s, o in zip(ss, signs)]
    crossings = []
    for k in range(len(ss) - 1):
        oa, ob = signs[k], signs[k + 1]
        if oa == ob or oa == 0 or ob == 0:
            continue
        sa, sb = float(ss[k]), float(ss[k + 1])
        while sb - sa > 1e-14 * (1 + abs(sa)):
            sm = 0.5 * (sa + sb)
            if sm in (sa, sb):
                break
            o = orient(sm)
            if o == 0:
                sa = sb = sm
                break
            if o == oa:
                sa = sm
            else:
                sb = sm
        crossings.append(0.5 * (sa + sb))
    return pts, crossings


def _on_root(line: LineSpec, u, s, tol=1e-7) -> bool:
    return np.linalg.norm(u - line.point(s)) <= tol * (1 + np.linalg.norm(u))


def _mirror_direction(F: MapHandle, u_c, d, phi) -> np.ndarray:
    """Tangent of the second preimage curve through a fold crossing of the line.

    Both curves solve DF v = gamma' to first order; they differ by mu*k with
    k in ker DF, where mu cancels the quadratic term psi . D^2F(d + mu k).
    For symmetric Jacobians this is the reflection of d across phi^perp.
    """
    if F.symmetric:
        return d - 2 * np.dot(d, phi) * phi
    J = F.dense_jacobian(u_c)
    U, _, Vt = np.linalg.svd(J)
    psi, k = U[:, -1], Vt[-1]
    eps = 1e-4 * (1 + np.linalg.norm(u_c))

    def B(x, y):
        x = eps * x / max(np.linalg.norm(x), 1e-300) * np.linalg.norm(x)
        y = eps * y / max(np.linalg.norm(y), 1e-300) * np.linalg.norm(y)
        v = F(u_c + x + y) - F(u_c + x - y) - F(u_c - x + y) + F(u_c - x - y)
        return float(psi @ v) / (4 * eps * eps)

    bkk = B(k, k)
    if abs(bkk) < 1e-12:
        return d - 2 * np.dot(d, k) * k
    mu = -2 * B(d, k) / bkk
    return d + mu * k


def _seed_mirror(F, path, line, u_c, s_c, phi, side, cfg) -> TracePoint | None:
    w = _mirror_direction(F, u_c, line.direction, phi)
    tvec = np.append(w, 1.0)
    tvec /= np.linalg.norm(tvec)
    for sigma in (1e-3, 3e-3, 1e-2, 3e-2, 1e-1):
        sig = sigma * (1 + np.linalg.norm(u_c))
        u_pred = u_c + side * sig * tvec[:-1]
        t_pred = s_c + side * sig * tvec[-1]
        try:
            pt, _ = correct(F, path, u_pred, t_pred, Tangent(phi, 0.0), cfg)
        except FoldcontError:
            continue
        if _on_root(line, pt.u, pt.t, 1e-4 * sigma):
            continue
        return pt
    return None


def _build_smooth(F: MapHandle, line: LineSpec, cfg: StepConfig, depth_limit: int, s0: float,
                  root_step: float | None, max_traces: int) -> BifurcationDiagram:
    path = CodomainPath.image_of_line(F, line.base, line.direction, line.s_range)
    diagram = BifurcationDiagram(line, s0=s0)
    step = root_step or (line.s_range[1] - line.s_range[0]) / 400
    root_pts, crossings = _scan_root(F, line, cfg, step)
    diagram.branches.append(Branch(0, None, root_pts))
    diagram.candidates.append(line.point(s0))
    diagram.budget_spent.traces = 1

    def stop(prev: TracePoint, new: TracePoint):
        for s_c in crossings:
            if (prev.t - s_c) * (new.t - s_c) <= 0 and _on_root(line, new.u, new.t, 1e-3):
                return "MergedWithBranch"
        return None

    def _seen(f: FoldEvent) -> bool:
        return any(abs(f.t - e.t) <= 1e-6 * (1 + abs(e.t))
                   and np.linalg.norm(f.u - e.u) <= 1e-5 * (1 + np.linalg.norm(e.u)) for e in diagram.folds)

    queue = []
    for s_c in crossings:
        u_c = line.point(s_c)
        p = TracePoint(u_c, s_c)
        annotate(F, p, cfg)
        ev = make_fold_event(F, path, p, cfg, gamma_prime=path.gamma_prime(s_c))
        diagram.folds.append(ev)
        diagram.budget_spent.fold_events += 1
        if ev.kind == "Degenerate":
            diagram.degenerate_line = True
            log.info("degenerate crossing at s=%g; perturb the line", s_c)
        queue.append((ev, 1))
    while queue:
        ev, depth = queue.pop(0)
        if depth > depth_limit:
            continue
        for side in (1, -1):
            if diagram.budget_spent.traces >= max_traces:
                diagram.exhausted = True
                queue.clear()
                break
            seed = _seed_mirror(F, path, line, ev.u, ev.t, ev.phi, side, cfg)
            if seed is None:
                log.info("mirror seeding failed at s=%g side %+d", ev.t, side)
                continue
            w = _mirror_direction(F, ev.u, line.direction, ev.phi)
            init = Tangent(side * w, float(side))
            res = trace(F, path, seed, side, cfg, initial_tangent=init, stop=stop)
            diagram.budget_spent.traces += 1
            diagram.budget_spent.newton_iterations += res.newton_iterations
            bid = len(diagram.branches)
            pts = [TracePoint(ev.u.copy(), ev.t, ev.lambda_s, 0, "FoldNode")] + res.points
            merged = 0 if res.terminal == "MergedWithBranch" else None
            diagram.branches.append(Branch(bid, ev, pts, res.terminal, merged, depth))
            for f in res.folds:
                if _seen(f):
                    continue
                diagram.folds.append(f)
                diagram.budget_spent.fold_events += 1
                if not f.transversal and f.kind == "Fold":
                    queue.append((f, depth + 1))
            for i, k in _collect_candidates(res.points, s0):
                a, b = res.points[i], res.points[k]
                if i == k:
                    diagram.candidates.append(a.u.copy())
                    continue
                lam = (s0 - a.t) / (b.t - a.t)
                u_pred = (1 - lam) * a.u + lam * b.u
                try:
                    pt, _ = correct(F, path, u_pred, s0, Tangent(np.zeros(F.dimension), 1.0), cfg, classify=False)
                    diagram.candidates.append(pt.u)
                except FoldcontError:
                    diagram.candidates.append(u_pred)
    return diagram


class OrthantSampler:
    """Orthants of R^n in a random order without replacement.

    Each draw solves the orthant's linear system (A - D^O) u = g and keeps
    u when its signs agree with the orthant.
    """

    def __init__(self, op, ell_minus: float, ell_plus: float, g, rng=None):
        from .sturm import PiecewiseLinearStructure, TridiagonalOperator

        A = op.dense() if isinstance(op, TridiagonalOperator) else np.asarray(op, dtype=float)
        self.n = A.shape[0]
        self.pieces = PiecewiseLinearStructure(A, ell_minus, ell_plus)
        self.g = as_state(g, self.n)
        rng = np.random.default_rng(rng)
        total = 1 << self.n
        self._codes = rng.permutation(total) if total <= 1 << 24 else rng.integers(0, total, 1 << 24)
        self._bits = np.arange(self.n)[::-1]
        self.draws = 0

    @property
    def exhausted(self) -> bool:
        return self.draws >= len(self._codes)

    def draw(self) -> np.ndarray | None:
        """One orthant; its solution or None."""
        code = int(self._codes[self.draws])
        self.draws += 1
        pos = ((code >> self._bits) & 1) == 0
        M = self.pieces.matrix(pos)
        sign, _ = np.linalg.slogdet(M)
        if sign == 0:
            log.info("%s", SingularOrthantMatrix(f"orthant {code} singular"))
            return None
        u = np.linalg.solve(M, self.g)
        return u if np.all(np.where(pos, u >= 0, u <= 0)) else None

    def next_solution(self, max_draws: int | None = None, exclude: SolutionSet | None = None) -> np.ndarray | None:
        """Draw until a solution (not in ``exclude``) appears or the budget runs out."""
        stop = len(self._codes) if max_draws is None else min(len(self._codes), self.draws + max_draws)
        while self.draws < stop:
            u = self.draw()
            if u is not None and (exclude is None or exclude.find(u) is None):
                return u
        return None


def sample_orthant_seeds(op, ell_minus: float, ell_plus: float, g, max_draws: int, rng=None,
                         first_hit: bool = True) -> tuple[list[np.ndarray], int]:
    """Random orthant draws without replacement; returns (solutions, draws used)."""
    sampler = OrthantSampler(op, ell_minus, ell_plus, g, rng)
    out = []
    while sampler.draws < max_draws and not sampler.exhausted:
        u = sampler.draw()
        if u is not None:
            out.append(u)
            if first_hit:
                break
    return out, sampler.draws


@dataclass
class SamplingCampaign:
    solutions: SolutionSet
    diagrams: list[BifurcationDiagram]
    found_after: list[int]  # cumulative solution count after each line
    draws: int


def sampling_campaign(F: MapHandle, sampler: OrthantSampler, directions: Sequence, s_range=(-50.0, 50.0),
                      max_lines: int = 2, max_draws: int | None = None, cfg: StepConfig | None = None,
                      target: int | None = None, seeds: Sequence = (), stall_lines: int | None = None
                      ) -> SamplingCampaign:
    """Alternate orthant sampling and diagrams.

    Line i starts at an unused entry of ``seeds`` or else at the next
    sampled solution not found so far, and uses directions[i % len(directions)].
    Once ``max_draws`` is spent, found solutions not yet used as bases
    seed the remaining lines. Sampled solutions count as found. The
    campaign ends early at ``target`` solutions, or after ``stall_lines``
    consecutive lines that add nothing once sampling is spent.
    """
    g = sampler.g
    found = SolutionSet(dedupe_tol=DEDUPE_TOL)
    diagrams, after = [], []
    pending = [as_state(u, sampler.n) for u in seeds]
    used: list[np.ndarray] = []
    for i in range(max_lines):
        base = None
        while pending and base is None:
            u = pending.pop(0)
            base = u if found.find(u) is None else None
        if base is None:
            budget = None if max_draws is None else max_draws - sampler.draws
            if budget is None or budget > 0:
                base = sampler.next_solution(budget, exclude=found)
        if base is None:
            # sampling budget spent: restart from solutions not yet used as bases
            unused = [x.u for x in found.canonical() if not any(np.allclose(x.u, b) for b in used)]
            if not unused:
                break
            base = unused[0]
        used.append(base)
        line = LineSpec(base, directions[i % len(directions)], tuple(s_range), f"line{i + 1}")
        dg = build_diagram(F, line, g, cfg)
        diagrams.append(dg)
        for sol in [_refine(F, g, base, RESIDUE_THRESHOLD, "sampling")] + list(dg.solutions):
            if sol is not None:
                found.add(sol)
        after.append(len(found))
        if target is not None and len(found) >= target:
            break
        spent = max_draws is not None and sampler.draws >= max_draws
        if stall_lines and spent and len(after) > stall_lines and after[-1] == after[-1 - stall_lines]:
            break
    return SamplingCampaign(found.canonical(), diagrams, after, sampler.draws)


@dataclass
class CampaignReport:
    solutions: SolutionSet
    found_by: list[tuple[str, int]]  # (line description, solution index in canonical order)
    diagrams: list[BifurcationDiagram]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["line", "solution", "morse_index", "residue"])
            items = self.solutions.canonical().items
            for line, idx in self.found_by:
                s = items[idx]
                w.writerow([line, idx, s.morse_index, repr(s.residue)])


def multi_line_campaign(F: MapHandle, seeds: Sequence, directions: Sequence, g, cfg: StepConfig | None = None,
                        s_ranges: Sequence | None = None, depth_limit: int = 4, executor=None,
                        **kwargs) -> CampaignReport:
    """Union of harvests over all (seed, direction) lines."""
    g = as_state(g, F.dimension)
    jobs = []
    for i, base in enumerate(seeds):
        for j, d in enumerate(directions):
            rng = s_ranges[len(jobs)] if s_ranges is not None else (-1.0, 1.0)
            jobs.append(LineSpec(np.asarray(base, float), np.asarray(d, float), tuple(rng), f"seed{i}-dir{j}"))

    def run(line):
        return build_diagram(F, line, g, cfg, depth_limit, **kwargs)

    diagrams = list(executor.map(run, jobs)) if executor is not None else [run(line) for line in jobs]
    merged = SolutionSet(dedupe_tol=DEDUPE_TOL)
    for dg in diagrams:
        for s in dg.solutions.canonical():
            merged.add(s)
    merged = merged.canonical()
    found = []
    for dg in diagrams:
        for s in dg.solutions:
            idx = merged.find(s.u)
            found.append((dg.line.description, idx))
    return CampaignReport(merged, found, diagrams)


def write_diagram_json(diagram: BifurcationDiagram, path) -> None:
    with open(path, "w") as fh:
        json.dump(diagram.to_json(), fh, indent=1, sort_keys=True)


def project(diagram: BifurcationDiagram, axes) -> list[tuple[np.ndarray, np.ndarray]]:
    """2-D projections of each branch.

    ``axes`` is either a coordinate pair (i, j) or ('phi', v) meaning
    <v, u> plotted against s.
    """
    out = []
    for b in diagram.branches:
        U = np.array([p.u for p in b.points])
        T = np.array([p.t for p in b.points])
        if axes[0] == "phi":
            out.append((T, U @ np.asarray(axes[1], dtype=float)))
        else:
            out.append((U[:, axes[0]], U[:, axes[1]]))
    return out


def write_diagram_svg(diagram: BifurcationDiagram, path, axes=(0, 1), title: str = "") -> None:
    from .plotting import new_figure, save_svg

    fig, ax = new_figure()
    for k, (x, y) in enumerate(project(diagram, axes)):
        ax.plot(x, y, lw=1.0, color="k" if k == 0 else f"C{k % 10}")
    if diagram.solutions.items:
        S = diagram.solutions.vectors()
        if axes[0] == "phi":
            ax.plot(np.full(len(S), diagram.s0), S @ np.asarray(axes[1], float), "ro", ms=3)
        else:
            ax.plot(S[:, axes[0]], S[:, axes[1]], "ro", ms=3)
    ax.set_title(title)
    save_svg(fig, path)
