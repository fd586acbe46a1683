"""Exact tracing of F^{-1}(F(c)) for piecewise-linear maps.

Inside one orthant O and one linear piece of gamma(s) = F(c(s)) the
preimage curve is the affine segment u(s) = M_O^{-1}(g0 + s g1). Tracing
therefore reduces to event stepping: a slab hit switches orthant (and
reverses s when the two orthant determinants differ in sign), a gamma
breakpoint switches the piece.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class PLSegment:
    positive: np.ndarray
    piece: int
    s_start: float
    s_end: float
    a: np.ndarray
    b: np.ndarray

    def at(self, s: float) -> np.ndarray:
        return self.a + s * self.b


@dataclass
class PLRay:
    segments: list[PLSegment] = field(default_factory=list)
    turns: list[tuple[np.ndarray, float, int]] = field(default_factory=list)
    terminal: str = "RangeExhausted"
    merged_with: int | None = None


class PLLineProblem:
    """Root line c(s) = base + s*direction for a map with orthant structure ``pieces``."""

    def __init__(self, pieces, base, direction, s_range, rel_tol: float = 1e-12):
        self.pieces = pieces
        self.base = np.asarray(base, dtype=float)
        self.direction = np.asarray(direction, dtype=float)
        self.s_lo, self.s_hi = map(float, s_range)
        self.tol = rel_tol
        d = self.direction
        with np.errstate(divide="ignore", invalid="ignore"):
            br = -self.base / d
        idx = np.flatnonzero((d != 0) & (br > self.s_lo) & (br < self.s_hi))
        order = idx[np.argsort(br[idx], kind="stable")]
        self.crossing_coord = order
        self.breaks = br[order]
        # piece j covers [edges[j], edges[j+1]]
        self.edges = np.concatenate([[self.s_lo], self.breaks, [self.s_hi]])
        self.degenerate = bool(np.any(np.diff(self.breaks) <= rel_tol * (1 + np.abs(self.breaks[1:]))))
        self._g = []
        self._sign = {}
        for j in range(len(self.edges) - 1):
            mid = 0.5 * (self.edges[j] + self.edges[j + 1])
            pos = self.pieces.signs(self.root(mid))
            M = self.pieces.matrix(pos)
            self._g.append((pos, M @ self.base, M @ self.direction))

    def root(self, s: float) -> np.ndarray:
        return self.base + s * self.direction

    def piece_orthant(self, j: int) -> np.ndarray:
        return self._g[j][0]

    def gamma(self, s: float, j: int | None = None) -> np.ndarray:
        if j is None:
            j = self.piece_of(s)
        _, g0, g1 = self._g[j]
        return g0 + s * g1

    def piece_of(self, s: float, direction: int = 1) -> int:
        j = int(np.searchsorted(self.breaks, s, side="right" if direction > 0 else "left"))
        return min(j, len(self._g) - 1)

    def det_sign(self, positive: np.ndarray) -> int:
        key = positive.tobytes()
        if key not in self._sign:
            self._sign[key] = int(np.linalg.slogdet(self.pieces.matrix(positive))[0])
        return self._sign[key]

    def trace_ray(self, u0, s0: float, positive, direction: int, piece: int, visited: dict, ray_id: int,
                  max_segments: int = 100000) -> PLRay:
        """Follow the preimage curve from (u0, s0) inside orthant ``positive``."""
        ray = PLRay()
        pos = np.array(positive, dtype=bool)
        s = float(s0)
        u = np.asarray(u0, dtype=float).copy()
        j = piece
        last_flip = -1
        for _ in range(max_segments):
            key = (pos.tobytes(), j)
            if key in visited:
                ray.terminal = "MergedWithBranch"
                ray.merged_with = visited[key]
                return ray
            visited[key] = ray_id
            M = self.pieces.matrix(pos)
            _, g0, g1 = self._g[j]
            try:
                a = np.linalg.solve(M, g0)
                b = np.linalg.solve(M, g1)
            except np.linalg.LinAlgError:
                ray.terminal = "Degenerate"
                return ray
            scale = 1.0 + abs(s)
            s_piece = self.edges[j + 1] if direction > 0 else self.edges[j]
            with np.errstate(divide="ignore", invalid="ignore"):
                hits = -a / b
            ahead = (b != 0) & ((hits - s) * direction > self.tol * scale)
            # leaving the orthant only through coordinates moving toward zero
            moving_out = np.where(pos, b * direction < 0, b * direction > 0)
            cand = np.flatnonzero(ahead & moving_out)
            if last_flip >= 0:
                cand = cand[cand != last_flip] if abs(u[last_flip]) <= 1e-9 * (1 + np.abs(u).max()) else cand
            s_slab = np.inf * direction
            i_slab = -1
            if cand.size:
                k = cand[np.argmin((hits[cand] - s) * direction)]
                s_slab, i_slab = float(hits[k]), int(k)
            if (s_slab - s_piece) * direction < 0:
                seg = PLSegment(pos.copy(), j, s, s_slab, a, b)
                ray.segments.append(seg)
                near = cand[np.abs(hits[cand] - s_slab) <= self.tol * (1 + abs(s_slab))]
                if near.size > 1:
                    ray.terminal = "Degenerate"
                    return ray
                u = seg.at(s_slab)
                u[i_slab] = 0.0
                s = s_slab
                new = pos.copy()
                new[i_slab] = not new[i_slab]
                d_old, d_new = self.det_sign(pos), self.det_sign(new)
                if d_old == 0 or d_new == 0:
                    ray.terminal = "Degenerate"
                    return ray
                if d_old != d_new:
                    direction = -direction
                    ray.turns.append((u.copy(), s, i_slab))
                pos = new
                last_flip = i_slab
                continue
            seg = PLSegment(pos.copy(), j, s, s_piece, a, b)
            ray.segments.append(seg)
            u = seg.at(s_piece)
            s = s_piece
            if (direction > 0 and j == len(self._g) - 1) or (direction < 0 and j == 0):
                ray.terminal = "RangeExhausted"
                return ray
            if np.linalg.norm(u - self.root(s)) <= 1e-9 * (1 + np.linalg.norm(u)):
                ray.terminal = "MergedWithBranch"
                ray.merged_with = 0
                return ray
            j += direction
            last_flip = -1
        ray.terminal = "BudgetExhausted"
        return ray
