"""Command-line entry point: ``foldcont <command> --config FILE --out DIR``.

Every command writes its artifacts plus ``manifest.json`` into the output
directory. Exit codes: 0 success, 2 invalid configuration, 3 numerical
failure (the error class name is printed to stderr).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from . import __version__
from .errors import ConfigError, FoldcontError

log = logging.getLogger("foldcont")

COMMANDS = ("census", "bifurcate", "planar", "scan", "solimini", "ingest-check")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class StepSection(_Strict):
    initial_step: float = 0.05
    min_step: float = 1e-9
    max_step: float = 0.5
    newton_tol: float = 1e-10
    newton_max_iter: int = 12
    fold_tol: float = 1e-8
    max_steps: int = 20000
    alpha: float = 1.0
    use_spectral: bool = True

    def build(self):
        from .continuation import StepConfig

        return StepConfig(**self.model_dump())


class SturmProblem(_Strict):
    """Discrete Sturm-Liouville problem A^h u - f(u) = g on n nodes."""

    n: int = 15
    k: int | None = None
    ell_minus: float | None = None
    ell_plus: float | None = None
    nonlinearity: Literal["pl", "arctan"] = "pl"
    rhs_modes: dict[int, float] = {1: -1.0}

    @model_validator(mode="after")
    def _check(self):
        if self.k is None and self.ell_plus is None:
            raise ValueError("give k or ell_plus")
        if self.k is not None and not 1 <= self.k <= self.n:
            raise ValueError("k must lie in 1..n")
        return self


class LineConfig(_Strict):
    base: Union[Literal["lazer-mckenna", "origin"], list[float]] = "origin"
    refine: bool = False
    direction: Union[dict[int, float], list[float]]
    s_range: tuple[float, float] = (-1.0, 1.0)


class CampaignSection(_Strict):
    directions: list[dict[int, float]]
    max_lines: int = 30
    max_draws: int = 8192
    lazer_mckenna: bool = True
    s_range: tuple[float, float] = (-50.0, 50.0)
    stall_lines: int | None = 3
    target: int | None = None


class BifurcateSection(_Strict):
    problem: Literal["sturm-pl", "sturm-al", "cubic", "circle", "linear"]
    sturm: SturmProblem | None = None
    cubic_a: float = 2.4
    matrix: list[list[float]] | None = None
    rhs: list[float] | None = None
    lines: list[LineConfig] = []
    campaign: CampaignSection | None = None
    exclude_trivial: bool = False
    residue_threshold: float = 1e-10
    depth_limit: int = 4
    root_step: float | None = None
    step: StepSection = StepSection()

    @model_validator(mode="after")
    def _check(self):
        if self.problem.startswith("sturm") and self.sturm is None:
            raise ValueError("sturm problems need a 'sturm' section")
        if self.problem == "linear" and self.matrix is None:
            raise ValueError("linear problems need 'matrix'")
        if not self.lines and self.campaign is None:
            raise ValueError("give at least one line or a campaign")
        if self.campaign is not None and self.problem != "sturm-pl":
            raise ValueError("campaigns sample orthants and need problem 'sturm-pl'")
        return self


class CensusSection(_Strict):
    n: int = 15
    ks: Union[Literal["all"], list[int]] = "all"
    ell_plus_from_eigenvalues: list[dict[int, float]] = []
    rhs_modes: dict[int, float] = {1: -1.0}


class PlanarSection(_Strict):
    map: Literal["circle", "cubic", "pleat", "square"]
    cubic_a: float = 2.4
    box: tuple[float, float, float, float] = (-4.0, 4.0, -4.0, 4.0)
    grid: int = 64
    probes: list[tuple[float, float]] = []
    flower: bool = True
    tile_resolution: int = 800
    trace_step: float = 0.02


class GridSection(_Strict):
    shape: Literal["disk_with_hole", "square", "square_with_hole", "strip"] = "disk_with_hole"
    n: int = 12
    hole: tuple[int, int, int, int] | None = None


class OperatorSource(_Strict):
    grid: GridSection | None = None
    operator_file: str | None = None
    mass_file: str | None = None
    k: int | None = None
    ell_minus: float | None = None
    ell_plus: float | None = None

    @model_validator(mode="after")
    def _check(self):
        if (self.grid is None) == (self.operator_file is None):
            raise ValueError("give exactly one of 'grid' and 'operator_file'")
        if self.k is None and self.ell_plus is None:
            raise ValueError("give k or ell_plus")
        return self


class ScanSection(OperatorSource):
    t_range: tuple[float, float] = (-1e4, 1e4)
    samples: int = 201
    m: int | None = None


class SoliminiSection(OperatorSource):
    t_load: float = 1000.0
    line_coeffs: list[float] = [0.8, -0.1, -0.1]
    s_range: tuple[float, float] = (-1000.0, 1000.0)
    root_step: float = 4.0
    scan: bool = True
    scan_samples: int = 201
    step: StepSection = StepSection(initial_step=1.0, max_step=20.0, min_step=1e-6, newton_tol=1e-11)


class IngestSection(_Strict):
    operator_file: str
    mass_file: str | None = None
    m: int = 6


class ExperimentConfig(_Strict):
    command: Literal["census", "bifurcate", "planar", "scan", "solimini", "ingest-check"]
    seed: int = 0
    census: CensusSection | None = None
    bifurcate: BifurcateSection | None = None
    planar: PlanarSection | None = None
    scan: ScanSection | None = None
    solimini: SoliminiSection | None = None
    ingest_check: IngestSection | None = None

    @model_validator(mode="after")
    def _section_present(self):
        if self.section is None:
            raise ValueError(f"command '{self.command}' needs a '{self.command.replace('-', '_')}' section")
        return self

    @property
    def section(self):
        return getattr(self, self.command.replace("-", "_"))

    def digest(self) -> str:
        text = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    _resolve_paths(cfg, path.parent)
    return cfg


def _resolve_paths(cfg: ExperimentConfig, root: Path) -> None:
    sec = cfg.section
    for name in ("operator_file", "mass_file"):
        value = getattr(sec, name, None)
        if value is not None and not Path(value).is_absolute():
            setattr(sec, name, str(root / value))


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int
    threads: int
    versions: dict
    wall_clock: float = 0.0
    counters: dict = field(default_factory=dict)
    files: list[str] = field(default_factory=list)
    caveats: list[str] = field(default_factory=list)

    def write(self, out: Path) -> Path:
        path = out / "manifest.json"
        self.files = sorted(set(self.files) | {"manifest.json"})
        path.write_text(json.dumps(vars(self), indent=1, sort_keys=True, default=_json_default) + "\n")
        return path


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def _versions() -> dict:
    import matplotlib
    import scipy

    return {"foldcont": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__, "python": platform.python_version()}


def write_solutions_csv(path, solutions) -> None:
    """Columns: index, morse_index, residue, source, u1..un."""
    items = list(solutions)
    n = len(items[0].u) if items else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "morse_index", "residue", "source"] + [f"u{i + 1}" for i in range(n)])
        for i, s in enumerate(items):
            w.writerow([i, s.morse_index, repr(float(s.residue)), s.source] + [repr(float(x)) for x in s.u])


# -- census -----------------------------------------------------------------

def table1_markdown(n: int, ell_minus: float, rows) -> str:
    lines = [f"n = {n}, l- = {ell_minus:.4f}", "", "| k | l+ | N |", "|---|---|---|"]
    for k, lp, count in rows:
        lines.append(f"| {k} | {lp:.4f} | {count} |")
    return "\n".join(lines) + "\n"


def cmd_census(cfg: ExperimentConfig, out: Path, threads: int, man: RunManifest) -> None:
    from .sturm import PLNonlinearity, build_operator, enumerate_pl_solutions, table1_parameters

    sec: CensusSection = cfg.census
    op = build_operator(sec.n)
    lm, ladder = table1_parameters(op)
    lam = op.eigenvalues()
    g = op.mode_mix(sec.rhs_modes)
    ks = list(range(1, sec.n + 1)) if sec.ks == "all" else list(sec.ks)
    runs = []
    for k in ks:
        if not 1 <= k <= sec.n:
            raise ConfigError(f"ladder index {k} outside 1..{sec.n}")
        runs.append((str(k), ladder[k - 1]))
    for recipe in sec.ell_plus_from_eigenvalues:
        lp = sum(c * lam[i - 1] for i, c in recipe.items())
        runs.append(("+".join(f"{c:g}*lambda{i}" for i, c in recipe.items()), lp))
    executor = ThreadPoolExecutor(threads) if threads > 1 else None
    rows = []
    try:
        for label, lp in runs:
            census = enumerate_pl_solutions(op, PLNonlinearity(lm, lp), g, executor=executor)
            name = f"census_{label.replace('*', '').replace('+', '_')}.csv"
            _write_census_csv(out / name, census)
            man.files.append(name)
            rows.append((label, lp, len(census.solutions)))
            man.counters.setdefault("N", {})[label] = len(census.solutions)
            man.counters.setdefault("singular_orthants", {})[label] = census.singular
    finally:
        if executor is not None:
            executor.shutdown()
    (out / "table1.md").write_text(table1_markdown(sec.n, lm, rows))
    man.files.append("table1.md")


def _write_census_csv(path, census) -> None:
    """Columns: orthant, morse_index, residue, u1..un."""
    items = census.solutions.items
    n = len(items[0].u) if items else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["orthant", "morse_index", "residue"] + [f"u{i + 1}" for i in range(n)])
        for s in items:
            w.writerow([s.orthant, s.morse_index, repr(float(s.residue))] + [repr(float(x)) for x in s.u])


# -- bifurcate --------------------------------------------------------------

def _sturm_setup(sp: SturmProblem):
    from .sturm import PLNonlinearity, al_map, build_operator, calibrate_arctan, pl_map, table1_parameters

    op = build_operator(sp.n)
    lm, ladder = table1_parameters(op)
    ell_minus = lm if sp.ell_minus is None else sp.ell_minus
    ell_plus = ladder[sp.k - 1] if sp.ell_plus is None else sp.ell_plus
    if sp.nonlinearity == "pl":
        nl = PLNonlinearity(ell_minus, ell_plus)
        F = pl_map(op, nl)
    else:
        nl = calibrate_arctan(ell_minus, ell_plus)
        F = al_map(op, nl)
    return op, nl, F, op.mode_mix(sp.rhs_modes)


def _line_base(line: LineConfig, n: int, op=None, nl=None, rhs_modes=None):
    if isinstance(line.base, list):
        if len(line.base) != n:
            raise ConfigError(f"line base has {len(line.base)} entries, expected {n}")
        return np.asarray(line.base, dtype=float)
    if line.base == "origin":
        return np.zeros(n)
    from .sturm import lazer_mckenna_seeds

    if op is None or set(rhs_modes) != {1} or rhs_modes[1] >= 0:
        raise ConfigError("'lazer-mckenna' bases need a sturm problem with g = -t*sin(I_h), t > 0")
    return lazer_mckenna_seeds(op, nl, -rhs_modes[1])[0]


def _direction(d, n: int, op=None) -> np.ndarray:
    if isinstance(d, dict):
        if op is None:
            raise ConfigError("mode-mix directions need a sturm problem")
        return op.mode_mix(d)
    if len(d) != n:
        raise ConfigError(f"direction has {len(d)} entries, expected {n}")
    return np.asarray(d, dtype=float)


def cmd_bifurcate(cfg: ExperimentConfig, out: Path, threads: int, man: RunManifest) -> None:
    from .bifurcation import (
        DEDUPE_TOL,
        LineSpec,
        OrthantSampler,
        build_diagram,
        sampling_campaign,
        write_diagram_json,
        write_diagram_svg,
    )
    from .core import SolutionSet, linear_map, newton_solve
    from .planar import circle_fold_map, cubic_map
    from .sturm import lazer_mckenna_seeds

    sec: BifurcateSection = cfg.bifurcate
    op = nl = None
    if sec.problem.startswith("sturm"):
        op, nl, F, g = _sturm_setup(sec.sturm)
    elif sec.problem == "cubic":
        F = cubic_map(sec.cubic_a)
        g = None
    elif sec.problem == "circle":
        F = circle_fold_map()
        g = None
    else:
        F = linear_map(np.asarray(sec.matrix, dtype=float))
        g = None
    n = F.dimension
    if sec.rhs is not None:
        g = np.asarray(sec.rhs, dtype=float)
    stepcfg = sec.step.build()
    found = SolutionSet(dedupe_tol=DEDUPE_TOL)
    axes = ("phi", op.eigenvector(1, normalized=True)) if op is not None else (0, 1)
    rhs_modes = sec.sturm.rhs_modes if sec.sturm is not None else None
    diagrams = []
    for i, lc in enumerate(sec.lines):
        base = _line_base(lc, n, op, nl, rhs_modes)
        gi = F(base) if g is None else g
        if lc.refine:
            base, ok, _ = newton_solve(F, gi, base, tol=1e-15, max_iter=50)
            if not ok:
                raise ConfigError(f"line {i + 1}: base could not be refined onto F(u) = g")
        line = LineSpec(base, _direction(lc.direction, n, op), tuple(lc.s_range), f"line{i + 1}")
        dg = build_diagram(F, line, gi, stepcfg, sec.depth_limit, root_step=sec.root_step,
                           residue_threshold=sec.residue_threshold)
        diagrams.append(dg)
        for s in dg.solutions:
            found.add(s)
    if sec.campaign is not None:
        c = sec.campaign
        sampler = OrthantSampler(op.dense(), nl.ell_minus, nl.ell_plus, g, cfg.seed)
        seeds = list(lazer_mckenna_seeds(op, nl, -rhs_modes[1])) if c.lazer_mckenna else []
        camp = sampling_campaign(F, sampler, [op.mode_mix(d) for d in c.directions], c.s_range, c.max_lines,
                                 c.max_draws, stepcfg, target=c.target, seeds=seeds, stall_lines=c.stall_lines)
        diagrams += camp.diagrams
        for s in camp.solutions:
            found.add(s)
        man.counters["orthant_draws"] = camp.draws
        man.counters["found_after_line"] = camp.found_after
    solutions = found.canonical()
    if sec.exclude_trivial:
        solutions.items = [s for s in solutions.items if np.linalg.norm(s.u) > 1e-9]
    for k, dg in enumerate(diagrams, start=1):
        write_diagram_json(dg, out / f"diagram_{k}.json")
        write_diagram_svg(dg, out / f"diagram_{k}.svg", axes=axes, title=dg.line.description)
        man.files += [f"diagram_{k}.json", f"diagram_{k}.svg"]
    write_solutions_csv(out / "solutions.csv", solutions)
    man.files.append("solutions.csv")
    man.counters["solutions"] = len(solutions)
    man.counters["morse_histogram"] = solutions.morse_histogram() if len(solutions) else []
    man.counters["diagrams"] = len(diagrams)
    man.counters["traces"] = sum(d.budget_spent.traces for d in diagrams)
    man.counters["fold_events"] = sum(d.budget_spent.fold_events for d in diagrams)
    if any(d.exhausted for d in diagrams):
        man.caveats.append("trace budget exhausted in at least one diagram")


# -- planar -----------------------------------------------------------------

def cmd_planar(cfg: ExperimentConfig, out: Path, threads: int, man: RunManifest) -> None:
    from . import planar as pl

    sec: PlanarSection = cfg.planar
    F = {"circle": pl.circle_fold_map, "pleat": pl.pleat_map, "square": pl.square_map}.get(sec.map)
    F = pl.cubic_map(sec.cubic_a) if F is None else F()
    box = tuple(sec.box)
    curves = pl.critical_curves(F, box, step=sec.trace_step)
    zeros = pl.count_preimages(F, np.zeros(2), box, sec.grid)
    pl.write_zeros_csv(out / "zeros.csv", zeros.roots)
    rep = pl.make_tile_report(F, curves, box=box, grid=sec.grid, extra_probes=sec.probes)
    parity = pl.verify_tile_parity(F, rep)
    flower = []
    tiles = None
    if sec.flower:
        flower = pl.compute_flower(F, curves, box)
        tiles = pl.count_domain_tiles(curves, flower, box, sec.tile_resolution)
    probes = [(p, c) for p, c in rep.probe_points]
    pl.write_planar_svg(out / "planar.svg", curves, flower, probes,
                        title=f"{sec.map}: {tiles} domain tiles" if tiles is not None else sec.map, box=box)
    report = {
        "critical_curves": [{"closed": c.closed, "points": len(c)} for c in curves],
        "zeros": zeros.roots.tolist(),
        "probes": [{"y": p.tolist(), "count": c} for p, c in rep.probe_points],
        "parity_ok": parity.ok,
        "parity_notes": parity.notes,
        "domain_tiles": tiles,
    }
    (out / "tiles.json").write_text(json.dumps(report, indent=1, sort_keys=True, default=_json_default) + "\n")
    man.files += ["zeros.csv", "planar.svg", "tiles.json"]
    man.counters.update(zeros=zeros.count, critical_curves=len(curves), parity_ok=parity.ok,
                        domain_tiles=tiles, probe_counts=[c for _, c in rep.probe_points])
    if zeros.suspect_undercount:
        man.caveats.append("near-coincident zeros: count may be low")


# -- elliptic ---------------------------------------------------------------

def _operator(sec: OperatorSource):
    from .elliptic import GridDomain, build_fd_laplacian, ingest_operator

    if sec.operator_file is not None:
        return ingest_operator(sec.operator_file, sec.mass_file)
    gs = sec.grid
    if gs.shape == "square_with_hole":
        if gs.hole is None:
            raise ConfigError("square_with_hole needs 'hole'")
        grid = GridDomain.square_with_hole(gs.n, tuple(gs.hole))
    else:
        grid = getattr(GridDomain, gs.shape)(gs.n)
    return build_fd_laplacian(grid)


def _elliptic_nl(sec: OperatorSource, op):
    from .sturm import calibrate_arctan

    k = sec.k
    w = op.eigenvalues(min(op.dimension, (k or 0) + 2))
    ell_minus = w[0] / 2 if sec.ell_minus is None else sec.ell_minus
    if sec.ell_plus is not None:
        ell_plus = sec.ell_plus
    else:
        if k >= op.dimension:
            raise ConfigError("k must be smaller than the operator dimension")
        ell_plus = (w[k - 1] + w[k]) / 2
    return calibrate_arctan(ell_minus, ell_plus)


def cmd_scan(cfg: ExperimentConfig, out: Path, threads: int, man: RunManifest) -> None:
    from .elliptic import enclosed_count, vertical_scan

    sec: ScanSection = cfg.scan
    op = _operator(sec)
    nl = _elliptic_nl(sec, op)
    vs = vertical_scan(op, nl, t_range=tuple(sec.t_range), m=sec.m, samples=sec.samples)
    vs.write_csv(out / "scan.csv")
    _scan_svg(vs, out / "scan.svg")
    man.files += ["scan.csv", "scan.svg"]
    man.counters.update(branches=int(vs.eigenvalues.shape[1]), crossings=vs.crossing_count,
                        crossings_per_branch=[len(c) for c in vs.crossings],
                        crossing_t=[[float(t) for t in c] for c in vs.crossings],
                        enclosed=enclosed_count(op, nl), strictly_decreasing=vs.strictly_decreasing())


def _scan_svg(vs, path) -> None:
    from .plotting import new_figure, save_svg

    fig, ax = new_figure((6.0, 4.0))
    for i in range(vs.eigenvalues.shape[1]):
        ax.plot(vs.t, vs.eigenvalues[:, i], lw=1.0, label=f"lambda{i + 1}")
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xscale("symlog")
    ax.legend(fontsize=7)
    save_svg(fig, path)


def cmd_solimini(cfg: ExperimentConfig, out: Path, threads: int, man: RunManifest) -> None:
    from .bifurcation import write_diagram_json
    from .elliptic import run_solimini_experiment

    sec: SoliminiSection = cfg.solimini
    op = _operator(sec)
    nl = _elliptic_nl(sec, op)
    res = run_solimini_experiment(op, nl, sec.t_load, sec.step.build(), tuple(sec.line_coeffs),
                                  tuple(sec.s_range), sec.root_step, sec.scan, sec.scan_samples)
    sols = res.solutions.canonical()
    write_solutions_csv(out / "solutions.csv", sols)
    write_diagram_json(res.diagram, out / "diagram.json")
    man.files += ["solutions.csv", "diagram.json"]
    if res.scan is not None:
        res.scan.write_csv(out / "scan.csv")
        man.files.append("scan.csv")
    if op.grid is not None and len(sols):
        _fields_svg(op.grid, sols, out / "solutions.svg")
        man.files.append("solutions.svg")
    man.counters.update(solutions=len(sols), morse_indices=[s.morse_index for s in sols],
                        max_residue=max((s.residue for s in sols), default=None),
                        enclosed=res.enclosed, ell_minus=nl.ell_minus, ell_plus=nl.ell_plus,
                        operator=op.provenance, dimension=op.dimension)
    if op.provenance != "ingested":
        man.caveats.append("finite-difference grid: the solution count is a best-effort result")


def _fields_svg(grid, sols, path) -> None:
    import matplotlib.pyplot as plt

    from .plotting import save_svg

    k = len(sols)
    cols = min(k, 3)
    rows = (k + cols - 1) // cols
    fig, axs = plt.subplots(rows, cols, figsize=(3 * cols, 3 * rows), squeeze=False)
    for ax in axs.ravel():
        ax.axis("off")
    for ax, s in zip(axs.ravel(), sols):
        ax.imshow(grid.to_field(s.u).T, origin="lower", cmap="coolwarm")
        ax.set_title(f"Morse {s.morse_index}", fontsize=8)
    save_svg(fig, path)


def cmd_ingest_check(cfg: ExperimentConfig, out: Path, threads: int, man: RunManifest) -> None:
    from .elliptic import ingest_operator

    sec: IngestSection = cfg.ingest_check
    op = ingest_operator(sec.operator_file, sec.mass_file)
    w = op.eigenvalues(min(sec.m, op.dimension))
    report = {"dimension": op.dimension, "nnz": int(op.stiffness.nnz), "eigenvalues": w.tolist(),
              "positive_definite": bool(w[0] > 0)}
    (out / "operator.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    man.files.append("operator.json")
    man.counters.update(dimension=op.dimension, eigenvalues=w.tolist())


HANDLERS = {
    "census": cmd_census,
    "bifurcate": cmd_bifurcate,
    "planar": cmd_planar,
    "scan": cmd_scan,
    "solimini": cmd_solimini,
    "ingest-check": cmd_ingest_check,
}


def run(command: str, config_path, out, threads: int = 1, seed: int | None = None) -> RunManifest:
    """Validate the config, run the command, write the manifest; raises on failure."""
    cfg = load_config(config_path)
    if cfg.command != command:
        raise ConfigError(f"config is for '{cfg.command}', not '{command}'")
    if seed is not None:
        cfg.seed = seed
    if threads < 1:
        raise ConfigError("--threads must be >= 1")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(command, cfg.digest(), cfg.seed, threads, _versions())
    t0 = time.perf_counter()
    HANDLERS[command](cfg, out, threads, man)
    man.wall_clock = time.perf_counter() - t0
    man.write(out)
    return man


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="foldcont", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="YAML experiment file")
        s.add_argument("--out", default="out", help="output directory")
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        man = run(args.command, args.config, args.out, args.threads, args.seed)
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return 2
    except FoldcontError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    print(f"{args.command}: wrote {len(man.files)} files to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
