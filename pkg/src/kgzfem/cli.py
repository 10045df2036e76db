"""Command-line driver: ``kgzfem {convergence,energy,simulate}``.

Settings come from an optional INI-style config file (sections ``[problem]``,
``[mesh]``, ``[time]``, ``[solver]``, ``[output]``) overridden by flags.
Every output begins with a provenance block listing the resolved settings.

Exit codes: 0 success, 2 usage/configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import configparser
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import EXACT_THRESHOLD, MEASURES, EnergyBreakdown, convergence_study, resolve_tau
from .assembly import space_for
from .linalg import DEFAULT_CG_TOL, SolverError
from .mesh import build_mesh
from .problems import PROBLEM_NAMES, catalog
from .scheme import DEFAULT_MAX_PICARD, DEFAULT_PICARD_TOL, StepFailure, TimeGrid, run

EXIT_OK, EXIT_USAGE, EXIT_SOLVER = 0, 2, 3

# section -> allowed keys
CONFIG_KEYS = {
    "problem": ("name",),
    "mesh": ("M",),
    "time": ("tau", "T"),
    "solver": ("picard_tol", "cg_tol", "quad_order", "max_picard_iters"),
    "output": ("path", "snapshots"),
}

ENERGY_COLUMNS = tuple(f.name for f in EnergyBreakdown.__dataclass_fields__.values())


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    return f"{x:.11e}"


@dataclass
class Plan:
    command: str
    problem: str
    M: list[int]
    tau: str
    T: float
    picard_tol: float = DEFAULT_PICARD_TOL
    cg_tol: float = DEFAULT_CG_TOL
    quad_order: int = 3
    max_picard_iters: int = DEFAULT_MAX_PICARD
    out: str | None = None
    snapshots: list[float] = field(default_factory=list)

    @property
    def tolerances(self) -> dict:
        return dict(picard_tol=self.picard_tol, cg_tol=self.cg_tol, max_picard_iters=self.max_picard_iters)

    def provenance(self) -> list[str]:
        lines = [f"kgzfem {__version__}", f"command = {self.command}",
                 "[problem]", f"name = {self.problem}",
                 "[mesh]", "M = " + ",".join(str(m) for m in self.M),
                 "[time]", f"tau = {self.tau}", f"T = {self.T!r}",
                 "[solver]", f"picard_tol = {self.picard_tol!r}", f"cg_tol = {self.cg_tol!r}",
                 f"quad_order = {self.quad_order}", f"max_picard_iters = {self.max_picard_iters}",
                 "[output]", f"path = {self.out if self.out is not None else '-'}",
                 "snapshots = " + ",".join(repr(t) for t in self.snapshots)]
        return ["# " + line for line in lines]


# -- config --------------------------------------------------------------

def read_config(path: str) -> dict[str, str]:
    """Flat ``section.key -> value`` map; unknown sections or keys are fatal."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep "M" and "T" case
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path}: {exc}") from None
    out, unknown = {}, []
    for section in parser.sections():
        if section not in CONFIG_KEYS:
            unknown.append(f"[{section}]")
            continue
        for key, value in parser.items(section):
            if key not in CONFIG_KEYS[section]:
                unknown.append(f"{section}.{key}")
            else:
                out[f"{section}.{key}"] = value.strip()
    if unknown:
        raise UsageError("unknown config keys: " + ", ".join(unknown))
    return out


def _float_list(text: str, what: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"{what}: range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if not step > 0:
            raise UsageError(f"{what}: step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(max(n, 0))]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise UsageError(f"mesh.M: expected comma-separated integers, got {text!r}") from None


def resolve_plan(args: argparse.Namespace) -> Plan:
    cfg = read_config(args.config) if args.config else {}

    def pick(flag, key):
        return flag if flag is not None else cfg.get(key)

    name = pick(args.problem, "problem.name")
    M = args.M if args.M else (_int_list(cfg["mesh.M"]) if "mesh.M" in cfg else None)
    missing = [k for k, v in (("problem.name (--problem)", name), ("mesh.M (--M)", M)) if not v]
    if missing:
        raise UsageError("missing required settings: " + ", ".join(missing))
    if name not in PROBLEM_NAMES:
        raise UsageError(f"unknown problem {name!r}; available: {', '.join(PROBLEM_NAMES)}")
    problem = catalog(name)
    if any(m < 2 for m in M):
        raise UsageError(f"mesh sizes must be >= 2, got {M}")
    if args.command != "convergence" and len(M) != 1:
        raise UsageError(f"{args.command} takes exactly one --M, got {len(M)}")

    tau = pick(args.tau, "time.tau")
    if tau is None:
        tau = "h" if args.command == "convergence" or problem.default_tau is None else repr(problem.default_tau)
    try:
        resolve_tau(tau, 1.0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    def num(key, flag, default, conv=float):
        value = pick(flag, key)
        if value is None:
            return default
        try:
            return conv(value)
        except ValueError:
            raise UsageError(f"{key}: invalid value {value!r}") from None

    T = num("time.T", args.T, problem.T)
    if not T >= 0:
        raise UsageError(f"final time must be non-negative, got {T}")
    snaps = pick(args.snapshots, "output.snapshots")
    plan = Plan(
        command=args.command, problem=name, M=list(M), tau=tau, T=T,
        picard_tol=num("solver.picard_tol", args.picard_tol, DEFAULT_PICARD_TOL),
        cg_tol=num("solver.cg_tol", args.cg_tol, DEFAULT_CG_TOL),
        quad_order=num("solver.quad_order", args.quad_order, 3, int),
        max_picard_iters=num("solver.max_picard_iters", None, DEFAULT_MAX_PICARD, int),
        out=pick(args.out, "output.path"),
        snapshots=_float_list(snaps, "output.snapshots") if snaps else [],
    )
    if not 1 <= plan.quad_order <= 6:
        raise UsageError(f"quad_order must be in 1..6, got {plan.quad_order}")
    if args.command == "convergence" and problem.exact is None:
        raise UsageError(f"convergence needs a problem with an exact solution (mms2d, mms3d), got {name!r}")
    if args.command == "energy" and not problem.conservative:
        raise UsageError(f"energy needs a conservative problem, {name!r} is forced")
    if args.command == "convergence" and any(b <= a for a, b in zip(plan.M, plan.M[1:])):
        raise UsageError(f"mesh sizes must increase, got {plan.M}")
    if args.command == "convergence" and any(m % 2 for m in plan.M):
        raise UsageError("postprocessing unavailable: convergence mesh sizes must be even")
    return plan


# -- output helpers --------------------------------------------------------

def _emit(plan: Plan, body: str) -> None:
    text = "\n".join(plan.provenance()) + "\n" + body
    if plan.out in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(plan.out).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {plan.out}: {exc.strerror}") from None


def _mesh_for(plan: Plan, M: int):
    prob = catalog(plan.problem)
    return prob, build_mesh(prob.dim, prob.origin, prob.extent, (M,) * prob.dim)


# -- subcommands -----------------------------------------------------------

def run_convergence(plan: Plan) -> int:
    rows = convergence_study(catalog(plan.problem), plan.M, plan.tau, plan.T, plan.quad_order, **plan.tolerances)
    header = ["M", "h", "tau"]
    for m in MEASURES:
        header += [m, "rate"]
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        cells = [str(row.M), fmt(row.h), fmt(row.tau)]
        for m in MEASURES:
            e = row.errors[m]
            cells.append("exact" if e < EXACT_THRESHOLD else fmt(e))
            rate = row.orders.get(m)
            cells.append("" if rate is None else fmt(rate))
        buf.write(",".join(cells) + "\n")
    _emit(plan, buf.getvalue())
    return EXIT_OK


def run_energy(plan: Plan) -> int:
    prob, mesh = _mesh_for(plan, plan.M[0])
    tau = resolve_tau(plan.tau, max(mesh.h))
    space = space_for(mesh, plan.quad_order)
    buf = io.StringIO()
    buf.write(",".join(("n", "t") + ENERGY_COLUMNS + ("total", "drift")) + "\n")
    E0 = []

    def write_row(n, state, e, report):
        if not E0:
            E0.append(e.total)
        cells = [str(n), fmt(state.time)] + [fmt(v) for v in e.parts] + [fmt(e.total), fmt(abs(e.total - E0[0]))]
        buf.write(",".join(cells) + "\n")

    grid = TimeGrid.from_final_time(plan.T, tau)
    try:
        traj = run(space, grid, prob, observers=[write_row], **plan.tolerances)
    except (StepFailure, SolverError):
        _emit(plan, buf.getvalue() + "# aborted: solver failure\n")
        raise
    drift = max(abs(e.total - E0[0]) for e in traj.energies)
    rel = drift / abs(E0[0]) if E0[0] != 0 else drift
    buf.write(f"# max_drift = {fmt(drift)}, max_relative_drift = {fmt(rel)}\n")
    _emit(plan, buf.getvalue())
    return EXIT_OK


def write_vtk(path: Path, mesh, state, title: str) -> None:
    shape = list(mesh.shape) + [1] * (3 - mesh.dim)
    origin = list(mesh.origin) + [0.0] * (3 - mesh.dim)
    spacing = list(mesh.h) + [1.0] * (3 - mesh.dim)
    u = state.u
    fields_ = {"abs_u": np.abs(u), "re_u": u.real, "im_u": u.imag, "varphi": state.varphi}
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET STRUCTURED_POINTS",
             "DIMENSIONS " + " ".join(str(s) for s in shape),
             "ORIGIN " + " ".join(fmt(o) for o in origin),
             "SPACING " + " ".join(fmt(s) for s in spacing),
             f"POINT_DATA {mesh.n_nodes}"]
    for name, vals in fields_.items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [fmt(v) for v in vals]
    path.write_text("\n".join(lines) + "\n")


def snapshot_name(problem: str, M: int, t: float) -> str:
    return f"{problem}_M{M}_t{t:09.4f}.vtk"


def run_simulate(plan: Plan) -> int:
    prob, mesh = _mesh_for(plan, plan.M[0])
    M = plan.M[0]
    tau = resolve_tau(plan.tau, max(mesh.h))
    outdir = Path(plan.out if plan.out not in (None, "-") else "snapshots")
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        probe = outdir / ".kgzfem-write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise UsageError(f"cannot write to {outdir}: {exc.strerror}") from None
    space = space_for(mesh, plan.quad_order)
    grid = TimeGrid.from_final_time(plan.T, tau)
    bad = [t for t in plan.snapshots if t < -1e-12 or t > grid.T + 1e-9]
    if bad:
        raise UsageError(f"snapshot times outside [0, {grid.T}]: {bad}")
    written = []
    meta_lines = []

    def finish(status, traj):
        E = [e.total for e in traj.energies] if traj is not None else []
        body = [f"# status = {status}", f"# tau_resolved = {fmt(tau)}", f"# steps = {grid.N}",
                f"# nodes = {mesh.n_nodes}"]
        if E:
            drift = max(abs(e - E[0]) for e in E)
            body.append(f"# max_relative_energy_drift = {fmt(drift / abs(E[0]) if E[0] else drift)}")
        body.append("file,t,max_abs_u")
        body += meta_lines
        text = "\n".join(plan.provenance() + body) + "\n"
        (outdir / f"{plan.problem}_M{M}_meta.txt").write_text(text)

    def observer(n, state, e, report):
        for t in plan.snapshots:
            if int(round(t / tau)) == n:
                name = snapshot_name(plan.problem, M, t)
                title = f"kgzfem {__version__} problem={plan.problem} M={M} t={fmt(state.time)}"
                write_vtk(outdir / name, mesh, state, title)
                written.append(name)
                meta_lines.append(f"{name},{fmt(state.time)},{fmt(float(np.max(np.abs(state.u))))}")

    try:
        traj = run(space, grid, prob, observers=[observer], **plan.tolerances)
    except (StepFailure, SolverError) as exc:
        finish("solver failure", exc.trajectory)
        raise
    finish("ok", traj)
    return EXIT_OK


COMMANDS = {"convergence": run_convergence, "energy": run_energy, "simulate": run_simulate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgzfem", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kgzfem {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"convergence": "error table over a list of mesh sizes",
             "energy": "per-step discrete energy log of a conservative run",
             "simulate": "field snapshots in legacy structured-points format"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--problem", choices=PROBLEM_NAMES)
        p.add_argument("--config", help="INI file with [problem] [mesh] [time] [solver] [output]")
        p.add_argument("--M", type=int, action="append", help="elements per axis (repeatable)")
        p.add_argument("--tau", help="h, h/2, const:<value> or a number")
        p.add_argument("--T", type=str, help="final time")
        p.add_argument("--out", help="output file (CSV; '-' for stdout) or directory (simulate)")
        p.add_argument("--snapshots", help="comma list or start:stop:step of snapshot times")
        p.add_argument("--picard-tol", dest="picard_tol", type=str)
        p.add_argument("--cg-tol", dest="cg_tol", type=str)
        p.add_argument("--quad-order", dest="quad_order", type=str)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        plan = resolve_plan(args)
        return COMMANDS[plan.command](plan)
    except UsageError as exc:
        print(f"kgzfem: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StepFailure, SolverError) as exc:
        print(f"kgzfem: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
