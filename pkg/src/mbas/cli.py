"""Experiment driver: parameter sweeps, single solves and matrix export.

Usage::

    mbas sweep  --k 7 --nu 1e-2,1e-4 --omega 1e-4,1,1e4 --method mbas
    mbas single --k 7 --nu 1e-6 --omega 1 --method mbas --history hist.txt
    mbas alphas --k 7 --nu 1e-2,1e-4,1e-6,1e-8 --omega 1e-4,1e-3,1e-2,1e-1,1,10,100,1e3,1e4
    mbas export --k 3 --out matrices/

Exit codes: 0 success, 1 solver error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from mbas.errors import MbasError, ParameterError
from mbas.inner import InnerSpec
from mbas.krylov import GmresConfig, passs_solve, pbas_solve, pmbas_solve
from mbas.meshfem import Grid
from mbas.params import AlphaPolicy, resolve_alpha
from mbas.sparsekit import write_matrix_market, write_vector
from mbas.splittings import CSV_FIELDS, IterConfig, SolveReport, asss_solve, bas_solve, mbas_solve
from mbas.systems import SystemBundle, build_system

__all__ = ["RunSpec", "export_matrices", "main", "render", "run_single", "run_sweep"]

log = logging.getLogger("mbas")

METHODS = ("mbas", "bas", "asss")
MODES = ("stationary", "gmres")
FORMATS = ("markdown", "csv")

PAPER_NU = "1e-2,1e-4,1e-6,1e-8"
PAPER_OMEGA = "1e-4,1e-3,1e-2,1e-1,1,10,100,1e3,1e4"

# GMRES keeps the whole Krylov basis
BASIS_WARN_BYTES = 512 * 2**20


def default_policy(method: str, mode: str) -> AlphaPolicy:
    if method == "mbas":
        return AlphaPolicy("estimated")
    if method == "bas":
        return AlphaPolicy("bas" if mode == "stationary" else "bas-prec")
    return AlphaPolicy("asss")


@dataclass(frozen=True)
class RunSpec:
    k: int
    nus: tuple[float, ...]
    omegas: tuple[float, ...]
    method: str = "mbas"
    mode: str = "stationary"
    alpha: AlphaPolicy | None = None
    inner: InnerSpec = field(default_factory=InnerSpec)
    tol: float = 1e-6
    maxit: int = 500
    fmt: str = "markdown"
    out: Path | None = None
    jobs: int = 1
    side: str = "right"

    def __post_init__(self):
        Grid(self.k)
        if not self.nus:
            raise ParameterError("the nu list is empty")
        if not self.omegas:
            raise ParameterError("the omega list is empty")
        for name, value, allowed in (("method", self.method, METHODS), ("mode", self.mode, MODES),
                                     ("format", self.fmt, FORMATS)):
            if value not in allowed:
                raise ParameterError(f"{name} must be one of {', '.join(allowed)}, got {value!r}")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if self.maxit < 1:
            raise ParameterError("maxit must be at least 1")
        if self.jobs < 1:
            raise ParameterError("jobs must be at least 1")
        object.__setattr__(self, "nus", tuple(float(v) for v in self.nus))
        object.__setattr__(self, "omegas", tuple(float(v) for v in self.omegas))
        object.__setattr__(self, "inner", InnerSpec.parse(self.inner))
        policy = default_policy(self.method, self.mode) if self.alpha is None else AlphaPolicy.parse(self.alpha)
        object.__setattr__(self, "alpha", policy)
        GmresConfig(self.tol, self.maxit, side=self.side)

    def cells(self):
        return [(nu, omega) for nu in self.nus for omega in self.omegas]


def solve_cell(base: SystemBundle, spec: RunSpec, nu: float, omega: float):
    """One solve; returns ``(solution, report)``. Assembly is not timed."""
    s = base.with_params(nu, omega, share_cache=False)
    alpha = resolve_alpha(spec.alpha, s)
    if spec.mode == "stationary":
        cfg = IterConfig(alpha, spec.tol, spec.maxit, spec.inner)
        x, rep = {"mbas": mbas_solve, "bas": bas_solve, "asss": asss_solve}[spec.method](s, cfg)
    else:
        cfg = GmresConfig(spec.tol, spec.maxit, side=spec.side)
        n = 4 * s.m if spec.method == "asss" else 2 * s.m
        itemsize = 8 if spec.method == "asss" else 16
        if (cfg.maxit + 1) * n * itemsize > BASIS_WARN_BYTES:
            log.warning("GMRES basis may need %.0f MB; lower --maxit on small machines",
                        (cfg.maxit + 1) * n * itemsize / 2**20)
        x, rep = {"mbas": pmbas_solve, "bas": pbas_solve, "asss": passs_solve}[spec.method](
            s, alpha, cfg, spec.inner)
    rep.mode = spec.mode
    rep.k = spec.k
    rep.alpha_policy = str(spec.alpha)
    return x, rep


def _base_bundle(spec: RunSpec) -> SystemBundle:
    base = build_system(spec.k, spec.nus[0], spec.omegas[0])
    # fills the shared eigenvalue cache once, before the cells fork their own
    resolve_alpha(spec.alpha, base)
    return base


def run_sweep(spec: RunSpec, base: SystemBundle | None = None) -> list[SolveReport]:
    """Reports in grid order (nu-major), independent of completion order."""
    base = _base_bundle(spec) if base is None else base
    cells = spec.cells()
    if spec.jobs == 1:
        return [solve_cell(base, spec, nu, w)[1] for nu, w in cells]
    with ThreadPoolExecutor(max_workers=spec.jobs) as pool:
        futures = [pool.submit(solve_cell, base, spec, nu, w) for nu, w in cells]
        return [f.result()[1] for f in futures]


def run_single(spec: RunSpec, history: Path | None = None) -> SolveReport:
    if len(spec.nus) != 1 or len(spec.omegas) != 1:
        raise ParameterError("single runs take exactly one nu and one omega")
    _, rep = solve_cell(_base_bundle(spec), spec, spec.nus[0], spec.omegas[0])
    if history is not None:
        Path(history).write_text("".join(f"{r:.17g}\n" for r in rep.residual_history))
    return rep


def _grid_markdown(nus, omegas, cells) -> str:
    head = "| ν \\ ω | " + " | ".join(f"{w:g}" for w in omegas) + " |"
    rule = "|" + "---|" * (len(omegas) + 1)
    lines = [head, rule]
    for i, nu in enumerate(nus):
        row = cells[i * len(omegas):(i + 1) * len(omegas)]
        lines.append(f"| {nu:g} | " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def render(spec: RunSpec, reports: list[SolveReport]) -> str:
    if spec.fmt == "markdown":
        return _grid_markdown(spec.nus, spec.omegas, [r.cell() for r in reports])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.to_row())
    return buf.getvalue()


def alpha_table(spec: RunSpec) -> str:
    """Resolved alpha per (nu, omega); no solves."""
    base = _base_bundle(spec)
    values = [resolve_alpha(spec.alpha, base.with_params(nu, w)) for nu, w in spec.cells()]
    if spec.fmt == "markdown":
        return _grid_markdown(spec.nus, spec.omegas, [f"{a:.6g}" for a in values])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "nu", "omega", "alpha_policy", "alpha"])
    for (nu, w), a in zip(spec.cells(), values):
        writer.writerow([spec.k, nu, w, str(spec.alpha), repr(a)])
    return buf.getvalue()


def export_matrices(k: int, out: Path) -> list[Path]:
    """Write ``M.mtx``, ``K.mtx`` and ``ybar_d.txt`` for mesh level ``k``."""
    s = build_system(k, 1.0, 0.0)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "M.mtx", out / "K.mtx", out / "ybar_d.txt"]
    write_matrix_market(paths[0], s.M)
    write_matrix_market(paths[1], s.K)
    write_vector(paths[2], s.ybar_d)
    return paths


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _floats(text: str) -> tuple[float, ...]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    try:
        return tuple(float(t) for t in items)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma list of numbers: {text!r}") from None


def _add_run_flags(p, sweep: bool):
    p.add_argument("--k", type=int, default=7, help="mesh level, h = 2^-k (default 7)")
    p.add_argument("--nu", type=_floats, default=_floats(PAPER_NU) if sweep else None, required=not sweep,
                   help="comma list of regularization values")
    p.add_argument("--omega", type=_floats, default=_floats(PAPER_OMEGA) if sweep else None,
                   required=not sweep, help="comma list of frequencies")
    p.add_argument("--method", choices=METHODS, default="mbas")
    p.add_argument("--mode", choices=MODES, default="stationary")
    p.add_argument("--alpha", default=None,
                   help="policy (" + ", ".join(AlphaPolicy.KINDS[:-1]) + ") or custom:<value>")
    p.add_argument("--inner", default="direct", help="direct or cg:<tol>")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--maxit", type=int, default=500)
    p.add_argument("--side", choices=("right", "left"), default="right", help="GMRES preconditioning side")
    p.add_argument("--format", dest="fmt", choices=FORMATS, default="markdown")
    p.add_argument("--out", type=Path, default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mbas", description="Block splitting solvers for the periodic control system.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", help="iteration-count table over a (nu, omega) grid")
    _add_run_flags(p, sweep=True)
    p.add_argument("--jobs", type=int, default=1, help="cells solved concurrently")

    p = sub.add_parser("single", help="one solve with an optional residual history")
    _add_run_flags(p, sweep=False)
    p.add_argument("--history", type=Path, default=None, help="write one relative residual per line")

    p = sub.add_parser("alphas", help="resolved alpha over a (nu, omega) grid")
    _add_run_flags(p, sweep=True)

    p = sub.add_parser("export", help="write M, K and the target vector")
    p.add_argument("--k", type=int, default=7)
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    return parser


def _spec(args) -> RunSpec:
    return RunSpec(
        k=args.k, nus=args.nu, omegas=args.omega, method=args.method, mode=args.mode,
        alpha=None if args.alpha is None else AlphaPolicy.parse(args.alpha),
        inner=InnerSpec.parse(args.inner), tol=args.tol, maxit=args.maxit, fmt=args.fmt,
        out=args.out, jobs=getattr(args, "jobs", 1), side=args.side,
    )


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"mbas: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "export":
            Grid(args.k)
        else:
            spec = _spec(args)
    except (ParameterError, ValueError) as exc:
        print(f"mbas: error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "export":
            for path in export_matrices(args.k, args.out):
                print(path)
        elif args.command == "sweep":
            _emit(render(spec, run_sweep(spec)), spec.out)
        elif args.command == "alphas":
            _emit(alpha_table(spec), spec.out)
        else:
            rep = run_single(spec, args.history)
            _emit(rep.to_json() + "\n", spec.out)
    except ParameterError as exc:
        print(f"mbas: error: {exc}", file=sys.stderr)
        return 2
    except MbasError as exc:
        print(f"mbas: solver error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"mbas: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
