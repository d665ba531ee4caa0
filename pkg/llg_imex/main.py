"""
Command-line front end
Tableau audits, convergence studies, damping sweeps and the diffusion
stability experiment. Exit codes: 0 success, 1 numerical or check failure,
2 usage, parse or precondition failure.
"""

import argparse
import logging
import sys
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .config import SOLVERS, get_settings
from .errors import (
    ConfigurationError, InvalidTableauError, LLGError, RunConfigError,
    StudyError, TableauParseError, TableauSearchError, UnsupportedTableauError,
)
from .models.dynamics import ModelVariant
from .models.tableau import (
    BUILTIN_TABLEAUX, BUILTIN_ORDER_TOL, order_residuals, paper_tableau,
    search_tableau, stability_margins, validate_structure,
)
from .utils.storage import ArtifactStorage
from .utils.tableau_io import load_tableau, save_tableau
from .workers.convergence import (
    DEFAULT_ALPHAS, DEFAULT_BETAS, NORMS, ORDER_BANDS, beta_sensitivity,
    build_schedule, convergence_study, damping_sweep,
)
from .workers.stability import DEFAULT_RATIOS, DEFAULT_STEPS, DEFAULT_TRIALS, diffusion_stability

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str = "INFO"):
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(getattr(logging, level.upper(), logging.INFO))


def _float_list(raw: str) -> List[float]:
    items = [item for item in raw.replace(",", " ").split() if item]
    if not items:
        raise argparse.ArgumentTypeError("expected a non-empty comma-separated list")
    try:
        return [float(item) for item in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {raw!r}")


def _int_list(raw: str) -> List[int]:
    values = _float_list(raw)
    if any(v != int(v) or v < 2 for v in values):
        raise argparse.ArgumentTypeError(f"grid sizes must be integers >= 2: {raw!r}")
    return [int(v) for v in values]


def _storage(args) -> ArtifactStorage:
    settings = get_settings()
    return ArtifactStorage(args.out or settings.output_dir, digits=settings.csv_digits)


def _print_orders(table):
    orders = table.orders
    print(f"   📈 order: " + "  ".join(f"{norm}={orders[norm]:.4g}" for norm in NORMS))
    return orders


def cmd_verify_tableau(args) -> int:
    """Structure report, order residuals up to 3 and stability margins"""
    tol = args.tol if args.tol is not None else BUILTIN_ORDER_TOL
    try:
        if args.search is not None:
            tableau = search_tableau(args.search, tol, initial=None)
        elif args.path:
            tableau = load_tableau(args.path)
        else:
            tableau = BUILTIN_TABLEAUX[args.builtin]()
    except TableauParseError as exc:
        print(f"❌ {exc}")
        return EXIT_USAGE
    except TableauSearchError as exc:
        print(f"❌ {exc}")
        return EXIT_FAILURE

    print(f"🔍 Auditing tableau '{tableau.name}' (s={tableau.s})")
    ok = True

    report = validate_structure(tableau)
    for check in report.checks:
        mark = "✅" if check.passed else "❌"
        print(f"   {mark} {check.name:<36} residual {check.residual:.3e} {check.message}")
    ok = ok and report.passed

    try:
        residuals = order_residuals(tableau, 3)
    except InvalidTableauError as exc:
        print(f"❌ {exc}")
        return EXIT_FAILURE

    for item in residuals:
        mark = "✅" if item.residual <= tol else "❌"
        print(f"   {mark} order {item.order} {item.name:<14} residual {item.residual:.3e}")
        ok = ok and item.residual <= tol

    try:
        margins = stability_margins(tableau)
        print("   📐 margins: (" + ", ".join(f"{m:.8f}" for m in margins.as_tuple()) + ")")
        if not margins.admissible:
            print("   ❌ stability margins are not all positive")
        ok = ok and margins.admissible
    except UnsupportedTableauError as exc:
        print(f"   ❌ {exc}")
        ok = False

    storage = _storage(args)
    storage.save_residuals(f"residuals_{tableau.name}.csv", residuals)
    if args.search is not None:
        save_tableau(tableau, storage.path(f"tableau_{tableau.name}.txt"))

    print("✅ Tableau passes all checks" if ok else "❌ Tableau fails at least one check")
    return EXIT_OK if ok else EXIT_FAILURE


def _model_args(args) -> dict:
    return {
        "alpha": 0.01 if args.alpha is None else args.alpha,
        "beta": 3.0 if args.beta is None else args.beta,
        "epsilon": 1.0 if args.epsilon is None else args.epsilon,
    }


def _thread_split(args, settings) -> Tuple[int, int]:
    """(parallel rows, FFT workers per row) within the LLG_THREADS cap"""
    requested = settings.threads if args.parallel_rows is None else args.parallel_rows
    rows = max(1, min(requested, settings.threads))
    return rows, max(1, settings.threads // rows)


def cmd_convergence(args) -> int:
    settings = get_settings()
    rows, workers = _thread_split(args, settings)
    schedule = build_schedule(args.dim, args.refine, n_list=args.n_list, k=args.k, t_final=args.t_final)
    table = convergence_study(
        args.dim, args.refine,
        schedule=schedule,
        variant=ModelVariant(args.variant),
        solver=args.solver or settings.solver,
        workers=workers,
        max_parallel_rows=rows,
        diagnostics_every=args.diagnostics_every,
        **_model_args(args),
    )

    storage = _storage(args)
    storage.save_table(table)
    for row, diagnostics in table.diagnostics.items():
        storage.save_diagnostics(f"diagnostics_{table.table_id}_{table.dim}d_row{row}.csv", diagnostics)

    print(f"📊 Table {table.table_id} ({args.dim}-D {args.refine})")
    for r in table.rows:
        print(f"   k={r.k:.4e} h={r.h:.4g}  linf={r.linf:.4e}  l2={r.l2:.4e}  h1={r.h1:.4e}")
    if len(table.rows) >= 3:
        orders = _print_orders(table)
        low, high = ORDER_BANDS[(args.dim, args.refine)]
        if not all(low <= o <= high for o in orders.values()):
            print(f"   ⚠️  orders outside the expected band [{low}, {high}]")
    return EXIT_OK


def cmd_damping_sweep(args) -> int:
    settings = get_settings()
    rows, workers = _thread_split(args, settings)
    schedule = build_schedule(args.dim, "temporal", n_list=args.n_list, k=args.k, t_final=args.t_final)
    tables = damping_sweep(
        args.dim,
        alphas=args.alphas,
        betas=args.betas,
        schedule=schedule,
        epsilon=1.0 if args.epsilon is None else args.epsilon,
        solver=args.solver or settings.solver,
        workers=workers,
        max_parallel_rows=rows,
    )

    storage = _storage(args)
    band = tuple(args.band) if args.band else ORDER_BANDS[(args.dim, "temporal")]
    ok = True
    print(f"📊 Damping sweep ({args.dim}-D), band [{band[0]}, {band[1]}]")
    for table in tables:
        storage.save_table(table)
        orders = table.orders
        inside = table.within(band)
        ok = ok and inside
        mark = "✅" if inside else "❌"
        print(f"   {mark} alpha={table.params['alpha']:g} beta={table.params['beta']:g}  "
              + "  ".join(f"{norm}={orders[norm]:.4g}" for norm in NORMS))

    for alpha, ratio in beta_sensitivity(tables).items():
        print(f"   ℹ️  alpha={alpha:g}: largest l2 error ratio across beta {ratio:.4g}")
    return EXIT_OK if ok else EXIT_FAILURE


def cmd_diffusion_stability(args) -> int:
    settings = get_settings()
    tableau = paper_tableau()
    if args.negate_a33:
        a = np.array(tableau.a_implicit)
        a[2, 2] = -a[2, 2]
        tableau = tableau.with_changes(a_implicit=a, name=f"{tableau.name}-negated-a33")

    report = diffusion_stability(
        ratios=args.ratios,
        trials=args.trials,
        seed=0 if args.seed is None else args.seed,
        steps=args.steps,
        dim=args.dim,
        n=args.n,
        beta=3.0 if args.beta is None else args.beta,
        tableau=tableau,
        solver=args.solver or settings.solver,
        workers=settings.threads,
    )

    print(f"🧪 {report.runs} runs, {report.steps} steps, max l2 growth {report.max_growth:.3e}, "
          f"max ledger ratio {report.max_ledger_ratio:.12g}")
    if not report.passed:
        print(f"❌ {report.first_violation.describe()}")
        return EXIT_FAILURE
    print("✅ No stability violations")
    return EXIT_OK


@dataclass(frozen=True)
class CommandSpec:
    name: str
    handler: Callable
    help: str


COMMANDS = (
    CommandSpec("verify-tableau", cmd_verify_tableau, "audit order conditions and stability margins"),
    CommandSpec("convergence", cmd_convergence, "manufactured-solution convergence table"),
    CommandSpec("damping-sweep", cmd_damping_sweep, "temporal convergence over alpha x beta"),
    CommandSpec("diffusion-stability", cmd_diffusion_stability, "pure-diffusion energy stability sweep"),
)


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--out", help="output directory (default LLG_OUTPUT_DIR)")
    shared.add_argument("--seed", type=int)
    shared.add_argument("--t-final", type=float)
    shared.add_argument("--alpha", type=float)
    shared.add_argument("--beta", type=float)
    shared.add_argument("--epsilon", type=float)
    shared.add_argument("--tol", type=float)
    shared.add_argument("--solver", choices=SOLVERS, help="stage solver (default LLG_SOLVER)")
    shared.add_argument("--log-level", help="default LOG_LEVEL")

    parser = argparse.ArgumentParser(prog="llg-imex", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {}
    for spec in COMMANDS:
        commands[spec.name] = sub.add_parser(spec.name, parents=[shared], help=spec.help)
        commands[spec.name].set_defaults(handler=spec.handler)

    p = commands["verify-tableau"]
    source = p.add_mutually_exclusive_group()
    source.add_argument("path", nargs="?", help="tableau file (key = value format)")
    source.add_argument("--builtin", choices=sorted(BUILTIN_TABLEAUX), default="paper")
    source.add_argument("--search", type=int, metavar="SEED", help="search a tableau from SEED")

    for name in ("convergence", "damping-sweep"):
        p = commands[name]
        p.add_argument("--dim", type=int, choices=(1, 3), default=1)
        p.add_argument("--n-list", type=_int_list, help="cells per axis, comma separated")
        p.add_argument("--k", type=float,
                       help="temporal: coefficient c in k = c*h^(2/3); spatial: fixed time step")
        p.add_argument("--parallel-rows", type=int, default=None,
                       help="schedule rows run at once, capped by LLG_THREADS")

    p = commands["convergence"]
    p.add_argument("--refine", choices=("temporal", "spatial"), default="temporal")
    p.add_argument("--variant", choices=[v.value for v in ModelVariant], default=ModelVariant.FULL_LL.value)
    p.add_argument("--diagnostics-every", type=int, default=0)

    p = commands["damping-sweep"]
    p.add_argument("--alphas", type=_float_list, default=list(DEFAULT_ALPHAS))
    p.add_argument("--betas", type=_float_list, default=list(DEFAULT_BETAS))
    p.add_argument("--band", type=_float_list, help="accepted order band low,high")

    p = commands["diffusion-stability"]
    p.add_argument("--ratios", type=_float_list, default=list(DEFAULT_RATIOS), help="k/h^2 values")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--dim", type=int, choices=(1, 3), default=1)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--negate-a33", action="store_true", help=argparse.SUPPRESS)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        settings = get_settings()
    except ConfigurationError as exc:
        print(f"❌ {exc}")
        return EXIT_USAGE
    configure_logging(args.log_level or settings.log_level)

    if getattr(args, "band", None) is not None and len(args.band) != 2:
        parser.error("--band takes exactly two values")
    if getattr(args, "trials", 1) < 1:
        parser.error("--trials must be >= 1")

    try:
        return args.handler(args)
    except StudyError as exc:
        print(f"❌ {exc}")
        return EXIT_FAILURE
    except (RunConfigError, ConfigurationError, ValueError) as exc:
        print(f"❌ {exc}")
        return EXIT_USAGE
    except LLGError as exc:
        print(f"❌ {exc}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
