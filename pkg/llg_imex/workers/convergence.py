"""
Manufactured-solution convergence studies
Runs refinement schedules, measures errors against the exact solution and
fits log-log convergence orders.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InsufficientDataError, LLGError, StudyError
from ..models.dynamics import ModelVariant
from ..models.grid import GridSpec, VectorField, norms
from ..models.integrator import RunConfig, StepDiagnostics, integrate
from ..models.manufactured import ManufacturedCase, manufactured_case

logger = logging.getLogger(__name__)

NORMS = ("linf", "l2", "h1")
REFINEMENTS = ("temporal", "spatial")

# k = coefficient * h^(2/3) couples temporal refinement to the grid
TEMPORAL_COEFFICIENT = {1: 1e-4, 3: 1e-3}
TEMPORAL_GRIDS = {1: (6, 7, 8, 9), 3: (2, 3, 4, 5)}
SPATIAL_STEP = {1: 1e-7, 3: 1e-4}
SPATIAL_GRIDS = {1: (160, 240, 320, 400), 3: (4, 5, 6, 7)}
SPATIAL_T_FINAL = {1: 1e-2, 3: 1.0}

TABLE_IDS = {
    (1, "temporal"): "1",
    (1, "spatial"): "2",
    (3, "temporal"): "3",
    (3, "spatial"): "4",
}
SWEEP_TABLE_IDS = {1: "6", 3: "7"}

ORDER_BANDS = {
    (1, "temporal"): (2.7, 3.2),
    (3, "temporal"): (2.8, 3.4),
    (1, "spatial"): (1.8, 2.2),
    (3, "spatial"): (1.8, 2.2),
}

DEFAULT_ALPHAS = (0.001, 0.1)
DEFAULT_BETAS = (1.0, 3.0, 5.0)


@dataclass(frozen=True)
class ErrorReport:
    k: float
    h: float
    linf: float
    l2: float
    h1: float

    def value(self, norm: str) -> float:
        return getattr(self, norm)


@dataclass
class Schedule:
    """Rows of (cells per axis, time step) run to a common final time"""
    dim: int
    refinement: str
    rows: List[Tuple[int, float]]
    t_final: float = 1.0

    def __post_init__(self):
        if self.refinement not in REFINEMENTS:
            raise ValueError(f"refinement must be temporal or spatial, got {self.refinement!r}")
        if not self.rows:
            raise ValueError("schedule needs at least one row")

    @property
    def against(self) -> str:
        return "k" if self.refinement == "temporal" else "h"


@dataclass
class ConvergenceTable:
    table_id: str
    dim: int
    against: str
    rows: List[ErrorReport] = field(default_factory=list)
    params: Dict[str, float] = field(default_factory=dict)
    diagnostics: Dict[int, List[StepDiagnostics]] = field(default_factory=dict)

    @property
    def orders(self) -> Dict[str, float]:
        return fit_order(self, self.against)

    def within(self, band: Tuple[float, float]) -> bool:
        low, high = band
        return all(low <= order <= high for order in self.orders.values())


def build_schedule(
    dim: int,
    refinement: str,
    n_list: Optional[Sequence[int]] = None,
    k: Optional[float] = None,
    t_final: Optional[float] = None,
) -> Schedule:
    """
    Default refinement schedule, optionally overridden

    For temporal refinement `k` replaces the coupling coefficient in
    k = coefficient * h^(2/3); for spatial refinement it replaces the
    fixed time step.
    """
    if dim not in (1, 3):
        raise ValueError(f"dim must be 1 or 3, got {dim}")

    if refinement == "temporal":
        grids = tuple(n_list) if n_list else TEMPORAL_GRIDS[dim]
        coefficient = TEMPORAL_COEFFICIENT[dim] if k is None else k
        rows = [(n, coefficient * (1.0 / n) ** (2.0 / 3.0)) for n in grids]
        default_t = 1.0
    elif refinement == "spatial":
        grids = tuple(n_list) if n_list else SPATIAL_GRIDS[dim]
        step = SPATIAL_STEP[dim] if k is None else k
        rows = [(n, step) for n in grids]
        default_t = SPATIAL_T_FINAL[dim]
    else:
        raise ValueError(f"refinement must be temporal or spatial, got {refinement!r}")

    return Schedule(dim=dim, refinement=refinement, rows=rows,
                    t_final=default_t if t_final is None else t_final)


def errors_vs_exact(
    m: VectorField,
    case: ManufacturedCase,
    t: float,
    k: float = float("nan"),
) -> ErrorReport:
    """Discrete l-inf, l2 and H1 norms of m - m_e(., t) at the cell centers"""
    diff = m - case.sample(m.grid, t)
    measured = norms(diff)
    return ErrorReport(k=k, h=m.grid.h, linf=measured.linf, l2=measured.l2, h1=measured.h1)


def fit_order(table: ConvergenceTable, against: str = "k") -> Dict[str, float]:
    """
    Least-squares slope of log(error) against log(k) or log(h)

    Args:
        table: At least three rows with distinct step sizes
        against: "k" or "h"

    Returns:
        Fitted order per norm
    """
    if against not in ("k", "h"):
        raise ValueError(f"against must be 'k' or 'h', got {against!r}")
    if len(table.rows) < 3:
        raise InsufficientDataError(f"need at least 3 rows to fit an order, got {len(table.rows)}")

    x = np.array([getattr(row, against) for row in table.rows], dtype=float)
    if len(np.unique(x)) < 3:
        raise InsufficientDataError(f"need at least 3 distinct values of {against}")

    orders = {}
    for norm in NORMS:
        errors = np.array([row.value(norm) for row in table.rows], dtype=float)
        if np.any(errors <= 0) or not np.all(np.isfinite(errors)):
            raise InsufficientDataError(f"{norm} errors must be positive and finite for a log-log fit")
        orders[norm] = float(np.polyfit(np.log(x), np.log(errors), 1)[0])
    return orders


def _run_row(
    index: int,
    n: int,
    k: float,
    case: ManufacturedCase,
    schedule: Schedule,
    solver: str,
    workers: Optional[int],
    diagnostics_every: int,
) -> Tuple[ErrorReport, List[StepDiagnostics]]:
    grid = GridSpec(schedule.dim, n)
    cfg = RunConfig(
        grid=grid,
        model=case.model_config(),
        k=k,
        t_final=schedule.t_final,
        diagnostics_every=diagnostics_every,
        solver=solver,
        workers=workers,
    )
    logger.info("🔄 Row %d: n=%d k=%.6g (%d steps)", index, n, k, cfg.num_steps)
    try:
        final, diagnostics = integrate(cfg, case.sample(grid, 0.0))
    except LLGError as exc:
        raise StudyError(f"n={n}, k={k:.6g}: {exc}", row=index) from exc
    return errors_vs_exact(final, case, cfg.t_end, k), diagnostics


def convergence_study(
    dim: int,
    refinement: str,
    alpha: float = 0.01,
    beta: float = 3.0,
    epsilon: float = 1.0,
    schedule: Optional[Schedule] = None,
    t_final: Optional[float] = None,
    variant: ModelVariant = ModelVariant.FULL_LL,
    solver: str = "dct",
    workers: Optional[int] = None,
    max_parallel_rows: int = 1,
    diagnostics_every: int = 0,
    table_id: Optional[str] = None,
) -> ConvergenceTable:
    """
    Run every row of a schedule on the manufactured problem

    Args:
        dim: 1 or 3
        refinement: "temporal" (fit against k) or "spatial" (fit against h)
        schedule: Rows to run; the default schedule for dim/refinement if omitted
        t_final: Overrides the schedule's final time
        max_parallel_rows: Rows run concurrently in a thread pool when > 1

    Returns:
        ConvergenceTable with rows in schedule order
    """
    if schedule is None:
        schedule = build_schedule(dim, refinement, t_final=t_final)
    elif t_final is not None:
        schedule = Schedule(schedule.dim, schedule.refinement, list(schedule.rows), t_final)
    if schedule.dim != dim or schedule.refinement != refinement:
        raise ValueError("schedule does not match the requested dim/refinement")

    case = manufactured_case(dim, variant=variant, alpha=alpha, beta=beta, epsilon=epsilon)
    table = ConvergenceTable(
        table_id=table_id or TABLE_IDS[(dim, refinement)],
        dim=dim,
        against=schedule.against,
        params={"alpha": alpha, "beta": beta, "epsilon": epsilon, "t_final": schedule.t_final},
    )

    logger.info(
        "🚀 %s study, %d-D, %s (alpha=%g, beta=%g), %d rows",
        refinement.capitalize(), dim, case.variant.value, alpha, beta, len(schedule.rows),
    )

    jobs = [
        (index, n, k, case, schedule, solver, workers, diagnostics_every)
        for index, (n, k) in enumerate(schedule.rows)
    ]
    if max_parallel_rows > 1:
        with ThreadPoolExecutor(max_workers=max_parallel_rows) as pool:
            results = list(pool.map(lambda job: _run_row(*job), jobs))
    else:
        results = [_run_row(*job) for job in jobs]

    for index, (report, diagnostics) in enumerate(results):
        table.rows.append(report)
        if diagnostics:
            table.diagnostics[index] = diagnostics

    logger.info("✅ Table %s finished (%d rows)", table.table_id, len(table.rows))
    return table


def damping_sweep(
    dim: int,
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    betas: Sequence[float] = DEFAULT_BETAS,
    schedule: Optional[Schedule] = None,
    epsilon: float = 1.0,
    **study_options,
) -> List[ConvergenceTable]:
    """Temporal convergence study for every (alpha, beta) pair"""
    if not alphas or not betas:
        raise ValueError("alphas and betas must be non-empty")

    tables = []
    for alpha in alphas:
        for beta in betas:
            tables.append(convergence_study(
                dim, "temporal",
                alpha=alpha, beta=beta, epsilon=epsilon,
                schedule=schedule,
                table_id=f"{SWEEP_TABLE_IDS[dim]}_alpha{alpha:g}_beta{beta:g}",
                **study_options,
            ))
    return tables


def beta_sensitivity(tables: Sequence[ConvergenceTable], norm: str = "l2") -> Dict[float, float]:
    """
    Largest row-wise error ratio across beta at each alpha

    Tables sharing alpha must share the schedule.
    """
    by_alpha: Dict[float, List[ConvergenceTable]] = {}
    for table in tables:
        by_alpha.setdefault(table.params["alpha"], []).append(table)

    ratios = {}
    for alpha, group in by_alpha.items():
        errors = np.array([[row.value(norm) for row in table.rows] for table in group])
        ratios[alpha] = float(np.max(errors.max(axis=0) / errors.min(axis=0)))
    return ratios
