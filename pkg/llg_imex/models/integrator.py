"""
IMEX Runge-Kutta time marching
Each step performs one constant-coefficient Helmholtz solve per implicit
stage and explicit evaluations of the nonlinear part.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..errors import DivergenceError, RunConfigError
from .dynamics import ModelConfig, split_rhs
from .grid import GridSpec, VectorField, fill_ghosts, norms, unit_length_drift
from .helmholtz import StageSystem
from .tableau import ImexTableau, paper_tableau, stability_margins, validate_structure

logger = logging.getLogger(__name__)

# Guards floor(t_final / k) against representation error in the quotient
_STEP_COUNT_SLACK = 1e-9


@dataclass
class RunConfig:
    grid: GridSpec
    model: ModelConfig
    tableau: ImexTableau = field(default_factory=paper_tableau)
    k: float = 1e-3
    t_final: float = 1.0
    diagnostics_every: int = 0
    solver: str = "dct"
    workers: Optional[int] = None

    @property
    def num_steps(self) -> int:
        return int(math.floor(self.t_final / self.k + _STEP_COUNT_SLACK))

    @property
    def t_end(self) -> float:
        """Time actually reached after num_steps steps"""
        return self.num_steps * self.k

    def validate(self):
        if not self.k > 0:
            raise RunConfigError(f"time step must be positive, got {self.k}")
        if not self.t_final > 0:
            raise RunConfigError(f"t_final must be positive, got {self.t_final}")
        if self.num_steps < 1:
            raise RunConfigError(
                f"number of steps >= 1 violated (t_final={self.t_final:g} < k={self.k:g})"
            )
        if self.diagnostics_every < 0:
            raise RunConfigError("diagnostics_every must be >= 0")

        report = validate_structure(self.tableau)
        if not report.passed:
            names = ", ".join(check.name for check in report.failures)
            raise RunConfigError(f"tableau '{self.tableau.name}' fails structure checks: {names}")
        if self.tableau.s == 4 and not stability_margins(self.tableau).admissible:
            raise RunConfigError(
                f"tableau '{self.tableau.name}' has non-positive stability margins "
                f"{stability_margins(self.tableau).as_tuple()}"
            )


@dataclass(frozen=True)
class StepDiagnostics:
    step: int
    t: float
    l2_norm: float
    h1_norm: float
    unit_length_drift: float


@dataclass
class StepResult:
    value: VectorField
    stages: List[VectorField]


class ImexIntegrator:
    """
    Stage solvers and marching loop for one RunConfig

    The Helmholtz systems sigma_i = a_ii * beta * k are built once.
    """

    def __init__(self, cfg: RunConfig):
        cfg.validate()
        self.cfg = cfg
        tab = cfg.tableau
        self._a = tab.a_implicit
        self._at = tab.a_explicit
        self._b = tab.b
        self._bt = tab.b_tilde
        self._c = tab.c

        self.systems: List[Optional[StageSystem]] = []
        for i in range(tab.s):
            a_ii = self._a[i, i]
            if a_ii == 0.0:
                self.systems.append(None)
            else:
                self.systems.append(StageSystem(
                    cfg.grid, a_ii * cfg.model.beta * cfg.k,
                    method=cfg.solver, workers=cfg.workers,
                ))

        # b equal to the last implicit row: m_{n+1} is the last stage plus
        # explicit corrections, which avoids re-summing stiff L terms
        self._stiffly_accurate = bool(np.array_equal(self._b, self._a[-1]))

    def step(self, m_n: VectorField, t_n: float, return_stages: bool = False):
        """
        Advance one step of size k from (m_n, t_n)

        Args:
            m_n: Ghost-filled state at t_n
            t_n: Current time
            return_stages: Also return the stage fields

        Returns:
            m_{n+1}, or StepResult(value, stages) when return_stages is set
        """
        cfg = self.cfg
        k = cfg.k
        grid = cfg.grid
        s = len(self.systems)

        stages: List[VectorField] = []
        n_vals: List[np.ndarray] = []
        l_vals: List[np.ndarray] = []

        for i in range(s):
            rhs_data = m_n.data.copy()
            for j in range(i):
                if self._at[i, j] != 0.0:
                    rhs_data += (k * self._at[i, j]) * n_vals[j]
                if self._a[i, j] != 0.0:
                    rhs_data += (k * self._a[i, j]) * l_vals[j]
            rhs = VectorField(grid, rhs_data)

            if not rhs.is_finite():
                raise DivergenceError("nonfinite stage right-hand side", stage=i + 1)

            system = self.systems[i]
            if system is None:
                stage = fill_ghosts(rhs, inplace=True)
            else:
                stage = system.solve(rhs)

            if not stage.is_finite():
                raise DivergenceError("nonfinite stage value", stage=i + 1)

            nonlin, lin = split_rhs(cfg.model, stage, t_n + self._c[i] * k)
            if system is not None:
                # consistent with the solved stage equation
                lin_data = (stage.data - rhs.data) / (k * self._a[i, i])
            else:
                lin_data = lin.data

            stages.append(stage)
            n_vals.append(nonlin.data)
            l_vals.append(lin_data)

        if self._stiffly_accurate:
            out = stages[-1].data.copy()
            for i in range(s):
                coef = self._bt[i] - self._at[-1, i]
                if coef != 0.0:
                    out += (k * coef) * n_vals[i]
        else:
            out = m_n.data.copy()
            for i in range(s):
                if self._bt[i] != 0.0:
                    out += (k * self._bt[i]) * n_vals[i]
                if self._b[i] != 0.0:
                    out += (k * self._b[i]) * l_vals[i]

        result = fill_ghosts(VectorField(grid, out), inplace=True)
        if not result.is_finite():
            raise DivergenceError("nonfinite step update", stage=s)

        if return_stages:
            return StepResult(value=result, stages=stages)
        return result

    def run(self, m0: VectorField) -> Tuple[VectorField, List[StepDiagnostics]]:
        cfg = self.cfg
        if m0.grid != cfg.grid:
            raise RunConfigError(
                f"initial field lives on {m0.grid.describe()}, run on {cfg.grid.describe()}"
            )

        every = cfg.diagnostics_every
        diagnostics: List[StepDiagnostics] = []
        m = fill_ghosts(m0)
        if every:
            diagnostics.append(_diagnose(0, 0.0, m))

        steps = cfg.num_steps
        logger.debug("🚀 Integrating %d steps of k=%.6g on %s", steps, cfg.k, cfg.grid.describe())

        for n in range(steps):
            t_n = n * cfg.k
            try:
                m = self.step(m, t_n)
            except DivergenceError as exc:
                raise DivergenceError("integration diverged", stage=exc.stage, step=n + 1) from exc
            if every and (n + 1) % every == 0:
                diagnostics.append(_diagnose(n + 1, (n + 1) * cfg.k, m))

        return m, diagnostics


def _diagnose(step: int, t: float, m: VectorField) -> StepDiagnostics:
    measured = norms(m)
    return StepDiagnostics(
        step=step,
        t=t,
        l2_norm=measured.l2,
        h1_norm=measured.h1,
        unit_length_drift=unit_length_drift(m),
    )


def imex_rk_step(cfg: RunConfig, m_n: VectorField, t_n: float, return_stages: bool = False):
    """One IMEX-RK step for a validated RunConfig"""
    return ImexIntegrator(cfg).step(m_n, t_n, return_stages=return_stages)


def integrate(cfg: RunConfig, m0: VectorField) -> Tuple[VectorField, List[StepDiagnostics]]:
    """
    Advance m0 by floor(t_final / k) steps

    Returns:
        (final field, diagnostics recorded every cfg.diagnostics_every steps)
    """
    return ImexIntegrator(cfg).run(m0)
