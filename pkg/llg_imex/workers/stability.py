"""
Unconditional stability experiment for the pure-diffusion scheme
Random initial data are marched over a sweep of k/h^2; every step must not
increase the l2 norm, and the margin-weighted gradient ledger must stay
bounded by the initial energy.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ..models.dynamics import ModelConfig, ModelVariant
from ..models.grid import GridSpec, VectorField, gradient_inner, inner
from ..models.integrator import ImexIntegrator, RunConfig
from ..models.tableau import ImexTableau, paper_tableau, stability_margins

logger = logging.getLogger(__name__)

DEFAULT_RATIOS = (1e-2, 1.0, 1e2, 1e4)
DEFAULT_TRIALS = 20
DEFAULT_STEPS = 100
NORM_SLACK = 1e-13
LEDGER_SLACK = 1e-10


@dataclass(frozen=True)
class Violation:
    kind: str
    ratio: float
    k: float
    h: float
    trial: int
    step: int
    value: float

    def describe(self) -> str:
        return (f"{self.kind} violated at k={self.k:.4g}, h={self.h:.4g} "
                f"(k/h^2={self.ratio:g}, trial {self.trial}, step {self.step}): {self.value:.4g}")


@dataclass
class StabilityReport:
    runs: int = 0
    steps: int = 0
    max_growth: float = 0.0
    max_ledger_ratio: float = 0.0
    violations: List[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def first_violation(self) -> Optional[Violation]:
        return self.violations[0] if self.violations else None


def random_field(grid: GridSpec, rng: np.random.Generator) -> VectorField:
    """Per-cell uniform components in [-1, 1], not normalized"""
    return VectorField.from_interior(grid, rng.uniform(-1.0, 1.0, size=(3,) + grid.interior_shape))


def diffusion_stability(
    ratios: Sequence[float] = DEFAULT_RATIOS,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    steps: int = DEFAULT_STEPS,
    dim: int = 1,
    n: int = 32,
    beta: float = 3.0,
    tableau: Optional[ImexTableau] = None,
    solver: str = "dct",
    workers: Optional[int] = None,
) -> StabilityReport:
    """
    March pure-diffusion runs and audit the discrete energy bounds

    Args:
        ratios: Values of k/h^2 to sweep
        trials: Random initial fields per ratio
        seed: Seed of the initial-data generator
        steps: Steps per run
        tableau: Scheme to audit; must be admissible

    Returns:
        StabilityReport collecting every violation in sweep order
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")

    tableau = tableau or paper_tableau()
    grid = GridSpec(dim, n)
    model = ModelConfig(beta=beta, variant=ModelVariant.PURE_DIFFUSION)
    rng = np.random.default_rng(seed)
    report = StabilityReport()

    for ratio in ratios:
        k = ratio * grid.h ** 2
        cfg = RunConfig(grid=grid, model=model, tableau=tableau, k=k, t_final=steps * k,
                        solver=solver, workers=workers)
        # raises RunConfigError for inadmissible tableaux
        integrator = ImexIntegrator(cfg)
        weights = stability_margins(tableau).as_tuple()
        logger.info("🔄 k/h^2=%g: %d trials of %d steps", ratio, trials, cfg.num_steps)

        for trial in range(trials):
            m = random_field(grid, rng)
            initial_energy = inner(m, m)
            energy = initial_energy
            ledger = 0.0

            for step in range(1, cfg.num_steps + 1):
                result = integrator.step(m, (step - 1) * k, return_stages=True)
                m = result.value
                new_energy = inner(m, m)

                growth = np.sqrt(new_energy / energy) - 1.0 if energy > 0 else 0.0
                report.max_growth = max(report.max_growth, growth)
                if growth > NORM_SLACK:
                    report.violations.append(Violation("l2 monotonicity", ratio, k, grid.h, trial, step, growth))

                for weight, stage in zip(weights, result.stages[1:]):
                    ledger += beta * k * weight * gradient_inner(stage, stage)

                bound = new_energy + ledger
                ledger_ratio = bound / initial_energy
                report.max_ledger_ratio = max(report.max_ledger_ratio, ledger_ratio)
                if ledger_ratio > 1.0 + LEDGER_SLACK:
                    report.violations.append(Violation("gradient ledger", ratio, k, grid.h, trial, step, ledger_ratio))

                energy = new_energy
                report.steps += 1

            report.runs += 1

    if report.passed:
        logger.info("✅ %d runs, no violations (max growth %.3e)", report.runs, report.max_growth)
    else:
        logger.warning("⚠️  %d violations, first: %s", len(report.violations), report.first_violation.describe())
    return report
