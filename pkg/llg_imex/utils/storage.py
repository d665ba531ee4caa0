"""
Artifact storage for convergence tables, diagnostics and field snapshots
"""

import csv
import logging
import os
from typing import Iterable, List, Optional, Sequence

import numpy as np

from ..config import get_settings
from ..errors import InsufficientDataError
from ..models.grid import GridSpec, VectorField
from ..models.integrator import StepDiagnostics
from ..models.tableau import OrderResidual
from ..workers.convergence import NORMS, ConvergenceTable

logger = logging.getLogger(__name__)


def format_float(value: float, digits: int = 17) -> str:
    return f"{value:.{digits}g}"


class ArtifactStorage:
    def __init__(self, base_dir: Optional[str] = None, digits: Optional[int] = None):
        if base_dir is None or digits is None:
            settings = get_settings()
            base_dir = base_dir or settings.output_dir
            digits = settings.csv_digits if digits is None else digits
        self.base_dir = base_dir
        self.digits = digits
        self.ensure_directories()

        logger.debug("💾 Storage initialized at: %s", self.base_dir)

    def ensure_directories(self):
        os.makedirs(self.base_dir, exist_ok=True)

    def path(self, filename: str) -> str:
        return os.path.join(self.base_dir, filename)

    def _fmt(self, value: float) -> str:
        return format_float(value, self.digits)

    def _write_csv(self, filename: str, header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
        dest_path = self.path(filename)
        with open(dest_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        logger.info("💾 Saved: %s", dest_path)
        return dest_path

    def save_table(self, table: ConvergenceTable) -> List[str]:
        """
        Write a convergence table as CSV and Markdown

        Both files end with an "order" row holding the fitted slopes when the
        table has enough rows for a fit.

        Returns:
            Paths of the CSV and Markdown files
        """
        stem = f"table_{table.table_id}_{table.dim}d"
        orders = _orders_or_none(table)

        rows = [[self._fmt(r.k), self._fmt(r.h), self._fmt(r.linf), self._fmt(r.l2), self._fmt(r.h1)]
                for r in table.rows]
        if orders:
            rows.append(["order", "", *(self._fmt(orders[norm]) for norm in NORMS)])
        csv_path = self._write_csv(f"{stem}.csv", ["k", "h", *NORMS], rows)

        md_path = self.path(f"{stem}.md")
        with open(md_path, "w", encoding="utf-8") as f:
            f.write(render_markdown(table, orders))
        logger.info("💾 Saved: %s", md_path)

        return [csv_path, md_path]

    def save_diagnostics(self, filename: str, diagnostics: Sequence[StepDiagnostics]) -> str:
        rows = [[str(d.step), self._fmt(d.t), self._fmt(d.l2_norm), self._fmt(d.h1_norm),
                 self._fmt(d.unit_length_drift)] for d in diagnostics]
        return self._write_csv(filename, ["step", "t", "l2", "h1", "unit_drift"], rows)

    def save_residuals(self, filename: str, residuals: Sequence[OrderResidual]) -> str:
        rows = [[r.name, self._fmt(r.lhs), self._fmt(r.rhs), self._fmt(r.residual)] for r in residuals]
        return self._write_csv(filename, ["condition_name", "lhs", "rhs", "residual"], rows)

    def save_snapshot(self, filename: str, field: VectorField) -> str:
        """One record per interior cell: indices, center coordinates, m1, m2, m3"""
        grid = field.grid
        index_names = ["i", "j", "k"][:grid.dim]
        coord_names = ["x", "y", "z"][:grid.dim]

        indices = np.indices(grid.interior_shape).reshape(grid.dim, -1) + 1
        centers = grid.centers.reshape(grid.dim, -1)
        values = field.interior.reshape(3, -1)

        rows = []
        for cell in range(grid.num_cells):
            rows.append(
                [str(v) for v in indices[:, cell]]
                + [self._fmt(v) for v in centers[:, cell]]
                + [self._fmt(v) for v in values[:, cell]]
            )
        return self._write_csv(filename, index_names + coord_names + ["m1", "m2", "m3"], rows)

    def load_snapshot(self, filename: str, grid: GridSpec) -> VectorField:
        values = np.zeros((3,) + grid.interior_shape)
        with open(self.path(filename), newline="", encoding="utf-8") as f:
            for record in csv.DictReader(f):
                index = tuple(int(record[name]) - 1 for name in ["i", "j", "k"][:grid.dim])
                for comp in range(3):
                    values[(comp,) + index] = float(record[f"m{comp + 1}"])
        return VectorField.from_interior(grid, values)


def _orders_or_none(table: ConvergenceTable):
    try:
        return table.orders
    except InsufficientDataError:
        return None


def render_markdown(table: ConvergenceTable, orders=None) -> str:
    """Markdown table with console precision (4 significant digits)"""
    lines = [
        f"| k | h | {' | '.join(NORMS)} |",
        "|---|---|---|---|---|",
    ]
    for r in table.rows:
        lines.append(f"| {r.k:.4e} | {r.h:.4g} | {r.linf:.4e} | {r.l2:.4e} | {r.h1:.4e} |")
    if orders:
        lines.append(f"| order | | {' | '.join(f'{orders[n]:.4f}' for n in NORMS)} |")
    return "\n".join(lines) + "\n"
