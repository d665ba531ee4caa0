"""
Constant-coefficient stage solver for (I - sigma*Delta_h) u = rhs
Homogeneous Neumann ghosts; three interchangeable realizations.
"""

import logging
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.fft
from scipy.linalg import solve_banded
from scipy.sparse.linalg import LinearOperator, cg

from ..errors import SolverConvergenceError, SolverInputError
from .grid import GridSpec, VectorField, fill_ghosts, laplacian

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-12
METHODS = ("dct", "banded", "cg")


@lru_cache(maxsize=32)
def neumann_symbol(grid: GridSpec) -> np.ndarray:
    """
    Eigenvalues of -Delta_h in the even-cosine basis, shape (n, ..., n)

    Per axis (4/h^2) sin^2(p*pi/(2n)), p = 0..n-1, summed over axes.
    """
    p = np.arange(grid.n)
    per_axis = (4.0 / grid.h ** 2) * np.sin(p * np.pi / (2.0 * grid.n)) ** 2
    symbol = np.zeros(grid.interior_shape)
    for axis in range(grid.dim):
        shape = [1] * grid.dim
        shape[axis] = grid.n
        symbol = symbol + per_axis.reshape(shape)
    symbol.setflags(write=False)
    return symbol


class StageSystem:
    """
    One implicit stage operator I - sigma*Delta_h on a fixed grid

    Immutable after construction; the transform denominators are computed
    once and reused for every solve.
    """

    def __init__(
        self,
        grid: GridSpec,
        sigma: float,
        method: str = "dct",
        workers: Optional[int] = None,
        max_iter: Optional[int] = None,
    ):
        if not np.isfinite(sigma) or sigma < 0:
            raise SolverInputError(f"sigma must be finite and >= 0, got {sigma}")
        if method not in METHODS:
            raise SolverInputError(f"unknown solver method {method!r}")
        if method == "banded" and grid.dim != 1:
            raise SolverInputError("banded elimination is only available on 1-D grids")

        self.grid = grid
        self.sigma = float(sigma)
        self.method = method
        self.workers = workers
        self.max_iter = max_iter or 10 * grid.num_cells

        self._axes = tuple(range(1, grid.dim + 1))
        self._denominator = None
        self._banded = None
        if method == "dct":
            self._denominator = 1.0 + self.sigma * neumann_symbol(grid)
        elif method == "banded":
            self._banded = self._assemble_banded()

    def _assemble_banded(self) -> np.ndarray:
        n = self.grid.n
        r = self.sigma / self.grid.h ** 2
        ab = np.zeros((3, n))
        ab[0, 1:] = -r
        ab[1, :] = 1.0 + 2.0 * r
        ab[1, 0] = ab[1, -1] = 1.0 + r
        ab[2, :-1] = -r
        return ab

    def apply(self, u: VectorField) -> VectorField:
        """Return (I - sigma*Delta_h) u with filled ghosts"""
        if self.sigma == 0.0:
            return fill_ghosts(u)
        out = u - self.sigma * laplacian(u)
        return fill_ghosts(out, inplace=True)

    def solve(self, rhs: VectorField) -> VectorField:
        """
        Solve (I - sigma*Delta_h) u = rhs componentwise

        Args:
            rhs: Right-hand side on this system's grid

        Returns:
            Ghost-filled solution u
        """
        if rhs.grid != self.grid:
            raise SolverInputError(
                f"rhs lives on {rhs.grid.describe()}, system on {self.grid.describe()}"
            )
        values = rhs.interior
        if not np.all(np.isfinite(values)):
            raise SolverInputError("rhs contains nonfinite values")

        if self.sigma == 0.0:
            return VectorField.from_interior(self.grid, values)

        if self.method == "dct":
            solution = self._solve_dct(values)
        elif self.method == "banded":
            solution = self._solve_banded(values)
        else:
            solution = self._solve_cg(values)

        return VectorField.from_interior(self.grid, solution)

    def _solve_dct(self, values: np.ndarray) -> np.ndarray:
        coeffs = scipy.fft.dctn(values, type=2, norm="ortho", axes=self._axes, workers=self.workers)
        coeffs /= self._denominator
        return scipy.fft.idctn(coeffs, type=2, norm="ortho", axes=self._axes, workers=self.workers)

    def _solve_banded(self, values: np.ndarray) -> np.ndarray:
        return solve_banded((1, 1), self._banded, values.T).T

    def _solve_cg(self, values: np.ndarray) -> np.ndarray:
        grid = self.grid
        size = grid.num_cells

        def matvec(x: np.ndarray) -> np.ndarray:
            block = np.zeros((3,) + grid.interior_shape)
            block[0] = x.reshape(grid.interior_shape)
            applied = self.apply(VectorField.from_interior(grid, block))
            return applied.interior[0].ravel()

        operator = LinearOperator((size, size), matvec=matvec, dtype=float)
        solution = np.empty_like(values)

        for comp in range(3):
            b = values[comp].ravel()
            norm_b = np.linalg.norm(b)
            if norm_b == 0.0:
                solution[comp] = 0.0
                continue
            x, info = cg(operator, b, rtol=RESIDUAL_TOL * 0.1, atol=0.0, maxiter=self.max_iter)
            residual = np.linalg.norm(operator.matvec(x) - b) / norm_b
            if info != 0 or residual > RESIDUAL_TOL:
                raise SolverConvergenceError(
                    f"CG stopped at relative residual {residual:.3e} for component {comp} "
                    f"(info={info}, max_iter={self.max_iter})"
                )
            solution[comp] = x.reshape(grid.interior_shape)

        return solution

    def __repr__(self) -> str:
        return f"StageSystem({self.grid.describe()}, sigma={self.sigma:.6g}, method={self.method})"


def solve(system: StageSystem, rhs: VectorField) -> VectorField:
    return system.solve(rhs)


def apply(system: StageSystem, u: VectorField) -> VectorField:
    return system.apply(u)
