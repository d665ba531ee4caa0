"""
Cell-centered uniform grids with Neumann ghost layers
Finite-difference stencils and discrete norms on the unit domain (0,1)^dim.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..errors import GridMismatchError

SUPPORTED_DIMS = (1, 3)
COMPONENTS = 3


@dataclass(frozen=True)
class GridSpec:
    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in SUPPORTED_DIMS:
            raise ValueError(f"Grid dimension must be 1 or 3, got {self.dim}")
        if self.n < 2:
            raise ValueError(f"Grid needs at least 2 cells per axis, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> Tuple[int, ...]:
        """Per-component array shape including the ghost layer"""
        return (self.n + 2,) * self.dim

    @property
    def interior_shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def interior(self) -> Tuple[slice, ...]:
        return (slice(1, self.n + 1),) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def num_cells(self) -> int:
        return self.n ** self.dim

    @cached_property
    def centers(self) -> np.ndarray:
        """Interior cell centers, shape (dim, n, ..., n); axis order x, y, z"""
        axis = (np.arange(1, self.n + 1) - 0.5) * self.h
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        centers = np.stack(mesh)
        centers.setflags(write=False)
        return centers

    def shifted(self, axis: int, offset: int) -> Tuple[slice, ...]:
        """Index of the interior block moved by `offset` cells along `axis`"""
        index = list(self.interior)
        index[axis] = slice(1 + offset, self.n + 1 + offset)
        return tuple(index)

    def describe(self) -> str:
        return f"{self.dim}-D grid, n={self.n}, h=1/{self.n}"


class ScalarField:
    """One value per interior cell"""

    def __init__(self, grid: GridSpec, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.interior_shape:
            raise GridMismatchError(
                f"Scalar values of shape {values.shape} do not fit {grid.describe()}"
            )
        self.grid = grid
        self.values = values

    def max(self) -> float:
        return float(np.max(self.values))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


class VectorField:
    """
    Three magnetization components on interior and ghost cells

    Storage is one contiguous block per component: data has shape
    (3, n+2, ...) with the spatial axes in x, y, z order.
    """

    def __init__(self, grid: GridSpec, data: Optional[np.ndarray] = None):
        self.grid = grid
        if data is None:
            data = np.zeros((COMPONENTS,) + grid.shape)
        else:
            data = np.asarray(data, dtype=float)
            if data.shape != (COMPONENTS,) + grid.shape:
                raise GridMismatchError(
                    f"Field data of shape {data.shape} does not fit {grid.describe()}"
                )
        self.data = data

    @classmethod
    def from_interior(cls, grid: GridSpec, values: np.ndarray) -> "VectorField":
        """Build a field from interior samples of shape (3, n, ..., n) and fill ghosts"""
        values = np.asarray(values, dtype=float)
        if values.shape != (COMPONENTS,) + grid.interior_shape:
            raise GridMismatchError(
                f"Interior values of shape {values.shape} do not fit {grid.describe()}"
            )
        field = cls(grid)
        field.data[(slice(None),) + grid.interior] = values
        return fill_ghosts(field, inplace=True)

    @classmethod
    def constant(cls, grid: GridSpec, vector: Sequence[float]) -> "VectorField":
        data = np.empty((COMPONENTS,) + grid.shape)
        data[:] = np.reshape(np.asarray(vector, dtype=float), (COMPONENTS,) + (1,) * grid.dim)
        return cls(grid, data)

    @classmethod
    def sample(cls, grid: GridSpec, fn: Callable[[np.ndarray], np.ndarray]) -> "VectorField":
        """Sample fn(centers) -> (3, n, ..., n) at the cell centers"""
        return cls.from_interior(grid, fn(grid.centers))

    @property
    def interior(self) -> np.ndarray:
        return self.data[(slice(None),) + self.grid.interior]

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.data.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))

    def magnitude(self) -> ScalarField:
        return ScalarField(self.grid, np.sqrt(np.sum(self.interior ** 2, axis=0)))

    def _check(self, other: "VectorField"):
        if self.grid != other.grid:
            raise GridMismatchError(
                f"Fields live on different grids: {self.grid.describe()} vs {other.grid.describe()}"
            )

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.grid, self.data + other.data)

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.grid, self.data - other.data)

    def __mul__(self, scalar: float) -> "VectorField":
        return VectorField(self.grid, self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField":
        return VectorField(self.grid, -self.data)

    def __repr__(self) -> str:
        return f"VectorField({self.grid.describe()})"


class Norms(NamedTuple):
    l2: float
    linf: float
    h1: float


def fill_ghosts(field: VectorField, inplace: bool = False) -> VectorField:
    """
    Apply the homogeneous Neumann ghost rule m_0 = m_1, m_{n+1} = m_n

    Axes are processed in x, y, z order over full slabs, so edge and corner
    ghosts end up as copies of already filled face ghosts.

    Args:
        field: Field whose interior is set
        inplace: Overwrite the ghosts of `field` instead of a copy

    Returns:
        Field with filled ghost layer
    """
    target = field if inplace else field.copy()
    data = target.data
    n = target.grid.n

    for axis in range(target.grid.dim):
        lo = [slice(None)] * data.ndim
        lo_src = [slice(None)] * data.ndim
        hi = [slice(None)] * data.ndim
        hi_src = [slice(None)] * data.ndim
        lo[axis + 1], lo_src[axis + 1] = 0, 1
        hi[axis + 1], hi_src[axis + 1] = n + 1, n
        data[tuple(lo)] = data[tuple(lo_src)]
        data[tuple(hi)] = data[tuple(hi_src)]

    return target


def laplacian(field: VectorField) -> VectorField:
    """Componentwise 3-point / 7-point centered Laplacian on interior cells"""
    grid = field.grid
    data = field.data
    comp = (slice(None),)

    core = data[comp + grid.interior]
    acc = (-2.0 * grid.dim) * core
    for axis in range(grid.dim):
        acc += data[comp + grid.shifted(axis, 1)]
        acc += data[comp + grid.shifted(axis, -1)]
    acc /= grid.h ** 2

    return VectorField.from_interior(grid, acc)


def avg_gradient_sq(field: VectorField) -> ScalarField:
    """
    Squared norm of the centered-difference Jacobian per interior cell

    Sum over axes and components of ((m_c)_{+1} - (m_c)_{-1})^2 / (2h)^2.
    """
    grid = field.grid
    data = field.data
    comp = (slice(None),)

    total = np.zeros(grid.interior_shape)
    for axis in range(grid.dim):
        diff = data[comp + grid.shifted(axis, 1)] - data[comp + grid.shifted(axis, -1)]
        total += np.sum(diff ** 2, axis=0)

    return ScalarField(grid, total / (2.0 * grid.h) ** 2)


def link_gradients(field: VectorField) -> List[np.ndarray]:
    """
    Forward differences across interior links, one array per axis

    Boundary links are left out; under the ghost rule they are zero anyway.
    """
    grid = field.grid
    core = field.interior
    gradients = []
    for axis in range(grid.dim):
        gradients.append(np.diff(core, axis=axis + 1) / grid.h)
    return gradients


def inner(f: VectorField, g: VectorField) -> float:
    """Discrete l2 inner product h^d sum_I f_I . g_I"""
    f._check(g)
    return float(f.grid.cell_volume * np.sum(f.interior * g.interior))


def gradient_inner(f: VectorField, g: VectorField) -> float:
    f._check(g)
    total = 0.0
    for df, dg in zip(link_gradients(f), link_gradients(g)):
        total += float(np.sum(df * dg))
    return f.grid.cell_volume * total


def gradient_norm(field: VectorField) -> float:
    return float(np.sqrt(max(gradient_inner(field, field), 0.0)))


def norms(field: VectorField) -> Norms:
    """
    Discrete l2, max and H1 norms of a ghost-filled field

    Returns:
        Norms(l2, linf, h1) with h1 = sqrt(l2^2 + |grad_h m|_2^2)
    """
    l2_sq = inner(field, field)
    linf = float(np.max(np.abs(field.interior)))
    h1_sq = l2_sq + gradient_inner(field, field)
    return Norms(l2=float(np.sqrt(l2_sq)), linf=linf, h1=float(np.sqrt(h1_sq)))


def cross(a: VectorField, b: VectorField) -> VectorField:
    """Pointwise 3-vector cross product"""
    a._check(b)
    return VectorField(a.grid, np.cross(a.data, b.data, axis=0))


def pointwise_dot(a: VectorField, b: VectorField) -> ScalarField:
    a._check(b)
    return ScalarField(a.grid, np.sum(a.interior * b.interior, axis=0))


def unit_length_drift(field: VectorField) -> float:
    """max over interior cells of ||m| - 1|"""
    return float(np.max(np.abs(field.magnitude().values - 1.0)))
