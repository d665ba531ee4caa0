"""
Split right-hand side of the Landau-Lifshitz equation
m_t = N(t, m) + L(t, m) with the artificial diffusion L = beta*Delta_h m
treated implicitly and everything else in N.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np

from ..errors import ConfigurationError, GridMismatchError
from .grid import VectorField, avg_gradient_sq, cross, fill_ghosts, laplacian

# (t, centers of shape (dim, n, ..., n)) -> values of shape (3, n, ..., n)
FieldCallback = Callable[[float, np.ndarray], np.ndarray]


class ModelVariant(str, Enum):
    FULL_LL = "full"
    DAMPING_ONLY = "damping"
    PURE_DIFFUSION = "diffusion"


@dataclass(frozen=True)
class ModelConfig:
    """
    Physical and numerical parameters of the split model

    `field` is the lower-order field f (anisotropy, applied field, ...) and
    enters inside the cross products. `forcing` is an additive source on N,
    used for manufactured solutions.
    """
    alpha: float = 0.01
    beta: float = 3.0
    epsilon: float = 1.0
    variant: ModelVariant = ModelVariant.FULL_LL
    field: Optional[FieldCallback] = None
    forcing: Optional[FieldCallback] = None

    def __post_init__(self):
        object.__setattr__(self, "variant", ModelVariant(self.variant))
        # alpha = 0 is the undamped (purely gyromagnetic) limit
        if not self.alpha >= 0:
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha}")
        if not self.beta > 0:
            raise ConfigurationError(f"beta must be > 0, got {self.beta}")
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be > 0, got {self.epsilon}")

    def describe(self) -> str:
        return (
            f"{self.variant.value} (alpha={self.alpha:g}, beta={self.beta:g}, "
            f"epsilon={self.epsilon:g})"
        )


def _sample(callback: Optional[FieldCallback], t: float, m: VectorField) -> Optional[VectorField]:
    if callback is None:
        return None
    return VectorField.from_interior(m.grid, callback(t, m.grid.centers))


def _add_sampled(target: VectorField, callback: Optional[FieldCallback], t: float) -> VectorField:
    """Add callback samples to the interior of `target` in place and refill its ghosts"""
    if callback is None:
        return target
    grid = target.grid
    values = np.asarray(callback(t, grid.centers), dtype=float)
    if values.shape != (3,) + grid.interior_shape:
        raise GridMismatchError(
            f"Callback values of shape {values.shape} do not fit {grid.describe()}"
        )
    target.data[(slice(None),) + grid.interior] += values
    return fill_ghosts(target, inplace=True)


def linear_part(cfg: ModelConfig, m: VectorField) -> VectorField:
    """L(t, m) = beta * Delta_h m"""
    return cfg.beta * laplacian(m)


def nonlinear_part(cfg: ModelConfig, m: VectorField, t: float) -> VectorField:
    """Explicit part N(t, m) of the chosen model variant"""
    return split_rhs(cfg, m, t)[0]


def split_rhs(cfg: ModelConfig, m: VectorField, t: float) -> Tuple[VectorField, VectorField]:
    """
    Evaluate N(t, m) and L(t, m) sharing one Laplacian

    Returns:
        (N, L) as ghost-filled fields
    """
    lap = laplacian(m)
    lin = cfg.beta * lap

    if cfg.variant is ModelVariant.FULL_LL:
        h_eff = _add_sampled(cfg.epsilon * lap, cfg.field, t)
        precession = cross(m, h_eff)
        nonlin = -precession - cfg.alpha * cross(m, precession) - lin

    elif cfg.variant is ModelVariant.DAMPING_ONLY:
        grad_sq = avg_gradient_sq(m).values
        nonlin = VectorField.from_interior(m.grid, cfg.beta * grad_sq * m.interior)
        f = _sample(cfg.field, t, m)
        if f is not None:
            nonlin = nonlin - cfg.alpha * cross(m, cross(m, f))

    else:
        nonlin = VectorField(m.grid)

    return _add_sampled(nonlin, cfg.forcing, t), lin


def full_rhs(cfg: ModelConfig, m: VectorField, t: float) -> VectorField:
    """
    Unsplit right-hand side -m x (eps*Delta_h m + f) - alpha m x m x (eps*Delta_h m + f)

    Plus the additive forcing. Used to audit the splitting.
    """
    h_eff = _add_sampled(cfg.epsilon * laplacian(m), cfg.field, t)
    precession = cross(m, h_eff)
    rhs = -precession - cfg.alpha * cross(m, precession)
    return _add_sampled(rhs, cfg.forcing, t)
