"""Split right-hand side of the three model variants"""

import numpy as np
import pytest

from llg_imex.errors import ConfigurationError, GridMismatchError
from llg_imex.models.dynamics import (
    ModelConfig, ModelVariant, full_rhs, linear_part, nonlinear_part, split_rhs,
)
from llg_imex.models.grid import GridSpec, VectorField, cross, laplacian, pointwise_dot
from llg_imex.models.manufactured import manufactured_case


def _random_field(grid, rng):
    return VectorField.from_interior(grid, rng.uniform(-1.0, 1.0, size=(3,) + grid.interior_shape))


def _constant_callback(vector):
    vector = np.asarray(vector, dtype=float)

    def callback(t, centers):
        return np.broadcast_to(vector.reshape((3,) + (1,) * centers.shape[0]),
                               (3,) + centers.shape[1:]).copy()
    return callback


# ============================================================
# ModelConfig
# ============================================================

def test_model_config_defaults():
    cfg = ModelConfig()
    assert (cfg.alpha, cfg.beta, cfg.epsilon) == (0.01, 3.0, 1.0)
    assert cfg.variant is ModelVariant.FULL_LL


def test_model_config_coerces_variant_names():
    assert ModelConfig(variant="damping").variant is ModelVariant.DAMPING_ONLY


def test_model_config_allows_undamped_limit():
    assert ModelConfig(alpha=0.0).alpha == 0.0


@pytest.mark.parametrize("kwargs", [{"alpha": -0.1}, {"beta": 0.0}, {"epsilon": -1.0}, {"beta": float("nan")}])
def test_model_config_rejects_bad_parameters(kwargs):
    with pytest.raises(ConfigurationError):
        ModelConfig(**kwargs)


# ============================================================
# Linear part
# ============================================================

def test_linear_part_is_linear(rng):
    grid = GridSpec(3, 4)
    cfg = ModelConfig(beta=2.0)
    u = _random_field(grid, rng)
    v = _random_field(grid, rng)
    lhs = linear_part(cfg, 0.5 * u + (-3.0) * v)
    rhs = 0.5 * linear_part(cfg, u) + (-3.0) * linear_part(cfg, v)
    np.testing.assert_allclose(lhs.data, rhs.data, atol=1e-10)


def test_linear_part_scales_laplacian(rng):
    grid = GridSpec(1, 10)
    m = _random_field(grid, rng)
    np.testing.assert_allclose(linear_part(ModelConfig(beta=5.0), m).data, 5.0 * laplacian(m).data)


# ============================================================
# Full LL
# ============================================================

@pytest.mark.parametrize("dim", [1, 3])
def test_constant_state_has_zero_rhs(dim):
    m = VectorField.constant(GridSpec(dim, 4), [0.6, 0.0, 0.8])
    nonlin, lin = split_rhs(ModelConfig(), m, 0.0)
    np.testing.assert_allclose(nonlin.interior, 0.0, atol=1e-12)
    np.testing.assert_allclose(lin.interior, 0.0, atol=1e-12)


def test_undamped_rhs_is_orthogonal_to_m():
    case = manufactured_case(1)
    grid = GridSpec(1, 16)
    m = case.sample(grid, 0.7)
    cfg = ModelConfig(alpha=0.0)
    nonlin, lin = split_rhs(cfg, m, 0.7)
    dots = pointwise_dot(nonlin + lin, m).values
    scale = np.max(np.abs(laplacian(m).interior))
    assert np.max(np.abs(dots)) <= 1e-14 * scale


def test_split_matches_unsplit_rhs(rng):
    grid = GridSpec(3, 5)
    m = _random_field(grid, rng)
    cfg = ModelConfig(alpha=0.3, beta=4.0, epsilon=0.7)
    nonlin, lin = split_rhs(cfg, m, 0.0)
    np.testing.assert_allclose((nonlin + lin).interior, full_rhs(cfg, m, 0.0).interior, atol=1e-10)


def test_nonlinear_part_matches_split(rng):
    grid = GridSpec(1, 12)
    m = _random_field(grid, rng)
    cfg = ModelConfig()
    np.testing.assert_array_equal(nonlinear_part(cfg, m, 0.2).data, split_rhs(cfg, m, 0.2)[0].data)


def test_applied_field_on_constant_state():
    grid = GridSpec(1, 4)
    m_vec = np.array([1.0, 0.0, 0.0])
    f_vec = np.array([0.0, 0.0, 2.0])
    cfg = ModelConfig(alpha=0.5, field=_constant_callback(f_vec))
    nonlin, _ = split_rhs(cfg, VectorField.constant(grid, m_vec), 0.0)
    precession = np.cross(m_vec, f_vec)
    expected = -precession - 0.5 * np.cross(m_vec, precession)
    np.testing.assert_allclose(nonlin.interior, np.tile(expected.reshape(3, 1), (1, 4)), atol=1e-14)


def test_forcing_is_added_to_nonlinear_part():
    grid = GridSpec(1, 4)
    m = VectorField.constant(grid, [0.0, 0.0, 1.0])
    cfg = ModelConfig(forcing=_constant_callback([1.0, 2.0, 3.0]))
    nonlin, _ = split_rhs(cfg, m, 0.0)
    np.testing.assert_allclose(nonlin.interior, np.tile([[1.0], [2.0], [3.0]], (1, 4)), atol=1e-14)


# ============================================================
# Damping only and pure diffusion
# ============================================================

def test_damping_term_is_parallel_to_m(rng):
    grid = GridSpec(3, 4)
    m = _random_field(grid, rng)
    nonlin, _ = split_rhs(ModelConfig(variant=ModelVariant.DAMPING_ONLY), m, 0.0)
    np.testing.assert_allclose(cross(nonlin, m).interior, 0.0, atol=1e-10)


def test_damping_rhs_converges_to_tension():
    """beta (Delta m + |grad m|^2 m) is second-order accurate away from the boundary"""
    beta = 2.0
    case = manufactured_case(1, variant=ModelVariant.DAMPING_ONLY, beta=beta)
    cfg = ModelConfig(beta=beta, variant=ModelVariant.DAMPING_ONLY)
    t = np.pi / 2
    errors = []
    sizes = (16, 32, 64)
    for n in sizes:
        grid = GridSpec(1, n)
        x = grid.centers
        nonlin, lin = split_rhs(cfg, case.sample(grid, t), t)
        exact = beta * (case.laplacian(x, t) + case.gradient_sq(x, t) * case.exact(x, t))
        middle = (x[0] > 0.25) & (x[0] < 0.75)
        errors.append(np.max(np.abs((nonlin + lin).interior - exact)[:, middle]))
    slope = np.polyfit(np.log(1.0 / np.array(sizes)), np.log(errors), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.2)


def test_damping_applied_field_term():
    grid = GridSpec(1, 4)
    m_vec = np.array([0.0, 1.0, 0.0])
    f_vec = np.array([1.0, 0.0, 0.0])
    cfg = ModelConfig(alpha=0.2, variant=ModelVariant.DAMPING_ONLY, field=_constant_callback(f_vec))
    nonlin, _ = split_rhs(cfg, VectorField.constant(grid, m_vec), 0.0)
    expected = -0.2 * np.cross(m_vec, np.cross(m_vec, f_vec))
    np.testing.assert_allclose(nonlin.interior, np.tile(expected.reshape(3, 1), (1, 4)), atol=1e-14)


def test_pure_diffusion_has_no_explicit_part(rng):
    grid = GridSpec(1, 8)
    m = _random_field(grid, rng)
    cfg = ModelConfig(variant=ModelVariant.PURE_DIFFUSION)
    nonlin, lin = split_rhs(cfg, m, 0.0)
    np.testing.assert_array_equal(nonlin.data, 0.0)
    np.testing.assert_allclose(lin.data, 3.0 * laplacian(m).data)


def test_forcing_fills_ghosts():
    grid = GridSpec(1, 4)
    cfg = ModelConfig(forcing=lambda t, centers: np.stack([centers[0], 0 * centers[0], 0 * centers[0]]))
    nonlin, _ = split_rhs(cfg, VectorField.constant(grid, [0.0, 0.0, 1.0]), 0.0)
    assert nonlin.data[0, 0] == nonlin.data[0, 1] == pytest.approx(0.125)
    assert nonlin.data[0, -1] == nonlin.data[0, -2] == pytest.approx(0.875)


def test_forcing_of_wrong_shape_is_rejected():
    grid = GridSpec(1, 4)
    cfg = ModelConfig(forcing=lambda t, centers: np.zeros((3, 5)))
    with pytest.raises(GridMismatchError):
        split_rhs(cfg, VectorField.constant(grid, [0.0, 0.0, 1.0]), 0.0)
