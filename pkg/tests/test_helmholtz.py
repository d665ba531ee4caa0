"""Stage solver (I - sigma*Delta_h) u = rhs against dense oracles"""

import numpy as np
import pytest

from llg_imex.errors import SolverConvergenceError, SolverInputError
from llg_imex.models.grid import GridSpec, VectorField, inner
from llg_imex.models.helmholtz import StageSystem, apply, neumann_symbol, solve


def _random_field(grid, rng):
    return VectorField.from_interior(grid, rng.uniform(-1.0, 1.0, size=(3,) + grid.interior_shape))


def _neumann_matrix_1d(n):
    h = 1.0 / n
    lap = np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    lap[0, 0] = lap[-1, -1] = -1.0
    return lap / h ** 2


def _dense_operator(grid, sigma):
    lap_1d = _neumann_matrix_1d(grid.n)
    if grid.dim == 1:
        lap = lap_1d
    else:
        eye = np.eye(grid.n)
        lap = (np.kron(np.kron(lap_1d, eye), eye)
               + np.kron(np.kron(eye, lap_1d), eye)
               + np.kron(np.kron(eye, eye), lap_1d))
    return np.eye(grid.num_cells) - sigma * lap


def _dense_solve(grid, sigma, rhs):
    matrix = _dense_operator(grid, sigma)
    flat = rhs.interior.reshape(3, -1).T
    return np.linalg.solve(matrix, flat).T.reshape((3,) + grid.interior_shape)


def test_zero_sigma_returns_rhs(rng):
    grid = GridSpec(1, 8)
    rhs = _random_field(grid, rng)
    u = StageSystem(grid, 0.0).solve(rhs)
    np.testing.assert_array_equal(u.data, rhs.data)


@pytest.mark.parametrize("dim", [1, 3])
def test_constant_rhs_is_fixed(dim):
    grid = GridSpec(dim, 6)
    rhs = VectorField.constant(grid, [0.0, 0.0, 1.0])
    u = solve(StageSystem(grid, 0.7), rhs)
    np.testing.assert_allclose(u.data, rhs.data, atol=1e-14)


def test_symbol_matches_dense_eigenvalues():
    grid = GridSpec(1, 8)
    expected = np.sort(np.linalg.eigvalsh(-_neumann_matrix_1d(grid.n)))
    np.testing.assert_allclose(np.sort(neumann_symbol(grid)), expected, atol=1e-9)


def test_dense_oracle_small_1d(rng):
    grid = GridSpec(1, 8)
    rhs = _random_field(grid, rng)
    u = StageSystem(grid, 0.1).solve(rhs)
    np.testing.assert_allclose(u.interior, _dense_solve(grid, 0.1, rhs), atol=1e-12)


def test_dense_oracle_sweep(rng):
    grids = [GridSpec(1, 5), GridSpec(1, 8), GridSpec(1, 12), GridSpec(3, 2), GridSpec(3, 4), GridSpec(3, 6)]
    pairs = 0
    for grid in grids:
        for _ in range(9):
            sigma = 10.0 ** rng.uniform(-4, 1)
            rhs = _random_field(grid, rng)
            u = StageSystem(grid, sigma).solve(rhs)
            expected = _dense_solve(grid, sigma, rhs)
            error = np.linalg.norm(u.interior - expected) / np.linalg.norm(expected)
            assert error <= 1e-10
            pairs += 1
    assert pairs >= 50


def test_dense_oracle_largest_grid(rng):
    grid = GridSpec(3, 12)
    sigma = 0.05
    rhs = _random_field(grid, rng)
    u = StageSystem(grid, sigma).solve(rhs)
    expected = _dense_solve(grid, sigma, rhs)
    assert np.linalg.norm(u.interior - expected) / np.linalg.norm(expected) <= 1e-10


@pytest.mark.parametrize("method, dim", [("banded", 1), ("cg", 1), ("cg", 3)])
def test_alternate_methods_agree_with_dct(method, dim, rng):
    grid = GridSpec(dim, 8 if dim == 1 else 4)
    rhs = _random_field(grid, rng)
    reference = StageSystem(grid, 0.3).solve(rhs)
    u = StageSystem(grid, 0.3, method=method).solve(rhs)
    np.testing.assert_allclose(u.interior, reference.interior, atol=1e-10)


@pytest.mark.parametrize("dim, n", [(1, 16), (3, 5)])
def test_apply_inverts_solve(dim, n, rng):
    grid = GridSpec(dim, n)
    system = StageSystem(grid, 0.02)
    rhs = _random_field(grid, rng)
    residual = apply(system, system.solve(rhs)) - rhs
    assert np.sqrt(inner(residual, residual)) <= 1e-12 * np.sqrt(inner(rhs, rhs))


def test_apply_identity_cases(rng):
    grid = GridSpec(1, 8)
    u = _random_field(grid, rng)
    np.testing.assert_array_equal(StageSystem(grid, 0.0).apply(u).data, u.data)
    const = VectorField.constant(grid, [1.0, 2.0, 3.0])
    np.testing.assert_allclose(StageSystem(grid, 0.5).apply(const).data, const.data, atol=1e-12)


@pytest.mark.parametrize("dim, n", [(1, 12), (3, 4)])
def test_spd_and_symmetry(dim, n, rng):
    grid = GridSpec(dim, n)
    system = StageSystem(grid, 0.01)
    for _ in range(5):
        u = _random_field(grid, rng)
        v = _random_field(grid, rng)
        assert inner(system.apply(u), u) >= inner(u, u)
        assert inner(system.apply(u), v) == pytest.approx(inner(u, system.apply(v)), rel=1e-12, abs=1e-12)


def test_mean_is_preserved(rng):
    grid = GridSpec(3, 5)
    rhs = _random_field(grid, rng)
    u = StageSystem(grid, 0.2).solve(rhs)
    np.testing.assert_allclose(u.interior.mean(axis=(1, 2, 3)), rhs.interior.mean(axis=(1, 2, 3)), atol=1e-12)


def test_rejects_bad_inputs(rng):
    grid = GridSpec(1, 8)
    with pytest.raises(SolverInputError):
        StageSystem(grid, -0.1)
    with pytest.raises(SolverInputError):
        StageSystem(GridSpec(3, 4), 0.1, method="banded")
    rhs = _random_field(grid, rng)
    rhs.data[0, 3] = np.nan
    with pytest.raises(SolverInputError):
        StageSystem(grid, 0.1).solve(rhs)
    with pytest.raises(SolverInputError):
        StageSystem(grid, 0.1).solve(_random_field(GridSpec(1, 9), rng))


def test_cg_iteration_cap(rng):
    grid = GridSpec(1, 32)
    system = StageSystem(grid, 1.0, method="cg", max_iter=1)
    with pytest.raises(SolverConvergenceError):
        system.solve(_random_field(grid, rng))
