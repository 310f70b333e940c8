import numpy as np
import pytest

from biharm_dual import Grid2D, Nonlinearity
from biharm_dual.operator import laplacian_matrix
from biharm_dual.oracle import MAX_DENSE, dense_T, fd_gradient, quad_H, scan_fibering


def test_three_by_three_is_inverse_laplacian_squared():
    g = Grid2D(3, 3)
    A = laplacian_matrix(g).toarray()
    Ainv = np.linalg.inv(A)
    assert np.max(np.abs(dense_T(g).matrix - Ainv @ Ainv)) <= 1e-12 * np.max(np.abs(Ainv @ Ainv))


@pytest.mark.parametrize("n", [3, 9, 17])
def test_dense_symmetric_positive(n):
    M = dense_T(Grid2D(n, n)).matrix
    assert np.max(np.abs(M - M.T)) <= 1e-12
    assert np.all(M > 0)
    assert np.all(np.linalg.eigvalsh(0.5 * (M + M.T)) > 0)


def test_dense_size_cap():
    with pytest.raises(ValueError, match="too large"):
        dense_T(Grid2D(18, 17))
    assert Grid2D(17, 17).size == MAX_DENSE


def test_quad_H_reference_values():
    assert quad_H(Nonlinearity.power(4.0), 1.0) == pytest.approx(0.75, abs=1e-10)
    assert quad_H(Nonlinearity.power(4.0), 0.0) == 0.0
    assert quad_H(Nonlinearity(((1.0, 4.0), (1.0, 6.0))), 2.0) == pytest.approx(19 / 12, abs=1e-8)


def test_quad_H_panel_floor():
    with pytest.raises(ValueError):
        quad_H(Nonlinearity.power(4.0), 1.0, n_panels=10)


def test_fd_gradient_zero_and_eps(ctx9):
    assert np.max(np.abs(fd_gradient(ctx9, ctx9.grid.zeros()).values)) == 0.0
    with pytest.raises(ValueError):
        fd_gradient(ctx9, ctx9.grid.zeros(), eps=1e-2)


def test_scan_resolution_floor(ctx9):
    with pytest.raises(ValueError):
        scan_fibering(ctx9, ctx9.grid.sine_mode(2, 1), (0.1, 2.0), resolution=10)
