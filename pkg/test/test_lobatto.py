import numpy as np
import pytest

from vesim.errors import InvalidInputError
from vesim.timestepping.lobatto import lobatto_grid


# Test p=3 is Simpson's rule
def test_simpson():
    grid = lobatto_grid(3)
    np.testing.assert_allclose(grid.nodes, [0.0, 0.5, 1.0], atol=1e-15)
    np.testing.assert_allclose(grid.weights, [1 / 6, 2 / 3, 1 / 6], atol=1e-14)


# Test the five-node grid
def test_five_nodes():
    offset = 0.5 * np.sqrt(3 / 7)
    np.testing.assert_allclose(lobatto_grid(5).nodes, [0.0, 0.5 - offset, 0.5, 0.5 + offset, 1.0], atol=1e-14)


# Test the nodes are symmetric about the midpoint
@pytest.mark.parametrize("p", [3, 4, 5, 6, 7])
def test_symmetric_nodes(p):
    nodes = lobatto_grid(p).nodes
    np.testing.assert_allclose(nodes + nodes[::-1], 1.0, atol=1e-15)
    assert np.all(np.diff(nodes) > 0)


# Test partial integrals are exact up to degree p - 1
@pytest.mark.parametrize("p", [3, 4, 5, 6, 7])
def test_integration_exactness(p):
    grid = lobatto_grid(p)
    for degree in range(p):
        values = grid.nodes**degree
        expected = grid.nodes ** (degree + 1) / (degree + 1)
        np.testing.assert_allclose(grid.integration @ values, expected, atol=1e-12)


# Test integrating one returns the node and the whole-interval weights sum to one
@pytest.mark.parametrize("p", [3, 5, 7])
def test_integrate_constant(p):
    grid = lobatto_grid(p)
    np.testing.assert_allclose(grid.integration.sum(axis=1), grid.nodes, atol=1e-12)
    assert grid.weights.sum() == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_array_equal(grid.integration[0], 0.0)


# Test the substeps tile the unit interval
def test_substeps():
    grid = lobatto_grid(5)
    assert grid.substeps.size == 4
    assert grid.substeps.sum() == pytest.approx(1.0, abs=1e-15)
    assert grid.p == 5


# Test too few nodes
@pytest.mark.parametrize("p", [0, 1, 2])
def test_too_few_nodes(p):
    with pytest.raises(InvalidInputError):
        lobatto_grid(p)


# Test grids are shared and read-only
def test_grid_read_only():
    grid = lobatto_grid(4)
    assert lobatto_grid(4) is grid
    with pytest.raises(ValueError):
        grid.nodes[1] = 0.3
