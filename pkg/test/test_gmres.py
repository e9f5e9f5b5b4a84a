import numpy as np
import pytest

from vesim.errors import SolverFailure
from vesim.schemas.schemas import GmresConfig
from vesim.solvers import gmres as gmres_module
from vesim.solvers.gmres import MatvecCounter, gmres_solve
from vesim.solvers.imex import BlockPreconditioner


# Well-conditioned nonsymmetric test matrix
@pytest.fixture
def system(rng):
    matrix = np.eye(40) * 4.0 + 0.3 * rng.standard_normal((40, 40)) / np.sqrt(40)
    rhs = rng.standard_normal(40)
    return matrix, rhs


# Test unpreconditioned solve
def test_solve_without_preconditioner(system):
    matrix, rhs = system
    solution, iterations = gmres_solve(lambda v: matrix @ v, None, rhs)
    np.testing.assert_allclose(matrix @ solution, rhs, atol=1e-8)
    assert 1 <= iterations <= 40


# Test an exact preconditioner converges in one iteration
def test_exact_preconditioner_one_iteration(system):
    matrix, rhs = system
    inverse = np.linalg.inv(matrix)
    solution, iterations = gmres_solve(lambda v: matrix @ v, lambda v: inverse @ v, rhs)
    assert iterations == 1
    np.testing.assert_allclose(solution, np.linalg.solve(matrix, rhs), atol=1e-10)


# Test zero right-hand side returns zero without iterating
def test_zero_rhs():
    counter = MatvecCounter()
    solution, iterations = gmres_solve(lambda v: 2 * v, None, np.zeros(5), counter=counter)
    np.testing.assert_array_equal(solution, 0.0)
    assert iterations == 0
    assert counter.matvecs == 0


# Test non-finite right-hand side
def test_non_finite_rhs():
    rhs = np.ones(4)
    rhs[2] = np.inf
    with pytest.raises(SolverFailure):
        gmres_solve(lambda v: v, None, rhs)


# Test iteration budget exhaustion carries the best iterate
def test_iteration_budget_exhausted():
    matrix = np.diag(np.arange(1.0, 21.0))
    with pytest.raises(SolverFailure) as excinfo:
        gmres_solve(lambda v: matrix @ v, None, np.ones(20), GmresConfig(max_iterations=1))
    assert excinfo.value.best_iterate.shape == (20,)
    assert excinfo.value.residual > 1e-10


# Test the counter accumulates over solves
def test_counter_accumulates(system):
    matrix, rhs = system
    counter = MatvecCounter()
    _, first = gmres_solve(lambda v: matrix @ v, None, rhs, counter=counter)
    _, second = gmres_solve(lambda v: matrix @ v, None, 2 * rhs, counter=counter)
    assert counter.solves == 2
    assert counter.iterations == first + second
    assert counter.matvecs >= counter.iterations
    assert counter.snapshot() == (counter.matvecs, counter.iterations)


# GMRES stand-in that stops with the inconsistent iterate of diag(1, 0) x = (1, 1)
@pytest.fixture
def stalled_gmres(monkeypatch):
    def stalled(operator, rhs, **kwargs):
        return np.array([1.0, 0.0]), 7

    monkeypatch.setattr(gmres_module, "gmres", stalled)
    return np.diag([1.0, 0.0])


# Test a stalled solve fails when the preconditioner is an ordinary inverse
def test_stalled_solve_fails_with_regular_preconditioner(stalled_gmres):
    matrix = stalled_gmres
    with pytest.raises(SolverFailure) as excinfo:
        gmres_solve(lambda v: matrix @ v, lambda v: matrix @ v, np.ones(2))
    assert excinfo.value.residual == pytest.approx(np.sqrt(0.5))


# Test a stalled solve passes on the preconditioned residual of a pseudo-inverse
def test_stalled_solve_accepted_with_pseudo_inverse(stalled_gmres):
    matrix = stalled_gmres
    preconditioner = BlockPreconditioner([matrix])
    assert preconditioner.singular
    solution, iterations = gmres_solve(lambda v: matrix @ v, preconditioner, np.ones(2))
    np.testing.assert_array_equal(solution, [1.0, 0.0])
    assert iterations == 0


# Test a regular block is not flagged singular
def test_regular_preconditioner_not_singular(system):
    matrix, _ = system
    assert not BlockPreconditioner([matrix]).singular
