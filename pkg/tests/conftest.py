"""Shared fixtures.

The expensive objects (a converged 2D ground state and the matching
limit state) are session-scoped so the dual, solver and concentration
tests all reuse one solve instead of paying ~1 s each.
"""
import numpy as np
import pytest

from helmlab import (
    ConstantQ,
    Exponents,
    ResolventSpec,
    auto_delta,
    build_grid,
    limit_ground_state,
    sample_Q,
    solve_ground_state,
)

STANDARD_LEVEL = 5.380510993273907  # constant Q = 1 on the grid below, frozen


@pytest.fixture(scope="session")
def grid2d():
    return build_grid(2, 16.0, 128)


@pytest.fixture(scope="session")
def exps2d():
    return Exponents(dim=2, s=1.0, p=5.0, k=1.0)


@pytest.fixture(scope="session")
def spec2d(grid2d):
    return ResolventSpec(s=1.0, delta=auto_delta(grid2d, 1.0))


@pytest.fixture(scope="session")
def unitQ(grid2d):
    return sample_Q(ConstantQ(1.0), grid2d)


@pytest.fixture(scope="session")
def ground2d(unitQ, exps2d, spec2d):
    gs = solve_ground_state(unitQ, exps2d, spec2d, tol=1e-6, max_iter=500)
    assert gs.converged
    return gs


@pytest.fixture(scope="session")
def limit2d(grid2d, exps2d, spec2d):
    gs = limit_ground_state(1.0, grid2d, exps2d, spec2d, tol=1e-6, max_iter=500)
    assert gs.converged
    return gs


def rng(seed):
    return np.random.default_rng(seed)
