"""Shared fixtures: the expensive paper-configuration fit and its phases."""
import pytest

from qsppricer import TargetFunction, find_phases, fit_minimax


@pytest.fixture(scope="session")
def autocall_paper_target():
    # K_T = 1, p = 5, s = 2^5: the final-clause amplitude over the full domain
    return TargetFunction.autocall_clause(1.0, 5, 32.0)


@pytest.fixture(scope="session")
def autocall_paper_poly(autocall_paper_target):
    return fit_minimax(autocall_paper_target, 20, "even", cap=0.9995)


@pytest.fixture(scope="session")
def autocall_paper_phases(autocall_paper_poly):
    return find_phases(autocall_paper_poly, tol=1e-8)
