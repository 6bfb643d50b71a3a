import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def zeta_reference(rho, k, eps, variant):
    """Independent cvxpy model of the diagonal-free-set overhead program."""
    import cvxpy

    n = rho.shape[0]
    Qp = cvxpy.Variable((n, n), hermitian=True)
    Qm = cvxpy.Variable((n, n), hermitian=True)
    mp, mm = cvxpy.Variable(), cvxpy.Variable()
    cons = [Qp >> 0, Qm >> 0, mp * np.eye(n) - Qp >> 0, mm * np.eye(n) - Qm >> 0, mp - mm == 1,
            cvxpy.real(cvxpy.trace(rho @ (Qp - Qm))) >= 1 - eps]
    for i in range(n):
        for Q, mu in ((Qp, mp), (Qm, mm)):
            lhs = cvxpy.real(Q[i, i])
            cons.append(lhs == mu / k if variant == "g" else lhs <= mu / k)
    prob = cvxpy.Problem(cvxpy.Minimize(mp + mm), cons)
    prob.solve(solver=cvxpy.CLARABEL)
    if prob.status in ("infeasible", "infeasible_inaccurate"):
        return np.inf, prob.status
    return prob.value, prob.status
