import numpy as np
import pytest
from hypothesis import given, strategies as st

from vrdist import qmath as q
from vrdist import resources, vrd
from conftest import zeta_reference
from vrdist.sdp import (
    Constraint,
    SdpProblem,
    SdpSettings,
    Status,
    dump_problem,
    hermitian_basis,
    load_problem,
    matrix_equality,
    identity_map,
    negated,
    solve,
    verify_certificate,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def x_above_identity(n=2, scale=1.0):
    cons = matrix_equality([(0, identity_map), (1, negated(identity_map))], np.eye(n), n)
    return SdpProblem([n, n], [scale * np.eye(n), None], cons)


def min_eig_problem(c):
    n = c.shape[0]
    return SdpProblem([n], [c], [Constraint({0: np.eye(n)}, "=", 1.0)])


def test_trace_above_identity():
    prob = x_above_identity()
    sol = solve(prob)
    assert sol.status is Status.OPTIMAL
    assert abs(sol.primal_value - 2) <= 1e-8
    rep = verify_certificate(prob, sol)
    assert rep.accepted
    assert rep.primal_residual <= 1e-8 and rep.dual_residual <= 1e-8 and rep.gap <= 1e-8


def test_coherent_overlap_over_diagonal():
    assert abs(resources.free_fidelity(q.maximally_coherent(4), resources.diagonal_states(4)).value - 0.25) <= 1e-8


def test_bell_overlap_over_ppt():
    assert abs(resources.free_fidelity(q.bell_state(), resources.ppt_states(2, 2)).value - 0.5) <= 1e-8


@given(seeds, st.integers(min_value=1, max_value=5))
def test_min_eigenvalue(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    c = (a + a.conj().T) / 2
    prob = min_eig_problem(c)
    sol = solve(prob)
    assert sol.status is Status.OPTIMAL
    assert abs(sol.primal_value - np.linalg.eigvalsh(c)[0]) <= 1e-7
    # weak duality
    assert sol.dual_value <= sol.primal_value + 1e-8
    assert verify_certificate(prob, sol).accepted


@given(seeds, st.floats(min_value=0.1, max_value=50))
def test_scaling_equivariance(seed, c):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 3))
    base = (a + a.T) / 2
    v1 = solve(min_eig_problem(base)).primal_value
    v2 = solve(min_eig_problem(c * base)).primal_value
    assert abs(v2 - c * v1) <= 1e-7 * max(1, c)


def test_determinism():
    prob = vrd.zeta_problem(q.isotropic_state(q.maximally_coherent(4), 0.3), 4, 0.02, "g",
                            resources.diagonal_states(4))
    a, b = solve(prob), solve(prob)
    assert a.iterations == b.iterations
    assert a.primal_value == b.primal_value
    assert all(np.array_equal(x, y) for x, y in zip(a.primal_blocks, b.primal_blocks))


def test_infeasible_and_unbounded():
    infeas = SdpProblem([1], [np.ones((1, 1))], [Constraint({0: np.ones((1, 1))}, "=", -1.0)])
    assert solve(infeas).status is Status.INFEASIBLE
    unb = SdpProblem([1], [-np.ones((1, 1))], [Constraint({0: np.ones((1, 1))}, ">=", 0.0)])
    assert solve(unb).status is Status.UNBOUNDED
    # a row with no coefficients and nonzero right-hand side
    empty = SdpProblem([1], [np.ones((1, 1))], [Constraint({}, "=", 1.0)])
    assert solve(empty).status is Status.INFEASIBLE


def test_free_scalars():
    # min t  s.t.  t - x = 0, x >= 3  (t free, x a 1x1 block)
    prob = SdpProblem([1], [None], [Constraint({0: -np.ones((1, 1))}, "=", 0.0, {0: 1.0}),
                                    Constraint({0: np.ones((1, 1))}, ">=", 3.0)],
                      free_scalars=1, free_objective=np.array([1.0]))
    sol = solve(prob)
    assert sol.status is Status.OPTIMAL
    assert abs(sol.scalars[0] - 3) < 1e-7
    assert verify_certificate(prob, sol).accepted


def test_perturbed_certificate_flagged():
    prob = x_above_identity()
    sol = solve(prob)
    sol.primal_blocks[0] = sol.primal_blocks[0].copy()
    sol.primal_blocks[0][0, 0] += 1e-3
    rep = verify_certificate(prob, sol)
    assert rep.primal_residual > 1e-4
    assert not rep.accepted


def test_coherence_zeta_certificate_gap():
    prob = vrd.zeta_problem(q.isotropic_state(q.maximally_coherent(4), 0.5), 4, 0.0, "g",
                            resources.diagonal_states(4))
    sol = solve(prob)
    assert verify_certificate(prob, sol).gap <= 1e-7


def test_settings_tolerance_respected():
    sol = solve(x_above_identity(), SdpSettings(gap_tol=1e-4, feas_tol=1e-4))
    assert abs(sol.primal_value - 2) <= 1e-4


def test_hermitian_basis_orthonormal():
    basis = hermitian_basis(3)
    g = np.array([[np.real(np.trace(a @ b)) for b in basis] for a in basis])
    assert np.allclose(g, np.eye(9))


def test_rejects_malformed():
    with pytest.raises(ValueError):
        SdpProblem([2], [np.eye(3)], [])
    with pytest.raises(ValueError):
        SdpProblem([2], [np.array([[0, 1], [0, 0]])], [])
    with pytest.raises(ValueError):
        Constraint({0: np.eye(1)}, "<", 0.0)


def test_dump_round_trip():
    prob = vrd.zeta_problem(q.isotropic_state(q.bell_state(), 0.4), 2, 0.04, "s", resources.ppt_states(2, 2))
    text = dump_problem(prob)
    assert text.startswith("sdp-dump 1\n")
    back = load_problem(text)
    assert dump_problem(back) == text
    assert solve(back).primal_value == solve(prob).primal_value


cvxpy = pytest.importorskip("cvxpy")

@pytest.mark.filterwarnings("ignore:Solution may be inaccurate")
@given(seeds, st.sampled_from([1.5, 2.0, 4.0]), st.sampled_from([0.0, 0.05, 0.2]), st.sampled_from("sg"))
def test_zeta_matches_cvxpy(seed, k, eps, variant):
    rho = q.random_density_matrix(3, np.random.default_rng(seed))
    ours = vrd.zeta(rho, k, eps, variant, resources.diagonal_states(3)).value
    ref, status = zeta_reference(rho, k, eps, variant)
    if np.isinf(ref):
        assert np.isinf(ours)
    else:
        tol = 1e-5 if status == "optimal" else 1e-3
        assert abs(ours - ref) <= tol * max(1, ref)
