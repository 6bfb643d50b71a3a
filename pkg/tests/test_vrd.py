import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import zeta_reference
from vrdist import qmath as q
from vrdist import resources as R
from vrdist import vrd
from vrdist.qmath import PreconditionError
from vrdist.sdp import SolverError, Status

S2 = math.sqrt(2)
COH = R.coherence_theory()
ENT = R.entanglement_theory()
MAG = R.magic_theory()
# Overheads beyond ~1e3 (p < 1e-3 for coherence) exceed the solver's accuracy range.
probs = st.one_of(st.just(0.0), st.floats(min_value=1e-3, max_value=1.0))
eps_values = st.sampled_from([0.0, 0.02, 0.04, 0.08])


def coherence_closed(p, m, eps):
    # hand-derived single-copy values for qubit and ququart targets
    if p == 0:
        return math.inf
    if m == 1:
        return max(1.0, (1 - 2 * eps) / p)
    return max(1.0, (3 - p - 4 * eps) / (2 * p))


def check_zeta_invariants(z, rho, eps):
    assert abs(z.mu_plus - z.mu_minus - 1) <= 1e-8
    for Q, mu in ((z.Q_plus, z.mu_plus), (z.Q_minus, z.mu_minus)):
        w = np.linalg.eigvalsh(Q)
        assert w[0] >= -1e-8 and w[-1] <= mu + 1e-8
    assert np.trace(rho @ (z.Q_plus - z.Q_minus)).real >= 1 - eps - 1e-8
    assert z.value >= 1


def test_zeta_target_is_input():
    z = vrd.zeta(q.maximally_coherent(4), 4, 0.0, "g", R.diagonal_states(4))
    assert abs(z.value - 1) < 1e-7
    check_zeta_invariants(z, q.maximally_coherent(4), 0.0)


def test_zeta_free_state_variants():
    free = R.diagonal_states(4)
    assert abs(vrd.zeta(np.eye(4) / 4, 4, 0.0, "s", free).value - 7) < 1e-7
    assert abs(vrd.zeta(np.eye(4) / 4, 4, 0.08, "s", free).value - 6.36) < 1e-7
    # with equality constraints every feasible Q has the same overlap with I/4
    assert math.isinf(vrd.zeta(np.eye(4) / 4, 4, 0.0, "g", free).value)


@given(probs, st.sampled_from([1, 2]), eps_values)
def test_coherence_matches_closed_form(p, m, eps):
    res = vrd.overhead_bounds(COH.family(p), m, eps, COH)
    expected = coherence_closed(p, m, eps)
    if expected > 1e6:
        assert math.isinf(res.value) or res.value > 1e5
    else:
        assert abs(res.value - expected) <= 1e-6 * expected
    assert res.method == "sdp-g"


@pytest.mark.filterwarnings("ignore:Solution may be inaccurate")
@given(st.floats(min_value=0.05, max_value=1.0), eps_values)
def test_coherence_three_units_against_reference(p, eps):
    pytest.importorskip("cvxpy")
    ref, status = zeta_reference(COH.family(p), 8.0, eps, "g")
    ours = vrd.overhead_bounds(COH.family(p), 3, eps, COH).value
    assert abs(ours - ref) <= (1e-5 if status == "optimal" else 1e-3) * ref


def test_coherence_values():
    rho = COH.family(0.5)
    assert abs(vrd.zeta(rho, 4, 0.0, "g", COH.input_free).value - 2.5) < 1e-7
    assert abs(vrd.zeta(rho, 4, 0.08, "g", COH.input_free).value - 2.18) < 1e-7
    assert abs(vrd.overhead_bounds(COH.family(1.0), 1, 0.0, COH).exact - 1) < 1e-7


def test_coherence_decreasing_in_p():
    vals = [vrd.zeta(COH.family(p), 4, 0.0, "g", COH.input_free).value for p in (0.2, 0.4, 0.6, 0.8, 1.0)]
    assert all(b <= a + 1e-8 for a, b in zip(vals, vals[1:]))
    assert all(1 <= v <= 7 + 1e-8 for v in vals[1:])


@given(probs, eps_values)
def test_entanglement_sdp_vs_closed_form(p, eps):
    res = vrd.overhead_bounds(ENT.family(p), 1, eps, ENT)
    assert res.method == "both"
    assert abs(res.exact - res.closed_form) <= 1e-5
    assert abs(res.lower - res.upper) <= 1e-6
    if eps == 0:
        assert abs(res.closed_form - vrd.teleport_overhead(p)) <= 1e-9


def test_entanglement_example():
    assert abs(vrd.overhead_bounds(ENT.family(0.5), 1, 0.0, ENT).exact - 2.2) < 1e-6


@given(probs)
def test_magic_sandwich(p):
    res = vrd.overhead_bounds(MAG.family(p), 1, 0.0, MAG)
    assert 1 <= res.lower <= res.upper + 1e-7
    assert res.exact is None and res.method == "closed-form"
    assert res.lower - 1e-6 <= res.closed_form <= res.upper + 1e-6
    assert res.note == "twirling assumed"


def test_magic_bounds_at_free_point():
    res = vrd.overhead_bounds(MAG.family(0.0), 1, 0.0, MAG)
    assert abs(res.lower - (7 - 4 * S2)) < 1e-7
    assert abs(res.upper - S2) < 1e-7


def test_overhead_closed_form():
    assert vrd.overhead_closed_form(1.0, 0.0) == 1.0
    assert abs(vrd.overhead_closed_form(0.625, 0.0) - 2.2) < 1e-12
    assert vrd.overhead_closed_form(0.5, 0.0) == 3.0
    with pytest.raises(PreconditionError):
        vrd.overhead_closed_form(0.0, 0.0)


@given(probs, eps_values)
def test_overhead_monotone_in_eps(p, eps):
    lo = vrd.overhead_bounds(ENT.family(p), 1, eps, ENT).value
    hi = vrd.overhead_bounds(ENT.family(p), 1, min(eps + 0.02, 0.1), ENT).value
    assert hi <= lo + 1e-7


def test_overhead_nondecreasing_in_m():
    for p in (0.3, 0.6, 0.9):
        vals = [vrd.overhead_bounds(COH.family(p), m, 0.0, COH).value for m in (1, 2, 3)]
        assert all(b >= a - 1e-7 for a, b in zip(vals, vals[1:]))


@given(probs, eps_values, st.sampled_from(["coherence", "entanglement", "magic"]))
def test_rate_ordering_and_consistency(p, eps, name):
    th = {"coherence": COH, "entanglement": ENT, "magic": MAG}[name]
    rho = th.family(p)
    rate = vrd.virtual_rate(rho, eps, th)
    d = vrd.conventional_rate(rho, eps, th)
    assert d <= rate.rate + 1e-9
    assert abs(rate.rate - max(r for _, _, r in rate.per_m)) <= 1e-9
    # C = 1 exactly when a single free operation suffices
    for m, C, _ in rate.per_m:
        assert (abs(C - 1) <= 1e-6) == (m <= d)


def test_conventional_rate_examples():
    assert vrd.conventional_rate(q.bell_state(), 0.0, ENT) >= 1
    assert vrd.conventional_rate(ENT.family(0.3), 0.0, ENT) == 0
    assert vrd.conventional_rate(COH.family(0.1), 0.0, COH) == 0
    assert vrd.conventional_rate(q.maximally_coherent(4), 0.0, COH) == 2


def test_virtual_rate_examples():
    r = vrd.virtual_rate(q.maximally_coherent(4), 0.0, COH)
    assert r.rate >= 1 and r.m_star == 2
    r = vrd.virtual_rate(COH.family(0.5), 0.0, COH)
    assert r.m_star == 2
    assert vrd.virtual_rate(ENT.family(0.7), 0.0, ENT).m_star == 1
    assert abs(vrd.virtual_rate(ENT.family(0.2), 0.0, ENT).rate - 1 / 9) < 1e-8


def test_tie_breaks_to_smaller_m():
    r = vrd.virtual_rate(ENT.family(0.5), 0.0, ENT, m_max=1)
    assert r.m_star == 1


@given(st.floats(min_value=1 / 3, max_value=1.0))
def test_teleport_operation(p):
    vop = vrd.build_virtual_operation_teleport(p)
    assert abs(vop.C - vrd.teleport_overhead(p)) < 1e-12
    out = vop(q.isotropic_state(q.bell_state(), p))
    assert q.trace_norm(out - q.bell_state()) <= 1e-10


def test_teleport_endpoints_and_refusal():
    assert vrd.build_virtual_operation_teleport(1.0).C == 1.0
    v = vrd.build_virtual_operation_teleport(1 / 3)
    assert abs(v.lambda_plus - 2) < 1e-12 and abs(v.lambda_minus - 1) < 1e-12
    with pytest.raises(PreconditionError):
        vrd.build_virtual_operation_teleport(0.3)


def test_extreme_overhead_reports_failure_not_garbage():
    try:
        res = vrd.overhead_bounds(COH.family(1e-5), 1, 0.0, COH)
    except SolverError as exc:
        assert exc.status is Status.NUMERICAL_FAILURE
    else:
        assert abs(res.value - 1e5) <= 1e-3 * 1e5


def test_argument_validation():
    free = R.diagonal_states(4)
    with pytest.raises(PreconditionError):
        vrd.zeta(np.eye(4) / 4, 0.5, 0.0, "s", free)
    with pytest.raises(PreconditionError):
        vrd.zeta(np.eye(4) / 4, 2, 1.0, "s", free)
    with pytest.raises(PreconditionError):
        vrd.zeta(np.eye(2) / 2, 2, 0.0, "s", free)
    with pytest.raises(PreconditionError):
        vrd.overhead_bounds(np.eye(4) / 4, 0, 0.0, COH)
