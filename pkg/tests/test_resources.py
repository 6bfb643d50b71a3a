import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vrdist import qmath as q
from vrdist import resources as R
from vrdist.qmath import PreconditionError

seeds = st.integers(min_value=0, max_value=2**32 - 1)
S2 = math.sqrt(2)


def test_stabilizer_vertex_counts():
    assert len(R.stabilizer_states(1).vertices) == 6
    assert len(R.stabilizer_states(2).vertices) == 60
    prod = R.stabilizer_states(2, product_only=True)
    assert len(prod.vertices) == 36
    assert prod.relaxation and "products" in prod.label


def test_single_qubit_stabilizers_are_pauli_eigenstates():
    for v in R.stabilizer_states(1).vertices:
        bloch = [np.trace(v @ p).real for p in (q.PAULI_X, q.PAULI_Y, q.PAULI_Z)]
        assert sorted(np.round(np.abs(bloch), 12)) == [0, 0, 1]


def test_free_fidelity_values():
    assert abs(R.free_fidelity(q.t_state(), R.stabilizer_states(1)).value - (2 + S2) / 4) < 1e-12
    assert abs(R.free_fidelity(q.maximally_coherent(4), R.diagonal_states(4)).value - 0.25) < 1e-8
    assert abs(R.free_fidelity(q.bell_state(), R.ppt_states(2, 2)).value - 0.5) < 1e-8
    with pytest.raises(PreconditionError):
        R.free_fidelity(np.eye(2) / 2, R.stabilizer_states(1))


def test_robustness_values():
    psi4 = q.maximally_coherent(4)
    assert abs(R.generalized_robustness(psi4, R.diagonal_states(4)).value - 3) < 1e-7
    assert math.isinf(R.standard_robustness(psi4, R.diagonal_states(4)).value)
    bell = q.bell_state()
    assert abs(R.generalized_robustness(bell, R.ppt_states(2, 2)).value - 1) < 1e-7
    assert abs(R.standard_robustness(bell, R.ppt_states(2, 2)).value - 1) < 1e-7
    stab = R.stabilizer_states(1)
    assert abs(R.standard_robustness(q.t_state(), stab).value - (S2 - 1) / 2) < 1e-7
    assert abs(R.generalized_robustness(q.t_state(), stab).value - (3 - 2 * S2)) < 1e-7


def test_free_states_have_zero_robustness():
    assert R.generalized_robustness(np.eye(4) / 4, R.diagonal_states(4)).value < 1e-7
    assert R.standard_robustness(np.eye(2) / 2, R.stabilizer_states(1)).value < 1e-7


@given(seeds)
def test_robustness_ordering(seed):
    rho = q.random_density_matrix(2, np.random.default_rng(seed))
    stab = R.stabilizer_states(1)
    assert R.generalized_robustness(rho, stab).value <= R.standard_robustness(rho, stab).value + 1e-7


@given(seeds)
def test_diagonal_invariance_under_permutation(seed):
    rng = np.random.default_rng(seed)
    rho = q.random_density_matrix(3, rng)
    perm = np.eye(3)[rng.permutation(3)]
    phases = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 3)))
    u = perm @ phases
    free = R.diagonal_states(3)
    a = R.generalized_robustness(rho, free).value
    b = R.generalized_robustness(u @ rho @ u.conj().T, free).value
    assert abs(a - b) < 1e-7


def test_stabilizer_invariance_under_clifford():
    h = np.array([[1, 1], [1, -1]]) / S2
    s = np.diag([1, 1j])
    t = q.t_state()
    stab = R.stabilizer_states(1)
    base = R.standard_robustness(t, stab).value
    for u in (h, s, h @ s):
        assert abs(R.standard_robustness(u @ t @ u.conj().T, stab).value - base) < 1e-8


def test_membership():
    stab = R.stabilizer_states(1)
    assert stab.contains(np.eye(2) / 2)
    assert not stab.contains(q.t_state())
    assert R.ppt_states(2, 2).contains(np.eye(4) / 4)
    assert not R.ppt_states(2, 2).contains(q.bell_state())
    assert R.diagonal_states(2).contains(np.diag([0.3, 0.7]))
    assert not R.diagonal_states(2).contains(q.pure_state([1, 1]))


def test_ppt_labels():
    assert not R.ppt_states(2, 2).relaxation
    big = R.ppt_states(4, 4)
    assert big.relaxation and "relaxation" in big.label


def test_tensor_power_ppt_ordering():
    free = R.ppt_states(2, 2)
    two = R.tensor_power(q.bell_state(), 2, free)
    # two Bell pairs regrouped A1A2|B1B2 form a maximally entangled state of local dimension 4
    assert abs(np.trace(two @ q.pure_state(np.eye(4).reshape(-1))).real - 1) < 1e-12


def test_coincidence_reports():
    ent = R.entanglement_theory().coincidence(1)
    assert ent.coincide_s and ent.coincide_g and not ent.constant_overlap
    coh = R.coherence_theory().coincidence(2)
    assert coh.constant_overlap and coh.coincide_g and not coh.coincide_s
    assert abs(coh.Fs_inv - 4) < 1e-8
    mag = R.magic_theory().coincidence(1)
    assert abs(mag.Fs_inv - 4 / (2 + S2)) < 1e-10
    assert abs(mag.Rs_plus_1 - (S2 + 1) / 2) < 1e-7
    assert not mag.coincide_s and not mag.constant_overlap


def test_twirling():
    assert R.entanglement_theory().twirling(1) is not None
    assert R.magic_theory().twirling(1) is None
    tw = R.entanglement_theory().twirling(1)
    rho = q.random_density_matrix(4, np.random.default_rng(0))
    out = tw.apply(rho)
    f = np.trace(rho @ q.bell_state()).real
    assert abs(np.trace(out @ q.bell_state()).real - f) < 1e-12


@given(st.floats(min_value=0, max_value=1))
def test_max_overlap_closed_forms(p):
    ent = R.entanglement_theory()
    f = R.max_overlap_fO(ent.family(p), 1, ent).value
    assert abs(f - max((1 + 3 * p) / 4, 0.5)) < 1e-8
    mag = R.magic_theory()
    res = R.max_overlap_fO(mag.family(p), 1, mag)
    assert abs(res.value - max((1 + p) / 2, (2 + S2) / 4)) < 1e-10
    assert res.note == "twirling assumed"


def test_max_overlap_refuses_general_inputs():
    ent = R.entanglement_theory()
    rho = q.random_density_matrix(4, np.random.default_rng(1))
    with pytest.raises(R.UnsupportedError):
        R.max_overlap_fO(rho, 1, ent)
    coh = R.coherence_theory()
    with pytest.raises(R.UnsupportedError):
        R.max_overlap_fO(coh.family(0.5), 2, coh)


@given(st.floats(min_value=0, max_value=1))
def test_max_overlap_sdp_agrees_with_closed_form(p):
    ent = R.entanglement_theory()
    sdp_val = R.max_overlap_sdp(ent.family(p), 2.0, ent.input_free).value
    assert abs(sdp_val - max((1 + 3 * p) / 4, 0.5)) < 1e-6


def test_unknown_theory():
    with pytest.raises(R.UnsupportedError):
        R.get_theory("purity")
