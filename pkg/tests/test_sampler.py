import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vrdist import qmath as q
from vrdist import sampler as S
from vrdist import vrd
from vrdist.qmath import PreconditionError

BELL = q.bell_state()
M_BELL = q.Observable(BELL)


def teleport(p):
    return vrd.build_virtual_operation_teleport(p), q.isotropic_state(BELL, p)


def identity_vop(d=4):
    return S.VirtualOperation(((1.0, q.identity_channel(d)),))


def test_required_samples():
    assert S.required_samples(1, 0.1, 0.05) == 185
    # 9 * ln(40) / 0.02 = 1660.29..., so the ceiling is 1660
    assert S.required_samples(3, 0.1, 0.05) == 1660
    assert S.required_samples(3, 0.1, 0.05) == math.ceil(9 * math.log(40) / 0.02)
    base = S.required_samples(2, 0.1, 0.05)
    assert abs(S.required_samples(2, 0.05, 0.05) / base - 4) < 0.01
    with pytest.raises(PreconditionError):
        S.required_samples(0.5, 0.1, 0.05)


def test_virtual_operation_validation():
    with pytest.raises(PreconditionError):
        S.VirtualOperation(((0.5, q.identity_channel(2)),))
    with pytest.raises(PreconditionError):
        S.VirtualOperation(((2.0, q.identity_channel(2)), (-1.0, q.identity_channel(3))))
    vop, _ = teleport(0.5)
    assert vop.C >= 1
    assert abs(vop.lambda_plus - vop.lambda_minus - 1) < 1e-12


def test_exact_expectation():
    rho = q.random_density_matrix(4, np.random.default_rng(0))
    assert abs(S.exact_expectation(identity_vop(), rho, M_BELL) - M_BELL.expectation(rho)) < 1e-12
    vop, rho_p = teleport(0.5)
    assert abs(S.exact_expectation(vop, rho_p, M_BELL) - 1) < 1e-12
    dep = q.depolarizing_channel(3)
    two = S.VirtualOperation(((2.0, dep), (-1.0, dep)))
    M = q.Observable(np.diag([1.0, 0.5, 0.0]))
    assert abs(S.exact_expectation(two, q.random_density_matrix(3, np.random.default_rng(1)), M) - 0.5) < 1e-12


def test_dimension_errors():
    with pytest.raises(PreconditionError):
        S.exact_expectation(identity_vop(), np.eye(2) / 2, M_BELL)
    with pytest.raises(PreconditionError):
        S.estimate(identity_vop(2), np.eye(2) / 2, M_BELL, S.SamplerConfig(10))
    with pytest.raises(PreconditionError):
        S.SamplerConfig(0)


def test_identity_converges():
    rep = S.estimate(identity_vop(), BELL, M_BELL, S.SamplerConfig(5000, seed=1))
    assert abs(rep.mean - 1) < 1e-12 and rep.std_error < 1e-12


@given(st.integers(min_value=0, max_value=2**64 - 1), st.sampled_from([1 / 3, 0.5, 0.8]))
def test_shot_range(seed, p):
    vop, rho = teleport(p)
    vals = S.shot_values(vop, rho, M_BELL, 500, seed)
    assert np.all(np.abs(vals) <= vop.C + 1e-12)


def test_seed_determinism_and_chunking(monkeypatch):
    vop, rho = teleport(1 / 3)
    cfg = S.SamplerConfig(5001, seed=77)
    a = S.estimate(vop, rho, M_BELL, cfg)
    b = S.estimate(vop, rho, M_BELL, cfg)
    assert a == b
    # the split into chunks must not change any shot
    monkeypatch.setattr(S, "CHUNK", 64)
    c = S.estimate(vop, rho, M_BELL, cfg)
    assert c.mean == a.mean or abs(c.mean - a.mean) < 1e-15
    whole = S.shot_values(vop, rho, M_BELL, 200, 9)
    parts = np.concatenate([S.shot_values(vop, rho, M_BELL, 100, 9, start=0),
                            S.shot_values(vop, rho, M_BELL, 100, 9, start=100)])
    assert np.array_equal(whole, parts)


def test_unbiased_over_seeds():
    vop, rho = teleport(0.4)
    M = q.Observable(np.diag([1.0, 0, 0, 0]))
    exact = S.exact_expectation(vop, rho, M)
    means = [S.estimate(vop, rho, M, S.SamplerConfig(2000, seed=s)).mean for s in range(200)]
    grand_se = np.std(means, ddof=1) / np.sqrt(len(means))
    assert abs(np.mean(means) - exact) < 5 * grand_se


def test_hoeffding_validity():
    vop, rho = teleport(1 / 3)
    beta, delta = 0.15, 0.05
    n = S.required_samples(vop.C, beta, delta)
    fails = sum(abs(S.estimate(vop, rho, M_BELL, S.SamplerConfig(n, seed=10_000 + t)).mean - 1) > beta
                for t in range(500))
    assert fails / 500 <= delta + 0.02


def test_downstream_channel():
    vop, rho = teleport(0.6)
    swap = np.eye(4)[[0, 2, 1, 3]]
    ch = q.unitary_channel(swap)
    # the Bell state is swap invariant
    assert abs(S.exact_expectation(vop, rho, M_BELL, downstream=ch) - 1) < 1e-12
    rep = S.estimate(vop, rho, M_BELL, S.SamplerConfig(20_000, seed=3), downstream=ch)
    assert rep.within_bound
