"""Estimate a Bell-state fidelity from noisy isotropic copies with the virtual teleport operation."""

import numpy as np

from vrdist import qmath, sampler, vrd

for p in (1 / 3, 0.5, 0.8):
    vop = vrd.build_virtual_operation_teleport(p)
    rho = qmath.isotropic_state(qmath.bell_state(), p)
    M = qmath.Observable(qmath.bell_state())
    n = sampler.required_samples(vop.C, 0.02, 0.05)
    rep = sampler.estimate(vop, rho, M, sampler.SamplerConfig(n, seed=1))
    print(f"p={p:.3f}  C={vop.C:.4f}  shots={n:6d}  estimate={rep.mean:.4f}  "
          f"exact={rep.exact:.4f}  bound={rep.hoeffding_bound:.4f}  within={rep.within_bound}")
    assert np.isclose(rep.exact, 1.0)
