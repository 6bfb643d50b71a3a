"""Monte Carlo realization of virtual operations by quasi-probability sampling.

Each shot picks a term ``j`` with probability ``|w_j| / C``, applies its channel,
measures the observable in its eigenbasis and records ``C * sign(w_j) * outcome``.

Randomness comes from numpy's Philox counter-based generator keyed by the seed.
Shot ``i`` consumes doubles ``2i`` and ``2i + 1`` of the stream, so any chunk of
shots can be generated independently and the result does not depend on how the
work is split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qmath
from .qmath import Observable, PreconditionError, QuantumChannel

RNG_NAME = f"numpy.random.Philox (numpy {np.__version__})"
CHUNK = 1 << 16  # shots per chunk; must stay even


@dataclass(frozen=True, eq=False)
class VirtualOperation:
    """Signed combination ``sum_j w_j Lambda_j`` of channels with ``sum_j w_j = 1``."""

    terms: tuple[tuple[float, QuantumChannel], ...]

    def __post_init__(self):
        if not self.terms:
            raise PreconditionError("virtual operation needs at least one term")
        object.__setattr__(self, "terms", tuple((float(w), ch) for w, ch in self.terms))
        if abs(sum(w for w, _ in self.terms) - 1.0) > 1e-10:
            raise PreconditionError("weights of a virtual operation must sum to 1")
        d_in = {ch.dim_in for _, ch in self.terms}
        d_out = {ch.dim_out for _, ch in self.terms}
        if len(d_in) != 1 or len(d_out) != 1:
            raise PreconditionError("all channels must share input and output dimensions")

    @property
    def lambda_plus(self) -> float:
        return sum(w for w, _ in self.terms if w > 0)

    @property
    def lambda_minus(self) -> float:
        return -sum(w for w, _ in self.terms if w < 0)

    @property
    def C(self) -> float:
        return sum(abs(w) for w, _ in self.terms)

    @property
    def dim_in(self) -> int:
        return self.terms[0][1].dim_in

    @property
    def dim_out(self) -> int:
        return self.terms[0][1].dim_out

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return sum(w * ch(rho) for w, ch in self.terms)


@dataclass(frozen=True)
class SamplerConfig:
    n_samples: int
    seed: int = 0
    beta: float = 0.05
    delta: float = 0.05

    def __post_init__(self):
        if self.n_samples < 1:
            raise PreconditionError("n_samples must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise PreconditionError("seed must be a 64-bit unsigned integer")
        if self.beta <= 0:
            raise PreconditionError("beta must be positive")
        if not 0 < self.delta < 1:
            raise PreconditionError("delta must lie in (0, 1)")


@dataclass
class EstimateReport:
    mean: float
    std_error: float
    n_samples: int
    exact: float | None
    hoeffding_bound: float

    @property
    def within_bound(self) -> bool:
        return self.exact is not None and abs(self.mean - self.exact) <= self.hoeffding_bound


def hoeffding_bound(C: float, n: int, delta: float) -> float:
    """Two-sided deviation ``C sqrt(ln(2/delta) / (2n))`` at confidence ``1 - delta``.

    Shots take values in ``C * [-1, 1]``; the constant treats the shot range as
    width ``C`` (observable eigenvalues in ``[0, 1]`` times the weight sign), the
    same convention as :func:`required_samples`.
    """
    return C * math.sqrt(math.log(2 / delta) / (2 * n))


def required_samples(C: float, beta: float, delta: float) -> int:
    """Shots for accuracy ``beta`` with failure probability ``delta``: ``ceil(C^2 ln(2/delta) / (2 beta^2))``."""
    if C < 1 or beta <= 0 or not 0 < delta < 1:
        raise PreconditionError("need C >= 1, beta > 0 and 0 < delta < 1")
    # The ratio is formed before the ceiling so that exact integers are not bumped up by rounding.
    return math.ceil(round(C * C * math.log(2 / delta) / (2 * beta * beta), 9))


def _output_states(vop, rho, downstream):
    rho = qmath.density_matrix(rho)
    if rho.shape[0] != vop.dim_in:
        raise PreconditionError(f"state dimension {rho.shape[0]} != operation input {vop.dim_in}")
    outs = [ch(rho) for _, ch in vop.terms]
    if downstream is not None:
        if downstream.dim_in != vop.dim_out:
            raise PreconditionError("downstream channel does not match operation output")
        outs = [downstream(o) for o in outs]
    return outs


def _check_observable(M: Observable, dim: int) -> None:
    if not isinstance(M, Observable):
        raise PreconditionError("M must be an Observable")
    if M.matrix.shape[0] != dim:
        raise PreconditionError(f"observable dimension {M.matrix.shape[0]} != output dimension {dim}")


def exact_expectation(vop: VirtualOperation, rho: np.ndarray, M: Observable,
                      downstream: QuantumChannel | None = None) -> float:
    """``tr[M N(Lambda(rho))]`` evaluated term by term."""
    outs = _output_states(vop, rho, downstream)
    _check_observable(M, outs[0].shape[0])
    return float(sum(w * M.expectation(o) for (w, _), o in zip(vop.terms, outs)))


def shot_values(vop: VirtualOperation, rho: np.ndarray, M: Observable, n_samples: int, seed: int,
                downstream: QuantumChannel | None = None, start: int = 0) -> np.ndarray:
    """Reweighted single-shot values for shots ``start .. start + n_samples - 1``."""
    if start % 2:
        raise PreconditionError("start shot index must be even")
    outs = _output_states(vop, rho, downstream)
    _check_observable(M, outs[0].shape[0])
    weights = np.array([w for w, _ in vop.terms])
    C = float(np.sum(np.abs(weights)))
    term_cdf = np.cumsum(np.abs(weights)) / C
    term_cdf[-1] = 1.0
    outcome_cdf = []
    for o in outs:
        c = np.cumsum(M.born_probabilities(o))
        c /= c[-1]
        outcome_cdf.append(c)
    signed = C * np.sign(weights)

    bitgen = np.random.Philox(key=seed)
    bitgen.advance(start // 2)  # each advance step skips four doubles (two shots)
    u = np.random.Generator(bitgen).random((n_samples, 2))
    j = np.minimum(np.searchsorted(term_cdf, u[:, 0], side="right"), len(weights) - 1)
    values = np.empty(n_samples)
    for t in range(len(weights)):
        sel = j == t
        if np.any(sel):
            k = np.minimum(np.searchsorted(outcome_cdf[t], u[sel, 1], side="right"), len(M.eigenvalues) - 1)
            values[sel] = signed[t] * M.eigenvalues[k]
    return values


def estimate(vop: VirtualOperation, rho: np.ndarray, M: Observable, cfg: SamplerConfig,
             downstream: QuantumChannel | None = None) -> EstimateReport:
    """Sample ``cfg.n_samples`` shots and summarise them.

    Shots are generated in fixed chunks whose random streams depend only on the
    shot index; the mean uses numpy's pairwise summation over the full array.
    """
    n = cfg.n_samples
    parts = [
        shot_values(vop, rho, M, min(CHUNK, n - s), cfg.seed, downstream, start=s)
        for s in range(0, n, CHUNK)
    ]
    values = np.concatenate(parts)
    mean = float(np.sum(values) / n)
    std_error = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return EstimateReport(
        mean=mean,
        std_error=std_error,
        n_samples=n,
        exact=exact_expectation(vop, rho, M, downstream),
        hoeffding_bound=hoeffding_bound(vop.C, n, cfg.delta),
    )
