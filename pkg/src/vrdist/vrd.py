"""Overhead and rate of virtual resource distillation.

``zeta`` solves

    minimize    mu_+ + mu_-
    subject to  0 <= Q_pm <= mu_pm I
                tr[Q_pm sigma] <= mu_pm / k   for every free sigma   (variant "s")
                tr[Q_pm sigma]  = mu_pm / k   for every free sigma   (variant "g")
                mu_+ - mu_- = 1
                tr[rho (Q_+ - Q_-)] >= 1 - eps

and is evaluated at ``k = F_F(psi^m)^-1`` (lower bound) and ``k = R + 1`` (upper
bound). When the two values of ``k`` agree the overhead is exact.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import qmath
from .qmath import PreconditionError
from .resources import (
    MonotoneValue,
    Theory,
    UnsupportedError,
    _bounded_q_blocks,
    max_overlap_fO,
    max_overlap_sdp,
)
from .sampler import VirtualOperation
from .sdp import Constraint, SdpProblem, SolverError, Status, solve

log = logging.getLogger(__name__)

RATE_SLACK = 1e-9
TIE_TOL = 1e-9


@dataclass
class ZetaResult:
    value: float
    mu_plus: float
    mu_minus: float
    Q_plus: np.ndarray | None
    Q_minus: np.ndarray | None
    variant: str
    k: float
    status: Status = Status.OPTIMAL

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.value)


@dataclass
class OverheadResult:
    epsilon: float
    m: int
    lower: float
    upper: float
    exact: float | None
    method: str
    closed_form: float | None = None
    note: str = ""
    witnesses: list = field(default_factory=list, repr=False)

    @property
    def value(self) -> float:
        """Best available overhead: exact, else the closed form, else the upper bound."""
        if self.exact is not None:
            return self.exact
        if self.closed_form is not None:
            return self.closed_form
        return self.upper


@dataclass
class RateResult:
    epsilon: float
    m_star: int
    rate: float
    per_m: list[tuple[int, float, float]]
    overheads: list[OverheadResult] = field(default_factory=list, repr=False)


def _zeta_problem(rho: np.ndarray, k: float, eps: float, variant: str, free):
    n = rho.shape[0]
    plus, dims_p, cons_p = _bounded_q_blocks(n, free, variant, k)
    minus, dims_m, cons_m = _bounded_q_blocks(n, free, variant, k, offset=len(dims_p))
    dims = dims_p + dims_m
    obj = [None] * len(dims)
    obj[plus["mu"]] = np.ones((1, 1))
    obj[minus["mu"]] = np.ones((1, 1))
    cons = cons_p + cons_m
    cons.append(Constraint({plus["mu"]: np.ones((1, 1)), minus["mu"]: -np.ones((1, 1))}, "=", 1.0))
    cons.append(Constraint({plus["Q"]: rho, minus["Q"]: -rho}, ">=", 1.0 - eps))
    return SdpProblem(dims, obj, cons), plus, minus


def zeta_problem(rho: np.ndarray, k: float, eps: float, variant: str, free) -> SdpProblem:
    """The SDP behind :func:`zeta`, for inspection or dumping."""
    return _zeta_problem(qmath.density_matrix(rho), k, eps, variant, free)[0]


def _check_args(rho, k, eps, free):
    rho = qmath.density_matrix(rho)
    if rho.shape[0] != free.dim:
        raise PreconditionError(f"state dimension {rho.shape[0]} != free-set dimension {free.dim}")
    if not k >= 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    if not 0 <= eps < 1:
        raise PreconditionError(f"eps must lie in [0, 1), got {eps}")
    return rho


def zeta(rho: np.ndarray, k: float, eps: float, variant: str, free) -> ZetaResult:
    """Optimal ``mu_+ + mu_-``; ``inf`` when the constraints cannot be met."""
    rho = _check_args(rho, k, eps, free)
    problem, plus, minus = _zeta_problem(rho, k, eps, variant, free)
    sol = solve(problem)
    if sol.status is Status.INFEASIBLE:
        return ZetaResult(math.inf, math.inf, math.inf, None, None, variant, k, sol.status)
    if sol.status is not Status.OPTIMAL:
        raise SolverError(sol.status, f"zeta^{variant} at k={k}, eps={eps}")
    mp = float(np.real(sol.primal_blocks[plus["mu"]][0, 0]))
    mm = float(np.real(sol.primal_blocks[minus["mu"]][0, 0]))
    return ZetaResult(
        value=max(sol.primal_value, 1.0),
        mu_plus=mp,
        mu_minus=mm,
        Q_plus=sol.primal_blocks[plus["Q"]],
        Q_minus=sol.primal_blocks[minus["Q"]],
        variant=variant,
        k=k,
    )


def overhead_closed_form(f: float, eps: float) -> float:
    """``max(2(1 - eps)/f - 1, 1)`` for a maximal target overlap ``f``."""
    if not f > 0:
        raise PreconditionError(f"overlap must be positive, got {f}")
    if f > 1 + 1e-12:
        raise PreconditionError(f"overlap must be at most 1, got {f}")
    if not 0 <= eps < 1:
        raise PreconditionError(f"eps must lie in [0, 1), got {eps}")
    return max(2 * (1 - eps) / f - 1, 1.0)


def _branch(theory: Theory, m: int) -> str:
    c = theory.coincidence(m)
    if c.constant_overlap and c.coincide_g:
        return "g"
    if math.isfinite(c.Rs_plus_1):
        return "s"
    raise UnsupportedError(f"{theory.name}: standard robustness of the target is infinite; no bound available")


def overhead_bounds(rho: np.ndarray, m: int, eps: float, theory: Theory) -> OverheadResult:
    """Lower/upper bounds (and the exact value when they coincide) on the overhead."""
    if m < 1:
        raise PreconditionError("m must be >= 1")
    rho = qmath.density_matrix(rho)
    c = theory.coincidence(m)
    free = theory.input_free
    variant = _branch(theory, m)
    witnesses = []
    if variant == "g":
        z = zeta(rho, c.Fs_inv, eps, "g", free)
        witnesses.append(z)
        lower = upper = exact = z.value
        method = "sdp-g"
    else:
        zl = zeta(rho, c.Fs_inv, eps, "s", free)
        witnesses.append(zl)
        lower = zl.value
        if c.coincide_s:
            upper = exact = lower
        else:
            zu = zeta(rho, c.Rs_plus_1, eps, "s", free)
            witnesses.append(zu)
            upper, exact = max(zu.value, lower), None
        method = "sdp-s"

    closed, note = None, ""
    try:
        fo = max_overlap_fO(rho, m, theory)
    except UnsupportedError:
        fo = None
    if fo is not None:
        closed = overhead_closed_form(fo.value, eps)
        note = fo.note
        if exact is not None:
            method = "both"
        else:
            method = "closed-form"
    return OverheadResult(eps, m, lower, upper, exact, method, closed, note, witnesses)


def _input_for(rho: np.ndarray, theory: Theory) -> np.ndarray:
    rho = qmath.density_matrix(rho)
    if rho.shape[0] != theory.input_free.dim:
        raise PreconditionError(f"{theory.name}: expected a state of dimension {theory.input_free.dim}")
    return rho


def _distillable(rho: np.ndarray, m: int, eps: float, theory: Theory) -> bool:
    # Overhead 1 means lambda_- = 0: a single free operation reaches overlap 1 - eps.
    c = theory.coincidence(m)
    variant = _branch(theory, m)
    best = max_overlap_sdp(rho, c.Fs_inv, theory.input_free, variant).value
    return best >= 1 - eps - RATE_SLACK


def conventional_rate(rho: np.ndarray, eps: float, theory: Theory, m_max: int | None = None) -> int:
    """Largest ``m <= m_max`` reachable by a single free operation (0 if none)."""
    m_max = theory.default_m_max if m_max is None else m_max
    if m_max < 1:
        raise PreconditionError("m_max must be >= 1")
    rho = _input_for(rho, theory)
    best = 0
    for m in range(1, m_max + 1):
        if _distillable(rho, m, eps, theory):
            best = m
    return best


def virtual_rate(rho: np.ndarray, eps: float, theory: Theory, m_max: int | None = None) -> RateResult:
    """``max_m m / C(rho, m)^2`` over ``m = 1..m_max``; ties go to the smaller ``m``."""
    m_max = theory.default_m_max if m_max is None else m_max
    if m_max < 1:
        raise PreconditionError("m_max must be >= 1")
    rho = _input_for(rho, theory)
    per_m, results = [], []
    for m in range(1, m_max + 1):
        res = overhead_bounds(rho, m, eps, theory)
        C = res.value
        per_m.append((m, C, m / C ** 2 if math.isfinite(C) else 0.0))
        results.append(res)
    rate = max(r for _, _, r in per_m)
    m_star = next(m for m, _, r in per_m if r >= rate - TIE_TOL)
    return RateResult(eps, m_star, rate, per_m, results)


def build_virtual_operation_teleport(p: float) -> VirtualOperation:
    """``lambda_+ id - lambda_- (prepare (I - psi)/3)`` distilling a Bell state from ``rho_p``."""
    if not 1 / 3 - 1e-12 <= p <= 1:
        raise PreconditionError(f"teleport construction needs p in [1/3, 1], got {p}")
    psi = qmath.bell_state()
    lp = 4 / (1 + 3 * p)
    lm = (3 - 3 * p) / (1 + 3 * p)
    terms = [(lp, qmath.identity_channel(4))]
    if lm > 0:
        terms.append((-lm, qmath.replacement_channel((np.eye(4) - psi) / 3, 4)))
    return VirtualOperation(tuple(terms))


def teleport_overhead(p: float) -> float:
    return min((7 - 3 * p) / (1 + 3 * p), 3.0)
