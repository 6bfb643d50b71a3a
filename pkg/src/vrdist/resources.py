"""Free-state sets, resource monotones and the resource theories used in sweeps.

Three kinds of free set are supported:

* ``diagonal``: incoherent (diagonal) states of dimension ``d``;
* ``polytope``: convex hull of an explicit list of pure vertices (stabilizer states);
* ``ppt``: states with positive partial transpose on ``dA x dB``. For two qubits
  this is exactly the separable set; in larger dimensions it is a relaxation and
  is labelled as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import qmath
from .qmath import PreconditionError
from .sdp import (
    Constraint,
    SdpProblem,
    SolverError,
    Status,
    identity_map,
    matrix_equality,
    negated,
    scalar_times,
    solve,
)

MEMBERSHIP_TOL = 1e-8
COINCIDENCE_TOL = 1e-6


class UnsupportedError(ValueError):
    """The requested quantity has no supported formulation for this input."""


# --- free sets ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FreeSetSpec:
    kind: str
    dim: int
    label: str
    vertices: tuple[np.ndarray, ...] = ()
    dims: tuple[int, int] | None = None
    family: str | None = None
    relaxation: bool = False

    def __post_init__(self):
        if self.kind not in ("diagonal", "polytope", "ppt"):
            raise UnsupportedError(f"unsupported free-set kind {self.kind!r}")
        if self.kind == "diagonal" and self.dim < 2:
            raise PreconditionError("diagonal free set needs d >= 2")
        if self.kind == "polytope":
            if not self.vertices:
                raise PreconditionError("polytope needs vertices")
            for v in self.vertices:
                qmath.density_matrix(v)
        if self.kind == "ppt" and (self.dims is None or self.dims[0] * self.dims[1] != self.dim):
            raise PreconditionError("ppt free set needs dims with dA*dB == dim")

    def power(self, m: int, exact: bool = True) -> "FreeSetSpec":
        """Free set on ``m`` copies of the underlying space."""
        if m == 1:
            return self
        if self.kind == "diagonal":
            return diagonal_states(self.dim ** m)
        if self.kind == "ppt":
            da, db = self.dims
            return ppt_states(da ** m, db ** m)
        if self.family == "stabilizer" and exact:
            n = int(round(math.log2(self.dim)))
            return stabilizer_states(n * m)
        verts = [np.ones((1, 1), dtype=complex)]
        for _ in range(m):
            verts = [qmath.kron(a, v) for a in verts for v in self.vertices]
        return FreeSetSpec("polytope", self.dim ** m, f"{self.label}^{m} (products)", tuple(verts),
                           family=None, relaxation=True)

    def contains(self, rho: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        """Membership of ``rho`` in the set, up to ``tol``."""
        rho = np.asarray(rho, dtype=complex)
        if np.linalg.eigvalsh(qmath.symmetrize(rho))[0] < -tol or abs(np.trace(rho).real - 1) > tol:
            return False
        if self.kind == "diagonal":
            return float(np.max(np.abs(rho - np.diag(np.diag(rho))))) <= tol
        if self.kind == "ppt":
            pt = qmath.partial_transpose(rho, self.dims)
            return np.linalg.eigvalsh(qmath.symmetrize(pt))[0] >= -tol
        return polytope_distance(rho, self) <= tol


def diagonal_states(d: int) -> FreeSetSpec:
    return FreeSetSpec("diagonal", d, f"diagonal({d})")


def ppt_states(da: int, db: int) -> FreeSetSpec:
    exact = da * db <= 6
    label = f"ppt({da}x{db})" + ("" if exact else " [PPT relaxation]")
    return FreeSetSpec("ppt", da * db, label, dims=(da, db), relaxation=not exact)


def polytope(vertices, label: str = "polytope") -> FreeSetSpec:
    verts = tuple(qmath.density_matrix(v) for v in vertices)
    return FreeSetSpec("polytope", verts[0].shape[0], label, verts)


@lru_cache(maxsize=None)
def _stabilizer_vectors(n: int) -> tuple[np.ndarray, ...]:
    # Breadth-first orbit of |0...0> under H, S and CNOT, deduplicated up to global phase.
    dim = 2 ** n
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    s = np.diag([1, 1j])

    def local(g, q):
        ops = [np.eye(2)] * n
        ops[q] = g
        out = np.ones((1, 1))
        for o in ops:
            out = np.kron(out, o)
        return out

    gens = [local(h, q) for q in range(n)] + [local(s, q) for q in range(n)]
    for c in range(n):
        for t in range(n):
            if c != t:
                u = np.zeros((dim, dim))
                for i in range(dim):
                    bits = [(i >> (n - 1 - k)) & 1 for k in range(n)]
                    if bits[c]:
                        bits[t] ^= 1
                    j = sum(b << (n - 1 - k) for k, b in enumerate(bits))
                    u[j, i] = 1
                gens.append(u)

    def key(v):
        k = np.flatnonzero(np.abs(v) > 1e-9)[0]
        w = v * abs(v[k]) / v[k]
        return tuple(np.round(np.concatenate([w.real, w.imag]), 8))

    start = np.zeros(dim, dtype=complex)
    start[0] = 1
    seen = {key(start): start}
    frontier = [start]
    while frontier:
        nxt = []
        for v in frontier:
            for g in gens:
                w = g @ v
                kw = key(w)
                if kw not in seen:
                    seen[kw] = w
                    nxt.append(w)
        frontier = nxt
    return tuple(seen[k] for k in sorted(seen))


def stabilizer_states(n_qubits: int = 1, product_only: bool = False) -> FreeSetSpec:
    """Stabilizer polytope on ``n_qubits`` (6, 60, 1080 vertices for n = 1, 2, 3).

    ``product_only`` keeps just tensor products of single-qubit stabilizer states,
    a strict subset of the polytope for n >= 2; the label records the relaxation.
    """
    if product_only and n_qubits > 1:
        return stabilizer_states(1).power(n_qubits, exact=False)
    verts = tuple(qmath.pure_state(v) for v in _stabilizer_vectors(n_qubits))
    return FreeSetSpec("polytope", 2 ** n_qubits, f"stabilizer({n_qubits})", verts, family="stabilizer")


def polytope_distance(rho: np.ndarray, free: FreeSetSpec) -> float:
    """l1 distance (in Hermitian-basis coordinates) from ``rho`` to the vertex hull."""
    from .sdp import hermitian_basis

    n = free.dim
    verts = free.vertices
    V = len(verts)
    basis = hermitian_basis(n)
    # blocks: c_v (V), r_plus (n^2), r_minus (n^2), all scalars
    nb = len(basis)
    dims = [1] * (V + 2 * nb)
    obj = [None] * V + [np.ones((1, 1))] * (2 * nb)
    cons = [Constraint({j: np.ones((1, 1)) for j in range(V)}, "=", 1.0)]
    for t, B in enumerate(basis):
        coeffs = {j: np.array([[np.real(np.vdot(B, v))]]) for j, v in enumerate(verts)}
        coeffs[V + t] = np.ones((1, 1))
        coeffs[V + nb + t] = -np.ones((1, 1))
        cons.append(Constraint(coeffs, "=", float(np.real(np.vdot(B, rho)))))
    sol = solve(SdpProblem(dims, obj, cons))
    if sol.status is not Status.OPTIMAL:
        raise SolverError(sol.status, "polytope membership")
    return max(sol.primal_value, 0.0)


def tensor_power(psi: np.ndarray, m: int, free: FreeSetSpec) -> np.ndarray:
    """``psi`` to the m-th tensor power, ordered to match ``free.power(m)``.

    For bipartite (PPT) sets the copies are regrouped as ``A1..Am | B1..Bm``.
    """
    out = qmath.kron_power(psi, m)
    if free.kind != "ppt" or m == 1:
        return out
    da, db = free.dims
    shape = [da, db] * m
    t = out.reshape(shape + shape)
    order = [2 * i for i in range(m)] + [2 * i + 1 for i in range(m)]
    perm = order + [2 * m + k for k in order]
    return t.transpose(perm).reshape(out.shape)


# --- monotones ------------------------------------------------------------------


@dataclass
class MonotoneValue:
    value: float
    method: str
    certificate: tuple[np.ndarray | None, float] | None = None
    note: str = ""


def _cone_terms(free: FreeSetSpec, first_block: int, n: int):
    """Blocks and adjoint terms expressing ``tau in cone(F)`` as ``tau = L(vars)``.

    Returns ``(dims, terms, extra_constraints)``; ``terms`` give the map from the
    new variables to ``tau``.
    """
    if free.kind == "diagonal":
        dims = [1] * n
        terms = []
        for i in range(n):
            e = np.zeros((n, n))
            e[i, i] = 1
            terms.append((first_block + i, scalar_times(e)))
        return dims, terms, []
    if free.kind == "polytope":
        dims = [1] * len(free.vertices)
        terms = [(first_block + j, scalar_times(v)) for j, v in enumerate(free.vertices)]
        return dims, terms, []
    # ppt: tau = T (PSD block) with T^{T_B} = W (PSD block)
    T, W = first_block, first_block + 1
    pt = _pt(free)
    extra = matrix_equality([(W, identity_map), (T, negated(pt))], np.zeros((n, n)), n)
    return [n, n], [(T, identity_map)], extra


def _pt(free: FreeSetSpec):
    return lambda B: qmath.partial_transpose(B, free.dims)


def _trace_objective(free: FreeSetSpec, dims: list[int], first_block: int, n: int) -> list:
    if free.kind == "diagonal":
        return [np.ones((1, 1))] * n
    if free.kind == "polytope":
        return [np.ones((1, 1))] * len(free.vertices)
    return [np.eye(n), None]


def _require_state(rho: np.ndarray, free: FreeSetSpec) -> np.ndarray:
    rho = qmath.density_matrix(rho)
    if rho.shape[0] != free.dim:
        raise PreconditionError(f"state dimension {rho.shape[0]} != free-set dimension {free.dim}")
    return rho


def generalized_robustness(rho: np.ndarray, free: FreeSetSpec) -> MonotoneValue:
    """``min lambda`` with ``(rho + lambda omega)/(1 + lambda)`` free, ``omega`` any state.

    Solved as ``min tr(tau) - 1`` over ``tau in cone(F)`` with ``tau - rho >= 0``.
    """
    rho = _require_state(rho, free)
    n = rho.shape[0]
    dims, terms, extra = _cone_terms(free, 0, n)
    obj = _trace_objective(free, dims, 0, n)
    slack = len(dims)
    dims = dims + [n]
    obj = obj + [None]
    cons = extra + matrix_equality([(slack, identity_map)] + [(b, negated(f)) for b, f in terms], -rho, n)
    sol = solve(SdpProblem(dims, obj, cons))
    if sol.status is not Status.OPTIMAL:
        raise SolverError(sol.status, "generalized robustness")
    return MonotoneValue(max(sol.primal_value - 1, 0.0), "SDP", (None, sol.dual_value - 1), free.label)


def standard_robustness(rho: np.ndarray, free: FreeSetSpec) -> MonotoneValue:
    """``min lambda`` with ``(rho + lambda sigma)/(1 + lambda)`` free and ``sigma`` free.

    Returns ``inf`` when no free mixture exists (e.g. coherent states against the
    diagonal set, whose off-diagonal entries cannot be cancelled).
    """
    rho = _require_state(rho, free)
    n = rho.shape[0]
    dims1, terms1, extra1 = _cone_terms(free, 0, n)
    off = len(dims1)
    dims2, terms2, extra2 = _cone_terms(free, off, n)
    dims = dims1 + dims2
    obj = [None] * len(dims1) + _trace_objective(free, dims2, off, n)
    # (tau - rho) = second cone variable; tau = first cone variable
    cons = extra1 + extra2 + matrix_equality(
        [(b, f) for b, f in terms1] + [(b, negated(f)) for b, f in terms2], rho, n
    )
    sol = solve(SdpProblem(dims, obj, cons))
    if sol.status is Status.INFEASIBLE:
        return MonotoneValue(math.inf, "SDP", None, "no free decomposition")
    if sol.status is not Status.OPTIMAL:
        raise SolverError(sol.status, "standard robustness")
    return MonotoneValue(max(sol.primal_value, 0.0), "SDP", (None, sol.dual_value), free.label)


def free_fidelity(psi: np.ndarray, free: FreeSetSpec) -> MonotoneValue:
    """``max_{sigma in F} <psi|sigma|psi>`` for a pure ``psi``."""
    psi = _require_state(psi, free)
    if not qmath.is_pure(psi):
        raise PreconditionError("free_fidelity expects a pure state")
    if free.kind == "polytope":
        vals = [float(np.real(np.vdot(v, psi))) for v in free.vertices]
        j = int(np.argmax(vals))
        return MonotoneValue(vals[j], "VertexEnum", (free.vertices[j], vals[j]), free.label)
    n = psi.shape[0]
    dims, terms, extra = _cone_terms(free, 0, n)
    # maximize <psi, tau> with tr tau = 1
    obj_coef = {b: -np.asarray(f(psi)) for b, f in terms}
    tr_coef = {b: np.asarray(f(np.eye(n))) for b, f in terms}
    obj = [obj_coef.get(b) for b in range(len(dims))]
    cons = extra + [Constraint(tr_coef, "=", 1.0)]
    sol = solve(SdpProblem(dims, obj, cons))
    if sol.status is not Status.OPTIMAL:
        raise SolverError(sol.status, "free fidelity")
    return MonotoneValue(-sol.primal_value, "SDP", (sol.primal_blocks[0], -sol.dual_value), free.label)


def overlap_range(psi: np.ndarray, free: FreeSetSpec) -> tuple[float, float]:
    """Minimum and maximum of ``<psi|sigma|psi>`` over the free set."""
    hi = free_fidelity(psi, free).value
    if free.kind == "polytope":
        lo = min(float(np.real(np.vdot(v, psi))) for v in free.vertices)
    elif free.kind == "diagonal":
        lo = float(np.min(np.real(np.diag(psi))))
    else:
        n = psi.shape[0]
        dims, terms, extra = _cone_terms(free, 0, n)
        block = terms[0][0]
        obj = [psi if b == block else None for b in range(len(dims))]
        cons = extra + [Constraint({block: np.eye(n)}, "=", 1.0)]
        sol = solve(SdpProblem(dims, obj, cons))
        if sol.status is not Status.OPTIMAL:
            raise SolverError(sol.status, "overlap range")
        lo = sol.primal_value
    return lo, hi


# --- twirling and coincidence ---------------------------------------------------------


@dataclass
class TwirlingSpec:
    """``T(rho) = tr[psi rho] psi + tr[(I - psi) rho] sigma_star``."""

    target: np.ndarray
    residual_free_state: np.ndarray

    def apply(self, rho: np.ndarray) -> np.ndarray:
        f = float(np.real(np.trace(self.target @ rho)))
        return f * self.target + (np.real(np.trace(rho)) - f) * self.residual_free_state

    def is_valid(self, free: FreeSetSpec, tol: float = MEMBERSHIP_TOL) -> bool:
        """The map is free iff the residual state and the image of the best free state are free."""
        if not free.contains(self.residual_free_state, tol):
            return False
        if abs(np.real(np.trace(self.target @ self.residual_free_state))) > tol:
            return False
        ff = free_fidelity(self.target, free).value
        edge = ff * self.target + (1 - ff) * self.residual_free_state
        return free.contains(edge, tol)


def candidate_twirling(target: np.ndarray, free: FreeSetSpec) -> TwirlingSpec | None:
    """The symmetric twirl with residual ``(I - psi)/(D - 1)``, if it is free."""
    d = target.shape[0]
    spec = TwirlingSpec(target, (np.eye(d) - target) / (d - 1))
    return spec if spec.is_valid(free) else None


@dataclass
class CoincidenceReport:
    Fs_inv: float
    Rs_plus_1: float
    Rg_plus_1: float
    constant_overlap: bool
    coincide_s: bool
    coincide_g: bool
    fidelity: float = field(repr=False, default=float("nan"))


def coincidence_check(psi: np.ndarray, m: int, free: FreeSetSpec) -> CoincidenceReport:
    """Compare ``F_F(psi^m)^-1`` with ``R^s + 1`` and ``R^g + 1`` on ``m`` copies.

    ``free`` describes the single-copy space; ``coincide_g`` is the numerical equality
    ``F^-1 == R^g + 1`` alone, and the g-branch additionally needs ``constant_overlap``.
    """
    fm = free.power(m)
    target = tensor_power(qmath.density_matrix(psi), m, free)
    ff = free_fidelity(target, fm).value
    rs = standard_robustness(target, fm).value
    rg = generalized_robustness(target, fm).value
    lo, hi = overlap_range(target, fm)
    fs_inv = 1.0 / ff
    return CoincidenceReport(
        Fs_inv=fs_inv,
        Rs_plus_1=rs + 1,
        Rg_plus_1=rg + 1,
        constant_overlap=abs(hi - lo) <= COINCIDENCE_TOL,
        coincide_s=math.isfinite(rs) and abs(fs_inv - (rs + 1)) <= COINCIDENCE_TOL,
        coincide_g=abs(fs_inv - (rg + 1)) <= COINCIDENCE_TOL,
        fidelity=ff,
    )


# --- theories ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Theory:
    """A resource theory instance: free set on the input, unit target and its free set.

    ``family(p)`` is the noisy input ``p psi_in + (1 - p) I/d`` used in sweeps.
    ``closed_form_assumed`` marks theories where the twirling closed form is used
    without a verified free twirl (labelled in every output).
    """

    name: str
    input_free: FreeSetSpec
    input_pure: np.ndarray
    unit_target: np.ndarray
    target_free: FreeSetSpec
    default_m_max: int = 1
    closed_form_assumed: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def family(self, p: float) -> np.ndarray:
        return qmath.isotropic_state(self.input_pure, p)

    def target(self, m: int) -> np.ndarray:
        return tensor_power(self.unit_target, m, self.target_free)

    def target_free_set(self, m: int) -> FreeSetSpec:
        return self.target_free.power(m)

    def coincidence(self, m: int) -> CoincidenceReport:
        key = ("coincidence", m)
        if key not in self._cache:
            self._cache[key] = coincidence_check(self.unit_target, m, self.target_free)
        return self._cache[key]

    def twirling(self, m: int) -> TwirlingSpec | None:
        key = ("twirling", m)
        if key not in self._cache:
            self._cache[key] = candidate_twirling(self.target(m), self.target_free_set(m))
        return self._cache[key]


def coherence_theory(input_dim: int = 4, unit_dim: int = 2) -> Theory:
    """Coherence under maximally incoherent operations.

    The noisy input is built from the ``input_dim`` maximally coherent state; the
    unit target is the ``unit_dim`` maximally coherent state (a qubit ``|+>`` by
    default, so ``m = 2`` copies match the input dimension).
    """
    return Theory(
        "coherence",
        diagonal_states(input_dim),
        qmath.maximally_coherent(input_dim),
        qmath.maximally_coherent(unit_dim),
        diagonal_states(unit_dim),
        default_m_max=3,
    )


def entanglement_theory() -> Theory:
    return Theory("entanglement", ppt_states(2, 2), qmath.bell_state(), qmath.bell_state(), ppt_states(2, 2))


def magic_theory() -> Theory:
    stab = stabilizer_states(1)
    return Theory("magic", stab, qmath.t_state(), qmath.t_state(), stab, closed_form_assumed=True)


THEORIES = {"coherence": coherence_theory, "entanglement": entanglement_theory, "magic": magic_theory}


def get_theory(name: str) -> Theory:
    try:
        return THEORIES[name]()
    except KeyError:
        raise UnsupportedError(f"unknown theory {name!r}") from None


# --- maximal overlap ---------------------------------------------------------------------


def isotropic_parameter(rho: np.ndarray, psi: np.ndarray, tol: float = 1e-9) -> float | None:
    """``p`` with ``rho = p psi + (1 - p) I/d`` if such a decomposition exists."""
    d = psi.shape[0]
    if rho.shape != psi.shape:
        return None
    f = float(np.real(np.trace(rho @ psi)))
    p = (d * f - 1) / (d - 1)
    resid = np.max(np.abs(rho - (p * psi + (1 - p) * np.eye(d) / d)))
    return p if resid <= tol else None


def max_overlap_fO(rho: np.ndarray, m: int, theory: Theory, assume_twirling: bool = False) -> MonotoneValue:
    """Closed-form ``max_Lambda tr[Lambda(rho) psi^m]`` for isotropic-type inputs.

    For ``rho = p psi^m + (1 - p) I/D`` no free operation raises the target overlap
    above ``max(tr[rho psi^m], F_F(psi^m))``: the first is kept by the identity, the
    second by preparing the best free state. Requires a free twirl for the target
    unless ``assume_twirling`` (or the theory's flag) is set; otherwise use the
    zeta bounds.
    """
    rho = qmath.density_matrix(rho)
    target = theory.target(m)
    assumed = assume_twirling or theory.closed_form_assumed
    if theory.twirling(m) is None and not assumed:
        raise UnsupportedError("no free generalized twirling for this target; use zeta bounds instead")
    if isotropic_parameter(rho, target) is None:
        raise UnsupportedError("closed form only for isotropic-type inputs; use zeta bounds instead")
    ff = theory.coincidence(m).fidelity
    overlap = float(np.real(np.trace(rho @ target)))
    note = "twirling assumed" if theory.twirling(m) is None else ""
    return MonotoneValue(max(overlap, ff), "ClosedForm", None, note)


def max_overlap_sdp(rho: np.ndarray, k: float, free: FreeSetSpec, variant: str = "s") -> MonotoneValue:
    """``max tr[rho Q]`` over ``0 <= Q <= I`` with ``tr[Q sigma] <= 1/k`` on free states.

    Upper bound on the achievable target overlap for target fidelity ``1/k`` (tight
    when a free twirl exists). ``variant="g"`` uses equality on free states.
    """
    rho = _require_state(rho, free)
    n = rho.shape[0]
    blocks, dims, cons = _bounded_q_blocks(n, free, variant, fixed_mu=1.0, k=k)
    obj = [None] * len(dims)
    obj[blocks["Q"]] = -rho
    sol = solve(SdpProblem(dims, obj, cons))
    if sol.status is Status.INFEASIBLE:
        return MonotoneValue(-math.inf, "SDP", None, "infeasible")
    if sol.status is not Status.OPTIMAL:
        raise SolverError(sol.status, "max overlap")
    return MonotoneValue(-sol.primal_value, "SDP", (sol.primal_blocks[blocks["Q"]], -sol.dual_value), free.label)


def _bounded_q_blocks(n, free, variant, k, fixed_mu=None, offset=0):
    """Blocks/constraints for ``0 <= Q <= mu I`` and ``tr[Q sigma] (<= or =) mu/k`` on F.

    With ``fixed_mu`` the scalar is a constant; otherwise a 1x1 block ``mu`` is added.
    Returns ``(index map, dims, constraints)``.
    """
    idx = {"Q": offset, "S": offset + 1}
    dims = [n, n]
    if fixed_mu is None:
        idx["mu"] = offset + len(dims)
        dims.append(1)
    eye = np.eye(n)
    terms = [(idx["Q"], identity_map), (idx["S"], identity_map)]
    if fixed_mu is None:
        terms.append((idx["mu"], lambda B: -np.array([[np.real(np.trace(B))]])))
        cons = matrix_equality(terms, np.zeros((n, n)), n)
    else:
        cons = matrix_equality(terms, fixed_mu * eye, n)
    rel = "=" if variant == "g" else "<="
    if variant not in ("s", "g"):
        raise PreconditionError("variant must be 's' or 'g'")

    def mu_coeffs(scale):
        if fixed_mu is None:
            return {idx["mu"]: np.array([[-scale / k]])}, 0.0
        return {}, fixed_mu * scale / k

    if free.kind in ("diagonal", "polytope"):
        if free.kind == "diagonal":
            sigmas = []
            for i in range(n):
                e = np.zeros((n, n))
                e[i, i] = 1
                sigmas.append(e)
        else:
            sigmas = list(free.vertices)
        for s in sigmas:
            extra, rhs = mu_coeffs(1.0)
            coeffs = {idx["Q"]: np.asarray(s, dtype=complex), **extra}
            cons.append(Constraint(coeffs, rel, rhs))
    elif variant == "g":
        # PPT states span all Hermitian matrices, so tr[Q sigma] constant forces Q = (mu/k) I.
        terms = [(idx["Q"], identity_map)]
        if fixed_mu is None:
            terms.append((idx["mu"], lambda B: -np.array([[np.real(np.trace(B))]]) / k))
            cons += matrix_equality(terms, np.zeros((n, n)), n)
        else:
            cons += matrix_equality(terms, fixed_mu / k * eye, n)
    else:
        # (mu/k) I - Q must lie in the dual cone of PPT states: A + B^{T_B}, A, B >= 0.
        idx["A"] = offset + len(dims)
        idx["B"] = offset + len(dims) + 1
        dims += [n, n]
        pt = _pt(free)
        terms = [(idx["Q"], identity_map), (idx["A"], identity_map), (idx["B"], pt)]
        if fixed_mu is None:
            terms.append((idx["mu"], lambda B: -np.array([[np.real(np.trace(B))]]) / k))
            cons += matrix_equality(terms, np.zeros((n, n)), n)
        else:
            cons += matrix_equality(terms, fixed_mu / k * eye, n)
    return idx, dims, cons
