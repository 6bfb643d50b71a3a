"""Small dense primal-dual interior-point solver for Hermitian SDPs.

Problem form (always a minimization)::

    minimize    sum_b <C_b, X_b> + c_f . x_f
    subject to  sum_b <A_ib, X_b> + f_i . x_f  (=, <=, >=)  b_i
                X_b >= 0 (Hermitian PSD),  x_f free

with ``<A, X> = Re tr(A X)``. Blocks of size 1 are nonnegative scalars. Inequality
rows get a nonnegative slack. Internally the 1x1 blocks and slacks form one
nonnegative-orthant cone; the remaining blocks are complex PSD cones handled
natively with Nesterov-Todd scaling and a Mehrotra predictor-corrector step.
"""

from __future__ import annotations

import contextlib
import enum
import io
import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

FARKAS_TOL = 1e-6  # certified: any feasible point would need trace >= 1/FARKAS_TOL
FARKAS_MIN_OBJ = 1e3


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_FAILURE = "NumericalFailure"


class SolverError(RuntimeError):
    """Raised by callers that need an optimal solution and did not get one."""

    def __init__(self, status: Status, message: str = ""):
        super().__init__(f"{status.value}: {message}" if message else status.value)
        self.status = status


@dataclass
class Constraint:
    coeffs: dict[int, np.ndarray]
    relation: str
    rhs: float
    free_coeffs: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.relation not in ("=", "<=", ">="):
            raise ValueError(f"unknown relation {self.relation!r}")


@dataclass
class SdpProblem:
    block_dims: list[int]
    objective: list[np.ndarray | None]
    constraints: list[Constraint]
    free_scalars: int = 0
    free_objective: np.ndarray | None = None

    def __post_init__(self):
        if not self.block_dims and not self.free_scalars:
            raise ValueError("problem has no variables")
        if len(self.objective) != len(self.block_dims):
            raise ValueError("one objective matrix (or None) per block")
        for b, (n, c) in enumerate(zip(self.block_dims, self.objective)):
            if c is not None:
                _check_coeff(c, n, f"objective block {b}")
        for i, con in enumerate(self.constraints):
            for b, a in con.coeffs.items():
                if not 0 <= b < len(self.block_dims):
                    raise ValueError(f"constraint {i}: bad block index {b}")
                _check_coeff(a, self.block_dims[b], f"constraint {i} block {b}")
            for j in con.free_coeffs:
                if not 0 <= j < self.free_scalars:
                    raise ValueError(f"constraint {i}: bad free scalar index {j}")

    def objective_matrix(self, b: int) -> np.ndarray:
        n = self.block_dims[b]
        c = self.objective[b]
        return np.zeros((n, n), dtype=complex) if c is None else np.asarray(c, dtype=complex)

    def free_cost(self) -> np.ndarray:
        if self.free_objective is None:
            return np.zeros(self.free_scalars)
        return np.asarray(self.free_objective, dtype=float).reshape(self.free_scalars)


def _check_coeff(a: np.ndarray, n: int, what: str) -> None:
    a = np.asarray(a)
    if a.shape != (n, n):
        raise ValueError(f"{what}: shape {a.shape} != ({n}, {n})")
    if np.max(np.abs(a - a.conj().T), initial=0.0) > 1e-12:
        raise ValueError(f"{what}: coefficient matrix is not Hermitian")


@dataclass
class SdpSettings:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.98


@dataclass
class SdpSolution:
    status: Status
    primal_value: float
    dual_value: float
    primal_blocks: list[np.ndarray]
    scalars: np.ndarray
    dual_multipliers: np.ndarray
    dual_blocks: list[np.ndarray]
    iterations: int
    settings: SdpSettings = field(default_factory=SdpSettings)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


# --- compilation into cone form ----------------------------------------------


@dataclass
class _Compiled:
    m: int
    b: np.ndarray
    row_scale: np.ndarray
    psd_blocks: list[int]          # user block index of each PSD cone
    psd_dims: list[int]
    psd_rows: list[np.ndarray]     # constraint rows touching the cone
    psd_A: list[np.ndarray]        # (rows, n, n) complex coefficient stacks
    psd_C: list[np.ndarray]
    lp_A: np.ndarray               # (m, L)
    lp_c: np.ndarray
    lp_owner: list[tuple[str, int]]  # ("block", b) or ("slack", i)
    F: np.ndarray                  # (m, nf)
    c_f: np.ndarray


def _compile(problem: SdpProblem) -> _Compiled:
    m = len(problem.constraints)
    lp_owner: list[tuple[str, int]] = []
    lp_index: dict[int, int] = {}
    psd_blocks = []
    for b, n in enumerate(problem.block_dims):
        if n == 1:
            lp_index[b] = len(lp_owner)
            lp_owner.append(("block", b))
        else:
            psd_blocks.append(b)
    for i, con in enumerate(problem.constraints):
        if con.relation != "=":
            lp_owner.append(("slack", i))
    L = len(lp_owner)
    lp_A = np.zeros((m, L))
    lp_c = np.zeros(L)
    for b, j in lp_index.items():
        lp_c[j] = problem.objective_matrix(b)[0, 0].real
    F = np.zeros((m, problem.free_scalars))
    rhs = np.zeros(m)
    slack_col = {i: j for j, (kind, i) in enumerate(lp_owner) if kind == "slack"}
    rows_of: dict[int, list[int]] = {b: [] for b in psd_blocks}
    for i, con in enumerate(problem.constraints):
        rhs[i] = con.rhs
        for b, a in con.coeffs.items():
            if b in lp_index:
                lp_A[i, lp_index[b]] += np.real(np.asarray(a)[0, 0])
            elif np.any(np.asarray(a) != 0):
                rows_of[b].append(i)
        for j, v in con.free_coeffs.items():
            F[i, j] += v
        if con.relation == "<=":
            lp_A[i, slack_col[i]] = 1.0
        elif con.relation == ">=":
            lp_A[i, slack_col[i]] = -1.0

    psd_rows, psd_A, psd_C, psd_dims = [], [], [], []
    for b in psd_blocks:
        n = problem.block_dims[b]
        rows = np.array(rows_of[b], dtype=int)
        stack = np.zeros((len(rows), n, n), dtype=complex)
        for k, i in enumerate(rows):
            stack[k] = problem.constraints[i].coeffs[b]
        psd_rows.append(rows)
        psd_A.append(stack)
        psd_C.append(problem.objective_matrix(b))
        psd_dims.append(n)

    # Row equilibration.
    sq = lp_A ** 2 @ np.ones(L) + F ** 2 @ np.ones(F.shape[1])
    for rows, stack in zip(psd_rows, psd_A):
        np.add.at(sq, rows, np.sum(np.abs(stack) ** 2, axis=(1, 2)))
    scale = np.sqrt(sq)
    return _Compiled(
        m=m, b=rhs, row_scale=scale, psd_blocks=psd_blocks, psd_dims=psd_dims,
        psd_rows=psd_rows, psd_A=psd_A, psd_C=psd_C, lp_A=lp_A, lp_c=lp_c,
        lp_owner=lp_owner, F=F, c_f=problem.free_cost(),
    )


def _normalize(cp: _Compiled) -> _Compiled:
    s = np.where(cp.row_scale > 0, cp.row_scale, 1.0)
    psd_A = [stack / s[rows][:, None, None] for rows, stack in zip(cp.psd_rows, cp.psd_A)]
    return _Compiled(
        m=cp.m, b=cp.b / s, row_scale=s, psd_blocks=cp.psd_blocks, psd_dims=cp.psd_dims,
        psd_rows=cp.psd_rows, psd_A=psd_A, psd_C=cp.psd_C, lp_A=cp.lp_A / s[:, None],
        lp_c=cp.lp_c, lp_owner=cp.lp_owner, F=cp.F / s[:, None], c_f=cp.c_f,
    )


# --- linear operators ---------------------------------------------------------


def _inner(a: np.ndarray, x: np.ndarray) -> float:
    return float(np.real(np.vdot(a, x)))


def _A(cp: _Compiled, X: list[np.ndarray], x: np.ndarray, xf: np.ndarray) -> np.ndarray:
    out = cp.lp_A @ x + cp.F @ xf
    for rows, stack, Xb in zip(cp.psd_rows, cp.psd_A, X):
        if len(rows):
            out[rows] += np.real(stack.reshape(len(rows), -1).conj() @ Xb.reshape(-1))
    return out


def _At(cp: _Compiled, y: np.ndarray) -> tuple[list[np.ndarray], np.ndarray, np.ndarray]:
    blocks = []
    for rows, stack, n in zip(cp.psd_rows, cp.psd_A, cp.psd_dims):
        if len(rows):
            blocks.append((y[rows] @ stack.reshape(len(rows), -1)).reshape(n, n))
        else:
            blocks.append(np.zeros((n, n), dtype=complex))
    return blocks, cp.lp_A.T @ y, cp.F.T @ y


def _herm(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    """Largest alpha with X + alpha dX still PSD (X positive definite)."""
    L = np.linalg.cholesky(X)
    Li = np.linalg.inv(L)
    lam = np.linalg.eigvalsh(_herm(Li @ dX @ Li.conj().T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _max_step_lp(x: np.ndarray, dx: np.ndarray) -> float:
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


def _solve_kkt(K: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve the symmetric Newton system after diagonal equilibration.

    Near the optimum the Schur complement becomes badly conditioned; a truncated
    least-squares solve replaces the direct one when the latter is unreliable.
    """
    if not (np.all(np.isfinite(K)) and np.all(np.isfinite(rhs))):
        raise np.linalg.LinAlgError("non-finite Newton system")
    d = np.sqrt(np.abs(np.diag(K)))
    d[d < 1e-150] = 1.0
    Ks = K / d[:, None] / d[None, :]
    r = rhs / d
    try:
        u = np.linalg.solve(Ks, r)
        for _ in range(3):  # iterative refinement
            res = r - Ks @ u
            ok = np.all(np.isfinite(u)) and np.linalg.norm(res) <= 1e-12 * (1 + np.linalg.norm(r))
            if ok:
                break
            u = u + np.linalg.solve(Ks, res)
        ok = np.all(np.isfinite(u)) and np.linalg.norm(r - Ks @ u) <= 1e-10 * (1 + np.linalg.norm(r))
    except np.linalg.LinAlgError:
        ok = False
    if not ok:
        u = np.linalg.lstsq(Ks, r, rcond=1e-14)[0]
    return u / d


# --- main solve ---------------------------------------------------------------


_recorders: list[list] = []


@contextlib.contextmanager
def record_solves():
    """Collect ``(problem, solution)`` pairs for every solve made inside the block."""
    store: list = []
    _recorders.append(store)
    try:
        yield store
    finally:
        _recorders.remove(store)


def solve(problem: SdpProblem, settings: SdpSettings | None = None) -> SdpSolution:
    """Solve ``problem``; deterministic for identical inputs.

    Stops with ``Optimal`` once the duality gap, relative to ``max(1, |objective|)``,
    is below ``gap_tol`` and the scaled primal and dual residuals are below
    ``feas_tol``. ``Infeasible`` and ``Unbounded`` are reported when the iterates
    produce a Farkas certificate (see ``FARKAS_TOL``).
    """
    settings = settings or SdpSettings()
    sol = _solve(problem, settings)
    for store in _recorders:
        store.append((problem, sol))
    return sol


def _solve(problem: SdpProblem, settings: SdpSettings) -> SdpSolution:
    raw = _compile(problem)

    # Rows with no coefficients at all are either trivially satisfied or a certificate.
    empty = raw.row_scale == 0
    for i in np.flatnonzero(empty):
        con = problem.constraints[i]
        bad = (
            (con.relation == "=" and abs(con.rhs) > settings.feas_tol)
            or (con.relation == "<=" and con.rhs < -settings.feas_tol)
            or (con.relation == ">=" and con.rhs > settings.feas_tol)
        )
        if bad:
            log.debug("row %d has no coefficients and rhs %g: infeasible", i, con.rhs)
            return _trivial_infeasible(problem, i, settings)
    if np.any(empty):
        keep = [i for i in range(len(problem.constraints)) if not empty[i]]
        reduced = SdpProblem(
            problem.block_dims, problem.objective, [problem.constraints[i] for i in keep],
            problem.free_scalars, problem.free_objective,
        )
        sol = _solve(reduced, settings)
        y = np.zeros(len(problem.constraints))
        y[keep] = sol.dual_multipliers
        sol.dual_multipliers = y
        return sol

    cp = _normalize(raw)
    # Diverging iterates are detected and reported; silence the intermediate overflow noise.
    with np.errstate(over="ignore", invalid="ignore"):
        return _ipm(problem, cp, settings)


def _trivial_infeasible(problem: SdpProblem, row: int, settings: SdpSettings) -> SdpSolution:
    y = np.zeros(len(problem.constraints))
    y[row] = np.sign(problem.constraints[row].rhs) or 1.0
    return SdpSolution(
        Status.INFEASIBLE, np.inf, np.inf,
        [np.zeros((n, n), dtype=complex) for n in problem.block_dims],
        np.zeros(problem.free_scalars), y,
        [np.zeros((n, n), dtype=complex) for n in problem.block_dims], 0, settings,
    )


def _ipm(problem: SdpProblem, cp: _Compiled, settings: SdpSettings) -> SdpSolution:
    m, L, nf = cp.m, cp.lp_A.shape[1], cp.F.shape[1]
    nu = sum(cp.psd_dims) + L
    b = cp.b
    normC = max([np.linalg.norm(c) for c in cp.psd_C] + [np.linalg.norm(cp.lp_c), np.linalg.norm(cp.c_f), 0.0])
    normb = np.linalg.norm(b)
    xi = max(10.0, np.sqrt(nu), float(np.max((1 + np.abs(b)) / 2, initial=1.0)))
    eta = max(10.0, np.sqrt(nu), normC)
    X = [xi * np.eye(n, dtype=complex) for n in cp.psd_dims]
    Z = [eta * np.eye(n, dtype=complex) for n in cp.psd_dims]
    x = np.full(L, xi)
    z = np.full(L, eta)
    xf = np.zeros(nf)
    y = np.zeros(m)
    frac = settings.step_fraction
    status = Status.NUMERICAL_FAILURE
    best = None
    it = 0

    for it in range(1, settings.max_iter + 1):
        AX = _A(cp, X, x, xf)
        rp = b - AX
        Aty, Atyl, Atyf = _At(cp, y)
        Rd = [C - Ay - Zb for C, Ay, Zb in zip(cp.psd_C, Aty, Z)]
        rdl = cp.lp_c - Atyl - z
        rdf = cp.c_f - Atyf
        pobj = sum(_inner(C, Xb) for C, Xb in zip(cp.psd_C, X)) + cp.lp_c @ x + cp.c_f @ xf
        dobj = float(b @ y)
        comp = sum(_inner(Xb, Zb) for Xb, Zb in zip(X, Z)) + x @ z
        mu = comp / nu if nu else 0.0

        pinf = np.linalg.norm(rp * cp.row_scale) / (1 + normb)
        dinf = np.sqrt(sum(np.linalg.norm(r) ** 2 for r in Rd) + rdl @ rdl + rdf @ rdf) / (1 + normC)
        gap = abs(pobj - dobj) / max(1.0, abs(pobj), abs(dobj))
        log.debug("it %3d pobj %.12g dobj %.12g pinf %.2e dinf %.2e mu %.2e", it, pobj, dobj, pinf, dinf, mu)
        # Iterate to 10x the requested accuracy; fall back to the requested one on a stall.
        loose = pinf <= settings.feas_tol and dinf <= settings.feas_tol and gap <= settings.gap_tol
        if loose:
            best = (X, x, xf, y, Z, z)
        if loose and pinf <= 0.1 * settings.feas_tol and dinf <= 0.1 * settings.feas_tol and gap <= 0.1 * settings.gap_tol:
            status = Status.OPTIMAL
            break

        cert = _infeasibility(cp, X, x, xf, y, pobj, dobj, settings)
        if cert is not None:
            status = cert
            break

        # Nesterov-Todd scaling per PSD cone: W = G G^H, G^-1 X G^-H = G^H Z G = diag(d).
        try:
            scal = []
            for Xb, Zb in zip(X, Z):
                Lx = np.linalg.cholesky(Xb)
                d2, U = np.linalg.eigh(_herm(Lx.conj().T @ Zb @ Lx))
                d = np.sqrt(np.clip(d2, 1e-300, None))
                G = (Lx @ U) / np.sqrt(d)
                Ginv = (np.sqrt(d)[:, None] * (U.conj().T @ np.linalg.inv(Lx)))
                W = G @ G.conj().T
                scal.append((G, Ginv, d, W))
        except np.linalg.LinAlgError:
            log.debug("scaling failed at iteration %d", it)
            break

        M = np.zeros((m, m))
        for (G, Ginv, d, W), rows, stack in zip(scal, cp.psd_rows, cp.psd_A):
            r = len(rows)
            if not r:
                continue
            WAW = W @ stack @ W
            M[np.ix_(rows, rows)] += np.real(stack.reshape(r, -1).conj() @ WAW.reshape(r, -1).T)
        wl = x / z
        M += (cp.lp_A * wl) @ cp.lp_A.T
        M = (M + M.T) / 2
        K = np.block([[M, cp.F], [cp.F.T, np.zeros((nf, nf))]]) if nf else M

        def direction(Rc, rc):
            # Dx + W Dz W = Rc, dx + wl dz = rc, plus the two residual equations.
            rhs = rp.copy()
            for (G, Ginv, d, W), rows, stack, R, Rcb in zip(scal, cp.psd_rows, cp.psd_A, Rd, Rc):
                if len(rows):
                    T = Rcb - W @ R @ W
                    rhs[rows] -= np.real(stack.reshape(len(rows), -1).conj() @ T.reshape(-1))
            rhs -= cp.lp_A @ (rc - wl * rdl)
            full = np.concatenate([rhs, rdf]) if nf else rhs
            sol = _solve_kkt(K, full)
            dy = sol[:m]
            dxf = sol[m:]
            Aty_, Atyl_, _ = _At(cp, dy)
            dZ = [_herm(R - A_) for R, A_ in zip(Rd, Aty_)]
            dX = [_herm(Rcb - W @ dZb @ W) for (G, Ginv, d, W), Rcb, dZb in zip(scal, Rc, dZ)]
            dz = rdl - Atyl_
            dx = rc - wl * dz
            return dX, dx, dxf, dy, dZ, dz

        def steps(dX, dx, dZ, dz):
            ap = min([_max_step(Xb, D) for Xb, D in zip(X, dX)] + [_max_step_lp(x, dx), np.inf])
            ad = min([_max_step(Zb, D) for Zb, D in zip(Z, dZ)] + [_max_step_lp(z, dz), np.inf])
            return min(1.0, frac * ap), min(1.0, frac * ad)

        try:
            # Predictor.
            Rc_aff = [-Xb for Xb in X]
            rc_aff = -x
            dXa, dxa, _, _, dZa, dza = direction(Rc_aff, rc_aff)
            ap, ad = steps(dXa, dxa, dZa, dza)
            comp_aff = sum(_inner(Xb + ap * D1, Zb + ad * D2) for Xb, D1, Zb, D2 in zip(X, dXa, Z, dZa))
            comp_aff += (x + ap * dxa) @ (z + ad * dza)
            sigma = min(1.0, max(0.0, comp_aff / comp)) ** 3 if comp > 0 else 0.0
            target = sigma * mu

            # Corrector in the scaled space, where X and Z both become diag(d).
            Rc = []
            for (G, Ginv, d, W), D1, D2 in zip(scal, dXa, dZa):
                Xs = Ginv @ D1 @ Ginv.conj().T
                Zs = G.conj().T @ D2 @ G
                H = Xs @ Zs
                H = H + H.conj().T
                rhs = -H
                rhs[np.diag_indices_from(rhs)] += 2 * (target - d ** 2)
                Rt = rhs / (d[:, None] + d[None, :])
                Rc.append(_herm(G @ Rt @ G.conj().T))
            rc = (target - x * z - dxa * dza) / z
            dX, dx, dxf, dy, dZ, dz = direction(Rc, rc)
            ap, ad = steps(dX, dx, dZ, dz)
        except np.linalg.LinAlgError:
            log.debug("direction failed at iteration %d", it)
            break

        X = [_herm(Xb + ap * D) for Xb, D in zip(X, dX)]
        x = x + ap * dx
        xf = xf + ap * dxf
        y = y + ad * dy
        Z = [_herm(Zb + ad * D) for Zb, D in zip(Z, dZ)]
        z = z + ad * dz
        if max(ap, ad) < 1e-12:
            log.debug("stalled at iteration %d", it)
            break

    if status is Status.NUMERICAL_FAILURE and best is not None:
        status = Status.OPTIMAL
        X, x, xf, y, Z, z = best
    return _package(problem, cp, status, X, x, xf, y, Z, z, it, settings)


def _infeasibility(cp, X, x, xf, y, pobj, dobj, settings) -> Status | None:
    """Farkas-type certificates read off the current iterate.

    With ``b.y = 1`` and ``A^*(y) <= viol * I`` every feasible point would need
    trace at least ``1/viol``; ``viol <= FARKAS_TOL`` is reported as infeasible.
    The unbounded test is the analogous primal ray with ``<C, X> = -1``.
    """
    if dobj > FARKAS_MIN_OBJ:
        yc = y / dobj
        Aty, Atyl, Atyf = _At(cp, yc)
        viol = max(
            [np.linalg.eigvalsh(_herm(B))[-1] for B in Aty if B.size]
            + [float(np.max(Atyl, initial=-np.inf)), float(np.max(np.abs(Atyf), initial=0.0)), -np.inf]
        )
        if viol <= FARKAS_TOL:
            return Status.INFEASIBLE
    if pobj < -FARKAS_MIN_OBJ:
        s = -pobj
        res = _A(cp, [Xb / s for Xb in X], x / s, xf / s)
        if np.linalg.norm(res) <= FARKAS_TOL:
            return Status.UNBOUNDED
    return None


def _package(problem, cp, status, X, x, xf, y, Z, z, it, settings) -> SdpSolution:
    n_blocks = len(problem.block_dims)
    blocks: list[np.ndarray] = [None] * n_blocks  # type: ignore[list-item]
    dblocks: list[np.ndarray] = [None] * n_blocks  # type: ignore[list-item]
    for k, bidx in enumerate(cp.psd_blocks):
        blocks[bidx] = X[k]
        dblocks[bidx] = Z[k]
    for j, (kind, idx) in enumerate(cp.lp_owner):
        if kind == "block":
            blocks[idx] = np.array([[x[j]]], dtype=complex)
            dblocks[idx] = np.array([[z[j]]], dtype=complex)
    y_orig = y / cp.row_scale
    if status is Status.OPTIMAL:
        pval = sum(_inner(problem.objective_matrix(b), blocks[b]) for b in range(n_blocks)) + problem.free_cost() @ xf
        dval = float(np.array([c.rhs for c in problem.constraints]) @ y_orig) if problem.constraints else 0.0
    elif status is Status.INFEASIBLE:
        pval, dval = np.inf, np.inf
    elif status is Status.UNBOUNDED:
        pval, dval = -np.inf, -np.inf
    else:
        pval, dval = np.nan, np.nan
    return SdpSolution(status, float(pval), float(dval), blocks, xf.copy(), y_orig, dblocks, it, settings)


# --- certificate checking -----------------------------------------------------


@dataclass
class CertificateReport:
    primal_residual: float
    dual_residual: float
    gap: float
    psd_margins: dict[str, float]
    accepted: bool


def verify_certificate(problem: SdpProblem, solution: SdpSolution) -> CertificateReport:
    """Recompute residuals of an optimal solution from the raw problem data.

    Accepted iff residuals and the gap (relative to ``max(1, |objective|)``) are
    within 10x the solver tolerances and every
    primal block and recomputed dual slack ``C - A^*(y)`` is PSD within that margin.
    """
    X = solution.primal_blocks
    y = solution.dual_multipliers
    xf = solution.scalars
    prim = 0.0
    dual = 0.0
    Z = [problem.objective_matrix(b).copy() for b in range(len(problem.block_dims))]
    free_grad = problem.free_cost().copy()
    for i, con in enumerate(problem.constraints):
        lhs = sum(_inner(a, X[b]) for b, a in con.coeffs.items())
        lhs += sum(v * xf[j] for j, v in con.free_coeffs.items())
        if con.relation == "=":
            prim = max(prim, abs(lhs - con.rhs))
        elif con.relation == "<=":
            prim = max(prim, lhs - con.rhs)
            dual = max(dual, y[i])
        else:
            prim = max(prim, con.rhs - lhs)
            dual = max(dual, -y[i])
        for b, a in con.coeffs.items():
            Z[b] = Z[b] - y[i] * np.asarray(a)
        for j, v in con.free_coeffs.items():
            free_grad[j] -= y[i] * v
    dual = max(dual, float(np.max(np.abs(free_grad), initial=0.0)))
    margins = {}
    for b in range(len(problem.block_dims)):
        margins[f"X{b}"] = float(np.linalg.eigvalsh(_herm(X[b]))[0])
        margins[f"Z{b}"] = float(np.linalg.eigvalsh(_herm(Z[b]))[0])
    pobj = sum(_inner(problem.objective_matrix(b), X[b]) for b in range(len(X))) + problem.free_cost() @ xf
    dobj = sum(c.rhs * y[i] for i, c in enumerate(problem.constraints))
    gap = abs(pobj - dobj)
    s = solution.settings
    ok = (
        prim <= 10 * s.feas_tol
        and dual <= 10 * s.feas_tol
        and gap <= 10 * s.gap_tol * max(1.0, abs(pobj), abs(dobj))
        and min(margins.values(), default=0.0) >= -10 * s.feas_tol
    )
    return CertificateReport(float(prim), float(dual), float(gap), margins, bool(ok))


# --- building blocks for formulations -------------------------------------------


def hermitian_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis of n x n Hermitian matrices under ``Re tr(A B)``."""
    basis = []
    for j in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[j, j] = 1
        basis.append(e)
    r = 1 / np.sqrt(2)
    for j in range(n):
        for k in range(j + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[j, k] = e[k, j] = r
            basis.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[j, k] = 1j * r
            e[k, j] = -1j * r
            basis.append(e)
    return basis


def matrix_equality(terms, constant: np.ndarray, n: int) -> list[Constraint]:
    """Constraints enforcing ``sum_t L_t(X_t) = constant`` for Hermitian n x n values.

    ``terms`` is a list of ``(block, adjoint)`` where ``adjoint(B)`` returns the
    coefficient matrix of that block for basis element ``B``; i.e. the adjoint of
    the linear map applied to the block.
    """
    out = []
    for B in hermitian_basis(n):
        coeffs: dict[int, np.ndarray] = {}
        for block, adjoint in terms:
            a = np.asarray(adjoint(B), dtype=complex)
            coeffs[block] = coeffs[block] + a if block in coeffs else a
        out.append(Constraint(coeffs, "=", _inner(B, constant)))
    return out


def scalar_times(matrix: np.ndarray):
    """Adjoint for a 1x1 block multiplying a fixed matrix: ``B -> [[<B, matrix>]]``."""
    matrix = np.asarray(matrix, dtype=complex)
    return lambda B: np.array([[_inner(B, matrix)]])


def identity_map(B: np.ndarray) -> np.ndarray:
    return B


def negated(adjoint):
    return lambda B: -np.asarray(adjoint(B))


# --- plain-text dump ------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v) + 0.0, ".17g")  # + 0.0 folds -0 into 0


def dump_problem(problem: SdpProblem) -> str:
    """Serialize ``problem`` as a plain-text block listing.

    Layout::

        sdp-dump 1
        blocks <count> <dim_1> ... <dim_k>
        free <count>
        objective <nnz>
        <block> <row> <col> <re> <im>      # one line per nonzero, upper triangle
        free_objective <f_1> ... <f_count>
        constraints <count>
        constraint <relation> <rhs> <nnz> <nfree>
        <block> <row> <col> <re> <im>
        f <index> <value>

    Numbers use 17 significant digits so values round-trip exactly.
    """
    out = io.StringIO()
    out.write("sdp-dump 1\n")
    out.write("blocks " + " ".join(str(v) for v in [len(problem.block_dims), *problem.block_dims]) + "\n")
    out.write(f"free {problem.free_scalars}\n")

    def entries(mats: dict[int, np.ndarray]):
        lines = []
        for b, a in sorted(mats.items()):
            a = np.asarray(a, dtype=complex)
            for i, j in zip(*np.triu_indices(a.shape[0])):
                if a[i, j] != 0:
                    lines.append(f"{b} {i} {j} {_fmt(a[i, j].real)} {_fmt(a[i, j].imag)}")
        return lines

    obj = entries({b: c for b, c in enumerate(problem.objective) if c is not None})
    out.write(f"objective {len(obj)}\n")
    out.writelines(line + "\n" for line in obj)
    out.write("free_objective " + " ".join(_fmt(v) for v in problem.free_cost()) + "\n")
    out.write(f"constraints {len(problem.constraints)}\n")
    for con in problem.constraints:
        ent = entries(con.coeffs)
        out.write(f"constraint {con.relation} {_fmt(con.rhs)} {len(ent)} {len(con.free_coeffs)}\n")
        out.writelines(line + "\n" for line in ent)
        for j, v in sorted(con.free_coeffs.items()):
            out.write(f"f {j} {_fmt(v)}\n")
    return out.getvalue()


def load_problem(text: str) -> SdpProblem:
    lines = iter(line.split() for line in text.splitlines() if line.strip())
    head = next(lines)
    if head[:2] != ["sdp-dump", "1"]:
        raise ValueError("not an sdp-dump v1 file")
    tok = next(lines)
    dims = [int(v) for v in tok[2:]]
    nfree = int(next(lines)[1])

    def read_entries(count: int) -> dict[int, np.ndarray]:
        mats: dict[int, np.ndarray] = {}
        for _ in range(count):
            b, i, j, re, im = next(lines)
            b, i, j = int(b), int(i), int(j)
            a = mats.setdefault(b, np.zeros((dims[b], dims[b]), dtype=complex))
            a[i, j] = complex(float(re), float(im))
            a[j, i] = np.conj(a[i, j])
        return mats

    obj = read_entries(int(next(lines)[1]))
    fobj = np.array([float(v) for v in next(lines)[1:]])
    cons = []
    for _ in range(int(next(lines)[1])):
        _, rel, rhs, nnz, nf = next(lines)
        coeffs = read_entries(int(nnz))
        free = {}
        for _ in range(int(nf)):
            _, j, v = next(lines)
            free[int(j)] = float(v)
        cons.append(Constraint(coeffs, rel, float(rhs), free))
    return SdpProblem(dims, [obj.get(b) for b in range(len(dims))], cons, nfree, fobj if nfree else None)
