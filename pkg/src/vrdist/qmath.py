"""Dense Hermitian linear algebra and state/channel primitives.

Matrices are plain ``numpy`` complex arrays. Validation helpers
(:func:`density_matrix`, :class:`QuantumChannel`, :class:`Observable`) check the
usual invariants at construction and leave the data as ndarrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10


class PreconditionError(ValueError):
    """An input violates the documented precondition of an operation."""


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return the Hermitian part ``(A + A^dagger) / 2``."""
    a = np.asarray(a, dtype=complex)
    return (a + a.conj().T) / 2


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.max(np.abs(a - a.conj().T), initial=0.0) <= tol


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; row index of the result is ``i_a * rows_b + i_b``."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_power(a: np.ndarray, m: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(m):
        out = kron(out, a)
    return out


def _jacobi_sweeps(a: np.ndarray, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    # Cyclic complex Jacobi. Each rotation zeroes a[p, q] after removing its phase.
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2 * r)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                u = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ u
                a[idx, :] = u.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ u
    return np.real(np.diag(a)).copy(), v


def hermitian_eig(a: np.ndarray, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, V)`` with ``w`` sorted descending and ``A = V diag(w) V^dagger``.
    Raises :class:`PreconditionError` when ``a`` is not Hermitian within ``tol``.
    """
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a, tol):
        raise PreconditionError("hermitian_eig: input is not Hermitian")
    w, v = _jacobi_sweeps(symmetrize(a))
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = hermitian_eig(symmetrize(a), tol=1e-8)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def sqrtm_psd(a: np.ndarray) -> np.ndarray:
    """Square root of a PSD matrix; negative round-off eigenvalues are clamped to 0."""
    return _psd_sqrt(a)


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values (sum of |eigenvalues| for Hermitian input)."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PreconditionError("trace_norm: matrix must be square")
    if is_hermitian(a, 1e-12):
        w, _ = hermitian_eig(a, tol=1e-12)
        return float(np.sum(np.abs(w)))
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return 0.5 * trace_norm(np.asarray(rho) - np.asarray(sigma))


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Squared Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise PreconditionError("fidelity: dimension mismatch")
    s = _psd_sqrt(rho)
    inner = symmetrize(s @ sigma @ s)
    w, _ = hermitian_eig(inner, tol=1e-8)
    val = float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
    return min(max(val, 0.0), 1.0)


def density_matrix(a: np.ndarray) -> np.ndarray:
    """Validate and symmetrize a density matrix.

    Checks Hermiticity (1e-12 max-abs), unit trace (1e-10) and PSD (min eigenvalue
    >= -1e-10); returns ``(A + A^dagger)/2`` as a complex array.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PreconditionError("density matrix must be square")
    if not is_hermitian(a, 1e-12):
        raise PreconditionError("density matrix is not Hermitian")
    a = symmetrize(a)
    if abs(np.trace(a).real - 1) > TRACE_TOL:
        raise PreconditionError(f"density matrix trace {np.trace(a).real!r} != 1")
    if np.linalg.eigvalsh(a)[0] < -PSD_TOL:
        raise PreconditionError("density matrix is not positive semidefinite")
    return a


def pure_state(vec: Sequence[complex]) -> np.ndarray:
    """Projector onto the normalized vector ``vec``."""
    v = np.asarray(vec, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def is_pure(rho: np.ndarray, tol: float = 1e-9) -> bool:
    w = np.linalg.eigvalsh(symmetrize(rho))
    return abs(w[-1] - 1.0) <= tol and abs(np.sum(w[:-1])) <= tol


def partial_transpose(rho: np.ndarray, dims: tuple[int, int], subsystem: str = "B") -> np.ndarray:
    """Partial transpose on tensor factor ``"A"`` or ``"B"`` of a ``dA*dB`` matrix."""
    rho = np.asarray(rho)
    da, db = dims
    if rho.shape != (da * db, da * db):
        raise PreconditionError(f"partial_transpose: dims {dims} do not factor shape {rho.shape}")
    t = rho.reshape(da, db, da, db)
    if subsystem == "B":
        t = t.transpose(0, 3, 2, 1)
    elif subsystem == "A":
        t = t.transpose(2, 1, 0, 3)
    else:
        raise PreconditionError("subsystem must be 'A' or 'B'")
    return t.reshape(da * db, da * db)


def isotropic_state(psi: np.ndarray, p: float) -> np.ndarray:
    """``p psi + (1-p) I/d`` for a pure ``psi``."""
    if not 0.0 <= p <= 1.0:
        raise PreconditionError(f"isotropic_state: p={p} outside [0, 1]")
    psi = np.asarray(psi, dtype=complex)
    if not is_pure(psi):
        raise PreconditionError("isotropic_state: psi must be pure")
    d = psi.shape[0]
    return p * psi + (1 - p) * np.eye(d) / d


@dataclass(frozen=True)
class QuantumChannel:
    """CPTP map in Kraus form; each operator is ``dim_out x dim_in``."""

    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise PreconditionError("channel needs at least one Kraus operator")
        shape = ks[0].shape
        if any(k.shape != shape for k in ks):
            raise PreconditionError("Kraus operators must share a shape")
        tp = sum(k.conj().T @ k for k in ks)
        if np.max(np.abs(tp - np.eye(shape[1]))) > 1e-10:
            raise PreconditionError("channel is not trace preserving")
        object.__setattr__(self, "kraus", ks)

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply_channel(self, rho)


def apply_channel(ch: QuantumChannel, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ch.dim_in, ch.dim_in):
        raise PreconditionError(f"apply_channel: state shape {rho.shape} vs channel input {ch.dim_in}")
    out = sum(k @ rho @ k.conj().T for k in ch.kraus)
    return symmetrize(out)


def identity_channel(d: int) -> QuantumChannel:
    return QuantumChannel((np.eye(d),))


def replacement_channel(sigma: np.ndarray, d_in: int) -> QuantumChannel:
    """Channel discarding its input and preparing ``sigma``."""
    sigma = density_matrix(sigma)
    w, v = np.linalg.eigh(sigma)
    kraus = []
    for s, vec in zip(w, v.T):
        if s <= 1e-15:
            continue
        for j in range(d_in):
            k = np.zeros((sigma.shape[0], d_in), dtype=complex)
            k[:, j] = np.sqrt(s) * vec
            kraus.append(k)
    return QuantumChannel(tuple(kraus))


def depolarizing_channel(d: int) -> QuantumChannel:
    """Fully depolarizing channel ``rho -> I/d``."""
    return replacement_channel(np.eye(d) / d, d)


def unitary_channel(u: np.ndarray) -> QuantumChannel:
    return QuantumChannel((np.asarray(u, dtype=complex),))


@dataclass(frozen=True)
class Observable:
    """Hermitian effect ``0 <= M <= I`` with a cached eigen-decomposition."""

    matrix: np.ndarray
    eigenvalues: np.ndarray = field(init=False, repr=False, compare=False)
    eigenvectors: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if not is_hermitian(m, 1e-10):
            raise PreconditionError("observable must be Hermitian")
        m = symmetrize(m)
        w, v = np.linalg.eigh(m)
        if w[0] < -1e-10 or w[-1] > 1 + 1e-10:
            raise PreconditionError("observable spectrum must lie in [0, 1]")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "eigenvalues", np.clip(w, 0.0, 1.0))
        object.__setattr__(self, "eigenvectors", v)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expectation(self, rho: np.ndarray) -> float:
        return float(np.real(np.trace(self.matrix @ rho)))

    def born_probabilities(self, rho: np.ndarray) -> np.ndarray:
        v = self.eigenvectors
        probs = np.real(np.einsum("ji,jk,ki->i", v.conj(), rho, v))
        probs = np.clip(probs, 0.0, None)
        return probs / probs.sum()


# Frequently used states.

def maximally_coherent(d: int) -> np.ndarray:
    return pure_state(np.ones(d))


def bell_state() -> np.ndarray:
    return pure_state([1, 0, 0, 1])


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def t_state() -> np.ndarray:
    """Magic state ``(I + (X + Y)/sqrt 2)/2``."""
    return (np.eye(2) + (PAULI_X + PAULI_Y) / np.sqrt(2)) / 2


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-induced random state."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return symmetrize(rho / np.trace(rho).real)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_channel(d_in: int, d_out: int, n_kraus: int, rng: np.random.Generator) -> QuantumChannel:
    """Random channel from an isometry sliced into Kraus operators."""
    if d_out * n_kraus < d_in:
        raise PreconditionError("random_channel: need d_out * n_kraus >= d_in")
    g = rng.normal(size=(d_out * n_kraus, d_in)) + 1j * rng.normal(size=(d_out * n_kraus, d_in))
    q, _ = np.linalg.qr(g)
    blocks = q.reshape(n_kraus, d_out, d_in)
    return QuantumChannel(tuple(blocks))
