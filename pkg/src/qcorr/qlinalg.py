"""Dense linear algebra for finite-dimensional quantum states.

Everything here works on plain ``numpy`` arrays; :class:`DensityMatrix`
is a thin validated wrapper that also carries the subsystem split.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
DEGENERACY_GAP = 1e-9
MAX_TOTAL_DIM = 81

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SX, SY, SZ)

SeedLike = Union[int, None, np.random.Generator]


class StateValidationError(ValueError):
    """Raised when a matrix fails one or more density-matrix invariants.

    ``failures`` names every invariant that failed, so callers (and the JSON
    loader) can report all of them at once.
    """

    def __init__(self, failures: Sequence[str]):
        self.failures = list(failures)
        super().__init__("invalid density matrix: " + "; ".join(self.failures))


def rng_from(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def as_complex_matrix(m) -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    arr = np.array(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def density_failures(m: np.ndarray, dims: Sequence[int]) -> list[str]:
    """List the density-matrix invariants violated by ``m``."""
    failures = []
    d = int(np.prod(dims)) if len(dims) else 0
    if any(int(x) < 2 for x in dims) or len(dims) == 0:
        failures.append(f"subsystem dimensions must each be >= 2, got {list(dims)}")
    if m.shape != (d, d):
        failures.append(f"shape {m.shape} does not match dims {list(dims)}")
        return failures
    if not np.all(np.isfinite(m)):
        failures.append("non-finite entries")
        return failures
    herm_dev = float(np.max(np.abs(m - m.conj().T)))
    if herm_dev > HERMITIAN_TOL:
        failures.append(f"not Hermitian (max deviation {herm_dev:.3e})")
    tr = np.trace(m)
    if abs(tr - 1.0) > TRACE_TOL:
        failures.append(f"trace {tr.real:.12g}{tr.imag:+.3e}j != 1")
    if herm_dev <= HERMITIAN_TOL:
        lmin = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
        if lmin < -PSD_TOL:
            failures.append(f"not positive semidefinite (min eigenvalue {lmin:.3e})")
    return failures


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated quantum state with an ordered subsystem split.

    Parameters
    ----------
    matrix : array_like
        ``d x d`` complex matrix, ``d = prod(dims)``.
    dims : sequence of int
        Subsystem dimensions, each at least 2.
    validate : bool
        Skip validation only for matrices produced internally by
        operations that preserve the invariants.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        dims = tuple(int(x) for x in self.dims)
        if self.validate:
            failures = density_failures(m, dims)
            if failures:
                raise StateValidationError(failures)
            if int(np.prod(dims)) > MAX_TOTAL_DIM:
                raise ValueError(f"total dimension {int(np.prod(dims))} exceeds {MAX_TOTAL_DIM}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def evolve(self, u: np.ndarray) -> "DensityMatrix":
        """Return ``u rho u^dagger`` (``u`` assumed unitary)."""
        return DensityMatrix(u @ self.matrix @ u.conj().T, self.dims, validate=False)

    def mix(self, other: "DensityMatrix", eps: float) -> "DensityMatrix":
        """Return ``(1 - eps) rho + eps other``."""
        if other.dims != self.dims:
            raise ValueError("dims mismatch")
        return DensityMatrix((1 - eps) * self.matrix + eps * other.matrix, self.dims, validate=False)

    def allclose(self, other: "DensityMatrix", atol: float = 1e-10) -> bool:
        return self.dims == other.dims and np.allclose(self.matrix, other.matrix, atol=atol, rtol=0)


def _raw(x):
    return x.matrix if isinstance(x, DensityMatrix) else as_complex_matrix(x)


def tensor(a, b):
    """Kronecker product; for density matrices the dims are concatenated."""
    out = np.kron(_raw(a), _raw(b))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(out, a.dims + b.dims, validate=False)
    return out


def tensor_all(items):
    it = iter(items)
    out = next(it)
    for x in it:
        out = tensor(out, x)
    return out


def partial_trace_array(m: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a raw array, keeping subsystems ``keep`` in order.

    Leading batch axes are allowed: ``m`` may have shape ``(..., d, d)``.
    """
    dims = list(dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep or any(k < 0 or k >= n for k in keep):
        raise ValueError(f"invalid subsystem selection {keep} for {n} subsystems")
    if len(keep) == n:
        return m
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    batch = m.shape[:-2]
    t = m.reshape(batch + tuple(dims + dims))
    dk = int(np.prod([dims[i] for i in keep]))
    return np.einsum("..." + "".join(row) + "".join(col) + "->..." + out, t).reshape(batch + (dk, dk))


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state on the subsystems in ``keep``."""
    keep_sorted = sorted(set(int(k) for k in keep))
    red = partial_trace_array(rho.matrix, rho.dims, keep_sorted)
    return DensityMatrix(red, tuple(rho.dims[i] for i in keep_sorted), validate=False)


def marginals(rho: DensityMatrix) -> list[DensityMatrix]:
    return [partial_trace(rho, [i]) for i in range(rho.n_parties)]


def marginal_product(rho: DensityMatrix) -> DensityMatrix:
    """The product of single-subsystem marginals, ``pi_rho``."""
    return tensor_all(marginals(rho))


def _canonical_cluster(vecs: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the span of ``vecs``' columns.

    Computational basis vectors are projected into the subspace and
    Gram-Schmidt orthonormalised, so the result depends only on the subspace.
    """
    d, k = vecs.shape
    proj = vecs @ vecs.conj().T
    basis: list[np.ndarray] = []
    cands = [proj[:, j] for j in range(d)]
    # largest projections first keeps the procedure well conditioned
    order = sorted(range(d), key=lambda j: (-round(float(np.real(proj[j, j])), 9), j))
    for j in order:
        v = cands[j].copy()
        for b in basis:
            v = v - (b.conj() @ v) * b
        nrm = np.linalg.norm(v)
        if nrm > 1e-6:
            basis.append(v / nrm)
        if len(basis) == k:
            break
    out = []
    for v in basis:
        idx = int(np.argmax(np.abs(v) > 1e-9))
        v = v * (abs(v[idx]) / v[idx])
        out.append(v)
    out.sort(key=lambda v: tuple(-np.round(np.abs(v), 9)) + tuple(np.round(np.angle(v), 9)))
    return np.array(out).T


def eig_hermitian(m, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with nonincreasing eigenvalues.

    Eigenvectors are returned as columns. Within a cluster of eigenvalues
    closer than ``DEGENERACY_GAP`` the basis is made canonical (see
    :func:`_canonical_cluster`) so degenerate spectra give reproducible bases.
    """
    m = as_complex_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    dev = float(np.max(np.abs(m - m.conj().T)))
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian (deviation {dev:.3e})")
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    i = 0
    d = len(w)
    while i < d:
        j = i + 1
        while j < d and w[j - 1] - w[j] < DEGENERACY_GAP:
            j += 1
        if j - i > 1:
            v[:, i:j] = _canonical_cluster(v[:, i:j])
        else:
            col = v[:, i]
            idx = int(np.argmax(np.abs(col) > 1e-9))
            v[:, i] = col * (abs(col[idx]) / col[idx])
        i = j
    return w, v


def degenerate_clusters(values: np.ndarray, gap: float = DEGENERACY_GAP) -> list[list[int]]:
    """Group indices of a sorted spectrum into clusters of near-equal values."""
    clusters = [[0]]
    for i in range(1, len(values)):
        if abs(values[i - 1] - values[i]) < gap:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


def random_unitary(d: int, seed: SeedLike = None) -> np.ndarray:
    """Haar-random ``d x d`` unitary (QR of a Ginibre matrix, phases fixed)."""
    rng = rng_from(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(dims: Sequence[int], rank: int | None = None, seed: SeedLike = None) -> DensityMatrix:
    """Ginibre-ensemble mixed state ``G G^dagger / tr(G G^dagger)``."""
    rng = rng_from(seed)
    dims = tuple(int(x) for x in dims)
    d = int(np.prod(dims))
    rank = d if rank is None else int(rank)
    if not 1 <= rank <= d:
        raise ValueError(f"rank must be in [1, {d}], got {rank}")
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    m = g @ g.conj().T
    m = m / np.real(np.trace(m))
    return DensityMatrix(0.5 * (m + m.conj().T), dims)


def random_pure(dims: Sequence[int], seed: SeedLike = None) -> DensityMatrix:
    return random_density(dims, rank=1, seed=seed)


def random_local_unitary(dims: Sequence[int], seed: SeedLike = None) -> np.ndarray:
    """Tensor product of independent Haar unitaries, one per subsystem."""
    rng = rng_from(seed)
    return tensor_all([random_unitary(int(d), rng) for d in dims])


def random_product(dims: Sequence[int], seed: SeedLike = None, rank: int | None = None) -> DensityMatrix:
    rng = rng_from(seed)
    parts = [random_density([d], rank=min(rank, d) if rank else None, seed=rng) for d in dims]
    return tensor_all(parts)


def pure_state(psi: Sequence[complex], dims: Sequence[int]) -> DensityMatrix:
    v = np.asarray(psi, dtype=complex)
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()), dims)


def swap_parties(rho: DensityMatrix) -> DensityMatrix:
    """Exchange the two parties of a bipartite state."""
    if rho.n_parties != 2:
        raise ValueError("swap_parties needs a bipartite state")
    da, db = rho.dims
    t = rho.matrix.reshape(da, db, da, db).transpose(1, 0, 3, 2).reshape(da * db, da * db)
    return DensityMatrix(t, (db, da), validate=False)


@dataclass(frozen=True)
class SchmidtVector:
    """Schmidt coefficients (nonincreasing, summing to 1) and local bases.

    ``basis_a`` and ``basis_b`` hold the Schmidt vectors as columns.
    """

    coefficients: np.ndarray
    basis_a: np.ndarray
    basis_b: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.coefficients, dtype=float)
        if np.any(lam < -1e-12) or abs(lam.sum() - 1) > 1e-10 or np.any(np.diff(lam) > 1e-12):
            raise ValueError("Schmidt coefficients must be nonnegative, nonincreasing, and sum to 1")
        for b in (self.basis_a, self.basis_b):
            k = len(lam)
            g = b[:, :k].conj().T @ b[:, :k]
            if np.max(np.abs(g - np.eye(k))) > 1e-10:
                raise ValueError("Schmidt bases must be orthonormal")
        object.__setattr__(self, "coefficients", lam)

    def state(self) -> DensityMatrix:
        k = len(self.coefficients)
        psi = sum(
            math.sqrt(max(self.coefficients[i], 0.0)) * np.kron(self.basis_a[:, i], self.basis_b[:, i])
            for i in range(k)
        )
        return pure_state(psi, (self.basis_a.shape[0], self.basis_b.shape[0]))


def schmidt_decomposition(psi: Sequence[complex], dims: Sequence[int]) -> SchmidtVector:
    da, db = (int(x) for x in dims)
    v = np.asarray(psi, dtype=complex)
    v = v / np.linalg.norm(v)
    u, s, vh = np.linalg.svd(v.reshape(da, db))
    k = min(da, db)
    lam = s[:k] ** 2
    lam = lam / lam.sum()
    return SchmidtVector(lam, u[:, :k], vh.T[:, :k])


def random_schmidt(dims: Sequence[int], seed: SeedLike = None) -> SchmidtVector:
    """Random Schmidt vector: Haar local bases and uniform-simplex coefficients."""
    rng = rng_from(seed)
    da, db = (int(x) for x in dims)
    k = min(da, db)
    lam = np.sort(rng.dirichlet(np.ones(k)))[::-1]
    return SchmidtVector(lam, random_unitary(da, rng)[:, :k], random_unitary(db, rng)[:, :k])


@dataclass(frozen=True)
class BlochForm2Q:
    """Pauli coefficients of a two-qubit state.

    ``rho = (I + a.sigma x I + I x b.sigma + sum_ij T_ij sigma_i x sigma_j) / 4``
    """

    a: np.ndarray
    b: np.ndarray
    T: np.ndarray

    @classmethod
    def from_density(cls, rho: DensityMatrix) -> "BlochForm2Q":
        if rho.dims != (2, 2):
            raise ValueError("Bloch form needs a two-qubit state")
        m = rho.matrix
        a = np.array([np.real(np.trace(m @ np.kron(s, I2))) for s in PAULIS])
        b = np.array([np.real(np.trace(m @ np.kron(I2, s))) for s in PAULIS])
        t = np.array([[np.real(np.trace(m @ np.kron(s, r))) for r in PAULIS] for s in PAULIS])
        return cls(a, b, t)

    def to_density(self, validate: bool = True) -> DensityMatrix:
        m = np.kron(I2, I2).astype(complex)
        for i, s in enumerate(PAULIS):
            m = m + self.a[i] * np.kron(s, I2) + self.b[i] * np.kron(I2, s)
            for j, r in enumerate(PAULIS):
                m = m + self.T[i, j] * np.kron(s, r)
        return DensityMatrix(m / 4, (2, 2), validate=validate)


def bloch_projector(n: Sequence[float]) -> np.ndarray:
    """Projector onto the +1 eigenstate of ``n . sigma``."""
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    return 0.5 * (I2 + n[0] * SX + n[1] * SY + n[2] * SZ)


# --- JSON -----------------------------------------------------------------

def state_to_dict(rho: DensityMatrix) -> dict:
    flat = rho.matrix.reshape(-1)
    return {"dims": list(rho.dims), "matrix": [[float(z.real), float(z.imag)] for z in flat]}


def state_from_dict(obj: dict) -> DensityMatrix:
    """Load ``{"dims": [...], "matrix": [[re, im], ...]}`` (row-major)."""
    try:
        dims = [int(x) for x in obj["dims"]]
        entries = obj["matrix"]
    except (KeyError, TypeError, ValueError) as exc:
        raise StateValidationError([f"malformed state JSON: {exc}"]) from None
    d = int(np.prod(dims)) if dims else 0
    if len(entries) != d * d:
        raise StateValidationError([f"matrix has {len(entries)} entries, expected {d * d} for dims {dims}"])
    try:
        flat = np.array([complex(float(re), float(im)) for re, im in entries])
    except (TypeError, ValueError) as exc:
        raise StateValidationError([f"malformed matrix entry: {exc}"]) from None
    m = flat.reshape(d, d)
    failures = density_failures(m, dims)
    if failures:
        raise StateValidationError(failures)
    return DensityMatrix(m, dims)


def load_state(path: str) -> DensityMatrix:
    with open(path) as fh:
        return state_from_dict(json.load(fh))
