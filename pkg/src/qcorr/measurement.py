"""Local rank-1 projective measurements, local channels and strategies."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .qlinalg import (
    DEGENERACY_GAP,
    DensityMatrix,
    SeedLike,
    degenerate_clusters,
    eig_hermitian,
    marginal_product,
    partial_trace,
    random_unitary,
    rng_from,
)

SIDE_LABELS = "ABCDEFGH"
BASIS_TOL = 1e-10


def parse_side(side) -> tuple[int, ...]:
    """Accept ``"A"``, ``"AB"``, ``["A", "B"]``, ``0`` or ``(0, 1)``."""
    if isinstance(side, (int, np.integer)):
        return (int(side),)
    if isinstance(side, str):
        items = list(side)
    else:
        items = list(side)
    out = []
    for s in items:
        if isinstance(s, str):
            if s not in SIDE_LABELS:
                raise ValueError(f"unknown side label {s!r}")
            out.append(SIDE_LABELS.index(s))
        else:
            out.append(int(s))
    if not out or len(set(out)) != len(out):
        raise ValueError(f"invalid side {side!r}")
    return tuple(sorted(out))


def side_label(side: Sequence[int]) -> str:
    return "".join(SIDE_LABELS[i] for i in side)


@dataclass(frozen=True, eq=False)
class ProjectiveMeasurement:
    """Rank-1 orthogonal measurement on the subsystems in ``side``.

    ``bases[k]`` is a unitary whose columns are the measurement vectors on
    subsystem ``side[k]``.
    """

    side: tuple[int, ...]
    bases: tuple[np.ndarray, ...]

    def __post_init__(self):
        side = parse_side(self.side)
        if len(side) != len(self.bases):
            raise ValueError("one basis per measured subsystem is required")
        order = np.argsort(list(parse_side_unsorted(self.side)))
        bases = [np.array(self.bases[i], dtype=complex) for i in order]
        for b in bases:
            if b.ndim != 2 or b.shape[0] != b.shape[1]:
                raise ValueError("each basis must be a square matrix")
            dev = float(np.max(np.abs(b.conj().T @ b - np.eye(b.shape[0]))))
            if dev > BASIS_TOL:
                raise ValueError(f"basis not orthonormal (deviation {dev:.3e})")
            b.setflags(write=False)
        object.__setattr__(self, "side", side)
        object.__setattr__(self, "bases", tuple(bases))

    @property
    def local_dims(self) -> tuple[int, ...]:
        return tuple(b.shape[0] for b in self.bases)

    def basis_on(self, subsystem: int) -> np.ndarray:
        return self.bases[self.side.index(subsystem)]

    def projectors(self, subsystem: int) -> list[np.ndarray]:
        b = self.basis_on(subsystem)
        return [np.outer(b[:, k], b[:, k].conj()) for k in range(b.shape[0])]

    def restricted(self, side) -> "ProjectiveMeasurement":
        side = parse_side(side)
        return ProjectiveMeasurement(side, tuple(self.basis_on(s) for s in side))


def parse_side_unsorted(side) -> tuple[int, ...]:
    if isinstance(side, (int, np.integer)):
        return (int(side),)
    return tuple(SIDE_LABELS.index(s) if isinstance(s, str) else int(s) for s in side)


def computational_measurement(side, dims: Sequence[int]) -> ProjectiveMeasurement:
    side = parse_side(side)
    return ProjectiveMeasurement(side, tuple(np.eye(dims[s], dtype=complex) for s in side))


# --- charts ----------------------------------------------------------------

def qubit_basis(theta: float, phi: float) -> np.ndarray:
    """Basis whose first vector has Bloch angles ``(theta, phi)``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    e = complex(math.cos(phi), math.sin(phi))
    return np.array([[c, -s * e.conjugate()], [s * e, c]], dtype=complex)


def qubit_bases(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Vectorised :func:`qubit_basis`; returns shape ``(N, 2, 2)``."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    e = np.exp(1j * phi)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s * e.conj()
    out[..., 1, 0] = s * e
    out[..., 1, 1] = c
    return out


def bloch_axis(theta: float, phi: float) -> np.ndarray:
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def axis_to_angles(n: Sequence[float]) -> tuple[float, float]:
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    return math.acos(max(-1.0, min(1.0, n[2]))), math.atan2(n[1], n[0]) % (2 * math.pi)


_GM2 = np.array([[0, -1j, 0], [1j, 0, 0], [0, 0, 0]])
_GM3 = np.diag([1.0, -1.0, 0.0]).astype(complex)
_GM5 = np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]])
_GM8 = np.diag([1.0, 1.0, -2.0]).astype(complex) / math.sqrt(3)


def qutrit_basis(angles: Sequence[float]) -> np.ndarray:
    """SU(3) element from eight Euler angles (lambda_3 2 3 5 3 2 3 8 sequence)."""
    a = list(angles)
    if len(a) != 8:
        raise ValueError("qutrit chart takes 8 angles")
    gens = (_GM3, _GM2, _GM3, _GM5, _GM3, _GM2, _GM3, _GM8)
    u = np.eye(3, dtype=complex)
    for g, t in zip(gens, a):
        u = u @ expm(1j * t * g)
    return u


QUTRIT_ACTIVE = 6  # the trailing two angles only rephase basis vectors

CHART_DIM = {2: 2, 3: 8}


def params_to_measurement(side, local_dims: Sequence[int], angles: Sequence[float]) -> ProjectiveMeasurement:
    """Map concatenated chart coordinates to a measurement.

    Qubits take ``(theta, phi)``; qutrits take eight Euler angles.
    """
    side = parse_side(side)
    angles = list(angles)
    bases = []
    pos = 0
    for d in local_dims:
        if d not in CHART_DIM:
            raise ValueError(f"no measurement chart for dimension {d}")
        k = CHART_DIM[d]
        chunk = angles[pos:pos + k]
        if len(chunk) != k:
            raise ValueError("not enough angles for the measured subsystems")
        bases.append(qubit_basis(*chunk) if d == 2 else qutrit_basis(chunk))
        pos += k
    if pos != len(angles):
        raise ValueError("too many angles for the measured subsystems")
    return ProjectiveMeasurement(side, tuple(bases))


# --- application -----------------------------------------------------------

def _dephasing_mask(dims: Sequence[int], side: Sequence[int]) -> np.ndarray:
    idx = np.array(list(itertools.product(*[range(d) for d in dims])))
    if not len(side):
        return np.ones((len(idx), len(idx)), dtype=bool)
    sub = idx[:, list(side)]
    return np.all(sub[:, None, :] == sub[None, :, :], axis=-1)


_MASK_CACHE: dict = {}


def dephasing_mask(dims: Sequence[int], side: Sequence[int]) -> np.ndarray:
    key = (tuple(dims), tuple(side))
    if key not in _MASK_CACHE:
        _MASK_CACHE[key] = _dephasing_mask(dims, side)
    return _MASK_CACHE[key]


def full_basis(dims: Sequence[int], side: Sequence[int], bases: Sequence[np.ndarray]) -> np.ndarray:
    """``W = kron`` of measured bases (identity elsewhere); supports batches."""
    w = None
    for s, d in enumerate(dims):
        if s in side:
            b = bases[list(side).index(s)]
        else:
            b = np.eye(d, dtype=complex)
        if w is None:
            w = b
        elif w.ndim == 2 and b.ndim == 2:
            w = np.kron(w, b)
        else:
            w = batched_kron(w, b)
    return w


def batched_kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a3 = a if a.ndim == 3 else a[None]
    b3 = b if b.ndim == 3 else b[None]
    n = max(a3.shape[0], b3.shape[0])
    out = np.einsum("nij,nkl->nikjl", np.broadcast_to(a3, (n,) + a3.shape[1:]), np.broadcast_to(b3, (n,) + b3.shape[1:]))
    return out.reshape(n, a3.shape[1] * b3.shape[1], a3.shape[2] * b3.shape[2])


def dephase_array(m: np.ndarray, dims: Sequence[int], side: Sequence[int], bases) -> np.ndarray:
    """Raw-array measurement channel; ``bases`` entries may be batched ``(N, d, d)``."""
    w = full_basis(dims, side, bases)
    mask = dephasing_mask(dims, side)
    rot = np.swapaxes(w.conj(), -1, -2) @ m @ w
    return w @ (rot * mask) @ np.swapaxes(w.conj(), -1, -2)


def apply(m: ProjectiveMeasurement, rho: DensityMatrix) -> DensityMatrix:
    """Post-measurement (non-selective) state ``sum_a P_a rho P_a``."""
    for s, d in zip(m.side, m.local_dims):
        if s >= rho.n_parties or rho.dims[s] != d:
            raise ValueError(f"measurement on subsystem {s} (dim {d}) does not fit dims {rho.dims}")
    out = dephase_array(rho.matrix, rho.dims, m.side, m.bases)
    return DensityMatrix(0.5 * (out + out.conj().T), rho.dims, validate=False)


def s3_measurement(rho: DensityMatrix, side, degeneracy_rule: str = "canonical") -> tuple[ProjectiveMeasurement, bool]:
    """Measurement in the eigenbases of the measured marginals.

    Returns the canonical eigenbasis measurement and whether any measured
    marginal has a degenerate spectrum. Under ``degeneracy_rule="maximizeQ"``
    the returned measurement is the canonical starting point; the freedom
    inside degenerate eigenspaces is exposed by :func:`marginal_preserving_chart`.
    """
    if degeneracy_rule not in ("canonical", "maximizeQ"):
        raise ValueError(f"unknown degeneracy rule {degeneracy_rule!r}")
    side = parse_side(side)
    bases = []
    degenerate = False
    for s in side:
        w, v = eig_hermitian(partial_trace(rho, [s]).matrix)
        if any(len(c) > 1 for c in degenerate_clusters(w, DEGENERACY_GAP)):
            degenerate = True
        bases.append(v)
    return ProjectiveMeasurement(side, tuple(bases)), degenerate


def qutrit_bases(angles: np.ndarray) -> np.ndarray:
    """Vectorised :func:`qutrit_basis` for angles of shape ``(N, 8)``."""
    a = np.asarray(angles, dtype=float)
    n = a.shape[0]

    def diag3(t):
        out = np.zeros((n, 3, 3), dtype=complex)
        out[:, 0, 0] = np.exp(1j * t)
        out[:, 1, 1] = np.exp(-1j * t)
        out[:, 2, 2] = 1.0
        return out

    def rot(t, i, j):
        out = np.zeros((n, 3, 3), dtype=complex)
        c, s_ = np.cos(t), np.sin(t)
        k = 3 - i - j
        out[:, i, i] = c
        out[:, j, j] = c
        out[:, i, j] = s_
        out[:, j, i] = -s_
        out[:, k, k] = 1.0
        return out

    def diag8(t):
        out = np.zeros((n, 3, 3), dtype=complex)
        out[:, 0, 0] = np.exp(1j * t / math.sqrt(3))
        out[:, 1, 1] = np.exp(1j * t / math.sqrt(3))
        out[:, 2, 2] = np.exp(-2j * t / math.sqrt(3))
        return out

    factors = (
        diag3(a[:, 0]), rot(a[:, 1], 0, 1), diag3(a[:, 2]), rot(a[:, 3], 0, 2),
        diag3(a[:, 4]), rot(a[:, 5], 0, 1), diag3(a[:, 6]), diag8(a[:, 7]),
    )
    u = factors[0]
    for f in factors[1:]:
        u = u @ f
    return u


# active coordinates per block: qubit (theta, phi); qutrit first six Euler angles
ACTIVE_DIM = {2: 2, 3: QUTRIT_ACTIVE}


def block_unitaries(d: int, p: np.ndarray) -> np.ndarray:
    if d == 2:
        return qubit_bases(p[:, 0], p[:, 1])
    full = np.zeros((p.shape[0], 8))
    full[:, :QUTRIT_ACTIVE] = p
    return qutrit_bases(full)


@dataclass(frozen=True, eq=False)
class MeasurementChart:
    """Search coordinates over a family of measurements.

    Each block rotates a set of columns of one reference basis: a free chart
    rotates whole bases, a marginal-preserving chart rotates only inside
    degenerate eigenspaces of the measured marginals (non-degenerate
    eigenvectors stay fixed).
    """

    side: tuple[int, ...]
    reference: tuple[np.ndarray, ...]
    blocks: tuple[tuple[int, tuple[int, ...]], ...]  # (position in side, column indices)

    @property
    def block_dims(self) -> tuple[int, ...]:
        return tuple(len(c) for _, c in self.blocks)

    @property
    def n_params(self) -> int:
        return sum(ACTIVE_DIM[d] for d in self.block_dims)

    def bases_batch(self, params: np.ndarray) -> list[np.ndarray]:
        params = np.atleast_2d(np.asarray(params, dtype=float))
        n = params.shape[0]
        bases = [np.broadcast_to(r, (n,) + r.shape).copy() for r in self.reference]
        pos = 0
        for k, cols in self.blocks:
            d = len(cols)
            u = block_unitaries(d, params[:, pos:pos + ACTIVE_DIM[d]])
            idx = list(cols)
            bases[k][:, :, idx] = self.reference[k][:, idx] @ u
            pos += ACTIVE_DIM[d]
        return bases

    def measurement(self, params: Sequence[float]) -> ProjectiveMeasurement:
        bases = self.bases_batch(np.asarray(params, dtype=float)[None, :])
        return ProjectiveMeasurement(self.side, tuple(b[0] for b in bases))


def free_chart(side, dims: Sequence[int]) -> MeasurementChart:
    side = parse_side(side)
    for s in side:
        if dims[s] not in ACTIVE_DIM:
            raise ValueError(f"measurement search supports subsystem dimensions 2 and 3, got {dims[s]}")
    return MeasurementChart(
        side,
        tuple(np.eye(dims[s], dtype=complex) for s in side),
        tuple((k, tuple(range(dims[s]))) for k, s in enumerate(side)),
    )


def marginal_preserving_chart(rho: DensityMatrix, side) -> MeasurementChart:
    """Chart over measurements that leave the measured marginals unchanged."""
    side = parse_side(side)
    reference = []
    blocks = []
    for k, s in enumerate(side):
        w, v = eig_hermitian(partial_trace(rho, [s]).matrix)
        reference.append(v)
        for c in degenerate_clusters(w, DEGENERACY_GAP):
            if len(c) > 1:
                if len(c) not in ACTIVE_DIM:
                    raise ValueError(f"degenerate eigenspace of dimension {len(c)} is not supported")
                blocks.append((k, tuple(c)))
    return MeasurementChart(side, tuple(reference), tuple(blocks))


def preserves_marginals(m: ProjectiveMeasurement, rho: DensityMatrix, tol: float = 1e-9) -> bool:
    pi = marginal_product(rho)
    return bool(np.max(np.abs(apply(m, pi).matrix - pi.matrix)) <= tol)


# --- local channels -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LocalChannel:
    """Product channel; ``kraus[i]`` lists the Kraus operators on subsystem ``i``."""

    kraus: tuple[tuple[np.ndarray, ...], ...]
    tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        ks = tuple(tuple(np.array(k, dtype=complex) for k in ops) for ops in self.kraus)
        for i, ops in enumerate(ks):
            d = ops[0].shape[1]
            tot = sum(k.conj().T @ k for k in ops)
            dev = float(np.max(np.abs(tot - np.eye(d))))
            if dev > self.tol:
                raise ValueError(f"Kraus operators on subsystem {i} are not complete (deviation {dev:.3e})")
        object.__setattr__(self, "kraus", ks)

    @classmethod
    def identity(cls, dims: Sequence[int]) -> "LocalChannel":
        return cls(tuple((np.eye(d, dtype=complex),) for d in dims))

    @classmethod
    def on(cls, dims: Sequence[int], subsystem: int, ops: Sequence[np.ndarray]) -> "LocalChannel":
        ks = [(np.eye(d, dtype=complex),) for d in dims]
        ks[subsystem] = tuple(ops)
        return cls(tuple(ks))

    @classmethod
    def dephasing(cls, m: ProjectiveMeasurement, dims: Sequence[int]) -> "LocalChannel":
        ks = [(np.eye(d, dtype=complex),) for d in dims]
        for s in m.side:
            ks[s] = tuple(m.projectors(s))
        return cls(tuple(ks))


def apply_channel_array(kraus, m: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    dims = list(dims)
    n = len(dims)
    t = m.reshape(dims + dims)
    for i, ops in enumerate(kraus):
        if len(ops) == 1 and ops[0].shape == (dims[i], dims[i]) and np.allclose(ops[0], np.eye(dims[i])):
            continue
        acc = 0
        for k in ops:
            x = np.tensordot(k, t, axes=([1], [i]))
            x = np.moveaxis(x, 0, i)
            x = np.tensordot(x, k.conj(), axes=([n + i], [1]))
            x = np.moveaxis(x, -1, n + i)
            acc = acc + x
        t = acc
        dims[i] = ops[0].shape[0]
    d = int(np.prod(dims))
    return t.reshape(d, d)


def apply_channel(ch: LocalChannel, rho: DensityMatrix) -> DensityMatrix:
    if len(ch.kraus) != rho.n_parties or any(ops[0].shape[1] != d for ops, d in zip(ch.kraus, rho.dims)):
        raise ValueError("channel does not match the state's subsystem dimensions")
    out = apply_channel_array(ch.kraus, rho.matrix, rho.dims)
    new_dims = tuple(ops[0].shape[0] for ops in ch.kraus)
    return DensityMatrix(0.5 * (out + out.conj().T), new_dims, validate=False)


def random_channel_kraus(d: int, kraus_rank: int, seed: SeedLike = None) -> tuple[np.ndarray, ...]:
    """Stinespring construction: Haar unitary on system x ancilla(|0>), ancilla traced out."""
    u = random_unitary(d * kraus_rank, seed)
    # system index major, ancilla minor: row (i, k), column (j, 0)
    return tuple(u[k::kraus_rank, 0::kraus_rank].copy() for k in range(kraus_rank))


def random_local_channel(dims: Sequence[int], kraus_rank: int = 2, seed: SeedLike = None) -> LocalChannel:
    rng = rng_from(seed)
    return LocalChannel(tuple(random_channel_kraus(int(d), kraus_rank, rng) for d in dims))


# --- distance between measurements --------------------------------------------

def choi_matrix(m: ProjectiveMeasurement) -> np.ndarray:
    """Choi matrix ``sum_ij |i><j| (x) D(|i><j|)`` of the dephasing channel on the measured subsystems."""
    dims = m.local_dims
    d = int(np.prod(dims))
    w = full_basis(dims, tuple(range(len(dims))), m.bases)
    mask = dephasing_mask(dims, tuple(range(len(dims))))
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            out = w @ ((w.conj().T @ e @ w) * mask) @ w.conj().T
            choi[i * d:(i + 1) * d, j * d:(j + 1) * d] = out
    return choi


def channel_distance(m1: ProjectiveMeasurement, m2: ProjectiveMeasurement) -> float:
    """Squared Hilbert-Schmidt distance between Choi matrices, scaled to ``[0, 1]``.

    For product dimension ``D`` of the measured subsystems the largest
    possible value is ``2 (D - 1)`` (attained by mutually unbiased bases), so
    that is the normalisation. Not a metric: its square root is.
    """
    if m1.side != m2.side or m1.local_dims != m2.local_dims:
        raise ValueError("measurements act on different subsystems")
    j1, j2 = choi_matrix(m1), choi_matrix(m2)
    diff = j1 - j2
    d = int(np.prod(m1.local_dims))
    val = float(np.real(np.vdot(diff, diff))) / (2.0 * (d - 1))
    return min(max(val, 0.0), 1.0)


# --- strategies -------------------------------------------------------------------

STRATEGIES = ("S1", "S2q", "S2c", "S3")


@dataclass(frozen=True)
class Strategy:
    """How the measurement is chosen for a given state."""

    kind: str
    fixed: ProjectiveMeasurement | None = None
    degeneracy_rule: str = "canonical"

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}")
        if self.kind == "S1" and self.fixed is None:
            raise ValueError("S1 needs a fixed measurement")
        if self.degeneracy_rule not in ("canonical", "maximizeQ"):
            raise ValueError(f"unknown degeneracy rule {self.degeneracy_rule!r}")

    @property
    def state_dependent(self) -> bool:
        return self.kind != "S1"


# --- JSON ---------------------------------------------------------------------------

def measurement_to_dict(m: ProjectiveMeasurement) -> dict:
    """Each basis is serialised row-major with the basis vectors as rows."""
    return {
        "side": [SIDE_LABELS[s] for s in m.side],
        "bases": [[[float(z.real), float(z.imag)] for z in b.T.reshape(-1)] for b in m.bases],
    }


def measurement_from_dict(obj: dict, dims: Sequence[int] | None = None) -> ProjectiveMeasurement:
    side = parse_side(obj["side"])
    if "angles" in obj:
        if dims is None:
            raise ValueError("angle form needs the state dims")
        return params_to_measurement(side, [dims[s] for s in side], obj["angles"])
    bases = []
    for flat in obj["bases"]:
        d = int(round(math.sqrt(len(flat))))
        if d * d != len(flat):
            raise ValueError("basis entry count is not a square")
        vec = np.array([complex(re, im) for re, im in flat]).reshape(d, d)
        bases.append(vec.T)
    return ProjectiveMeasurement(side, tuple(bases))
