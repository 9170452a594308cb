"""Entropies and the four generalized-discord functions ``K``.

All logarithms are base 2, so entropic quantities are in bits. The
geometric function is the *squared* Hilbert-Schmidt distance and is
reported in purity units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .qlinalg import (
    DensityMatrix,
    SeedLike,
    marginal_product,
    partial_trace_array,
    random_density,
    random_local_unitary,
    rng_from,
)


def entropy_array(m: np.ndarray):
    """Von Neumann entropy of ``m`` or of each matrix in a stack ``(..., d, d)``."""
    if m.shape[-1] == 2:
        a, d = np.real(m[..., 0, 0]), np.real(m[..., 1, 1])
        r = np.sqrt(0.25 * (a - d) ** 2 + np.abs(m[..., 0, 1]) ** 2)
        w = np.stack([0.5 * (a + d) - r, 0.5 * (a + d) + r], axis=-1)
    else:
        w = np.linalg.eigvalsh(m)
    safe = np.where(w > 1e-300, w, 1.0)
    t = np.where(w > 1e-300, -w * np.log2(safe), 0.0).sum(axis=-1)
    return float(t) if np.ndim(t) == 0 else t


def entropy(rho: DensityMatrix | np.ndarray) -> float:
    """``S(rho) = -sum lambda log2 lambda`` with ``0 log 0 = 0``."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return entropy_array(m)


def _split(rho_dims, split):
    if split is None:
        if len(rho_dims) != 2:
            raise ValueError("a bipartite split is required for states with more than two parties")
        return (0,), (1,)
    a, b = split
    return tuple(a), tuple(b)


def mutual_information_array(m: np.ndarray, dims: Sequence[int], split=None) -> float:
    a, b = _split(dims, split)
    return (
        entropy_array(partial_trace_array(m, dims, a))
        + entropy_array(partial_trace_array(m, dims, b))
        - entropy_array(partial_trace_array(m, dims, a + b))
    )


def mutual_information(rho: DensityMatrix, split=None) -> float:
    """``I = S(A) + S(B) - S(AB)``."""
    return mutual_information_array(rho.matrix, rho.dims, split)


def conditional_entropy_array(m: np.ndarray, dims: Sequence[int], conditioning: Sequence[int], split=None) -> float:
    a, b = _split(dims, split)
    cond = tuple(conditioning)
    whole = a + b
    s_whole = entropy_array(partial_trace_array(m, dims, whole))
    return s_whole - entropy_array(partial_trace_array(m, dims, cond))


def conditional_entropy(rho: DensityMatrix, conditioning=(0,), split=None) -> float:
    """``S(X|Y) = S(XY) - S(Y)`` with ``Y`` the conditioning subsystems."""
    if isinstance(conditioning, int):
        conditioning = (conditioning,)
    return conditional_entropy_array(rho.matrix, rho.dims, conditioning, split)


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def trace_distance(rho1, rho2) -> float:
    """``||rho1 - rho2||_1`` as the sum of absolute eigenvalues (maximum 2)."""
    a = rho1.matrix if isinstance(rho1, DensityMatrix) else np.asarray(rho1)
    b = rho2.matrix if isinstance(rho2, DensityMatrix) else np.asarray(rho2)
    diff = a - b
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def fannes_bound(t: float, d: int) -> float:
    """Entropy continuity bound ``t log2 d + h2(min(t, 1/2))``.

    ``t`` is the unnormalised trace distance in ``[0, 2]``; the clamp keeps
    the bound monotone. It dominates the sharp bound
    ``(t/2) log2(d-1) + h2(t/2)``, so it holds for the whole range.
    """
    if t < -1e-12 or t > 2 + 1e-12:
        raise ValueError(f"trace distance {t} outside [0, 2]")
    t = min(max(t, 0.0), 2.0)
    return t * math.log2(d) + binary_entropy(min(t, 0.5))


@dataclass(frozen=True)
class ContinuityBudget:
    """``f`` bounds a one-argument perturbation of ``K``; ``g = 2f``; ``h = 2g``."""

    f_of: Callable[[float, int], float]
    units: str

    def f(self, eps: float, d: int) -> float:
        return self.f_of(eps, d)

    def g(self, eps: float, d: int) -> float:
        return 2.0 * self.f(eps, d)

    def h(self, eps: float, d: int) -> float:
        return 2.0 * self.g(eps, d)


def _entropic_f(eps: float, d: int) -> float:
    return 2.0 * (eps * math.log2(d) + binary_entropy(min(eps, 0.5)))


def _geometric_f(eps: float, d: int) -> float:
    return 8.0 * eps


ENTROPIC_BUDGET = ContinuityBudget(_entropic_f, "bits")
GEOMETRIC_BUDGET = ContinuityBudget(_geometric_f, "purity")


@dataclass(frozen=True)
class DiscordFunction:
    """A generalized-discord function ``K[rho1, rho2]``.

    ``contractive`` records contractivity on the pairs ``(rho, pi_rho)``
    that enter total correlations; arbitrary pairs are probed separately by
    :func:`verify_k_flags`.
    """

    tag: str
    name: str
    bipartite_only: bool
    unitary_invariant: bool
    contractive: bool
    budget: ContinuityBudget

    @property
    def units(self) -> str:
        return self.budget.units

    def functional(self, m: np.ndarray, dims: Sequence[int], split=None, conditioning=None):
        """The scalar whose absolute difference defines an entropic ``K``."""
        if self.tag == "K_S":
            return entropy_array(m)
        if self.tag == "K_I":
            return mutual_information_array(m, dims, split)
        if self.tag == "K_D":
            a, _ = _split(dims, split)
            cond = tuple(conditioning) if conditioning is not None else a
            return conditional_entropy_array(m, dims, cond, split)
        raise ValueError(f"{self.tag} is not a difference of functionals")

    def raw(self, m1: np.ndarray, m2: np.ndarray, dims: Sequence[int], split=None, conditioning=None):
        """Evaluate on raw arrays; either argument may be a stack ``(N, d, d)``."""
        if self.tag == "K_G":
            diff = m1 - m2
            out = np.real(np.sum(diff * diff.conj(), axis=(-2, -1)))
        elif self.tag in ("K_S", "K_I", "K_D"):
            out = np.abs(self.functional(m1, dims, split, conditioning)
                         - self.functional(m2, dims, split, conditioning))
        else:
            raise ValueError(f"unknown K {self.tag!r}")
        return float(out) if np.ndim(out) == 0 else out

    def __call__(self, rho1: DensityMatrix, rho2: DensityMatrix, split=None, conditioning=None) -> float:
        return k_eval(self, rho1, rho2, split, conditioning)


K_I = DiscordFunction("K_I", "mutual information", True, True, True, ENTROPIC_BUDGET)
K_D = DiscordFunction("K_D", "conditional entropy", True, True, True, ENTROPIC_BUDGET)
K_S = DiscordFunction("K_S", "von Neumann entropy", False, True, True, ENTROPIC_BUDGET)
K_G = DiscordFunction("K_G", "Hilbert-Schmidt", False, True, False, GEOMETRIC_BUDGET)

K_FUNCTIONS = {k.tag: k for k in (K_I, K_D, K_S, K_G)}


def k_eval(k: DiscordFunction, rho1: DensityMatrix, rho2: DensityMatrix, split=None, conditioning=None) -> float:
    if rho1.dims != rho2.dims:
        raise ValueError(f"dims mismatch {rho1.dims} vs {rho2.dims}")
    if k.bipartite_only and split is None and rho1.n_parties != 2:
        raise ValueError(f"{k.tag} needs a bipartite split")
    return k.raw(rho1.matrix, rho2.matrix, rho1.dims, split, conditioning)


def verify_k_flags(k: DiscordFunction, trials: int = 500, seed: SeedLike = 0,
                   channel_trials: int | None = None, dims=(2, 2)) -> dict:
    """Probe self-distance, nonnegativity, unitary invariance and contractivity.

    Contractivity is probed twice: on ``(rho, pi_rho)`` pairs (what
    total correlations need) and on arbitrary pairs. Violations above 1e-8
    are reported with a witness; nothing is asserted here.
    """
    from .measurement import apply_channel, random_local_channel

    rng = rng_from(seed)
    channel_trials = channel_trials or trials
    worst_unitary = 0.0
    worst_self = 0.0
    min_value = math.inf
    for _ in range(trials):
        r1 = random_density(dims, rank=int(rng.integers(1, int(np.prod(dims)) + 1)), seed=rng)
        r2 = random_density(dims, seed=rng)
        u = random_local_unitary(dims, rng)
        v = k(r1, r2)
        worst_unitary = max(worst_unitary, abs(v - k(r1.evolve(u), r2.evolve(u))))
        worst_self = max(worst_self, abs(k(r1, r1)))
        min_value = min(min_value, v)

    def contractivity(pair_kind: str):
        worst = 0.0
        witness = None
        violations = 0
        for i in range(channel_trials):
            r1 = random_density(dims, rank=int(rng.integers(1, int(np.prod(dims)) + 1)), seed=rng)
            r2 = marginal_product(r1) if pair_kind == "marginal" else random_density(dims, seed=rng)
            ch = random_local_channel(dims, kraus_rank=int(rng.integers(1, 4)), seed=rng)
            c1, c2 = apply_channel(ch, r1), apply_channel(ch, r2)
            excess = k(c1, c2) - k(r1, r2)
            self_after.append(abs(k(c1, c1)))
            if excess > 1e-8:
                violations += 1
                if excess > worst:
                    worst = excess
                    witness = {"trial": i, "excess": excess, "before": k(r1, r2), "after": k(c1, c2)}
        return {"violations": violations, "trials": channel_trials, "max_excess": worst, "witness": witness}

    self_after: list[float] = []
    marginal = contractivity("marginal")
    arbitrary = contractivity("arbitrary")
    return {
        "k": k.tag,
        "trials": trials,
        "unitary_invariance_residual": worst_unitary,
        "self_distance_max": worst_self,
        "self_distance_after_channel_max": max(self_after),
        "min_value": min_value,
        "flag_unitary_invariant": k.unitary_invariant,
        "flag_contractive": k.contractive,
        "contractive_on_marginal_pairs": marginal,
        "contractive_on_arbitrary_pairs": arbitrary,
        "fannes_clamp": "h2 argument clamped to [0, 1/2]",
    }
