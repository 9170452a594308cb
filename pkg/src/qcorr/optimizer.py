"""Derivative-free search over products of projective-measurement charts.

The search is a coarse grid followed by a lockstep Nelder-Mead polish from
several distinct grid points. All candidate points of one stage are
evaluated in a single batched call, so evaluators should be vectorised over
their first axis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .measurement import ACTIVE_DIM, block_unitaries
from .qlinalg import rng_from

# (theta range is the Bloch half-sphere, antipodes give the same basis)
QUBIT_RANGES = ((0.0, math.pi / 2, True), (0.0, 2 * math.pi, False))
# Euler angles of the six active qutrit coordinates; (lo, hi, endpoint)
QUTRIT_RANGES = (
    (0.0, math.pi, False), (0.0, math.pi / 2, True), (0.0, math.pi, False),
    (0.0, math.pi / 2, True), (0.0, math.pi, False), (0.0, math.pi / 2, True),
)

CHUNK = 4096


class OptimizerBudgetError(RuntimeError):
    """The configured evaluation budget cannot cover the seeding grid."""


@dataclass(frozen=True)
class SearchConfig:
    """Grid resolution, multistart and polish settings.

    ``theta_points``/``phi_points`` apply when a single qubit block is
    searched; with several blocks each qubit uses the ``multi_*`` values and
    each qutrit ``multi_qutrit_points`` per angle.
    """

    theta_points: int = 24
    phi_points: int = 48
    multi_theta_points: int = 6
    multi_phi_points: int = 12
    qutrit_points: int = 3
    multi_qutrit_points: int = 2
    multistart: int = 12
    shrink_tol: float = 1e-8
    max_iterations: int = 400
    max_evals: int = 20000
    seed: int = 0

    def __post_init__(self):
        for name in ("theta_points", "phi_points", "multi_theta_points", "multi_phi_points",
                     "qutrit_points", "multi_qutrit_points", "multistart", "max_iterations", "max_evals"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not self.shrink_tol > 0:
            raise ValueError("shrink_tol must be positive")


@dataclass(frozen=True, eq=False)
class Objective:
    """Batched objective on concatenated chart coordinates.

    ``evaluate`` maps an ``(N, n_params)`` array to ``N`` real values.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    block_dims: tuple[int, ...]
    direction: str = "minimize"

    def __post_init__(self):
        if self.direction not in ("minimize", "maximize"):
            raise ValueError(f"unknown direction {self.direction!r}")
        for d in self.block_dims:
            if d not in ACTIVE_DIM:
                raise ValueError(f"no chart for block dimension {d}")

    @property
    def n_params(self) -> int:
        return sum(ACTIVE_DIM[d] for d in self.block_dims)

    @property
    def sign(self) -> float:
        return 1.0 if self.direction == "minimize" else -1.0

    def batch(self, p: np.ndarray) -> np.ndarray:
        out = []
        for i in range(0, p.shape[0], CHUNK):
            out.append(np.asarray(self.evaluate(p[i:i + CHUNK]), dtype=float).reshape(-1))
        return np.concatenate(out) if out else np.zeros(0)


@dataclass
class OptimizeResult:
    params: np.ndarray
    value: float
    diagnostics: dict = field(default_factory=dict)


def _axis(lo: float, hi: float, endpoint: bool, n: int) -> np.ndarray:
    if n == 1:
        return np.array([lo])
    return np.linspace(lo, hi, n, endpoint=endpoint)


def _qubit_grid(n_theta: int, n_phi: int) -> np.ndarray:
    theta = _axis(*QUBIT_RANGES[0], n_theta)
    phi = _axis(*QUBIT_RANGES[1], n_phi)
    pts = [(0.0, 0.0)] if theta[0] == 0.0 else []
    pts += [(t, f) for t in theta if t != 0.0 for f in phi]
    return np.array(pts)


def _qutrit_grid(n: int) -> np.ndarray:
    axes = [_axis(lo, hi, ep, n) for lo, hi, ep in QUTRIT_RANGES]
    return np.array(list(itertools.product(*axes)))


def block_grids(block_dims: Sequence[int], cfg: SearchConfig) -> list[np.ndarray]:
    single = len(block_dims) == 1
    grids = []
    for d in block_dims:
        if d == 2:
            grids.append(_qubit_grid(cfg.theta_points if single else cfg.multi_theta_points,
                                     cfg.phi_points if single else cfg.multi_phi_points))
        else:
            grids.append(_qutrit_grid(cfg.qutrit_points if single else cfg.multi_qutrit_points))
    return grids


def product_grid(grids: Sequence[np.ndarray]) -> np.ndarray:
    if not grids:
        return np.zeros((1, 0))
    idx = np.array(list(itertools.product(*[range(len(g)) for g in grids])))
    return np.concatenate([g[idx[:, k]] for k, g in enumerate(grids)], axis=1)


def grid_steps(block_dims: Sequence[int], cfg: SearchConfig) -> np.ndarray:
    """Initial simplex edge per coordinate: one grid spacing."""
    single = len(block_dims) == 1
    steps = []
    for d in block_dims:
        if d == 2:
            nt = cfg.theta_points if single else cfg.multi_theta_points
            nf = cfg.phi_points if single else cfg.multi_phi_points
            steps += [(math.pi / 2) / max(nt - 1, 1), 2 * math.pi / nf]
        else:
            n = cfg.qutrit_points if single else cfg.multi_qutrit_points
            steps += [(hi - lo) / max(n - 1 if ep else n, 1) for lo, hi, ep in QUTRIT_RANGES]
    return np.array(steps)


def basis_dissimilarity(block_dims: Sequence[int], p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``1 - sum |<a_i|b_j>|^4 / d`` per block, maximised over blocks.

    Zero iff the two points give the same measurement channel. ``p`` is one
    point, ``q`` a stack.
    """
    out = np.zeros(q.shape[0])
    pos = 0
    for d in block_dims:
        k = ACTIVE_DIM[d]
        u = block_unitaries(d, p[None, pos:pos + k])
        v = block_unitaries(d, q[:, pos:pos + k])
        overlap = np.abs(np.swapaxes(u.conj(), -1, -2) @ v) ** 4
        out = np.maximum(out, 1.0 - overlap.sum(axis=(-2, -1)) / d)
        pos += k
    return out


def select_starts(points: np.ndarray, values: np.ndarray, block_dims, k: int, threshold: float) -> np.ndarray:
    """Indices of up to ``k`` best grid points that are mutually distinct."""
    order = np.argsort(values, kind="stable")
    chosen: list[int] = []
    for i in order:
        if len(chosen) >= k:
            break
        if chosen and np.min(basis_dissimilarity(block_dims, points[i], points[chosen])) < threshold:
            continue
        chosen.append(int(i))
    return np.array(chosen, dtype=int)


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def left(self) -> int:
        return self.limit - self.used


def nelder_mead_lockstep(f: Callable[[np.ndarray], np.ndarray], starts: np.ndarray, steps: np.ndarray,
                         cfg: SearchConfig, budget: _Budget, rng: np.random.Generator):
    """Nelder-Mead on every start simultaneously (minimisation).

    Each iteration evaluates the reflection, expansion and both contraction
    points of every active simplex in one batch, then shrinks where needed. Returns the final
    best vertex and value per start, the iteration count and the global
    best-so-far history.
    """
    k, n = starts.shape
    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    # per-start random sign flips of the axis-aligned simplex
    signs = np.where(rng.random((k, n)) < 0.5, -1.0, 1.0)
    simplex = np.repeat(starts[:, None, :], n + 1, axis=1)
    for j in range(n):
        simplex[:, j + 1, j] += signs[:, j] * steps[j]
    fs = np.empty((k, n + 1))
    fs[:, 0] = np.inf
    fs[:, 1:] = f(simplex[:, 1:].reshape(-1, n)).reshape(k, n)
    budget.used += k * n
    fs[:, 0] = f(starts)
    budget.used += k
    history = [float(fs.min())]
    active = np.ones(k, dtype=bool)
    it = 0
    while it < cfg.max_iterations and active.any():
        order = np.argsort(fs, axis=1, kind="stable")
        simplex = np.take_along_axis(simplex, order[:, :, None], axis=1)
        fs = np.take_along_axis(fs, order, axis=1)
        diam = np.max(np.linalg.norm(simplex[:, 1:] - simplex[:, :1], axis=-1), axis=1)
        active &= diam > cfg.shrink_tol
        act = np.flatnonzero(active)
        if act.size == 0 or budget.left() < act.size * (n + 4):
            break
        it += 1
        s, v = simplex[act], fs[act]
        worst = s[:, -1]
        cen = s[:, :-1].mean(axis=1)
        xr = cen + alpha * (cen - worst)
        xe = cen + gamma * (xr - cen)
        xoc = cen + rho * (xr - cen)
        xic = cen + rho * (worst - cen)
        # all four candidates in one batched call
        fc = f(np.concatenate([xr, xe, xoc, xic])).reshape(4, act.size)
        budget.used += 4 * act.size
        fr, fe, foc, fic = fc

        expand = fr < v[:, 0]
        accept_r = (~expand) & (fr < v[:, -2])
        outside = (~expand) & (~accept_r) & (fr < v[:, -1])
        inside = (~expand) & (~accept_r) & (~outside)

        new_pt = worst.copy()
        new_f = v[:, -1].copy()
        take_e = expand & (fe < fr)
        take_r = (expand & ~take_e) | accept_r
        take_oc = outside & (foc <= fr)
        take_ic = inside & (fic < v[:, -1])
        new_pt[take_e], new_f[take_e] = xe[take_e], fe[take_e]
        new_pt[take_r], new_f[take_r] = xr[take_r], fr[take_r]
        new_pt[take_oc], new_f[take_oc] = xoc[take_oc], foc[take_oc]
        new_pt[take_ic], new_f[take_ic] = xic[take_ic], fic[take_ic]
        s[:, -1], v[:, -1] = new_pt, new_f

        shrink = (outside & ~take_oc) | (inside & ~take_ic)
        if shrink.any():
            sh = np.flatnonzero(shrink)
            best = s[sh, :1]
            s[sh, 1:] = best + sigma * (s[sh, 1:] - best)
            v[sh, 1:] = f(s[sh, 1:].reshape(-1, n)).reshape(sh.size, n)
            budget.used += sh.size * n

        simplex[act], fs[act] = s, v
        history.append(min(history[-1], float(fs.min())))

    i_best = np.argmin(fs, axis=1)
    best_pts = simplex[np.arange(k), i_best]
    best_vals = fs[np.arange(k), i_best]
    return best_pts, best_vals, it, history, bool(not active.any())


def optimize(obj: Objective, cfg: SearchConfig | None = None) -> OptimizeResult:
    """Global search: grid, distinct multistart, lockstep simplex polish.

    The returned value is never worse than the best grid point. Raises
    :class:`OptimizerBudgetError` when the grid alone exceeds ``max_evals``.
    """
    cfg = cfg or SearchConfig()
    n = obj.n_params
    sign = obj.sign
    if n == 0:
        p = np.zeros((1, 0))
        val = float(obj.batch(p)[0])
        return OptimizeResult(np.zeros(0), val, {"grid_points": 1, "starts": 0, "iterations": 0,
                                                  "evaluations": 1, "history_tail": [val], "converged": True})
    grid = product_grid(block_grids(obj.block_dims, cfg))
    if grid.shape[0] > cfg.max_evals:
        raise OptimizerBudgetError(
            f"seeding grid has {grid.shape[0]} points, more than max_evals={cfg.max_evals}")
    budget = _Budget(cfg.max_evals)
    gvals = sign * obj.batch(grid)
    budget.used += grid.shape[0]
    i0 = int(np.argmin(gvals))  # first minimiser in grid order
    best_p, best_v = grid[i0].copy(), float(gvals[i0])

    steps = grid_steps(obj.block_dims, cfg)
    # distinct means at least about two grid spacings apart
    threshold = 0.5 * math.sin(min(2 * float(np.min(steps)), math.pi / 2)) ** 2
    starts_idx = select_starts(grid, gvals, obj.block_dims, cfg.multistart, threshold)
    rng = rng_from(cfg.seed)

    def f(p):
        return sign * obj.batch(np.atleast_2d(p))

    iterations, history, converged = 0, [best_v], True
    if budget.left() >= len(starts_idx) * (n + 1):
        pts, vals, iterations, history, converged = nelder_mead_lockstep(
            f, grid[starts_idx], steps, cfg, budget, rng)
        j = int(np.argmin(vals))
        if vals[j] < best_v:
            best_p, best_v = pts[j].copy(), float(vals[j])
        history = [min(h, float(gvals[i0])) for h in history]
    else:
        converged = False
    return OptimizeResult(
        best_p,
        sign * best_v,
        {
            "grid_points": int(grid.shape[0]),
            "starts": int(len(starts_idx)),
            "iterations": int(iterations),
            "evaluations": int(budget.used),
            "history_tail": [sign * h for h in history[-10:]],
            "converged": bool(converged),
        },
    )


def brute_force_oracle(obj: Objective, resolution: tuple[int, int] | None = None, zoom_levels: int = 3,
                       zoom_points: int = 11, zoom_keep: int = 4) -> tuple[float, np.ndarray]:
    """Exhaustive grid extremum for one or two measured qubits.

    ``resolution`` is ``(theta points on [0, pi/2], phi points on [0, 2 pi])``
    per qubit, default ``(91, 181)`` for one qubit and ``(13, 25)`` for two.
    Each zoom level re-grids exhaustively a box of two cells
    around the ``zoom_keep`` best points found so far.
    """
    if any(d != 2 for d in obj.block_dims) or not 1 <= len(obj.block_dims) <= 2:
        raise ValueError("the brute-force oracle supports one or two measured qubits only")
    sign = obj.sign
    if resolution is None:
        resolution = (91, 181) if len(obj.block_dims) == 1 else (13, 25)
    nt, nf = resolution
    theta = np.linspace(0.0, math.pi / 2, nt)
    phi = np.linspace(0.0, 2 * math.pi, nf)
    per_qubit = np.array([(t, p) for t in theta for p in phi])
    grid = product_grid([per_qubit] * len(obj.block_dims))
    vals = sign * obj.batch(grid)
    cell = np.tile([theta[1] - theta[0], phi[1] - phi[0]], len(obj.block_dims))
    for _ in range(zoom_levels):
        keep = grid[np.argsort(vals, kind="stable")[:zoom_keep]]
        new = []
        for c in keep:
            axes = [np.linspace(c[j] - 2 * cell[j], c[j] + 2 * cell[j], zoom_points) for j in range(len(c))]
            new.append(np.array(list(itertools.product(*axes))))
        cand = np.concatenate(new)
        cvals = sign * obj.batch(cand)
        grid = np.concatenate([keep, cand])
        vals = np.concatenate([np.sort(vals, kind="stable")[:zoom_keep], cvals])
        cell = cell * 4.0 / (zoom_points - 1)
    i = int(np.argmin(vals))
    return sign * float(vals[i]), grid[i]
