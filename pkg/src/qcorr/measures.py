"""Total, quantum, classical and local-coherence correlations for any
(K, strategy, side), plus the named measures built from them.

With ``M`` the measurement chosen by the strategy and ``pi`` the product of
marginals::

    T = K[rho, pi]      Q = K[rho, M(rho)]
    C = K[M(rho), M(pi)]   L = K[pi, M(pi)]
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .kfunc import K_D, K_FUNCTIONS, K_G, K_I, K_S, DiscordFunction, entropy_array
from .measurement import (
    MeasurementChart,
    ProjectiveMeasurement,
    Strategy,
    dephase_array,
    free_chart,
    marginal_preserving_chart,
    measurement_to_dict,
    parse_side,
    s3_measurement,
    side_label,
)
from .optimizer import Objective, SearchConfig, optimize
from .qlinalg import DensityMatrix, SchmidtVector, marginal_product, partial_trace_array

NEGATIVE_TOL = 1e-9
L_S3_TOL = 1e-10

NAMED = ("discord", "MID", "MID_asym", "RED", "GD", "MINL")

# default measured side of each named measure; "AB" for the symmetric ones
DEFAULT_SIDE = {"discord": "A", "MID": "AB", "MID_asym": "A", "RED": "A", "GD": "A", "MINL": "A"}


class NegativeCorrelationError(ArithmeticError):
    """A correlation value came out below ``-NEGATIVE_TOL``."""


@dataclass(frozen=True)
class MeasureSpec:
    """``K`` plus a strategy and a measured side."""

    name: str
    k: DiscordFunction
    strategy: Strategy
    side: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "side", parse_side(self.side))
        if self.strategy.kind == "S1" and self.strategy.fixed.side != self.side:
            raise ValueError("the fixed measurement must act on the spec's side")

    @property
    def conditioning(self) -> tuple[int, ...] | None:
        return self.side if self.k is K_D else None

    def with_side(self, side) -> "MeasureSpec":
        return replace(self, side=parse_side(side))

    def with_strategy(self, strategy: Strategy) -> "MeasureSpec":
        return replace(self, strategy=strategy)

    @property
    def label(self) -> str:
        return f"{self.name}[{side_label(self.side)}]"


def _canonical_name(name: str) -> str:
    for n in NAMED:
        if n.lower() == name.lower():
            return n
    raise ValueError(f"unknown measure {name!r}; choose from {', '.join(NAMED)}")


def named(name: str, side=None) -> MeasureSpec:
    """Expand a named measure.

    ``discord`` uses conditional entropy with the measured side as the
    conditioning side; for one-sided measurements it coincides with the
    mutual-information form.
    """
    name = _canonical_name(name)
    side = parse_side(side if side is not None else DEFAULT_SIDE[name])
    if name in ("discord", "MID_asym", "MINL") and len(side) != 1:
        raise ValueError(f"{name} measures one side only")
    if name == "MID" and len(side) < 2:
        raise ValueError("MID measures both sides; use MID_asym for one side")
    table = {
        "discord": (K_D, Strategy("S2q")),
        "MID": (K_I, Strategy("S3")),
        "MID_asym": (K_I, Strategy("S3")),
        "RED": (K_S, Strategy("S2q")),
        "GD": (K_G, Strategy("S2q")),
        "MINL": (K_G, Strategy("S3", degeneracy_rule="maximizeQ")),
    }
    k, strategy = table[name]
    return MeasureSpec(name, k, strategy, side)


def custom(k: str | DiscordFunction, strategy: Strategy, side) -> MeasureSpec:
    k = K_FUNCTIONS[k] if isinstance(k, str) else k
    return MeasureSpec("custom", k, strategy, side)


@dataclass
class CorrelationProfile:
    measure: str
    T: float
    Q: float
    C: float
    L: float
    measurement: ProjectiveMeasurement
    degenerate: bool
    units: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "measure": self.measure,
            "T": self.T,
            "Q": self.Q,
            "C": self.C,
            "L": self.L,
            "units": self.units,
            "measurement": measurement_to_dict(self.measurement),
            "degenerate": self.degenerate,
            "diagnostics": self.diagnostics,
        }


def _check_state(spec: MeasureSpec, rho: DensityMatrix) -> None:
    if spec.k.bipartite_only and rho.n_parties != 2:
        raise ValueError(f"{spec.k.tag} is defined for bipartite states only")
    if max(spec.side) >= rho.n_parties:
        raise ValueError(f"side {side_label(spec.side)} does not exist for dims {rho.dims}")


def _clamp(name: str, v: float) -> float:
    if v < -NEGATIVE_TOL:
        raise NegativeCorrelationError(f"{name} = {v:.3e} is negative")
    return max(float(v), 0.0)


class _Evaluator:
    """Batched Q and C for one (spec, state) under a chart.

    For a bipartite state measured on one party the dephased state is block
    diagonal in the measured basis, so its spectrum and purity come from the
    ``d x d`` blocks ``<b_k| rho |b_k>`` (see :meth:`_blocks`).
    """

    def __init__(self, spec: MeasureSpec, rho: DensityMatrix, chart: MeasurementChart):
        self.spec, self.chart = spec, chart
        self.m = rho.matrix
        self.pi = marginal_product(rho).matrix
        self.dims = rho.dims
        k = spec.k
        self.f0 = None if k is K_G else k.functional(self.m, self.dims, None, spec.conditioning)
        self.fast = rho.n_parties == 2 and len(chart.side) == 1
        if self.fast:
            s = chart.side[0]
            self.other = 1 - s
            self.rho_o = partial_trace_array(self.m, self.dims, (self.other,))
            self.s_o = entropy_array(self.rho_o)
            self.purity = float(np.real(np.vdot(self.m, self.m)))
            self.r4 = self.m.reshape(self.dims + self.dims)
            self.f0 = None if k is K_G else self._entropic(k, entropy_array(self.m), entropy_array(
                partial_trace_array(self.m, self.dims, (s,))))

    def _dephase(self, m, bases):
        return dephase_array(m, self.dims, self.chart.side, bases)

    def _blocks(self, params):
        u = self.chart.bases_batch(params)[0]
        n, d = u.shape[0], u.shape[1]
        uh = np.swapaxes(u.conj(), 1, 2)
        if self.chart.side == (0,):
            x = (uh @ self.m.reshape(d, -1)).reshape(n, d, self.dims[1], d, self.dims[1])
            return np.einsum("nmjkl,nkm->nmjl", x, u)
        x = (uh @ self.r4.transpose(1, 0, 2, 3).reshape(d, -1)).reshape(n, d, self.dims[0], self.dims[0], d)
        return np.einsum("nmikl,nlm->nmik", x, u)

    def _entropic(self, k, s_ab, s_meas):
        """Functional from ``S(AB)``, ``S(measured)`` and the fixed ``S(other)``."""
        if k is K_S:
            return s_ab
        if k is K_I:
            return s_meas + self.s_o - s_ab
        if self.spec.conditioning == self.chart.side:
            return s_ab - s_meas
        return s_ab - self.s_o

    @staticmethod
    def _shannon(p):
        safe = np.where(p > 1e-300, p, 1.0)
        return np.where(p > 1e-300, -p * np.log2(safe), 0.0).sum(axis=-1)

    def _block_stats(self, params):
        b = self._blocks(params)
        p = np.real(np.einsum("nmjj->nm", b))
        return b, p

    def q(self, params: np.ndarray) -> np.ndarray:
        if self.fast:
            b, p = self._block_stats(params)
            k = self.spec.k
            if k is K_G:
                return np.atleast_1d(self.purity - np.real(np.sum(b * b.conj(), axis=(-3, -2, -1))))
            s_ab = entropy_array(b).sum(axis=-1)
            return np.atleast_1d(np.abs(self.f0 - self._entropic(k, s_ab, self._shannon(p))))
        bases = self.chart.bases_batch(params)
        out = self._dephase(self.m, bases)
        if self.f0 is not None:
            return np.atleast_1d(np.abs(self.f0 - self.spec.k.functional(out, self.dims, None, self.spec.conditioning)))
        return np.atleast_1d(self.spec.k.raw(self.m, out, self.dims, None, self.spec.conditioning))

    def c(self, params: np.ndarray) -> np.ndarray:
        if self.fast:
            b, p = self._block_stats(params)
            k = self.spec.k
            if k is K_G:
                diff = b - p[..., None, None] * self.rho_o
                return np.atleast_1d(np.real(np.sum(diff * diff.conj(), axis=(-3, -2, -1))))
            h = self._shannon(p)
            s_ab = entropy_array(b).sum(axis=-1)
            # M(pi) = diag(p) (x) rho_other
            return np.atleast_1d(np.abs(self._entropic(k, s_ab, h) - self._entropic(k, h + self.s_o, h)))
        bases = self.chart.bases_batch(params)
        mr, mp = self._dephase(self.m, bases), self._dephase(self.pi, bases)
        return np.atleast_1d(self.spec.k.raw(mr, mp, self.dims, None, self.spec.conditioning))


def quantities(spec: MeasureSpec, rho: DensityMatrix, m: ProjectiveMeasurement) -> tuple[float, float, float, float]:
    """``(T, Q, C, L)`` of ``rho`` under the given measurement, unclamped."""
    k, dims, cond = spec.k, rho.dims, spec.conditioning
    pi = marginal_product(rho).matrix
    r = rho.matrix
    mr = dephase_array(r, dims, m.side, m.bases)
    mp = dephase_array(pi, dims, m.side, m.bases)
    return (
        float(k.raw(r, pi, dims, None, cond)),
        float(k.raw(r, mr, dims, None, cond)),
        float(k.raw(mr, mp, dims, None, cond)),
        float(k.raw(pi, mp, dims, None, cond)),
    )


def choose_measurement(spec: MeasureSpec, rho: DensityMatrix, cfg: SearchConfig | None = None):
    """The strategy's measurement for ``rho``: ``(measurement, degenerate, diagnostics)``."""
    _check_state(spec, rho)
    st = spec.strategy
    if st.kind == "S1":
        return st.fixed, False, {"strategy": "S1"}
    if st.kind == "S3":
        m, degenerate = s3_measurement(rho, spec.side, st.degeneracy_rule)
        diag = {"strategy": "S3", "rule": st.degeneracy_rule}
        if st.degeneracy_rule == "maximizeQ" and degenerate:
            chart = marginal_preserving_chart(rho, spec.side)
            ev = _Evaluator(spec, rho, chart)
            res = optimize(Objective(ev.q, chart.block_dims, "maximize"), cfg)
            m = chart.measurement(res.params)
            diag.update(res.diagnostics)
        return m, degenerate, diag
    chart = free_chart(spec.side, rho.dims)
    ev = _Evaluator(spec, rho, chart)
    if st.kind == "S2q":
        res = optimize(Objective(ev.q, chart.block_dims, "minimize"), cfg)
    else:
        res = optimize(Objective(ev.c, chart.block_dims, "maximize"), cfg)
    diag = {"strategy": st.kind, **res.diagnostics, "params": [float(x) for x in res.params]}
    return chart.measurement(res.params), False, diag


def profile(spec: MeasureSpec, rho: DensityMatrix, cfg: SearchConfig | None = None) -> CorrelationProfile:
    """Evaluate ``(T, Q, C, L)`` with the strategy's measurement."""
    m, degenerate, diag = choose_measurement(spec, rho, cfg)
    t, q, c, l_ = quantities(spec, rho, m)
    if spec.strategy.kind == "S3" and abs(l_) > L_S3_TOL:
        raise ArithmeticError(f"S3 measurement disturbed the marginals: L = {l_:.3e}")
    return CorrelationProfile(
        spec.label, _clamp("T", t), _clamp("Q", q), _clamp("C", c), _clamp("L", l_),
        m, degenerate, spec.k.units, diag,
    )


def minl(rho: DensityMatrix, side="A", cfg: SearchConfig | None = None) -> float:
    """Largest purity change over measurements that keep the measured marginal."""
    return profile(named("MINL", side), rho, cfg).Q


def red(rho: DensityMatrix, side="A", cfg: SearchConfig | None = None) -> CorrelationProfile:
    """Entropy-based profile; ``diagnostics["additivity_residual"]`` is ``T + L - Q - C``."""
    p = profile(named("RED", side), rho, cfg)
    p.diagnostics["additivity_residual"] = p.T + p.L - p.Q - p.C
    return p


def gd_pure_closed_form(schmidt: SchmidtVector | Sequence[float]) -> tuple[float, float, float]:
    """``(T, Q, C)`` of geometric discord on a pure state with Schmidt weights ``lambda``.

    ``T = 1 + (sum l^2)^2 - 2 sum l^3``, ``Q = 1 - sum l^2``,
    ``C = sum l^2 + (sum l^2)^2 - 2 sum l^3``.
    """
    lam = np.asarray(schmidt.coefficients if isinstance(schmidt, SchmidtVector) else schmidt, dtype=float)
    if np.any(lam < -1e-12) or abs(lam.sum() - 1.0) > 1e-10:
        raise ValueError("Schmidt weights must be nonnegative and sum to 1")
    s2 = float(np.sum(lam**2))
    s3 = float(np.sum(lam**3))
    pi2 = s2 * s2
    return 1.0 + pi2 - 2.0 * s3, 1.0 - s2, s2 + pi2 - 2.0 * s3
