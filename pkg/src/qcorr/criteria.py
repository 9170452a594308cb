"""Conformance checks for correlation measures.

Every check returns :class:`CriterionVerdict` records. A ``fail`` always
carries a witness holding the serialised states, the measurements that were
used and the resulting values, so :func:`recheck` can reproduce the
violation without re-running any optimisation.

Condition ids: ``1a``-``1e`` (necessary), ``2a`` continuity, ``2b`` strong
and ``2c`` weak continuity of the measurement, ``3a``-``3d`` with the
variants ``3b'``, ``3b''``, ``3c'`` and ``3c''``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .kfunc import K_FUNCTIONS, trace_distance
from .measurement import (
    ProjectiveMeasurement,
    Strategy,
    apply,
    apply_channel,
    channel_distance,
    measurement_from_dict,
    measurement_to_dict,
    qubit_basis,
    random_local_channel,
    side_label,
)
from .measures import MeasureSpec, choose_measurement, quantities
from .optimizer import SearchConfig
from .qlinalg import (
    DensityMatrix,
    SeedLike,
    bloch_projector,
    partial_trace_array,
    random_density,
    random_local_unitary,
    random_product,
    random_unitary,
    state_from_dict,
    state_to_dict,
    swap_parties,
    tensor,
)

VERDICTS = ("pass", "fail", "untested")
QUANTITIES = ("T", "Q", "C", "L")

PRODUCT_TOL = 1e-8
UNITARY_TOL = 1e-6
NEGATIVE_TOL = 1e-9
CLASSICAL_TOL = 1e-8
MONOTONE_TOL = 1e-8
PURE_TOL = 1e-6
ADDITIVE_TOL = 1e-6
SYMMETRY_TOL = 1e-6
SCM_THRESHOLD = 0.5


# --- records ---------------------------------------------------------------------

@dataclass
class CriterionVerdict:
    condition: str
    measure: str
    verdict: str
    quantity: str | None = None
    trials: int = 0
    max_residual: float = 0.0
    witness: dict | None = None
    note: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == "fail" and self.witness is None:
            raise ValueError("a failing verdict needs a witness")

    @property
    def key(self) -> str:
        return self.condition + (f":{self.quantity}" if self.quantity else "")

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "measure": self.measure,
            "quantity": self.quantity,
            "verdict": self.verdict,
            "trials": self.trials,
            "max_residual": self.max_residual,
            "witness": self.witness,
            "note": self.note,
        }


@dataclass(frozen=True)
class EnsembleConfig:
    """Random-state ensemble; ranks cycle through 1, 2 and full."""

    n_states: int = 200
    seed: int = 0
    dims: tuple[int, ...] = (2, 2)
    search: SearchConfig | None = None


@dataclass(frozen=True)
class PerturbationPlan:
    """``sigma = (1 - eps) rho + eps tau`` (or a small unitary for ``tau_source="unitary"``)."""

    eps: tuple[float, ...] = (1e-3,)
    tau_source: str = "mixed"
    trials: int = 200
    seed: int = 0
    dims: tuple[int, ...] = (2, 2)
    search: SearchConfig | None = None

    def __post_init__(self):
        if self.tau_source not in ("mixed", "pure", "unitary"):
            raise ValueError(f"unknown tau source {self.tau_source!r}")


def spec_to_dict(spec: MeasureSpec) -> dict:
    st = spec.strategy
    out = {"name": spec.name, "k": spec.k.tag, "strategy": st.kind, "side": side_label(spec.side),
           "degeneracy_rule": st.degeneracy_rule}
    if st.fixed is not None:
        out["fixed"] = measurement_to_dict(st.fixed)
    return out


def spec_from_dict(obj: dict) -> MeasureSpec:
    fixed = measurement_from_dict(obj["fixed"]) if "fixed" in obj else None
    st = Strategy(obj["strategy"], fixed, obj.get("degeneracy_rule", "canonical"))
    return MeasureSpec(obj["name"], K_FUNCTIONS[obj["k"]], st, obj["side"])


def _entry(spec: MeasureSpec, rho: DensityMatrix, m: ProjectiveMeasurement) -> dict:
    t, q, c, l_ = quantities(spec, rho, m)
    return {"state": state_to_dict(rho), "measurement": measurement_to_dict(m),
            "values": {"T": t, "Q": q, "C": c, "L": l_}}


def make_witness(spec: MeasureSpec, relation: str, quantity: str | None, bound: float,
                 pairs: Sequence[tuple[DensityMatrix, ProjectiveMeasurement]], **extra) -> dict:
    entries = [_entry(spec, r, m) for r, m in pairs]
    w = {"spec": spec_to_dict(spec), "relation": relation, "quantity": quantity, "bound": bound,
         "entries": entries, **extra}
    w["residual"] = _residual(w, entries)
    return w


def _residual(w: dict, entries: list[dict]) -> float:
    q = w["quantity"]
    rel = w["relation"]
    v = [e["values"][q] for e in entries] if q else []
    if rel == "value":
        return v[0]
    if rel == "negative":
        return -v[0]
    if rel == "difference":
        return abs(v[1] - v[0])
    if rel == "increase":
        return v[1] - v[0]
    if rel == "additivity":
        e = entries[0]["values"]
        return abs(e["T"] - e["Q"] - e["C"])
    if rel == "channel_distance":
        m0 = measurement_from_dict(entries[0]["measurement"])
        m1 = measurement_from_dict(entries[1]["measurement"])
        return channel_distance(m0, m1)
    raise ValueError(f"unknown witness relation {rel!r}")


def recheck(witness: dict) -> float:
    """Re-evaluate a witness from its serialised form and return its residual."""
    spec = spec_from_dict(witness["spec"])
    entries = []
    for e in witness["entries"]:
        rho = state_from_dict(e["state"])
        m = measurement_from_dict(e["measurement"])
        entries.append(_entry(spec, rho, m))
    return _residual(witness, entries)


# --- helpers ------------------------------------------------------------------------

def n_threads() -> int:
    try:
        return max(1, int(os.environ.get("QCORR_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Ordered map, threaded when ``QCORR_THREADS`` > 1."""
    k = n_threads()
    if k == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))


def trial_rngs(seed: SeedLike, n: int) -> list[np.random.Generator]:
    ss = np.random.SeedSequence(seed if isinstance(seed, int) else None)
    return [np.random.default_rng(s) for s in ss.spawn(n)]


def stratified_rank(i: int, d: int) -> int:
    return (1, 2, d)[i % 3] if d > 2 else (1, d)[i % 2]


def random_ensemble(n: int, dims: Sequence[int], seed: SeedLike) -> list[DensityMatrix]:
    d = int(np.prod(dims))
    return [random_density(dims, rank=stratified_rank(i, d), seed=r) for i, r in enumerate(trial_rngs(seed, n))]


def product_ensemble(n: int, dims: Sequence[int], seed: SeedLike) -> list[DensityMatrix]:
    out = []
    for i, r in enumerate(trial_rngs(seed, n)):
        out.append(random_product(dims, seed=r, rank=(1, None)[i % 2]))
    return out


def _measure_state(spec: MeasureSpec, rho: DensityMatrix, search) -> tuple[ProjectiveMeasurement, tuple]:
    m, _, _ = choose_measurement(spec, rho, search)
    return m, quantities(spec, rho, m)


def _q_index(q: str) -> int:
    return QUANTITIES.index(q)


# --- S1 constructions -----------------------------------------------------------------

def _fixed_qubit_bases(spec: MeasureSpec, dims) -> list[np.ndarray] | None:
    m = spec.strategy.fixed
    if any(dims[s] != 2 for s in m.side):
        return None
    return [m.basis_on(s) for s in m.side]


def tilted_product(spec: MeasureSpec, dims, r: float = 0.5, alpha: float = math.pi / 4) -> DensityMatrix | None:
    """Product state diagonal in a basis tilted by ``alpha`` from the fixed measurement."""
    bases = _fixed_qubit_bases(spec, dims)
    if bases is None:
        return None
    m = spec.strategy.fixed
    parts = []
    for s, d in enumerate(dims):
        if s in m.side:
            v = m.basis_on(s) @ qubit_basis(alpha, 0.0)
            parts.append(DensityMatrix(v @ np.diag([(1 + r) / 2, (1 - r) / 2]) @ v.conj().T, (2,)))
        else:
            parts.append(DensityMatrix(np.eye(d) / d, (d,)))
    out = parts[0]
    for p in parts[1:]:
        out = tensor(out, p)
    return out


def rotated_classical_pair(spec: MeasureSpec, dims, theta: float = math.pi / 8):
    """Classical state in the fixed basis and its rotation by the local ``theta`` rotation."""
    if len(dims) != 2 or tuple(dims) != (2, 2) or _fixed_qubit_bases(spec, dims) is None:
        return None
    m = spec.strategy.fixed
    b = [m.basis_on(s) if s in m.side else np.eye(2, dtype=complex) for s in range(2)]
    rho = 0.5 * sum(np.outer(np.kron(b[0][:, k], b[1][:, k]), np.kron(b[0][:, k], b[1][:, k]).conj()) for k in range(2))
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, s], [s, -c]], dtype=complex)
    u = np.kron(b[0] @ rot @ b[0].conj().T, b[1] @ rot @ b[1].conj().T)
    r0 = DensityMatrix(rho, (2, 2))
    return r0, r0.evolve(u)


# --- necessary conditions ----------------------------------------------------------------

def _verdict_from(cond, spec, quantity, residuals, tol, witness_fn, trials, note="", larger_is_bad=True):
    residuals = np.asarray(residuals, dtype=float)
    worst = int(np.argmax(residuals)) if residuals.size else -1
    max_res = float(residuals[worst]) if residuals.size else 0.0
    if residuals.size and max_res > tol:
        return CriterionVerdict(cond, spec.label, "fail", quantity, trials, max_res, witness_fn(worst), note)
    return CriterionVerdict(cond, spec.label, "pass", quantity, trials, max_res, None, note)


def check_necessary(spec: MeasureSpec, cfg: EnsembleConfig | None = None) -> list[CriterionVerdict]:
    """Conditions 1(a)-(e) on random ensembles (plus the fixed-basis constructions for S1)."""
    cfg = cfg or EnsembleConfig()
    dims, search, n = cfg.dims, cfg.search, cfg.n_states
    out: list[CriterionVerdict] = []
    s1 = spec.strategy.kind == "S1"

    # 1(a): product states
    products = product_ensemble(n, dims, cfg.seed * 7919 + 1)
    if s1:
        t = tilted_product(spec, dims)
        if t is not None:
            products = [t] + products[:-1]
    prod = parallel_map(lambda r: _measure_state(spec, r, search), products)
    for q in ("T", "Q", "C"):
        res = [abs(v[_q_index(q)]) for _, v in prod]
        out.append(_verdict_from(
            "1a", spec, q, res, PRODUCT_TOL,
            lambda i, q=q: make_witness(spec, "value", q, PRODUCT_TOL, [(products[i], prod[i][0])]),
            len(products)))

    # 1(b): local unitaries
    states = random_ensemble(n, dims, cfg.seed * 7919 + 2)
    rngs = trial_rngs(cfg.seed * 7919 + 3, n)
    pairs = [(r, r.evolve(random_local_unitary(dims, g))) for r, g in zip(states, rngs)]
    if s1:
        p6 = rotated_classical_pair(spec, dims)
        if p6 is not None:
            pairs = [p6] + pairs[:-1]
    flat = [x for p in pairs for x in p]
    ev = parallel_map(lambda r: _measure_state(spec, r, search), flat)
    for q in ("T", "Q", "C"):
        k = _q_index(q)
        res = [abs(ev[2 * i][1][k] - ev[2 * i + 1][1][k]) for i in range(len(pairs))]
        out.append(_verdict_from(
            "1b", spec, q, res, UNITARY_TOL,
            lambda i, q=q: make_witness(spec, "difference", q, UNITARY_TOL,
                                        [(pairs[i][0], ev[2 * i][0]), (pairs[i][1], ev[2 * i + 1][0])]),
            len(pairs)))

    # 1(c): nonnegativity over everything evaluated so far
    pool = list(zip(products, prod)) + list(zip(flat, ev))
    neg = [max(-min(v), 0.0) for _, (_, v) in pool]

    def neg_witness(i):
        r, (m, v) = pool[i]
        q = QUANTITIES[int(np.argmin(v))]
        return make_witness(spec, "negative", q, NEGATIVE_TOL, [(r, m)])

    out.append(_verdict_from("1c", spec, None, neg, NEGATIVE_TOL, neg_witness, len(pool)))

    # 1(d): T under random local channels
    ch_rngs = trial_rngs(cfg.seed * 7919 + 4, n)
    res, wit = [], []
    for r, g in zip(states, ch_rngs):
        ch = random_local_channel(dims, kraus_rank=int(g.integers(1, 4)), seed=g)
        r2 = apply_channel(ch, r)
        t0 = quantities(spec, r, _any_measurement(spec, r))[0]
        t1 = quantities(spec, r2, _any_measurement(spec, r2))[0]
        res.append(t1 - t0)
        wit.append((r, r2))
    note = "" if spec.k.contractive else f"{spec.k.tag} is not flagged contractive: empirical only"
    out.append(_verdict_from(
        "1d", spec, "T", res, MONOTONE_TOL,
        lambda i: make_witness(spec, "increase", "T", MONOTONE_TOL,
                               [(wit[i][0], _any_measurement(spec, wit[i][0])),
                                (wit[i][1], _any_measurement(spec, wit[i][1]))]),
        n, note))

    # 1(e): classical states have no quantum correlations
    cl_rngs = trial_rngs(cfg.seed * 7919 + 5, n)
    classical = []
    for r, g in zip(states, cl_rngs):
        chi = spec.strategy.fixed if s1 else ProjectiveMeasurement(
            spec.side, tuple(random_unitary(dims[s], g) for s in spec.side))
        classical.append(apply(chi, r))
    cev = parallel_map(lambda r: _measure_state(spec, r, search), classical)
    res = [abs(v[1]) for _, v in cev]
    out.append(_verdict_from(
        "1e", spec, "Q", res, CLASSICAL_TOL,
        lambda i: make_witness(spec, "value", "Q", CLASSICAL_TOL, [(classical[i], cev[i][0])]),
        n))
    return out


def _any_measurement(spec: MeasureSpec, rho: DensityMatrix) -> ProjectiveMeasurement:
    """T does not depend on the measurement; any valid one serves the witness."""
    if spec.strategy.fixed is not None:
        return spec.strategy.fixed
    return ProjectiveMeasurement(spec.side, tuple(np.eye(rho.dims[s], dtype=complex) for s in spec.side))


# --- continuity ---------------------------------------------------------------------

def perturb(rho: DensityMatrix, eps: float, source: str, rng: np.random.Generator) -> DensityMatrix:
    d = rho.dim
    if source == "unitary":
        h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        h = 0.5 * (h + h.conj().T)
        h /= np.max(np.abs(np.linalg.eigvalsh(h)))
        w, v = np.linalg.eigh(h)
        u = (v * np.exp(-1j * eps * w)) @ v.conj().T
        return rho.evolve(u)
    tau = random_density(rho.dims, rank=1 if source == "pure" else None, seed=rng)
    return rho.mix(tau, eps)


def _cross_spec(spec: MeasureSpec, kind: str) -> MeasureSpec:
    return spec.with_strategy(Strategy(kind))


def _continuity_roles(spec: MeasureSpec) -> list[tuple[str, MeasureSpec, bool, str]]:
    """``(quantity, spec used, asserted, note)`` for each continuity check."""
    kind = spec.strategy.kind
    if kind == "S1":
        return [(q, spec, True, "") for q in ("T", "Q", "C")]
    if kind in ("S2q", "S2c"):
        q_spec, c_spec = _cross_spec(spec, "S2q"), _cross_spec(spec, "S2c")
        open_note = "left open for this strategy: residual reported, bound not asserted"
        return [
            ("T", spec, True, ""),
            ("Q", spec, kind == "S2q", "" if kind == "S2q" else open_note),
            ("C", spec, kind == "S2c", "" if kind == "S2c" else open_note),
            ("Q", q_spec, True, "Q under the minimising strategy"),
            ("C", c_spec, True, "C under the maximising strategy"),
        ]
    return [(q, spec, True, "") for q in ("T", "Q", "C")]


def probe_continuity(spec: MeasureSpec, plan: PerturbationPlan | None = None) -> list[CriterionVerdict]:
    """Check ``|X(sigma) - X(rho)| <= g(eps)`` for T, Q and C.

    For S3 specs a discontinuity witness is searched among targeted
    perturbations (see :func:`s3_discontinuity_search`).
    """
    plan = plan or PerturbationPlan()
    out = []
    if spec.strategy.kind == "S3":
        t_verdicts = _sampled_continuity(spec, plan, only=("T",))
        out += t_verdicts
        for q in ("Q", "C"):
            out.append(s3_discontinuity_verdict(spec, q, plan))
        return out
    return _sampled_continuity(spec, plan)


def _sampled_continuity(spec: MeasureSpec, plan: PerturbationPlan, only=None) -> list[CriterionVerdict]:
    roles = _continuity_roles(spec)
    if only:
        roles = [r for r in roles if r[0] in only and r[1] is spec]
    d = int(np.prod(plan.dims))
    states = random_ensemble(plan.trials, plan.dims, plan.seed * 7919 + 11)
    rngs = trial_rngs(plan.seed * 7919 + 12, plan.trials)
    out = []
    for eps in plan.eps:
        sigmas = [perturb(r, eps, plan.tau_source, g) for r, g in zip(states, rngs)]
        bound = spec.k.budget.g(eps, d)
        cache: dict = {}

        def evaluate(sp: MeasureSpec):
            key = id(sp)
            if key not in cache:
                cache[key] = (parallel_map(lambda r: _measure_state(sp, r, plan.search), states),
                              parallel_map(lambda r: _measure_state(sp, r, plan.search), sigmas))
            return cache[key]

        seen = {}
        for q, sp, asserted, note in roles:
            tag = (q, sp.strategy.kind)
            if tag in seen:
                continue
            seen[tag] = True
            # T never depends on the measurement: evaluate once via the spec itself
            a, b = evaluate(sp)
            k = _q_index(q)
            res = [abs(b[i][1][k] - a[i][1][k]) for i in range(plan.trials)]
            label = sp.label if sp is spec else f"{sp.label}/{sp.strategy.kind}"
            if not asserted:
                out.append(CriterionVerdict("2a", label, "untested", q, plan.trials, float(max(res)), None,
                                            note + f"; eps={eps}, g={bound:.3e}"))
                continue
            v = _verdict_from(
                "2a", sp, q, res, bound,
                lambda i, sp=sp, q=q, a=a, b=b: make_witness(
                    sp, "difference", q, bound, [(states[i], a[i][0]), (sigmas[i], b[i][0])], eps=eps),
                plan.trials, (note + "; " if note else "") + f"eps={eps}, g={bound:.3e}")
            v.measure = label
            out.append(v)
    return out


def _axes() -> dict[str, np.ndarray]:
    s = 1 / math.sqrt(2)
    return {"x": np.array([1, 0, 0.]), "y": np.array([0, 1, 0.]), "z": np.array([0, 0, 1.]),
            "x+z": np.array([s, 0, s]), "x-z": np.array([s, 0, -s]), "x+y": np.array([s, s, 0])}


def s3_candidates(eps: float) -> list[tuple[str, DensityMatrix, DensityMatrix]]:
    """Nearby state pairs that probe basis jumps at degenerate marginals.

    The base states have maximally mixed marginals. Perturbations are the
    exact unitary family of the locally mixed example state and mixtures
    with locally polarised states ``tau`` along several axes.
    """
    from . import presets

    bases = {"prop7": presets.prop7(), "classical_00_11": presets.classical_00_11(), "psi_plus": presets.psi_plus()}
    out = []
    for j in "xyz":
        out.append((f"prop7 unitary {j}", bases["prop7"], presets.prop7(eps, j)))
    for j1, j2 in (("x", "y"), ("x", "z"), ("y", "z")):
        out.append((f"prop7 unitary {j1} vs {j2}", presets.prop7(eps, j1), presets.prop7(eps, j2)))
    half = np.eye(2) / 2
    for bname, rho in bases.items():
        for an, n in _axes().items():
            p = bloch_projector(n)
            for where, tau in (("A", np.kron(p, half)), ("B", np.kron(half, p)), ("AB", np.kron(p, p))):
                sigma = rho.mix(DensityMatrix(tau, (2, 2)), eps)
                out.append((f"{bname} mixed toward {an} on {where}", rho, sigma))
    return out


def s3_discontinuity_search(spec: MeasureSpec, quantity: str, eps_list=(1e-2, 1e-3, 1e-4), search=None):
    """Largest jump of ``quantity`` relative to ``g(eps)`` over :func:`s3_candidates`.

    Returns ``(best record, all records)``; a record is a dict with the
    pair, its measurements, the jump and the bound at the effective
    ``eps = trace_distance / 2``.
    """
    k = _q_index(quantity)
    records = []
    d = 4
    for eps in eps_list:
        for name, r0, r1 in s3_candidates(eps):
            m0, v0 = _measure_state(spec, r0, search)
            m1, v1 = _measure_state(spec, r1, search)
            e_eff = max(trace_distance(r0, r1) / 2, 1e-300)
            bound = spec.k.budget.g(min(e_eff, 0.5), d)
            records.append({"case": name, "eps": eps, "eps_eff": e_eff, "jump": abs(v1[k] - v0[k]),
                            "bound": bound, "pair": (r0, r1), "measurements": (m0, m1)})
    best = max(records, key=lambda r: r["jump"] - r["bound"])
    return best, records


def _persistent(best: dict, records: list[dict]) -> bool:
    """The same case violates its bound at every eps probed."""
    same = [r for r in records if r["case"] == best["case"]]
    return all(r["jump"] > r["bound"] for r in same)


def s3_discontinuity_verdict(spec: MeasureSpec, quantity: str, plan: PerturbationPlan) -> CriterionVerdict:
    best, records = s3_discontinuity_search(spec, quantity, search=plan.search)
    unitary = [r for r in records if r["case"].startswith("prop7 unitary") and r["eps"] == min(r["eps"] for r in records)]
    note = "prop7 unitary family max jump at smallest eps: " + (
        f"{max(r['jump'] for r in unitary):.3e}" if unitary else "n/a")
    if best["jump"] > best["bound"] and _persistent(best, records):
        w = make_witness(spec, "difference", quantity, best["bound"], list(zip(best["pair"], best["measurements"])),
                         case=best["case"], eps=best["eps"])
        return CriterionVerdict("2a", spec.label, "fail", quantity, len(records), best["jump"], w,
                                f"discontinuity: {best['case']}; {note}")
    return CriterionVerdict("2a", spec.label, "pass", quantity, len(records), best["jump"], None,
                            f"no persistent jump found; {note}")


# --- strong continuity of the measurement ---------------------------------------------------

SCM_AXIS_PAIRS = (("x", "y"), ("x", "z"), ("y", "z"))


def scm_pair(spec: MeasureSpec, eps: float, a: str, b: str, search=None) -> dict:
    """Optimal measurements of ``sigma_a`` and ``sigma_b`` and their distances."""
    from . import presets

    sa, sb = presets.prop8(eps, a), presets.prop8(eps, b)
    ma, _, _ = choose_measurement(spec, sa, search)
    mb, _, _ = choose_measurement(spec, sb, search)
    return {"axes": (a, b), "states": (sa, sb), "measurements": (ma, mb),
            "channel_distance": channel_distance(ma, mb), "trace_distance": trace_distance(sa, sb)}


def probe_scm(spec: MeasureSpec, plan: PerturbationPlan | None = None) -> CriterionVerdict:
    """Optimal measurements for ``sigma_phi`` (Bell state mixed with ``|phi phi>``) along pairs of axes.

    The ``x``/``y`` pair is tried first; the remaining pairs follow because
    the minimiser for ``phi = y`` is degenerate for this Bell state.
    """
    plan = plan or PerturbationPlan()
    if spec.strategy.kind == "S1":
        return CriterionVerdict("2b", spec.label, "pass", None, 0, 0.0, None,
                                "fixed measurement: enforced by construction")
    eps = plan.eps[0]
    tried = []
    for a, b in SCM_AXIS_PAIRS:
        r = scm_pair(spec, eps, a, b, plan.search)
        tried.append(f"{a}{b}: {r['channel_distance']:.6f}")
        if r["channel_distance"] >= SCM_THRESHOLD and r["trace_distance"] <= 4 * eps + 1e-12:
            w = make_witness(spec, "channel_distance", None, SCM_THRESHOLD,
                             list(zip(r["states"], r["measurements"])), eps=eps,
                             axes=list(r["axes"]), trace_distance=r["trace_distance"])
            note = f"eps={eps}, trace_distance={r['trace_distance']:.3e}, channel distances " + ", ".join(tried)
            return CriterionVerdict("2b", spec.label, "fail", None, len(tried), r["channel_distance"], w, note)
    return CriterionVerdict("2b", spec.label, "pass", None, len(tried), 0.0, None,
                            f"eps={eps}, channel distances " + ", ".join(tried))


# --- weak continuity of the measurement ---------------------------------------------------------

def probe_wcm(spec: MeasureSpec, plan: PerturbationPlan | None = None) -> CriterionVerdict:
    """``|X_{M_sigma}(rho) - X(rho)| <= h(eps)`` with X = Q (C for S2c)."""
    plan = plan or PerturbationPlan()
    kind = spec.strategy.kind
    if kind == "S1":
        return CriterionVerdict("2c", spec.label, "untested", None, 0, 0.0, None,
                                "not applicable: the measurement never changes")
    q = "C" if kind == "S2c" else "Q"
    k = _q_index(q)
    d = int(np.prod(plan.dims))
    if kind == "S3":
        return _wcm_s3(spec, q, plan)
    eps = plan.eps[0]
    bound = spec.k.budget.h(eps, d)
    states = random_ensemble(plan.trials, plan.dims, plan.seed * 7919 + 21)
    rngs = trial_rngs(plan.seed * 7919 + 22, plan.trials)
    sigmas = [perturb(r, eps, plan.tau_source, g) for r, g in zip(states, rngs)]
    own = parallel_map(lambda r: _measure_state(spec, r, plan.search), states)
    cross_m = parallel_map(lambda s: choose_measurement(spec, s, plan.search)[0], sigmas)
    res = [abs(quantities(spec, r, m)[k] - own[i][1][k]) for i, (r, m) in enumerate(zip(states, cross_m))]
    return _verdict_from(
        "2c", spec, q, res, bound,
        lambda i: make_witness(spec, "difference", q, bound, [(states[i], own[i][0]), (states[i], cross_m[i])],
                               eps=eps),
        plan.trials, f"eps={eps}, h={bound:.3e}")


def _wcm_s3(spec: MeasureSpec, q: str, plan: PerturbationPlan) -> CriterionVerdict:
    k = _q_index(q)
    best = None
    count = 0
    for eps in (1e-2, 1e-3, 1e-4):
        for name, r0, r1 in s3_candidates(eps):
            m0, v0 = _measure_state(spec, r0, plan.search)
            m1, _, _ = choose_measurement(spec, r1, plan.search)
            cross = quantities(spec, r0, m1)[k]
            e_eff = max(trace_distance(r0, r1) / 2, 1e-300)
            bound = spec.k.budget.h(min(e_eff, 0.5), 4)
            excess = abs(cross - v0[k])
            count += 1
            if best is None or excess - bound > best[0] - best[1]:
                best = (excess, bound, name, eps, r0, m0, m1)
    excess, bound, name, eps, r0, m0, m1 = best
    if excess > bound:
        w = make_witness(spec, "difference", q, bound, [(r0, m0), (r0, m1)], case=name, eps=eps)
        return CriterionVerdict("2c", spec.label, "fail", q, count, excess, w, f"{name} at eps={eps}")
    return CriterionVerdict("2c", spec.label, "pass", q, count, excess, None, "no violation found")


# --- debatable conditions -----------------------------------------------------------------------

def check_debatable(spec: MeasureSpec, cfg: EnsembleConfig | None = None) -> list[CriterionVerdict]:
    cfg = cfg or EnsembleConfig()
    out = []
    out.append(check_pure_marginals(spec, cfg))
    out += check_additivity(spec, cfg)
    out += check_local_monotonicity(spec, cfg)
    out += check_tripartite(spec, cfg)
    out.append(check_symmetry(spec, cfg))
    return out


def check_pure_marginals(spec: MeasureSpec, cfg: EnsembleConfig) -> CriterionVerdict:
    """3(a): equal Schmidt weights with different local bases give equal values."""
    n = max(cfg.n_states // 4, 1)
    rngs = trial_rngs(cfg.seed * 7919 + 31, n)
    pairs = []
    for g in rngs:
        r = random_density(cfg.dims, rank=1, seed=g)
        pairs.append((r, r.evolve(random_local_unitary(cfg.dims, g))))
    flat = [x for p in pairs for x in p]
    ev = parallel_map(lambda r: _measure_state(spec, r, cfg.search), flat)
    res, which = [], []
    for i in range(n):
        diffs = [abs(ev[2 * i][1][k] - ev[2 * i + 1][1][k]) for k in range(3)]
        res.append(max(diffs))
        which.append(QUANTITIES[int(np.argmax(diffs))])
    return _verdict_from(
        "3a", spec, None, res, PURE_TOL,
        lambda i: make_witness(spec, "difference", which[i], PURE_TOL,
                               [(pairs[i][0], ev[2 * i][0]), (pairs[i][1], ev[2 * i + 1][0])]),
        n)


def check_additivity(spec: MeasureSpec, cfg: EnsembleConfig) -> list[CriterionVerdict]:
    """3(b) ``T = Q + C``; 3(b') ``T <= Q + C <= 2T``; 3(b'') ``T = Q + C`` on pure states."""
    n = cfg.n_states
    states = random_ensemble(n, cfg.dims, cfg.seed * 7919 + 41)
    ev = parallel_map(lambda r: _measure_state(spec, r, cfg.search), states)
    res = [abs(v[0] - v[1] - v[2]) for _, v in ev]
    out = [_verdict_from("3b", spec, None, res, ADDITIVE_TOL,
                         lambda i: make_witness(spec, "additivity", None, ADDITIVE_TOL, [(states[i], ev[i][0])]), n)]
    # 3(b'): signed distance outside [T, 2T]
    outside = [max(v[0] - (v[1] + v[2]), (v[1] + v[2]) - 2 * v[0], 0.0) for _, v in ev]
    i = int(np.argmax(outside))
    if outside[i] > ADDITIVE_TOL:
        w = make_witness(spec, "additivity", None, ADDITIVE_TOL, [(states[i], ev[i][0])],
                         interval_excess=outside[i])
        out.append(CriterionVerdict("3b'", spec.label, "fail", None, n, outside[i], w))
    else:
        out.append(CriterionVerdict("3b'", spec.label, "pass", None, n, outside[i]))
    pure = [s for j, s in enumerate(states) if stratified_rank(j, states[0].dim) == 1]
    pev = [ev[j] for j, s in enumerate(states) if stratified_rank(j, states[0].dim) == 1]
    pres = [abs(v[0] - v[1] - v[2]) for _, v in pev]
    out.append(_verdict_from("3b''", spec, None, pres, ADDITIVE_TOL,
                             lambda i: make_witness(spec, "additivity", None, ADDITIVE_TOL, [(pure[i], pev[i][0])]),
                             len(pure)))
    return out


def prop10_pair():
    """Uncorrelated-after-measurement state and its image under the local x-dephase-and-reset channel."""
    from . import presets

    rho = presets.prop10(0.01, 0.5)
    return rho, apply_channel(presets.prop10_local_channel(0.01), rho)


def check_local_monotonicity(spec: MeasureSpec, cfg: EnsembleConfig, n: int | None = None) -> list[CriterionVerdict]:
    """3(c): C and Q do not increase under random local channels.

    Every other input is classical on the measured side (Q = 0), where a
    discord-creating channel shows up at once. S3 specs on two qubits also
    get the x-dephase-and-reset pair of :func:`prop10_pair`.
    """
    n = n or cfg.n_states
    states = random_ensemble(n, cfg.dims, cfg.seed * 7919 + 51)
    rngs = trial_rngs(cfg.seed * 7919 + 52, n)
    for i in range(1, n, 2):
        chi = ProjectiveMeasurement(spec.side, tuple(random_unitary(cfg.dims[s], rngs[i]) for s in spec.side))
        states[i] = apply(chi, states[i])
    after = [apply_channel(random_local_channel(cfg.dims, kraus_rank=int(g.integers(1, 4)), seed=g), r)
             for r, g in zip(states, rngs)]
    if spec.strategy.kind == "S3" and tuple(cfg.dims) == (2, 2):
        r0, r1 = prop10_pair()
        states, after = [r0] + states, [r1] + after
    a = parallel_map(lambda r: _measure_state(spec, r, cfg.search), states)
    b = parallel_map(lambda r: _measure_state(spec, r, cfg.search), after)
    out = []
    for q in ("C", "Q"):
        k = _q_index(q)
        res = [b[i][1][k] - a[i][1][k] for i in range(len(states))]
        out.append(_verdict_from(
            "3c", spec, q, res, MONOTONE_TOL,
            lambda i, q=q: make_witness(spec, "increase", q, MONOTONE_TOL,
                                        [(states[i], a[i][0]), (after[i], b[i][0])]),
            len(states)))
    return out


def check_tripartite(spec: MeasureSpec, cfg: EnsembleConfig) -> list[CriterionVerdict]:
    """3(c') partial trace and 3(c'') pure ancilla on the unmeasured party.

    States are taken as ``A|BC`` with ``BC`` one party of dimension 4, so
    only specs measuring the qubit party A alone are testable.
    """
    if spec.side != (0,) or tuple(cfg.dims) != (2, 2):
        return [CriterionVerdict(c, spec.label, "untested", q, 0, 0.0, None,
                                 "needs a one-sided measurement on A of a two-qubit spec")
                for c in ("3c'", "3c''") for q in ("C", "Q")]
    n = max(cfg.n_states // 4, 1)
    rngs = trial_rngs(cfg.seed * 7919 + 61, n)
    big = [random_density((2, 4), rank=stratified_rank(i, 8), seed=g) for i, g in enumerate(rngs)]
    small = [_trace_last_qubit(r) for r in big]
    anc = np.zeros((2, 2), dtype=complex)
    anc[0, 0] = 1.0
    base = random_ensemble(n, (2, 2), cfg.seed * 7919 + 62)
    extended = [DensityMatrix(np.kron(r.matrix, anc), (2, 4), validate=False) for r in base]
    ev_big = parallel_map(lambda r: _measure_state(spec, r, cfg.search), big)
    ev_small = parallel_map(lambda r: _measure_state(spec, r, cfg.search), small)
    ev_base = parallel_map(lambda r: _measure_state(spec, r, cfg.search), base)
    ev_ext = parallel_map(lambda r: _measure_state(spec, r, cfg.search), extended)
    out = []
    for cond, first, firstev, second, secondev in (("3c'", big, ev_big, small, ev_small),
                                                   ("3c''", base, ev_base, extended, ev_ext)):
        for q in ("C", "Q"):
            k = _q_index(q)
            res = [secondev[i][1][k] - firstev[i][1][k] for i in range(n)]
            out.append(_verdict_from(
                cond, spec, q, res, MONOTONE_TOL,
                lambda i, q=q, first=first, firstev=firstev, second=second, secondev=secondev: make_witness(
                    spec, "increase", q, MONOTONE_TOL, [(first[i], firstev[i][0]), (second[i], secondev[i][0])]),
                n))
    return out


def _trace_last_qubit(rho: DensityMatrix) -> DensityMatrix:
    m = partial_trace_array(rho.matrix, (2, 2, 2), (0, 1))
    return DensityMatrix(0.5 * (m + m.conj().T), (2, 2), validate=False)


def check_symmetry(spec: MeasureSpec, cfg: EnsembleConfig) -> CriterionVerdict:
    """3(d): values unchanged when the parties are exchanged."""
    n = max(cfg.n_states // 4, 1)
    states = random_ensemble(n, cfg.dims, cfg.seed * 7919 + 71)
    swapped = [swap_parties(r) for r in states]
    a = parallel_map(lambda r: _measure_state(spec, r, cfg.search), states)
    b = parallel_map(lambda r: _measure_state(spec, r, cfg.search), swapped)
    res, which = [], []
    for i in range(n):
        diffs = [abs(a[i][1][k] - b[i][1][k]) for k in range(3)]
        res.append(max(diffs))
        which.append(QUANTITIES[int(np.argmax(diffs))])
    return _verdict_from(
        "3d", spec, None, res, SYMMETRY_TOL,
        lambda i: make_witness(spec, "difference", which[i], SYMMETRY_TOL,
                               [(states[i], a[i][0]), (swapped[i], b[i][0])]),
        n, "exchange of the two parties")


# --- suites -------------------------------------------------------------------------------

SUITES = ("necessary", "continuity", "scm", "wcm", "debatable")


def run_suite(suite: str, spec: MeasureSpec, trials: int = 200, seed: int = 0,
              search: SearchConfig | None = None) -> list[CriterionVerdict]:
    if suite == "all":
        return [v for s in SUITES for v in run_suite(s, spec, trials, seed, search)]
    ens = EnsembleConfig(n_states=trials, seed=seed, search=search)
    plan = PerturbationPlan(trials=trials, seed=seed, search=search)
    if suite == "necessary":
        return check_necessary(spec, ens)
    if suite == "continuity":
        return probe_continuity(spec, plan)
    if suite == "scm":
        return [probe_scm(spec, plan)]
    if suite == "wcm":
        return [probe_wcm(spec, plan)]
    if suite == "debatable":
        return check_debatable(spec, ens)
    raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES + ('all',))}")


def expected_verdict(spec: MeasureSpec, v: CriterionVerdict) -> str | None:
    """Verdict anticipated for a named measure, ``None`` when nothing is claimed."""
    kind = spec.strategy.kind
    c, q = v.condition, v.quantity
    if c in ("1a", "1b", "1c", "1d", "1e"):
        if kind == "S1" and c in ("1a", "1b") and q in ("Q", "C"):
            return None
        return "pass"
    if c == "2a":
        if kind == "S3":
            return "pass" if q == "T" else "fail"
        return "pass" if v.verdict != "untested" else "untested"
    if c == "2b":
        return "pass" if kind == "S1" else "fail"
    if c == "2c":
        if kind == "S1":
            return "untested"
        return "fail" if kind == "S3" else "pass"
    if c == "3d":
        return "pass" if len(spec.side) == 2 else "fail"
    return None


def unexpected(spec: MeasureSpec, verdicts: Sequence[CriterionVerdict]) -> list[CriterionVerdict]:
    bad = []
    for v in verdicts:
        e = expected_verdict(spec, v)
        if e is not None and e != v.verdict:
            bad.append(v)
    return bad
