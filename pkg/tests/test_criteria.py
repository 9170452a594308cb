import json

import numpy as np
import pytest

from qcorr.criteria import (CriterionVerdict, EnsembleConfig, PerturbationPlan, check_additivity, check_necessary,
                            check_pure_marginals, check_symmetry, check_tripartite, expected_verdict, n_threads,
                            parallel_map, perturb, probe_continuity, probe_scm, probe_wcm, prop10_pair,
                            random_ensemble, recheck, run_suite, spec_from_dict, spec_to_dict, stratified_rank,
                            trial_rngs, unexpected)
from qcorr.kfunc import K_G, trace_distance
from qcorr.measurement import Strategy, computational_measurement
from qcorr.measures import custom, named, profile
from qcorr.qlinalg import random_density


def s1_spec():
    return custom(K_G, Strategy("S1", computational_measurement("AB", (2, 2))), "AB")


@pytest.fixture(scope="module")
def s1_necessary():
    return {v.key: v for v in check_necessary(s1_spec(), EnsembleConfig(n_states=12, seed=1))}


class TestRecords:
    def test_fail_needs_witness(self):
        with pytest.raises(ValueError, match="witness"):
            CriterionVerdict("1a", "x", "fail")

    def test_unknown_verdict(self):
        with pytest.raises(ValueError):
            CriterionVerdict("1a", "x", "maybe")

    def test_key(self):
        assert CriterionVerdict("1a", "x", "pass", "Q").key == "1a:Q"
        assert CriterionVerdict("1c", "x", "pass").key == "1c"

    @pytest.mark.parametrize("spec", [named("MINL"), named("GD", "B"), s1_spec()], ids=["minl", "gd-b", "s1"])
    def test_spec_roundtrip(self, spec):
        back = spec_from_dict(json.loads(json.dumps(spec_to_dict(spec))))
        assert back.label == spec.label and back.k is spec.k
        assert back.strategy.kind == spec.strategy.kind
        assert back.strategy.degeneracy_rule == spec.strategy.degeneracy_rule


class TestEnsembles:
    def test_ranks_cycle(self):
        ranks = [np.linalg.matrix_rank(r.matrix, tol=1e-10) for r in random_ensemble(6, (2, 2), 0)]
        assert ranks == [1, 2, 4, 1, 2, 4]
        assert stratified_rank(3, 2) == 2

    def test_deterministic(self):
        a, b = random_ensemble(3, (2, 2), 5), random_ensemble(3, (2, 2), 5)
        assert all(x.allclose(y) for x, y in zip(a, b))
        assert len(trial_rngs(0, 4)) == 4

    @pytest.mark.parametrize("source", ["mixed", "pure", "unitary"])
    def test_perturb_is_close(self, source):
        rho = random_density((2, 2), seed=1)
        sigma = perturb(rho, 1e-3, source, np.random.default_rng(2))
        assert trace_distance(rho, sigma) <= 2e-3 + 1e-12

    def test_bad_source(self):
        with pytest.raises(ValueError):
            PerturbationPlan(tau_source="gaussian")

    def test_threads(self, monkeypatch):
        monkeypatch.setenv("QCORR_THREADS", "3")
        assert n_threads() == 3
        assert parallel_map(lambda x: x * x, [1, 2, 3]) == [1, 4, 9]
        monkeypatch.setenv("QCORR_THREADS", "junk")
        assert n_threads() == 1


class TestNecessary:
    def test_discord_all_pass(self):
        vs = check_necessary(named("discord"), EnsembleConfig(n_states=9, seed=2))
        assert {v.verdict for v in vs} == {"pass"}
        assert not unexpected(named("discord"), vs)
        assert {v.key for v in vs} == {"1a:T", "1a:Q", "1a:C", "1b:T", "1b:Q", "1b:C", "1c", "1d:T", "1e:Q"}

    def test_fixed_measurement_violations(self, s1_necessary):
        assert s1_necessary["1a:Q"].verdict == "fail"
        assert s1_necessary["1b:Q"].verdict == "fail"
        assert s1_necessary["1e:Q"].verdict == "pass"
        # no expectation is claimed for these cells
        assert not unexpected(s1_spec(), list(s1_necessary.values()))

    @pytest.mark.parametrize("key", ["1a:Q", "1b:Q"])
    def test_witness_rechecks(self, s1_necessary, key):
        v = s1_necessary[key]
        w = json.loads(json.dumps(v.witness))
        assert recheck(w) == pytest.approx(v.max_residual, abs=1e-12)
        assert recheck(w) > w["bound"]


class TestContinuityProbes:
    def test_continuity_discord_small(self):
        vs = probe_continuity(named("discord"), PerturbationPlan(trials=6, seed=1))
        asserted = [v for v in vs if v.verdict != "untested"]
        assert asserted and all(v.verdict == "pass" for v in asserted)
        assert {v.quantity for v in vs if v.verdict == "untested"} == {"C"}

    def test_scm_fails_with_witness(self):
        v = probe_scm(named("discord"))
        assert v.verdict == "fail"
        assert v.witness["axes"] == ["x", "z"]
        assert v.witness["trace_distance"] <= 4e-3
        assert recheck(v.witness) == pytest.approx(v.max_residual, abs=1e-12)
        assert v.max_residual >= 0.5

    def test_scm_fixed_measurement(self):
        v = probe_scm(s1_spec())
        assert v.verdict == "pass" and "construction" in v.note

    def test_wcm_discord_passes(self):
        v = probe_wcm(named("discord"), PerturbationPlan(trials=6, seed=2))
        assert v.verdict == "pass"
        assert expected_verdict(named("discord"), v) == "pass"

    def test_wcm_not_applicable_to_fixed(self):
        assert probe_wcm(s1_spec()).verdict == "untested"

    def test_wcm_minl_fails(self):
        v = probe_wcm(named("MINL"))
        assert v.verdict == "fail"
        assert recheck(v.witness) == pytest.approx(v.max_residual, abs=1e-12)


class TestDebatable:
    cfg = EnsembleConfig(n_states=12, seed=3)

    def test_pure_marginals(self):
        assert check_pure_marginals(named("GD"), self.cfg).verdict == "pass"

    def test_additivity_gd_pure_only(self):
        vs = {v.condition: v for v in check_additivity(named("GD"), self.cfg)}
        assert vs["3b"].verdict == "fail"
        assert vs["3b''"].verdict == "pass"
        assert recheck(vs["3b"].witness) == pytest.approx(vs["3b"].max_residual, abs=1e-12)

    def test_tripartite_needs_side_a(self):
        vs = check_tripartite(named("MID"), self.cfg)
        assert {v.verdict for v in vs} == {"untested"}

    def test_symmetry(self):
        assert check_symmetry(named("discord"), self.cfg).verdict == "fail"
        assert check_symmetry(named("MID"), self.cfg).verdict == "pass"

    def test_prop10_pair_creates_classical_correlation(self):
        before, after = prop10_pair()
        assert profile(named("MID"), after).C - profile(named("MID"), before).C > 0.01


class TestSuites:
    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            run_suite("bogus", named("GD"))

    def test_expected_verdicts(self):
        mid = named("MID")
        v = CriterionVerdict("2a", mid.label, "pass", "Q")
        assert expected_verdict(mid, v) == "fail"
        assert unexpected(mid, [v]) == [v]
        assert expected_verdict(named("GD"), CriterionVerdict("3a", "GD[A]", "pass")) is None
