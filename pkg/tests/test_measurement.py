import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcorr.measurement import (LocalChannel, ProjectiveMeasurement, Strategy, apply, apply_channel,
                               axis_to_angles, bloch_axis, channel_distance, choi_matrix, computational_measurement,
                               free_chart, marginal_preserving_chart, measurement_from_dict, measurement_to_dict,
                               params_to_measurement, parse_side, preserves_marginals, qubit_basis, qubit_bases,
                               qutrit_basis, qutrit_bases, random_channel_kraus, random_local_channel, s3_measurement)
from qcorr.qlinalg import SX, SY, SZ, partial_trace, pure_state, random_density, random_unitary

BELL = pure_state(np.array([1, 0, 0, 1]) / math.sqrt(2), (2, 2))
X_BASIS = qubit_basis(math.pi / 2, 0.0)


class TestSides:
    @pytest.mark.parametrize("side,want", [("A", (0,)), ("AB", (0, 1)), (["B", "A"], (0, 1)), (1, (1,)), ((2, 0), (0, 2))])
    def test_parse(self, side, want):
        assert parse_side(side) == want

    @pytest.mark.parametrize("side", ["", "AA", "Z"])
    def test_parse_rejects(self, side):
        with pytest.raises(ValueError):
            parse_side(side)

    def test_bases_follow_side_order(self):
        m = ProjectiveMeasurement((1, 0), (X_BASIS, np.eye(2)))
        assert m.side == (0, 1)
        np.testing.assert_allclose(m.basis_on(1), X_BASIS)

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError, match="orthonormal"):
            ProjectiveMeasurement((0,), (np.ones((2, 2)),))


class TestCharts:
    @settings(max_examples=30, deadline=None)
    @given(st.floats(0, math.pi), st.floats(0, 2 * math.pi))
    def test_qubit_basis_axis(self, theta, phi):
        b = qubit_basis(theta, phi)
        v = b[:, 0]
        n = [np.real(v.conj() @ s @ v) for s in (SX, SY, SZ)]
        np.testing.assert_allclose(n, bloch_axis(theta, phi), atol=1e-12)

    def test_vectorised_matches_scalar(self):
        th, ph = np.array([0.1, 1.2]), np.array([2.0, 5.5])
        batch = qubit_bases(th, ph)
        for i in range(2):
            np.testing.assert_allclose(batch[i], qubit_basis(th[i], ph[i]))

    def test_axis_roundtrip(self):
        th, ph = axis_to_angles([1, 1, 1])
        np.testing.assert_allclose(bloch_axis(th, ph), np.ones(3) / math.sqrt(3), atol=1e-15)

    def test_qutrit_unitary(self):
        rng = np.random.default_rng(0)
        u = qutrit_basis(rng.uniform(0, 2 * math.pi, 8))
        np.testing.assert_allclose(u @ u.conj().T, np.eye(3), atol=1e-12)
        us = qutrit_bases(rng.uniform(0, 2 * math.pi, (5, 8)))
        np.testing.assert_allclose(us @ np.swapaxes(us.conj(), 1, 2), np.broadcast_to(np.eye(3), (5, 3, 3)), atol=1e-12)

    def test_params_to_measurement(self):
        m = params_to_measurement("AB", (2, 3), [0.3, 1.0] + [0.1] * 8)
        assert m.local_dims == (2, 3)
        with pytest.raises(ValueError):
            params_to_measurement("A", (2,), [0.3])

    def test_free_chart(self):
        c = free_chart("AB", (2, 2))
        assert c.n_params == 4
        m = c.measurement([math.pi / 2, 0, 0, 0])
        np.testing.assert_allclose(m.basis_on(0), X_BASIS)

    def test_marginal_preserving_chart_nondegenerate_is_empty(self):
        rho = random_density((2, 2), seed=1)
        c = marginal_preserving_chart(rho, "A")
        assert c.n_params == 0
        m, degenerate = s3_measurement(rho, "A")
        assert not degenerate
        np.testing.assert_allclose(np.abs(c.measurement([]).basis_on(0)), np.abs(m.basis_on(0)), atol=1e-12)

    def test_marginal_preserving_chart_degenerate(self):
        c = marginal_preserving_chart(BELL, "AB")
        assert c.block_dims == (2, 2)
        rng = np.random.default_rng(3)
        for _ in range(5):
            assert preserves_marginals(c.measurement(rng.uniform(0, 3, 4)), BELL)

    def test_s3_rule_validated(self):
        with pytest.raises(ValueError):
            s3_measurement(BELL, "A", "bogus")


class TestApply:
    def test_bell_computational(self):
        out = apply(computational_measurement("A", (2, 2)), BELL)
        np.testing.assert_allclose(out.matrix, np.diag([0.5, 0, 0, 0.5]), atol=1e-15)

    def test_bell_x_basis_on_both(self):
        out = apply(ProjectiveMeasurement((0, 1), (X_BASIS, X_BASIS)), BELL)
        # |++> and |--> with weight 1/2 each
        plus = np.ones(4) / 2
        minus = np.array([1, -1, -1, 1]) / 2
        want = 0.5 * (np.outer(plus, plus) + np.outer(minus, minus))
        np.testing.assert_allclose(out.matrix, want, atol=1e-15)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000))
    def test_idempotent_and_trace_preserving(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density((2, 3), seed=rng)
        m = ProjectiveMeasurement((0, 1), (random_unitary(2, rng), random_unitary(3, rng)))
        once = apply(m, rho)
        assert np.trace(once.matrix).real == pytest.approx(1.0)
        assert apply(m, once).allclose(once, atol=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            apply(ProjectiveMeasurement((0,), (np.eye(3),)), BELL)

    def test_one_sided_keeps_other_marginal(self):
        rho = random_density((2, 2), seed=5)
        out = apply(ProjectiveMeasurement((0,), (random_unitary(2, 6),)), rho)
        np.testing.assert_allclose(partial_trace(out, [1]).matrix, partial_trace(rho, [1]).matrix, atol=1e-14)


class TestChannels:
    @pytest.mark.parametrize("d,r", [(2, 1), (2, 3), (3, 2)])
    def test_random_kraus_complete(self, d, r):
        ks = random_channel_kraus(d, r, seed=0)
        np.testing.assert_allclose(sum(k.conj().T @ k for k in ks), np.eye(d), atol=1e-12)

    def test_incomplete_rejected(self):
        with pytest.raises(ValueError, match="complete"):
            LocalChannel(((np.eye(2) * 0.5,), (np.eye(2),)))

    def test_dephasing_channel_equals_measurement(self):
        rho = random_density((2, 2), seed=8)
        m = ProjectiveMeasurement((1,), (random_unitary(2, 9),))
        ch = LocalChannel.dephasing(m, (2, 2))
        assert apply_channel(ch, rho).allclose(apply(m, rho), atol=1e-14)

    def test_identity(self):
        rho = random_density((2, 3), seed=2)
        assert apply_channel(LocalChannel.identity((2, 3)), rho).allclose(rho)

    def test_output_is_a_state(self):
        rho = random_density((2, 2), seed=1)
        out = apply_channel(random_local_channel((2, 2), 3, seed=4), rho)
        assert np.trace(out.matrix).real == pytest.approx(1.0)
        assert np.linalg.eigvalsh(out.matrix).min() > -1e-12

    def test_on_subsystem(self):
        flip = LocalChannel.on((2, 2), 0, [SX])
        out = apply_channel(flip, pure_state([1, 0, 0, 0], (2, 2)))
        np.testing.assert_allclose(np.diag(out.matrix).real, [0, 0, 1, 0])


class TestChannelDistance:
    def test_same_measurement(self):
        m = computational_measurement("A", (2, 2))
        assert channel_distance(m, m) == 0.0

    def test_mutually_unbiased_qubit_is_one(self):
        z = computational_measurement("A", (2, 2))
        x = ProjectiveMeasurement((0,), (X_BASIS,))
        assert channel_distance(z, x) == pytest.approx(1.0)

    def test_basis_relabelling_invariant(self):
        a = ProjectiveMeasurement((0,), (X_BASIS,))
        b = ProjectiveMeasurement((0,), (X_BASIS[:, ::-1] * np.array([1j, -1]),))
        assert channel_distance(a, b) == pytest.approx(0.0, abs=1e-15)

    def test_small_rotation_is_quadratic(self):
        z = computational_measurement("A", (2, 2))
        t = 1e-3
        m = ProjectiveMeasurement((0,), (qubit_basis(t, 0.0),))
        # sin^2(t) between Choi matrices, normalised by 2 (D - 1) = 2
        assert channel_distance(z, m) == pytest.approx(math.sin(t) ** 2, rel=1e-6)

    def test_choi_trace(self):
        m = ProjectiveMeasurement((0, 1), (random_unitary(2, 1), random_unitary(3, 2)))
        assert np.trace(choi_matrix(m)).real == pytest.approx(6.0)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            channel_distance(computational_measurement("A", (2, 2)), computational_measurement("B", (2, 2)))


class TestStrategyAndJson:
    def test_s1_needs_fixed(self):
        with pytest.raises(ValueError):
            Strategy("S1")
        assert not Strategy("S1", computational_measurement("A", (2, 2))).state_dependent

    def test_unknown(self):
        with pytest.raises(ValueError):
            Strategy("S4")

    def test_roundtrip(self):
        m = ProjectiveMeasurement((0, 1), (random_unitary(2, 1), random_unitary(3, 2)))
        back = measurement_from_dict(measurement_to_dict(m))
        for a, b in zip(m.bases, back.bases):
            np.testing.assert_allclose(a, b)

    def test_angle_form(self):
        m = measurement_from_dict({"side": ["A"], "angles": [math.pi / 2, 0.0]}, dims=(2, 2))
        np.testing.assert_allclose(m.basis_on(0), X_BASIS)
        with pytest.raises(ValueError):
            measurement_from_dict({"side": ["A"], "angles": [0.0, 0.0]})
