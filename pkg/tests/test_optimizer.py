import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcorr.measurement import block_unitaries, bloch_axis, qubit_bases
from qcorr.optimizer import (Objective, OptimizerBudgetError, SearchConfig, basis_dissimilarity, block_grids,
                             brute_force_oracle, optimize, product_grid, select_starts)


def alignment(target):
    """``(n . m)^2`` for the Bloch axis ``n`` of the first basis vector: basis-relabelling invariant."""
    m = np.asarray(target, float) / np.linalg.norm(target)

    def f(p):
        b = qubit_bases(p[:, 0], p[:, 1])
        v = b[:, :, 0]
        n = np.stack([2 * np.real(v[:, 0].conj() * v[:, 1]), 2 * np.imag(v[:, 0].conj() * v[:, 1]),
                      np.abs(v[:, 0]) ** 2 - np.abs(v[:, 1]) ** 2], axis=1)
        return (n @ m) ** 2

    return f


class TestConfig:
    def test_defaults(self):
        cfg = SearchConfig()
        assert cfg.shrink_tol == 1e-8 and cfg.max_evals == 20000 and cfg.multistart == 12

    @pytest.mark.parametrize("field", ["theta_points", "multistart", "max_evals"])
    def test_rejects_zero(self, field):
        with pytest.raises(ValueError):
            SearchConfig(**{field: 0})

    def test_rejects_bad_direction(self):
        with pytest.raises(ValueError):
            Objective(lambda p: p[:, 0], (2,), "sideways")


class TestGrid:
    def test_single_qubit_size(self):
        cfg = SearchConfig()
        g = product_grid(block_grids((2,), cfg))
        assert g.shape[1] == 2
        assert g.shape[0] <= cfg.theta_points * cfg.phi_points

    def test_two_qubit_product(self):
        cfg = SearchConfig()
        single = block_grids((2, 2), cfg)[0]
        assert product_grid(block_grids((2, 2), cfg)).shape == (single.shape[0] ** 2, 4)

    def test_dissimilarity_zero_for_same(self):
        p = np.array([0.3, 1.0])
        assert basis_dissimilarity((2,), p, p[None, :])[0] == pytest.approx(0.0, abs=1e-14)

    def test_starts_are_distinct(self):
        cfg = SearchConfig()
        g = product_grid(block_grids((2,), cfg))
        vals = alignment([0, 0, 1])(g) * -1
        idx = select_starts(g, vals, (2,), 6, 0.05)
        assert len(idx) <= 6 and len(set(idx.tolist())) == len(idx)
        for i in idx:
            others = [j for j in idx if j != i]
            if others:
                assert basis_dissimilarity((2,), g[i], g[others]).min() >= 0.05 - 1e-12


class TestOptimize:
    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.05, math.pi - 0.05), st.floats(0, 2 * math.pi))
    def test_finds_axis(self, theta, phi):
        obj = Objective(alignment(bloch_axis(theta, phi)), (2,), "maximize")
        res = optimize(obj)
        assert res.value == pytest.approx(1.0, abs=1e-9)

    def test_minimize_off_axis(self):
        obj = Objective(alignment([1, 2, 3]), (2,), "minimize")
        assert optimize(obj).value == pytest.approx(0.0, abs=1e-9)

    def test_two_blocks(self):
        fa, fb = alignment([1, 0, 1]), alignment([0, 1, 0])
        obj = Objective(lambda p: fa(p[:, :2]) * fb(p[:, 2:]), (2, 2), "maximize")
        res = optimize(obj)
        assert res.value == pytest.approx(1.0, abs=1e-8)
        assert res.params.shape == (4,)

    def test_qutrit_block(self):
        psi = np.array([1, 1j, -1]) / math.sqrt(3)

        def f(p):
            u = block_unitaries(3, p)
            return np.sum(np.abs(np.einsum("i,nik->nk", psi.conj(), u)) ** 4, axis=1)

        res = optimize(Objective(f, (3,), "maximize"))
        assert res.value == pytest.approx(1.0, abs=1e-6)

    def test_never_worse_than_grid(self):
        f = alignment([0.3, -0.2, 0.9])
        obj = Objective(f, (2,), "maximize")
        cfg = SearchConfig()
        grid = product_grid(block_grids((2,), cfg))
        assert optimize(obj, cfg).value >= f(grid).max() - 1e-15

    def test_deterministic(self):
        obj = Objective(alignment([1, 1, 0]), (2,), "maximize")
        a, b = optimize(obj, SearchConfig(seed=3)), optimize(obj, SearchConfig(seed=3))
        np.testing.assert_array_equal(a.params, b.params)

    def test_diagnostics(self):
        res = optimize(Objective(alignment([0, 0, 1]), (2,), "maximize"))
        d = res.diagnostics
        assert d["grid_points"] > 0 and d["evaluations"] <= SearchConfig().max_evals
        assert set(d) >= {"starts", "iterations", "history_tail", "converged"}

    def test_budget_error(self):
        with pytest.raises(OptimizerBudgetError):
            optimize(Objective(alignment([0, 0, 1]), (2,)), SearchConfig(max_evals=10))

    def test_tight_budget_still_returns_grid_best(self):
        cfg = SearchConfig()
        n_grid = product_grid(block_grids((2,), cfg)).shape[0]
        res = optimize(Objective(alignment([0, 0, 1]), (2,), "maximize"), SearchConfig(max_evals=n_grid))
        assert not res.diagnostics["converged"]
        assert res.value == pytest.approx(1.0)

    def test_no_parameters(self):
        res = optimize(Objective(lambda p: np.full(p.shape[0], 0.25), ()))
        assert res.value == 0.25 and res.params.shape == (0,)


class TestOracle:
    def test_agrees_with_optimizer(self):
        obj = Objective(alignment([0.2, 0.7, -0.4]), (2,), "maximize")
        val, _ = brute_force_oracle(obj)
        # grid plus zooming resolves the extremum to about 1e-6
        assert val == pytest.approx(optimize(obj).value, abs=1e-5)
        assert val <= optimize(obj).value + 1e-12

    def test_two_qubits(self):
        fa, fb = alignment([1, 0, 0]), alignment([0, 0, 1])
        obj = Objective(lambda p: fa(p[:, :2]) + fb(p[:, 2:]), (2, 2), "maximize")
        val, params = brute_force_oracle(obj)
        assert val == pytest.approx(2.0, abs=1e-6)
        assert params.shape == (4,)

    def test_rejects_qutrits(self):
        with pytest.raises(ValueError):
            brute_force_oracle(Objective(lambda p: p[:, 0], (3,)))
