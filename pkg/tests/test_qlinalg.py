import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcorr.qlinalg import (SX, SY, SZ, BlochForm2Q, DensityMatrix, StateValidationError, bloch_projector,
                           degenerate_clusters, eig_hermitian, marginal_product, marginals, partial_trace,
                           partial_trace_array, pure_state, random_density, random_local_unitary, random_product,
                           random_schmidt, random_unitary, schmidt_decomposition, state_from_dict, state_to_dict,
                           load_state, swap_parties, tensor, tensor_all)

BELL = np.array([1, 0, 0, 1]) / math.sqrt(2)


class TestValidation:
    def test_accepts_maximally_mixed(self):
        rho = DensityMatrix(np.eye(4) / 4, (2, 2))
        assert rho.dim == 4 and rho.n_parties == 2
        assert rho.purity() == pytest.approx(0.25)

    def test_reports_every_failure(self):
        m = np.array([[2, 1], [0, 0]], dtype=complex)
        with pytest.raises(StateValidationError) as err:
            DensityMatrix(m, (2,))
        fails = err.value.failures
        assert any("Hermitian" in f for f in fails)
        assert any("trace" in f for f in fails)

    def test_not_psd(self):
        with pytest.raises(StateValidationError, match="positive semidefinite"):
            DensityMatrix(np.diag([1.5, -0.5]), (2,))

    @pytest.mark.parametrize("dims", [(2,), (2, 3)])
    def test_shape_mismatch(self, dims):
        with pytest.raises(StateValidationError, match="shape"):
            DensityMatrix(np.eye(4) / 4, dims)

    def test_dimension_one_rejected(self):
        with pytest.raises(StateValidationError, match=">= 2"):
            DensityMatrix(np.eye(2) / 2, (1, 2))

    def test_matrix_is_read_only(self):
        rho = DensityMatrix(np.eye(2) / 2, (2,))
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 1


class TestPartialTrace:
    def test_bell_marginals_are_mixed(self):
        rho = pure_state(BELL, (2, 2))
        for m in marginals(rho):
            np.testing.assert_allclose(m.matrix, np.eye(2) / 2, atol=1e-15)

    def test_keeps_requested_order(self):
        a, b, c = (random_density([d], seed=s) for d, s in ((2, 1), (3, 2), (2, 3)))
        abc = tensor_all([a, b, c])
        np.testing.assert_allclose(partial_trace(abc, [0, 2]).matrix, tensor(a, c).matrix, atol=1e-14)
        np.testing.assert_allclose(partial_trace(abc, [1]).matrix, b.matrix, atol=1e-14)

    def test_batched(self):
        batch = np.stack([random_density((2, 2), seed=s).matrix for s in range(3)])
        out = partial_trace_array(batch, (2, 2), [1])
        assert out.shape == (3, 2, 2)
        np.testing.assert_allclose(out[1], partial_trace(random_density((2, 2), seed=1), [1]).matrix)

    def test_invalid_selection(self):
        with pytest.raises(ValueError):
            partial_trace_array(np.eye(4), (2, 2), [2])

    def test_marginal_product_of_product_is_identity_map(self):
        rho = random_product((2, 3), seed=4)
        assert marginal_product(rho).allclose(rho, atol=1e-13)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([(2, 2), (2, 3), (3, 2)]))
    def test_tensor_factor_recovered(self, seed, dims):
        a = random_density([dims[0]], seed=seed)
        b = random_density([dims[1]], seed=seed + 1)
        ab = tensor(a, b)
        np.testing.assert_allclose(partial_trace(ab, [0]).matrix, a.matrix, atol=1e-13)
        np.testing.assert_allclose(partial_trace(ab, [1]).matrix, b.matrix, atol=1e-13)


class TestEigen:
    def test_sorted_nonincreasing(self):
        w, v = eig_hermitian(np.diag([0.1, 0.7, 0.2]))
        np.testing.assert_allclose(w, [0.7, 0.2, 0.1])
        np.testing.assert_allclose(np.abs(v[:, 0]), [0, 1, 0])

    def test_degenerate_basis_is_canonical(self):
        u = random_unitary(2, seed=5)
        m = u @ np.eye(2) @ u.conj().T * 0.5
        _, v = eig_hermitian(m)
        np.testing.assert_allclose(v, np.eye(2), atol=1e-12)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            eig_hermitian(np.array([[0, 1], [0, 0]]))

    def test_clusters(self):
        assert degenerate_clusters(np.array([0.5, 0.5, 0.2, 0.1, 0.1])) == [[0, 1], [2], [3, 4]]

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_reconstructs(self, seed):
        m = random_density((2, 2), seed=seed).matrix
        w, v = eig_hermitian(m)
        np.testing.assert_allclose((v * w) @ v.conj().T, m, atol=1e-12)


class TestRandom:
    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_unitary(self, d):
        u = random_unitary(d, seed=d)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(d), atol=1e-12)

    def test_seed_reproducible(self):
        assert random_density((2, 2), seed=7).allclose(random_density((2, 2), seed=7))
        assert not random_density((2, 2), seed=7).allclose(random_density((2, 2), seed=8))

    @pytest.mark.parametrize("rank", [1, 2, 4])
    def test_rank(self, rank):
        rho = random_density((2, 2), rank=rank, seed=0)
        assert np.linalg.matrix_rank(rho.matrix, tol=1e-10) == rank

    def test_bad_rank(self):
        with pytest.raises(ValueError):
            random_density((2, 2), rank=5)

    def test_local_unitary_preserves_marginal_spectra(self):
        rho = random_density((2, 2), seed=3)
        r2 = rho.evolve(random_local_unitary((2, 2), seed=4))
        for a, b in zip(marginals(rho), marginals(r2)):
            np.testing.assert_allclose(np.linalg.eigvalsh(a.matrix), np.linalg.eigvalsh(b.matrix), atol=1e-12)


class TestSchmidt:
    def test_bell(self):
        sv = schmidt_decomposition(BELL, (2, 2))
        np.testing.assert_allclose(sv.coefficients, [0.5, 0.5])
        assert sv.state().allclose(pure_state(BELL, (2, 2)))

    def test_random_roundtrip(self):
        sv = random_schmidt((2, 3), seed=2)
        rho = sv.state()
        w = np.linalg.eigvalsh(partial_trace(rho, [0]).matrix)[::-1]
        np.testing.assert_allclose(w, sv.coefficients, atol=1e-12)

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            from qcorr.qlinalg import SchmidtVector
            SchmidtVector(np.array([0.3, 0.7]), np.eye(2), np.eye(2))


class TestBlochAndSwap:
    def test_bell_correlation_matrix(self):
        f = BlochForm2Q.from_density(pure_state(BELL, (2, 2)))
        np.testing.assert_allclose(f.T, np.diag([1, -1, 1]), atol=1e-15)
        np.testing.assert_allclose(f.a, 0, atol=1e-15)

    def test_roundtrip(self):
        rho = random_density((2, 2), seed=9)
        assert BlochForm2Q.from_density(rho).to_density().allclose(rho, atol=1e-13)

    def test_projector(self):
        p = bloch_projector([0, 1, 0])
        np.testing.assert_allclose(np.trace(p @ SY), 1)
        np.testing.assert_allclose(np.trace(p @ SX), 0, atol=1e-15)
        np.testing.assert_allclose(np.trace(p @ SZ), 0, atol=1e-15)

    def test_swap(self):
        a, b = random_density([2], seed=1), random_density([3], seed=2)
        s = swap_parties(tensor(a, b))
        assert s.dims == (3, 2)
        assert s.allclose(tensor(b, a), atol=1e-14)


class TestJson:
    def test_roundtrip(self, tmp_path):
        rho = random_density((2, 3), seed=1)
        p = tmp_path / "s.json"
        p.write_text(json.dumps(state_to_dict(rho)))
        assert load_state(str(p)).allclose(rho, atol=1e-15)

    def test_wrong_entry_count(self):
        with pytest.raises(StateValidationError, match="entries"):
            state_from_dict({"dims": [2], "matrix": [[1, 0]]})

    def test_missing_key(self):
        with pytest.raises(StateValidationError, match="malformed"):
            state_from_dict({"matrix": []})

    def test_invalid_state(self):
        with pytest.raises(StateValidationError, match="trace"):
            state_from_dict({"dims": [2], "matrix": [[1, 0], [0, 0], [0, 0], [1, 0]]})
