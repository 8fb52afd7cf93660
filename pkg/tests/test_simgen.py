import numpy as np
import pytest

from mixep import CustomSpec, EPParams, SimSpec, generate, replicate_seeds
from mixep.simgen import TRUTH_BETAS, TRUTH_PIS, rng_for_seed


def reconstruction_errors(draw):
    core = ~draw.outlier_mask & (draw.labels > 0)
    betas = draw.truth.betas
    fitted = np.einsum("ij,ij->i", draw.data.x[core], betas[draw.labels[core] - 1])
    return (draw.data.y[core] - fitted) - draw.eps[core]


class TestSpecValidation:
    def test_bad_case(self):
        with pytest.raises(ValueError):
            SimSpec(case="V", n=10)

    def test_custom_requires_custom_spec(self):
        with pytest.raises(ValueError):
            SimSpec(case="custom", n=10)

    def test_bad_n(self):
        with pytest.raises(ValueError):
            SimSpec(case="I", n=0)


class TestDeterminism:
    @pytest.mark.parametrize("case", ["I", "II", "III", "IV"])
    def test_bit_identical_regeneration(self, case):
        a = generate(SimSpec(case=case, n=200, seed=33))
        b = generate(SimSpec(case=case, n=200, seed=33))
        np.testing.assert_array_equal(a.data.x, b.data.x)
        np.testing.assert_array_equal(a.data.y, b.data.y)
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.outlier_mask, b.outlier_mask)
        np.testing.assert_array_equal(a.eps, b.eps)

    def test_different_seeds_differ(self):
        a = generate(SimSpec(case="I", n=100, seed=1))
        b = generate(SimSpec(case="I", n=100, seed=2))
        assert not np.array_equal(a.data.y, b.data.y)

    def test_replicate_seeds_deterministic_and_distinct(self):
        pairs = [replicate_seeds(99, r) for r in range(20)]
        assert pairs == [replicate_seeds(99, r) for r in range(20)]
        flat = [s for pair in pairs for s in pair]
        assert len(set(flat)) == len(flat)


class TestCommonStructure:
    def test_columns_and_shapes(self):
        draw = generate(SimSpec(case="II", n=150, seed=0))
        assert draw.data.columns == ("intercept", "x1", "x2")
        np.testing.assert_array_equal(draw.data.x[:, 0], np.ones(150))
        assert draw.data.n == 150

    def test_truth_parameters(self):
        draw = generate(SimSpec(case="I", n=50, seed=0))
        np.testing.assert_array_equal(draw.truth.betas, TRUTH_BETAS)
        np.testing.assert_array_equal(draw.truth.pis, TRUTH_PIS)
        # x2 never enters either generating line
        np.testing.assert_array_equal(draw.truth.betas[:, 2], [0.0, 0.0])

    def test_label_counts_within_binomial_band(self):
        # 99.9% two-sided band for Binomial(400, 0.5)
        draw = generate(SimSpec(case="I", n=400, seed=7))
        count1 = int(np.sum(draw.labels == 1))
        assert 157 <= count1 <= 243

    @pytest.mark.parametrize("case", ["I", "II", "IV"])
    def test_core_rows_reconstruct_their_error_draw(self, case):
        draw = generate(SimSpec(case=case, n=300, seed=21))
        np.testing.assert_allclose(reconstruction_errors(draw), 0.0, atol=1e-12)


class TestCaseIII:
    def test_exact_outlier_count_and_geometry(self):
        draw = generate(SimSpec(case="III", n=400, seed=5))
        out = draw.outlier_mask
        assert int(out.sum()) == 20
        np.testing.assert_array_equal(draw.labels[out], np.zeros(20, dtype=int))
        # y = 10 + N(0,1), x1 = 2 + N(0,1)
        assert np.all(np.abs(draw.data.y[out] - 10.0) < 5.0)
        assert np.all(np.abs(draw.data.x[out, 1] - 2.0) < 5.0)
        assert abs(draw.data.y[out].mean() - 10.0) < 1.0
        assert abs(draw.data.x[out, 1].mean() - 2.0) < 1.0

    def test_clean_rows_untouched(self):
        draw = generate(SimSpec(case="III", n=400, seed=6))
        np.testing.assert_allclose(reconstruction_errors(draw), 0.0, atol=1e-12)


class TestCaseIV:
    def test_shift_band_and_mask(self):
        draw = generate(SimSpec(case="IV", n=400, seed=9))
        out = draw.outlier_mask
        # count ~ Binomial(400, 0.1); 99.99% band
        assert 17 <= int(out.sum()) <= 66
        # labels keep their generating component
        assert set(np.unique(draw.labels[out])) <= {1, 2}
        betas = draw.truth.betas
        fitted = np.einsum("ij,ij->i", draw.data.x[out], betas[draw.labels[out] - 1])
        shift = draw.data.y[out] - fitted - draw.eps[out]
        assert np.all(shift > 4.0) and np.all(shift < 6.0)


class TestCaseII:
    def test_contamination_fraction(self):
        draw = generate(SimSpec(case="II", n=4000, seed=10))
        # wide component has sd 5; flag residuals beyond 4 sigma of the core
        frac = np.mean(np.abs(draw.eps) > 4.0)
        assert 0.01 < frac < 0.06


class TestCustomSampler:
    def test_roundtrip_and_moments(self):
        spec = SimSpec(case="custom", n=5000, seed=12, custom=CustomSpec(
            pis=(0.3, 0.7),
            betas=((1.0, 2.0, 0.0), (-1.0, 0.0, 3.0)),
            errors=(EPParams(2.0, 0.5), EPParams(1.0, 1.0))))
        draw = generate(spec)
        assert draw.data.d == 3
        frac1 = np.mean(draw.labels == 1)
        assert abs(frac1 - 0.3) < 0.03
        np.testing.assert_allclose(reconstruction_errors(draw), 0.0, atol=1e-12)
        # component 2 errors are Laplace(1): mean |e| near 1
        e2 = draw.eps[draw.labels == 2]
        assert abs(np.mean(np.abs(e2)) - 1.0) < 0.06
        np.testing.assert_array_equal(draw.truth.betas,
                                      [[1.0, 2.0, 0.0], [-1.0, 0.0, 3.0]])

    def test_weights_validated(self):
        with pytest.raises(ValueError):
            CustomSpec(pis=(0.5, 0.4), betas=((0.0,), (1.0,)),
                       errors=(EPParams(1.0, 1.0), EPParams(1.0, 1.0)))


class TestExternalRng:
    def test_explicit_generator_overrides_seed(self):
        rng = rng_for_seed(500)
        a = generate(SimSpec(case="I", n=50, seed=0), rng=rng)
        b = generate(SimSpec(case="I", n=50, seed=0))
        assert not np.array_equal(a.data.y, b.data.y)
