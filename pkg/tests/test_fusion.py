import numpy as np
import pytest

from fusionface.fusion import FeatureNormalizer, WeightSet, fit_normalizer, fuse


def _blocks(rng, n=20, lengths=(5, 7, 4, 3)):
    return [rng.normal(loc=i * 10, scale=i + 1, size=(n, m)) for i, m in enumerate(lengths)]


class TestWeightSet:
    def test_parse_and_str(self):
        w = WeightSet.parse("0.5, 1,0,0")
        assert w.as_tuple() == (0.5, 1.0, 0.0, 0.0)
        assert str(w) == "0.5,1,0,0"
        assert WeightSet.parse(str(WeightSet(0.12, 0, 1, 0))) == WeightSet(0.12, 0, 1, 0)

    @pytest.mark.parametrize("text", ["1,1,1", "1,1,1,1,1", "a,1,1,1", "-1,0,0,0", "nan,0,0,0", "inf,1,1,1"])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            WeightSet.parse(text)

    def test_usable(self):
        assert not WeightSet(0, 0, 0, 0).usable
        assert WeightSet(0, 0, 0, 0.1).usable


class TestNormalizer:
    def test_identical_rows_clamp(self):
        row = [np.array([[1.0, 2.0]] * 2), np.array([[3.0]] * 2), np.array([[4.0]] * 2), np.array([[5.0]] * 2)]
        norm = fit_normalizer(row)
        np.testing.assert_array_equal(norm.means[0], [1, 2])
        assert all(np.all(s == 1e-8) for s in norm.stds)

    def test_hand_arithmetic(self):
        blocks = [np.array([[0.0], [2.0]])] + [np.zeros((2, 1))] * 3
        norm = fit_normalizer(blocks)
        assert norm.means[0][0] == 1 and norm.stds[0][0] == 1

    def test_matches_two_pass_oracle(self, rng):
        blocks = _blocks(rng)
        norm = fit_normalizer(blocks)
        for b, m, s in zip(blocks, norm.means, norm.stds):
            for j in range(b.shape[1]):
                col = b[:, j].tolist()
                mean = sum(col) / len(col)
                std = (sum((v - mean) ** 2 for v in col) / len(col)) ** 0.5
                assert abs(m[j] - mean) <= 1e-12 * max(1, abs(mean))
                assert abs(s[j] - std) <= 1e-12 * max(1, std)
        assert norm.block_lengths == (5, 7, 4, 3) and norm.n_features == 19

    def test_errors(self, rng):
        with pytest.raises(ValueError):
            fit_normalizer([np.zeros((1, 2))] * 4)
        with pytest.raises(ValueError):
            fit_normalizer([np.zeros((3, 2)), np.zeros((2, 2)), np.zeros((3, 1)), np.zeros((3, 1))])
        with pytest.raises(ValueError):
            fit_normalizer(_blocks(rng)[:3])


class TestFuse:
    def test_all_zero_weights(self, rng):
        blocks = _blocks(rng)
        out = fuse(*[b[0] for b in blocks], fit_normalizer(blocks), WeightSet(0, 0, 0, 0))
        assert out.values.shape == (19,)
        assert np.all(out.values == 0)

    def test_single_block(self, rng):
        blocks = _blocks(rng)
        out = fuse(*[b[0] for b in blocks], fit_normalizer(blocks), WeightSet(1, 0, 0, 0))
        assert np.all(out.values[5:] == 0)
        assert np.any(out.block(0) != 0)

    def test_weight_scales_block_exactly(self, rng):
        blocks = _blocks(rng)
        norm = fit_normalizer(blocks)
        a = fuse(*blocks, norm, WeightSet(1, 1, 1, 1))
        b = fuse(*blocks, norm, WeightSet(1, 2, 1, 1))
        np.testing.assert_array_equal(b.block(1), 2 * a.block(1))
        for i in (0, 2, 3):
            np.testing.assert_array_equal(b.block(i), a.block(i))

    def test_z_scored_training_blocks(self, rng):
        blocks = _blocks(rng)
        fused = fuse(*blocks, fit_normalizer(blocks), WeightSet(1, 1, 1, 1))
        np.testing.assert_allclose(fused.values.mean(axis=0), 0, atol=1e-9)
        np.testing.assert_allclose(fused.values.std(axis=0), 1, atol=1e-6)

    def test_without_normalizer(self, rng):
        blocks = _blocks(rng)
        fused = fuse(*blocks, None, WeightSet(2, 1, 0, 1))
        np.testing.assert_array_equal(fused.block(0), 2 * blocks[0])
        np.testing.assert_array_equal(fused.block(3), blocks[3])

    def test_length_mismatch(self, rng):
        blocks = _blocks(rng)
        norm = fit_normalizer(blocks)
        with pytest.raises(ValueError):
            fuse(blocks[0][0], blocks[1][0][:3], blocks[2][0], blocks[3][0], norm, WeightSet())

    def test_normalizer_layout(self):
        norm = FeatureNormalizer((np.zeros(2), np.zeros(3), np.zeros(1), np.zeros(1)), (np.ones(2),) * 4)
        assert norm.block_lengths == (2, 3, 1, 1)
