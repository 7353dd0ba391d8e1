import numpy as np
import numpy.testing as npt
import pytest

from samnet import tensor as T
from samnet.encoders import (
    FrameEncoder,
    FrameGrid,
    QuestionEncoder,
    VocabularyError,
    load_vocabulary,
    save_vocabulary,
)
from samnet.gradcheck import grad_check
from samnet.params import ParameterStore


def store_with_seed(seed=0):
    return ParameterStore(np.random.default_rng(seed))


class TestQuestionEncoder:
    def test_single_token_shapes(self):
        enc = QuestionEncoder(store_with_seed(0), vocab_size=10, d=8)
        out = enc.encode([3])
        assert out.cw.shape == (1, 8)
        assert out.q.shape == (8,)
        assert np.all(np.isfinite(out.q.data))

    def test_shapes_contract(self):
        enc = QuestionEncoder(store_with_seed(1), vocab_size=10, d=16)
        out = enc.encode([1, 2, 3, 4, 5])
        assert out.cw.shape == (5, 16)
        assert out.q.shape == (16,)

    def test_out_of_range_token_raises(self):
        enc = QuestionEncoder(store_with_seed(2), vocab_size=4, d=8)
        with pytest.raises(VocabularyError):
            enc.encode([1, 4])
        with pytest.raises(VocabularyError):
            enc.encode([])

    def test_reversal_changes_question_embedding(self):
        # the bidirectional encoder is order sensitive for nearly every init
        tokens = [1, 2, 3, 4]
        changed = 0
        for seed in range(100):
            enc = QuestionEncoder(store_with_seed(seed), vocab_size=6, d=8)
            q_fwd = enc.encode(tokens).q.data
            q_rev = enc.encode(tokens[::-1]).q.data
            if not np.allclose(q_fwd, q_rev, atol=1e-6):
                changed += 1
        assert changed >= 95

    def test_odd_width_rejected(self):
        with pytest.raises(ValueError):
            QuestionEncoder(store_with_seed(3), vocab_size=4, d=7)

    def test_grad_check(self):
        with T.precision("float64"):
            store = store_with_seed(4)
            enc = QuestionEncoder(store, vocab_size=5, d=8)
            readout = np.random.default_rng(4).normal(size=8)

            def f():
                out = enc.encode([0, 2, 4])
                return T.add(
                    T.matmul(T.Tensor(readout), out.q),
                    T.mean(T.square(out.cw)),
                )

            err = grad_check(f, store.parameters(), eps=1e-6)
        assert err < 1e-7


class TestFrameEncoder:
    def test_shape_contract(self):
        enc = FrameEncoder(store_with_seed(5), in_channels=15, d=64)
        feats = enc.encode(np.zeros((1, 5, 5, 15), dtype=np.float32))
        assert feats.shape == (1, 25, 64)

    def test_constant_input_gives_identical_interior_rows(self):
        enc = FrameEncoder(store_with_seed(6), in_channels=4, d=8)
        feats = enc.encode(np.zeros((1, 6, 6, 4), dtype=np.float32)).data[0]
        grid = feats.reshape(6, 6, 8)
        interior = grid[2:4, 2:4].reshape(-1, 8)
        for row in interior[1:]:
            npt.assert_allclose(row, interior[0], atol=1e-6)

    def test_translation_equivariance_in_interior(self):
        enc = FrameEncoder(store_with_seed(7), in_channels=3, d=8)
        a = np.zeros((7, 7, 3), dtype=np.float32)
        b = np.zeros((7, 7, 3), dtype=np.float32)
        a[3, 2, 1] = 1.0
        b[3, 3, 1] = 1.0  # same object moved one cell to the right
        fa = enc.encode(a).data[0].reshape(7, 7, 8)
        fb = enc.encode(b).data[0].reshape(7, 7, 8)
        for i in range(2, 5):
            for j in (3, 4):
                npt.assert_allclose(fb[i, j], fa[i, j - 1], atol=1e-5)

    def test_empty_grid_rejected(self):
        enc = FrameEncoder(store_with_seed(8), in_channels=3, d=8)
        with pytest.raises(T.ShapeError):
            enc.encode(np.zeros((1, 0, 4, 3), dtype=np.float32))

    def test_channel_mismatch_rejected(self):
        enc = FrameEncoder(store_with_seed(9), in_channels=3, d=8)
        with pytest.raises(T.ShapeError):
            enc.encode(np.zeros((1, 4, 4, 5), dtype=np.float32))

    def test_grad_check(self):
        with T.precision("float64"):
            store = store_with_seed(10)
            enc = FrameEncoder(store, in_channels=2, d=8)
            rng = np.random.default_rng(10)
            frame = rng.normal(size=(1, 3, 3, 2))

            def f():
                return T.mean(T.square(enc.encode(frame)))

            err = grad_check(f, store.parameters(), eps=1e-6)
        assert err < 1e-7


class TestFrameGrid:
    def _blank(self):
        return np.zeros((2, 2, 1 + 3 + 2))

    def test_valid_grid(self):
        data = self._blank()
        data[0, 1, 0] = 1
        data[0, 1, 2] = 1  # color 1
        data[0, 1, 4] = 1  # shape 0
        grid = FrameGrid(data, n_colors=3, n_shapes=2)
        assert grid.height == 2 and grid.width == 2 and grid.channels == 6

    def test_empty_cell_with_attributes_rejected(self):
        data = self._blank()
        data[1, 1, 2] = 1
        with pytest.raises(ValueError):
            FrameGrid(data, n_colors=3, n_shapes=2)

    def test_occupied_cell_needs_exactly_one_color_and_shape(self):
        data = self._blank()
        data[0, 0, 0] = 1
        with pytest.raises(ValueError):
            FrameGrid(data, n_colors=3, n_shapes=2)
        data[0, 0, 1] = 1
        data[0, 0, 2] = 1
        data[0, 0, 4] = 1
        with pytest.raises(ValueError):
            FrameGrid(data, n_colors=3, n_shapes=2)

    def test_non_binary_rejected(self):
        data = self._blank()
        data[0, 0, 0] = 0.5
        with pytest.raises(ValueError):
            FrameGrid(data, n_colors=3, n_shapes=2)


def test_vocabulary_round_trip(tmp_path):
    tokens = ["exist", "red", "circle", "now"]
    path = tmp_path / "vocab.txt"
    save_vocabulary(tokens, path)
    assert load_vocabulary(path) == tokens
    assert path.read_text().splitlines()[2] == "circle"
