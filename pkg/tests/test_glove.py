"""Tests for co-occurrence counting and the weighted least-squares fit."""

import numpy as np
import pytest

from embench.corpus import Document
from embench.errors import DataError, DataFormatError
from embench.glove import (
    CooccurrenceTable,
    accumulate_cooccurrence,
    export_glove,
    glove_cell_gradients,
    glove_cost,
    glove_epoch,
    init_glove,
    read_cooccurrence,
    train_glove,
    weight,
    write_cooccurrence,
)
from embench.optim import AdaGradState


def docs(*token_lists):
    return [Document(np.array(ids, dtype=np.int64)) for ids in token_lists]


class TestCooccurrence:
    """Tests for co-occurrence accumulation."""

    def test_adjacent_pairs_counted_both_ways(self):
        table = accumulate_cooccurrence(docs([0, 1, 2]), radius=1, vocab_size=3)
        assert table.get(0, 1) == 1.0
        assert table.get(1, 0) == 1.0
        assert table.get(1, 2) == 1.0
        assert table.get(0, 2) == 0.0

    def test_no_distance_weighting(self):
        table = accumulate_cooccurrence(docs([0, 1, 2]), radius=2, vocab_size=3)
        assert table.get(0, 2) == table.get(0, 1) == 1.0

    def test_repeated_word(self):
        table = accumulate_cooccurrence(docs([0, 0]), radius=1, vocab_size=1)
        assert table.get(0, 0) == 2.0

    def test_symmetric(self):
        rng = np.random.default_rng(0)
        corpus = docs(*[rng.integers(6, size=12) for _ in range(5)])
        table = accumulate_cooccurrence(corpus, radius=3, vocab_size=6)
        for i, j in zip(table.rows, table.cols):
            assert table.get(int(i), int(j)) == table.get(int(j), int(i))

    def test_total_pairs(self):
        # n tokens, radius w: 2 * sum_{o=1..w} (n - o) pairs
        table = accumulate_cooccurrence(docs(list(range(10))), radius=3, vocab_size=10)
        assert table.total() == 2 * (9 + 8 + 7)

    def test_short_documents_contribute_nothing(self):
        table = accumulate_cooccurrence(docs([1], []), radius=5, vocab_size=2)
        assert len(table) == 0

    def test_workers_do_not_change_counts(self):
        rng = np.random.default_rng(1)
        corpus = docs(*[rng.integers(8, size=20) for _ in range(30)])
        one = accumulate_cooccurrence(corpus, radius=2, vocab_size=8, workers=1)
        four = accumulate_cooccurrence(corpus, radius=2, vocab_size=8, workers=4)
        np.testing.assert_array_equal(one.values, four.values)
        np.testing.assert_array_equal(one.rows, four.rows)


class TestCooccurrenceFile:
    """Tests for the co-occurrence table file."""

    def test_write_then_read(self, tmp_path):
        table = accumulate_cooccurrence(docs([0, 1, 2, 1]), radius=2, vocab_size=3)
        path = tmp_path / "cooc.txt"
        write_cooccurrence(path, table)
        loaded = read_cooccurrence(path, vocab_size=3)
        np.testing.assert_array_equal(loaded.values, table.values)
        np.testing.assert_array_equal(loaded.cols, table.cols)

    def test_out_of_range_cell(self, tmp_path):
        path = tmp_path / "cooc.txt"
        path.write_text("0 1 2.0\n0 7 1.0\n")
        with pytest.raises(DataFormatError, match=":2:"):
            read_cooccurrence(path, vocab_size=3)


class TestWeight:
    """Tests for the clipped power weight."""

    def test_saturates_at_x_max(self):
        assert weight(100.0) == 1.0
        assert weight(1000.0) == 1.0

    def test_power_below_x_max(self):
        assert weight(10.0) == pytest.approx(0.1 ** 0.75)


class TestGloveGradients:
    """Finite-difference checks for the cell loss."""

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        step = 1e-5
        for instance in range(20):
            params = init_glove(20, 8, seed=instance)
            for block in params.blocks().values():
                block[...] = rng.normal(scale=0.3, size=block.shape)
            i, j = (int(v) for v in rng.integers(20, size=2))
            x = float(rng.uniform(1.0, 150.0))
            _, grads = glove_cell_gradients(params, i, j, x)
            targets = {"main_emb": i, "context_emb": j, "main_bias": i, "context_bias": j}
            for name, row in targets.items():
                block = getattr(params, name)
                for col in range(block[row].size):
                    index = (row, col) if block.ndim == 2 else (row,)
                    saved = block[index]
                    block[index] = saved + step
                    plus = glove_cell_gradients(params, i, j, x)[0]
                    block[index] = saved - step
                    minus = glove_cell_gradients(params, i, j, x)[0]
                    block[index] = saved
                    numeric = (plus - minus) / (2 * step)
                    analytic = grads[name][col] if block.ndim == 2 else grads[name][0]
                    np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-7)

    def test_cost_is_sum_of_cell_losses(self):
        table = accumulate_cooccurrence(docs([0, 1, 2, 0, 3]), radius=2, vocab_size=4)
        params = init_glove(4, 5, seed=2)
        cells = sum(
            glove_cell_gradients(params, int(i), int(j), float(x))[0]
            for i, j, x in zip(table.rows, table.cols, table.values)
        )
        assert glove_cost(table, params) == pytest.approx(cells)


class TestTrainGlove:
    """Tests for fitting and export."""

    @pytest.fixture
    def table(self):
        rng = np.random.default_rng(3)
        return accumulate_cooccurrence(docs(*[rng.integers(10, size=30) for _ in range(20)]), 3, 10)

    def test_cost_decreases(self, table):
        params = init_glove(10, 6, seed=1)
        before = glove_cost(table, params)
        train_glove(table, params, epochs=10, seed=1)
        assert glove_cost(table, params) < before

    def test_deterministic(self, table):
        first = train_glove(table, init_glove(10, 6, seed=1), epochs=2, seed=4)
        second = train_glove(table, init_glove(10, 6, seed=1), epochs=2, seed=4)
        np.testing.assert_array_equal(first.main_emb, second.main_emb)

    def test_empty_table(self):
        empty = CooccurrenceTable(np.empty(0, int), np.empty(0, int), np.empty(0), vocab_size=3)
        with pytest.raises(DataError, match="empty co-occurrence table"):
            train_glove(empty, init_glove(3, 2, seed=1), epochs=1)

    def test_export_sum_or_main(self):
        params = init_glove(4, 3, seed=1)
        np.testing.assert_array_equal(export_glove(params), params.main_emb + params.context_emb)
        np.testing.assert_array_equal(export_glove(params, main_only=True), params.main_emb)

    def test_exact_fit_has_zero_loss_and_no_update(self):
        table = CooccurrenceTable(np.array([0, 1]), np.array([1, 0]), np.array([4.0, 4.0]), vocab_size=2)
        params = init_glove(2, 3, seed=1)
        params.main_emb[...] = 0.0
        params.context_emb[...] = 0.0
        params.main_bias[...] = np.log(4.0)
        before = {name: block.copy() for name, block in params.blocks().items()}
        optimizer = AdaGradState.for_blocks(params.blocks(), lr=0.1)

        assert glove_epoch(table, params, optimizer, (1, 1)) == 0.0
        train_glove(table, params, epochs=3, optimizer=optimizer)
        for name, block in params.blocks().items():
            np.testing.assert_array_equal(block, before[name])
            assert not optimizer.accum[name].any()

    def test_single_cell_converges_to_log_count(self):
        table = CooccurrenceTable(np.array([0]), np.array([0]), np.array([np.e]), vocab_size=1)
        params = train_glove(table, init_glove(1, 1, seed=1), epochs=500, x_max=1.0)
        fitted = params.main_emb[0] @ params.context_emb[0] + params.main_bias[0] + params.context_bias[0]
        assert fitted == pytest.approx(1.0, abs=1e-3)
