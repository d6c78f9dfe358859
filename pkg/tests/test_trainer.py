"""Tests for multi-iteration training and early stopping."""

from itertools import product

import numpy as np
import pytest

from embench.config import EarlyStop, ModelKind, TrainConfig
from embench.corpus import build_vocab
from embench.errors import DataError, NumericalDivergence, UsageError
from embench.evaluation import TaskResult
from embench.neural import NeuralModel
from embench.pgr import pgr
from embench.storage import read_embeddings
from embench.tasks import EvalBundle, TaskSpec
from embench.trainer import (
    EarlyStopper,
    IterationRecord,
    compare_stopping_strategies,
    read_run_log,
    run_dimension_sweep,
    run_training,
    select_iteration,
    split_train_validation,
)


@pytest.fixture
def corpus():
    rng = np.random.default_rng(0)
    words = [f"w{i}" for i in range(15)]
    return [[str(w) for w in rng.choice(words, size=20)] for _ in range(40)]


@pytest.fixture
def vocab(corpus):
    return build_vocab(corpus)


@pytest.fixture
def bundle(tmp_path):
    path = tmp_path / "ws.txt"
    rng = np.random.default_rng(1)
    lines = [f"w{i}\tw{j}\t{rng.uniform(0, 10):.2f}" for i, j in [(0, 1), (2, 3), (4, 5), (1, 6), (7, 8), (3, 9)]]
    path.write_text("\n".join(lines) + "\n")
    return EvalBundle([TaskSpec("ws", path)])


def small_config(**overrides) -> TrainConfig:
    values = {"dim": 8, "radius": 2, "iterations": 2, "subsample": 0.1, "val_fraction": 0.8}
    values.update(overrides)
    return TrainConfig().updated(values)


def scripted(values):
    """A callable returning the next value of `values` on each call."""
    it = iter(values)
    return lambda *args, **kwargs: next(it)


class TestSplit:
    """Tests for the train/validation split."""

    def test_counts(self):
        train, val = split_train_validation(list(range(100)), 0.95, seed=1)
        assert (len(train), len(val)) == (95, 5)

    def test_disjoint_and_exhaustive(self):
        docs = list(range(37))
        train, val = split_train_validation(docs, 0.95, seed=3)
        assert sorted(train + val) == docs

    def test_deterministic(self):
        assert split_train_validation(list(range(50)), seed=4) == split_train_validation(list(range(50)), seed=4)

    def test_needs_two_documents(self):
        with pytest.raises(DataError):
            split_train_validation([["a"]])

    def test_two_documents_split_one_each(self):
        train, val = split_train_validation([["a"], ["b"]], 0.95, seed=1)
        assert (len(train), len(val)) == (1, 1)


class TestSelectIteration:
    """Tests for best-so-far with patience."""

    def test_task_peak(self):
        assert select_iteration([1, 2, 3, 2.9, 2.8], higher_is_better=True, patience=2) == (3, 5)

    def test_validation_loss_peak(self):
        assert select_iteration([4.0, 3.5, 3.6, 3.7], higher_is_better=False, patience=2) == (2, 4)

    def test_runs_to_the_end_while_improving(self):
        assert select_iteration([1, 2, 3, 4], patience=2) == (4, 4)

    def test_ties_select_earliest(self):
        stopper = EarlyStopper(higher_is_better=True, patience=3)
        for i, value in enumerate([1.0, 2.0, 2.0, 2.0], 1):
            stopper.update(i, value)
        assert stopper.best_iteration == 2


class TestRunTraining:
    """End-to-end training runs on a tiny corpus."""

    def test_fixed_iterations(self, tmp_path, corpus, vocab):
        run = run_training(small_config(iterations=3), corpus, vocab, None, tmp_path / "run")
        assert [r.iteration for r in run.records] == [1, 2, 3]
        assert run.selected == 3
        assert sorted(p.name for p in (tmp_path / "run").glob("iter-*.txt")) == [
            "iter-001.txt", "iter-002.txt", "iter-003.txt",
        ]
        assert (tmp_path / "run" / "run.conf").exists()
        assert len((tmp_path / "run" / "run.log").read_text().splitlines()) == 4

    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_every_model_trains(self, tmp_path, corpus, vocab, kind):
        run = run_training(small_config(model=kind.value, iterations=1), corpus, vocab, None, tmp_path / kind.value)
        table = read_embeddings(run.checkpoint)
        assert table.vectors.shape == (len(vocab), 8)
        assert (run.records[0].val_loss is None) == (kind == ModelKind.GLOVE)

    def test_deterministic_single_thread(self, tmp_path, corpus, vocab):
        config = small_config(seed=7)
        first = run_training(config, corpus, vocab, None, tmp_path / "a")
        second = run_training(config, corpus, vocab, None, tmp_path / "b")
        assert first.checkpoint.read_bytes() == second.checkpoint.read_bytes()

    def test_evaluation_does_not_change_training(self, tmp_path, corpus, vocab, bundle):
        plain = run_training(small_config(), corpus, vocab, None, tmp_path / "a")
        evaluated = run_training(small_config(), corpus, vocab, bundle, tmp_path / "b")
        assert plain.checkpoint.read_bytes() == evaluated.checkpoint.read_bytes()

    def test_checkpoint_reevaluation_reproduces_metrics(self, tmp_path, corpus, vocab, bundle):
        run = run_training(small_config(), corpus, vocab, bundle, tmp_path / "run")
        for record in run.records:
            (result,) = bundle.evaluate(read_embeddings(record.checkpoint))
            assert result.value == record.metric("ws")

    def test_multiple_workers(self, tmp_path, corpus, vocab):
        run = run_training(small_config(workers=2), corpus, vocab, None, tmp_path / "run")
        assert np.isfinite(read_embeddings(run.checkpoint).vectors).all()

    def test_early_stop_on_task_peak(self, tmp_path, corpus, vocab, bundle, monkeypatch):
        results = [[TaskResult("ws", v, 6, 0, correlation=True)] for v in [1, 2, 3, 2.9, 2.8, 5, 6]]
        monkeypatch.setattr(bundle, "evaluate", scripted(results))
        config = small_config(iterations=7, early_stop="task:ws", patience=2)
        run = run_training(config, corpus, vocab, bundle, tmp_path / "run")
        assert len(run.records) == 5
        assert run.selected == 3
        assert run.checkpoint.name == "iter-003.txt"

    def test_early_stop_on_validation_loss(self, tmp_path, corpus, vocab, monkeypatch):
        monkeypatch.setattr(NeuralModel, "validation_loss", scripted([4.0, 3.5, 3.6, 3.7, 3.0]))
        config = small_config(iterations=5, early_stop="val-loss", patience=2)
        run = run_training(config, corpus, vocab, None, tmp_path / "run")
        assert len(run.records) == 4
        assert run.selected == 2

    def test_early_stop_task_must_be_evaluated(self, tmp_path, corpus, vocab):
        with pytest.raises(UsageError, match="not being evaluated"):
            run_training(small_config(early_stop="task:tfl"), corpus, vocab, None, tmp_path / "run")

    def test_divergence_keeps_last_checkpoint(self, tmp_path, corpus, vocab, monkeypatch):
        def validation_loss(self, windows, seed):
            if (tmp_path / "run" / "iter-001.txt").exists():
                raise NumericalDivergence("numerical divergence", position=4)
            return 4.0

        monkeypatch.setattr(NeuralModel, "validation_loss", validation_loss)
        with pytest.raises(NumericalDivergence) as excinfo:
            run_training(small_config(iterations=3), corpus, vocab, None, tmp_path / "run")
        assert excinfo.value.last_checkpoint == tmp_path / "run" / "iter-001.txt"
        assert "last good checkpoint" in str(excinfo.value)

    def test_read_run_log(self, tmp_path, corpus, vocab, bundle):
        run = run_training(small_config(), corpus, vocab, bundle, tmp_path / "run")
        records = read_run_log(tmp_path / "run" / "run.log")
        assert [r.iteration for r in records] == [1, 2]
        assert records[1].metric("ws") == pytest.approx(run.records[1].metric("ws"), abs=1e-6)
        assert records[0].val_loss == pytest.approx(run.records[0].val_loss, abs=1e-6)

    def test_dimension_sweep(self, tmp_path, corpus, vocab):
        runs = run_dimension_sweep(small_config(iterations=1), corpus, vocab, None, tmp_path, dims=(4, 6))
        assert sorted(runs) == [4, 6]
        assert read_embeddings(runs[6].checkpoint).dim == 6
        assert runs[4].out_dir == tmp_path / "dim-4"

    def test_windows_keep_document_offsets_after_subsampling(self, tmp_path, monkeypatch):
        # The word at offset k is always "p{k}", so a target names its own offset.
        corpus = [[f"p{k}" for k in range(20)] for _ in range(40)]
        vocab = build_vocab(corpus)
        seen = []
        train_batch = NeuralModel.train_batch

        def recording(self, batch, rng):
            seen.append(batch)
            return train_batch(self, batch, rng)

        monkeypatch.setattr(NeuralModel, "train_batch", recording)
        run_training(small_config(iterations=1, subsample=1e-3), corpus, vocab, None, tmp_path / "run")
        targets = np.concatenate([b.targets for b in seen])
        positions = np.concatenate([b.positions for b in seen])
        assert 0 < len(targets) < 40 * 20
        assert vocab.decode(targets) == [f"p{k}" for k in positions]

    def test_batch_size_bounds_every_update(self, tmp_path, corpus, vocab, monkeypatch):
        sizes = []
        train_batch = NeuralModel.train_batch

        def recording(self, batch, rng):
            sizes.append(len(batch))
            return train_batch(self, batch, rng)

        monkeypatch.setattr(NeuralModel, "train_batch", recording)
        run_training(small_config(iterations=1, batch=5), corpus, vocab, None, tmp_path / "run")
        assert sizes and max(sizes) == 5


def records_from(series: dict[str, list[float]], val_loss: list[float] | None = None) -> list[IterationRecord]:
    n = len(next(iter(series.values())))
    return [
        IterationRecord(
            iteration=i + 1,
            val_loss=None if val_loss is None else val_loss[i],
            results=[TaskResult(task, values[i], 1, 0) for task, values in series.items()],
        )
        for i in range(n)
    ]


class TestCompareStoppingStrategies:
    """Tests for the stopping-strategy win table."""

    def test_signal_is_target_always_wins(self):
        records = records_from({"ws": [0.2, 0.5, 0.4], "tfl": [30.0, 40.0, 50.0]})
        table = compare_stopping_strategies(records, ["ws", "tfl"])
        assert table.win("ws", "ws") == 1
        assert table.win("tfl", "tfl") == 1

    def test_constant_metric_every_signal_wins(self):
        records = records_from({"ws": [0.5, 0.5, 0.5], "tfl": [30.0, 60.0, 45.0]}, val_loss=[3.0, 2.0, 2.5])
        table = compare_stopping_strategies(records, ["ws", "tfl"])
        assert all(table.win(signal, "ws") == 1 for signal in table.signals)

    def test_val_loss_signal_present_only_with_losses(self):
        assert "val-loss" not in compare_stopping_strategies(records_from({"ws": [1.0]}), ["ws"]).signals
        records = records_from({"ws": [1.0]}, val_loss=[2.0])
        assert compare_stopping_strategies(records, ["ws"]).signals == ["val-loss", "ws"]

    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(0)
        tasks = ["ws", "tfl", "sem"]
        for _ in range(30):
            series = {t: list(rng.uniform(10, 60, size=6).round(1)) for t in tasks}
            losses = list(rng.uniform(2, 5, size=6))
            baselines = {t: float(rng.uniform(0, 9)) for t in tasks}
            table = compare_stopping_strategies(records_from(series, losses), tasks, baselines)

            stops = {"val-loss": int(np.argmin(losses))}
            stops.update({t: int(np.argmax(series[t])) for t in tasks})
            for signal, target in product(stops, tasks):
                value = series[target][stops[signal]]
                expected = pgr(value, max(series[target]), baselines[target]) >= 95.0
                assert table.win(signal, target) == int(expected)

    def test_tables_add_across_runs(self):
        records = records_from({"ws": [0.2, 0.5, 0.4]}, val_loss=[3.0, 2.5, 2.0])
        one = compare_stopping_strategies(records, ["ws"])
        total = one + one
        assert total.runs == 2
        assert total.win("ws", "ws") == 2
        assert total.render().splitlines()[0] == "signal\tws\ttotal"

    def test_peak_at_or_below_baseline_is_degenerate(self):
        records = records_from({"ws": [-0.20, -0.05, -0.10]})
        with pytest.raises(DataError, match="degenerate baseline"):
            compare_stopping_strategies(records, ["ws"], {"ws": 0.02})
