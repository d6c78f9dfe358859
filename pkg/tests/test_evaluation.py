"""Tests for the task evaluators, neighbor queries and random baselines."""

import numpy as np
import pytest

from embench.datasets import AnalogyQuestion, TflQuestion
from embench.errors import DataError
from embench.evaluation import (
    EmbeddingTable,
    cosine,
    eval_analogy,
    eval_avg,
    eval_tfl,
    eval_ws,
    nearest_neighbors,
    predict_analogies,
    random_embedding,
    text_representation,
)


def table_of(vectors, prefix="w") -> EmbeddingTable:
    vectors = np.asarray(vectors, dtype=float)
    return EmbeddingTable([f"{prefix}{i}" for i in range(len(vectors))], vectors)


def brute_force_cosine(u, v) -> float:
    nu, nv = np.sqrt(sum(x * x for x in u)), np.sqrt(sum(x * x for x in v))
    if nu == 0 or nv == 0:
        return 0.0
    return sum(x * y for x, y in zip(u, v)) / (nu * nv)


class TestCosine:
    """Tests for cosine similarity."""

    def test_identical(self):
        assert cosine(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_known_value(self):
        expected = 32 / (np.sqrt(14) * np.sqrt(77))
        assert cosine(np.array([1.0, 2, 3]), np.array([4.0, 5, 6])) == pytest.approx(expected)
        assert expected == pytest.approx(0.9746, abs=1e-4)

    def test_zero_vector(self):
        with pytest.raises(DataError, match="undefined similarity"):
            cosine(np.zeros(2), np.array([1.0, 0.0]))

    def test_scale_invariant(self):
        u, v = np.array([0.3, -1.2, 2.0]), np.array([1.0, 0.5, -0.4])
        assert cosine(7.5 * u, v) == pytest.approx(cosine(u, v))


class TestEmbeddingTable:
    """Tests for the table invariants."""

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            table_of([[1.0, np.nan]])

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            EmbeddingTable(["a", "b"], np.zeros((3, 2)))

    def test_missing_word(self):
        with pytest.raises(DataError, match="not in vocabulary"):
            table_of([[1.0, 0.0]]).vector("zzz")


class TestNearestNeighbors:
    """Tests for neighbor queries."""

    def test_orthonormal_ties_by_id(self):
        table = table_of(np.eye(4))
        assert nearest_neighbors(table, table.vectors[0], 1, {"w0"}) == [("w1", 0.0)]

    def test_closest_vector(self):
        table = table_of([[1, 0], [0.9, 0.1], [0, 1]])
        ((word, sim),) = nearest_neighbors(table, table.vectors[0], 1, {"w0"})
        assert word == "w1"
        assert sim == pytest.approx(0.9939, abs=1e-4)

    def test_k_all_remaining_is_permutation(self):
        rng = np.random.default_rng(0)
        table = table_of(rng.normal(size=(8, 3)))
        words = [w for w, _ in nearest_neighbors(table, table.vectors[2], 7, {"w2"})]
        assert sorted(words) == sorted(w for w in table.words if w != "w2")

    def test_descending(self):
        rng = np.random.default_rng(1)
        table = table_of(rng.normal(size=(15, 4)))
        sims = [s for _, s in nearest_neighbors(table, table.vectors[0], 10)]
        assert sims == sorted(sims, reverse=True)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            table = table_of(rng.normal(size=(20, 5)))
            q = int(rng.integers(20))
            ranked = sorted(
                (i for i in range(20) if i != q),
                key=lambda i: (-brute_force_cosine(table.vectors[q], table.vectors[i]), i),
            )
            got = [w for w, _ in nearest_neighbors(table, table.vectors[q], 5, {f"w{q}"})]
            assert got == [f"w{i}" for i in ranked[:5]]

    def test_zero_query(self):
        with pytest.raises(DataError, match="undefined similarity"):
            nearest_neighbors(table_of(np.eye(3)), np.zeros(3), 1)


@pytest.fixture
def unit_circle():
    """w0 at angle 0 and w1..w4 at known angles, so cos(w0, wi) is known."""
    angles = [0.0, 0.3, 0.9, 1.4, 2.5]
    return table_of([[np.cos(a), np.sin(a)] for a in angles]), angles


class TestWordSimilarity:
    """Tests for the ws task."""

    def test_perfect_correlation(self, unit_circle):
        table, angles = unit_circle
        pairs = [("w0", f"w{i}", np.cos(angles[i])) for i in range(1, 5)]
        result = eval_ws(table, pairs)
        assert result.value == pytest.approx(1.0)
        assert result.line() == "ws 1.0000 4 0"

    def test_negated_scores(self, unit_circle):
        table, angles = unit_circle
        pairs = [("w0", f"w{i}", -np.cos(angles[i])) for i in range(1, 5)]
        assert eval_ws(table, pairs).value == pytest.approx(-1.0)

    def test_textbook_pearson(self, unit_circle):
        table, angles = unit_circle
        scores = [2.0, 7.0, 4.0]
        pairs = [("w0", f"w{i}", s) for i, s in zip((1, 2, 3), scores)]
        x = np.array([np.cos(angles[i]) for i in (1, 2, 3)])
        y = np.array(scores)
        dx, dy = x - x.mean(), y - y.mean()
        expected = (dx * dy).sum() / np.sqrt((dx * dx).sum() * (dy * dy).sum())
        assert eval_ws(table, pairs).value == pytest.approx(expected)

    def test_oov_pairs_skipped_and_counted(self, unit_circle):
        table, angles = unit_circle
        pairs = [("w0", f"w{i}", np.cos(angles[i])) for i in range(1, 5)] + [("w0", "zzz", 1.0)]
        result = eval_ws(table, pairs)
        assert (result.evaluated, result.skipped) == (4, 1)

    def test_degenerate_scores(self, unit_circle):
        table, _ = unit_circle
        pairs = [("w0", f"w{i}", 5.0) for i in range(1, 5)]
        with pytest.raises(DataError, match="degenerate correlation"):
            eval_ws(table, pairs)

    def test_too_few_pairs(self, unit_circle):
        table, _ = unit_circle
        with pytest.raises(DataError):
            eval_ws(table, [("w0", "w1", 1.0), ("w0", "zzz", 2.0)])

    def test_spearman_on_monotone_scores(self, unit_circle):
        table, angles = unit_circle
        pairs = [("w0", f"w{i}", np.cos(angles[i]) ** 3 + 5) for i in range(1, 5)]
        assert eval_ws(table, pairs, method="spearman").value == pytest.approx(1.0)

    def test_metric_invariant_under_scaling(self, unit_circle):
        table, _ = unit_circle
        pairs = [("w0", "w1", 3.0), ("w1", "w2", 1.0), ("w2", "w4", 2.5), ("w3", "w4", 0.5)]
        scaled = EmbeddingTable(table.words, table.vectors * 4.0)
        assert eval_ws(scaled, pairs).value == pytest.approx(eval_ws(table, pairs).value)


class TestSynonymChoice:
    """Tests for the tfl task."""

    def test_identical_choice_selected(self):
        table = table_of([[1, 0], [0, 1], [1, 0], [-1, 0], [0, -1]])
        q = TflQuestion("w0", ("w1", "w2", "w3", "w4"), answer=1)
        result = eval_tfl(table, [q])
        assert result.value == 100.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            table = table_of(rng.normal(size=(20, 4)))
            questions = []
            for _ in range(5):
                ids = rng.choice(20, size=5, replace=False)
                questions.append(TflQuestion(f"w{ids[0]}", tuple(f"w{i}" for i in ids[1:]), int(rng.integers(4))))
            correct = 0
            for q in questions:
                stem = table.vector(q.stem)
                sims = [brute_force_cosine(stem, table.vector(c)) for c in q.choices]
                correct += int(np.argmax(sims)) == q.answer
            assert eval_tfl(table, questions).value == pytest.approx(100.0 * correct / 5)

    def test_random_embedding_near_chance(self):
        rng = np.random.default_rng(5)
        table = random_embedding([f"w{i}" for i in range(1000)], 50, seed=6)
        questions = []
        for _ in range(10_000):
            ids = rng.choice(1000, size=5, replace=False)
            questions.append(TflQuestion(f"w{ids[0]}", tuple(f"w{i}" for i in ids[1:]), int(rng.integers(4))))
        assert eval_tfl(table, questions).value == pytest.approx(25.0, abs=3.0)

    def test_oov_stem_skipped(self):
        table = table_of(np.eye(3))
        questions = [
            TflQuestion("zzz", ("w0", "w1", "w2", "w0"), 0),
            TflQuestion("w0", ("w0", "zz1", "zz2", "zz3"), 0),
        ]
        result = eval_tfl(table, questions)
        assert (result.evaluated, result.skipped, result.value) == (1, 1, 100.0)

    def test_oov_answer_counts_as_wrong(self):
        table = table_of(np.eye(3))
        result = eval_tfl(table, [TflQuestion("w0", ("w1", "zzz", "w2", "w1"), 1)])
        assert result.value == 0.0

    def test_all_skipped(self):
        with pytest.raises(DataError):
            eval_tfl(table_of(np.eye(2)), [TflQuestion("zzz", ("w0", "w1", "w0", "w1"), 0)])


@pytest.fixture
def offset_table():
    """Five quadruples with v_d = v_b - v_a + v_c exactly."""
    rng = np.random.default_rng(7)
    rows, questions = [], []
    for q in range(5):
        a, b, c = rng.normal(size=(3, 30))
        rows.extend([a, b, c, b - a + c])
        names = [f"w{4 * q + k}" for k in range(4)]
        category = "capital-common" if q < 3 else "gram1-adjective-to-adverb"
        questions.append(AnalogyQuestion(category, *names))
    return table_of(rows), questions


class TestAnalogy:
    """Tests for the analogy tasks."""

    def test_exact_offset_scores_100(self, offset_table):
        table, questions = offset_table
        results = eval_analogy(table, questions)
        assert results["sem"].value == 100.0
        assert results["syn"].value == 100.0
        assert results["analogy"].value == 100.0
        assert results["sem"].line().startswith("sem 100.00")

    def test_groups_by_category_prefix(self, offset_table):
        table, questions = offset_table
        results = eval_analogy(table, questions)
        assert (results["sem"].evaluated, results["syn"].evaluated, results["analogy"].evaluated) == (3, 2, 5)

    def test_zero_offset_question(self, offset_table):
        table, _ = offset_table
        question = AnalogyQuestion("family", "w0", "w0", "w2", "w2")
        assert eval_analogy(table, [question])["sem"].value == 100.0

    def test_exclusion_flag(self):
        table = table_of([[1, 0, 0], [1, 0.1, 0], [0, 0, 1], [0, 1, 1]])
        question = AnalogyQuestion("x", "w0", "w1", "w2", "w3")
        assert eval_analogy(table, [question], exclude=True)["sem"].value == 100.0
        assert eval_analogy(table, [question], exclude=False)["sem"].value == 0.0

    def test_oov_question_skipped(self, offset_table):
        table, questions = offset_table
        results = eval_analogy(table, questions + [AnalogyQuestion("capital", "w0", "w1", "zzz", "w3")])
        assert (results["sem"].evaluated, results["sem"].skipped) == (3, 1)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            table = table_of(rng.normal(size=(20, 6)))
            quads = rng.integers(20, size=(10, 4))
            expected = []
            for a, b, c, d in quads:
                target = table.vectors[b] - table.vectors[a] + table.vectors[c]
                excluded = {a, b, c} - {d}
                scores = [
                    (-brute_force_cosine(target, table.vectors[i]), i) for i in range(20) if i not in excluded
                ]
                expected.append(min(scores)[1])
            assert list(predict_analogies(table, quads)) == expected


class TestTextClassification:
    """Tests for the avg task."""

    def test_tf_weighted_mean(self):
        table = EmbeddingTable(["a", "b"], np.array([[1.0, 0.0], [0.0, 1.0]]))
        np.testing.assert_allclose(text_representation(table, ["a", "a", "b"]), [2 / 3, 1 / 3])

    def test_separable_classes(self):
        table = EmbeddingTable(["a1", "a2", "b1", "b2"], np.array([[1.0, 0], [1, 0], [0, 1], [0, 1]]))
        train = [("pos", ["a1", "a2"]), ("pos", ["a1"]), ("neg", ["b1", "b2"]), ("neg", ["b2"])]
        test = [("pos", ["a2"]), ("neg", ["b1"]), ("pos", ["a1", "a1"])]
        assert eval_avg(table, train, test).value == 100.0

    def test_shuffled_labels_near_chance(self):
        rng = np.random.default_rng(9)
        words = [f"w{i}" for i in range(200)]
        table = random_embedding(words, 10, seed=1)

        def texts(n):
            return [(str(rng.integers(2)), list(rng.choice(words, size=5))) for _ in range(n)]

        assert eval_avg(table, texts(1000), texts(10_000)).value == pytest.approx(50.0, abs=2.0)

    def test_zero_texts_counted(self):
        table = EmbeddingTable(["a", "b"], np.eye(2))
        train = [("x", ["a"]), ("y", ["b"]), ("x", ["zzz"])]
        result = eval_avg(table, train, [("x", ["a"]), ("y", ["qqq"])])
        assert result.diagnostics["zero_texts"] == 2

    def test_needs_two_classes(self):
        table = EmbeddingTable(["a", "b"], np.eye(2))
        with pytest.raises(DataError, match="at least 2 classes"):
            eval_avg(table, [("x", ["a"]), ("x", ["b"])], [("x", ["a"])])

    def test_deterministic(self):
        table = random_embedding([f"w{i}" for i in range(30)], 5, seed=2)
        rng = np.random.default_rng(0)
        data = [(str(i % 3), [f"w{j}" for j in rng.integers(30, size=4)]) for i in range(60)]
        assert eval_avg(table, data[:40], data[40:]) == eval_avg(table, data[:40], data[40:])


class TestRandomEmbedding:
    """Tests for the random baseline."""

    def test_bounds_and_moments(self):
        table = random_embedding([f"w{i}" for i in range(1000)], 1000, seed=3)
        assert table.vectors.min() >= -1.0
        assert table.vectors.max() <= 1.0
        assert table.vectors.mean() == pytest.approx(0.0, abs=0.01)
        assert table.vectors.var() == pytest.approx(1 / 3, abs=0.01)

    def test_deterministic(self):
        words = ["a", "b", "c"]
        np.testing.assert_array_equal(random_embedding(words, 4, 1).vectors, random_embedding(words, 4, 1).vectors)
