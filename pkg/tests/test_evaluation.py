import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speakerfp.corpus import LabelMap, apply_labels, assemble_samples, split, SplitSpec
from speakerfp.errors import EvalError
from speakerfp.evaluation import (
    GenericCurvePoint,
    evaluate_split,
    generic_curve,
    length_histogram,
    score,
    sweep_context,
    sweep_k,
    write_context_sweep_csv,
    write_generic_csv,
    write_histogram_csv,
    write_k_sweep_csv,
)
from speakerfp.fingerprint import ClassificationResult
from speakerfp.synthetic import exclusive_vocabulary_corpus, turn_taking_corpus


def result(sample_id, gold, pred, scores=None):
    scores = scores or {gold: 1.0, pred: 1.0}
    ordered = sorted(scores.values(), reverse=True)
    margin = ordered[0] - ordered[1] if len(ordered) > 1 else ordered[0]
    return ClassificationResult(sample_id, scores, pred, margin, gold=gold)


class TestScore:
    def test_all_correct(self):
        results = [result(f"s{i}", "A", "A") for i in range(4)]
        report = score(results)
        assert report.accuracy == 100.0
        assert report.per_class_f1["A"] == 100.0

    def test_two_class_hand_case(self):
        # gold (A, A, B) vs pred (A, B, B):
        #   accuracy 2/3; F1_A = 2*1*0.5/1.5 = 2/3; F1_B = 2*0.5*1/1.5 = 2/3
        results = [result("1", "A", "A"), result("2", "A", "B"), result("3", "B", "B")]
        report = score(results)
        assert report.accuracy == pytest.approx(66.67, abs=0.005)
        assert report.per_class_f1["A"] == pytest.approx(66.67, abs=0.005)
        assert report.per_class_f1["B"] == pytest.approx(66.67, abs=0.005)
        assert report.macro_f1 == pytest.approx(66.67, abs=0.005)
        assert report.weighted_f1 == pytest.approx(66.67, abs=0.005)

    def test_unseen_class_scores_zero_and_carries_no_weight(self):
        results = [result("1", "A", "A"), result("2", "B", "B")]
        report = score(results, labels=["A", "B", "C"])
        assert report.per_class_f1["C"] == 0.0
        assert report.macro_f1 == pytest.approx(100 * 2 / 3)
        assert report.weighted_f1 == 100.0

    def test_empty_results_rejected(self):
        with pytest.raises(EvalError, match="empty"):
            score([])

    def test_missing_gold_rejected(self):
        bad = ClassificationResult("s", {"A": 1.0}, "A", 1.0)
        with pytest.raises(EvalError, match="gold"):
            score([bad])

    def test_confusion_layout(self):
        results = [result("1", "A", "B"), result("2", "B", "B")]
        report = score(results)
        # rows = gold, cols = predicted
        assert report.confusion[0].tolist() == [0, 1]
        assert report.confusion[1].tolist() == [0, 1]

    @settings(max_examples=100)
    @given(
        st.lists(
            st.tuples(st.sampled_from("ABCD"), st.sampled_from("ABCD")),
            min_size=1,
            max_size=60,
        )
    )
    def test_confusion_consistency_property(self, pairs):
        results = [result(f"s{i}", g, p) for i, (g, p) in enumerate(pairs)]
        report = score(results)
        stream_accuracy = 100.0 * sum(g == p for g, p in pairs) / len(pairs)
        assert report.accuracy == pytest.approx(stream_accuracy, abs=1e-9)
        for i, label in enumerate(report.labels):
            assert report.confusion[i].sum() == sum(1 for g, _ in pairs if g == label)
        f1s = list(report.per_class_f1.values())
        assert min(f1s) - 1e-9 <= report.weighted_f1 <= max(f1s) + 1e-9


class TestSweepK:
    def test_accuracy_non_decreasing_on_layered_synthetic(self):
        # shared dominant feature 0 everywhere; per-class signal features are
        # disjoint and follow the same within-class ordering in every sample
        rng = np.random.default_rng(8)
        dim, per_class = 13, 4
        vectors, labels, test_vectors, golds = {}, {}, {}, {}
        for c, label in enumerate(["A", "B", "C"]):
            base = np.zeros(dim)
            base[0] = 100.0
            for j in range(per_class):
                base[1 + c * per_class + j] = 20.0 - j
            for i in range(6):
                noisy = base + rng.random(dim) * 0.01
                vectors[f"{label}{i}"] = noisy
                labels[f"{label}{i}"] = label
            for i in range(4):
                test_vectors[f"q{label}{i}"] = base + rng.random(dim) * 0.01
                golds[f"q{label}{i}"] = label
        points = sweep_k(vectors, labels, test_vectors, golds, [1, 2, 4, 8, 13])
        accuracies = [p.report.accuracy for p in points]
        assert all(a <= b + 1e-9 for a, b in zip(accuracies, accuracies[1:]))
        assert accuracies[-1] == 100.0

    def test_saturated_k_equals_full_dimension_baseline(self):
        rng = np.random.default_rng(21)
        vectors = {f"s{i}": rng.random(6) + 0.01 for i in range(8)}
        labels = {f"s{i}": f"C{i % 2}" for i in range(8)}
        queries = {f"q{i}": rng.random(6) + 0.01 for i in range(5)}
        golds = {f"q{i}": "C0" for i in range(5)}
        points = sweep_k(vectors, labels, queries, golds, [6, 9, 30])
        assert points[0].report.accuracy == points[1].report.accuracy == points[2].report.accuracy

    def test_csv_shape(self, tmp_path):
        rng = np.random.default_rng(2)
        vectors = {f"s{i}": rng.random(4) + 0.1 for i in range(4)}
        labels = {f"s{i}": f"C{i % 2}" for i in range(4)}
        points = sweep_k(vectors, labels, vectors, labels, [2, 4])
        path = tmp_path / "sweep.csv"
        write_k_sweep_csv(points, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "k,accuracy"
        assert len(lines) == 3


class TestSweepContext:
    def test_turn_taking_context_beats_no_context(self):
        corpus, label_map = turn_taking_corpus(n_scenes=45, seed=5)
        labeled = apply_labels(corpus, label_map)
        splits = split(labeled, SplitSpec.random_split((0.8, 0.0, 0.2), seed=1))
        points = sweep_context(splits.train, splits.test, [0, 1], size=50)
        accuracy = {p.value: p.report.accuracy for p in points}
        assert accuracy[1] > accuracy[0] + 20.0

    def test_activation_mode_requires_file_per_context(self):
        corpus, label_map = turn_taking_corpus(n_scenes=6)
        labeled = apply_labels(corpus, label_map)
        with pytest.raises(EvalError, match="context size 1"):
            sweep_context(labeled, labeled, [1], size=8, mode="activations", activation_files={0: "x"})

    def test_csv_shape(self, tmp_path):
        corpus, label_map = exclusive_vocabulary_corpus(n_scenes=10)
        labeled = apply_labels(corpus, label_map)
        points = sweep_context(labeled, labeled, [0, 1], size=20)
        path = tmp_path / "ctx.csv"
        write_context_sweep_csv(points, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "context,macro_f1,weighted_f1,accuracy"
        assert len(lines) == 3


class TestLengthHistogram:
    def test_all_correct_leaves_incorrect_empty(self):
        results = [result(f"s{i}", "A", "A") for i in range(3)]
        lengths = {f"s{i}": 2 + i for i in range(3)}
        rows = length_histogram(results, lengths)
        assert all(row[2] == 0.0 for row in rows)
        assert sum(row[1] for row in rows) == pytest.approx(1.0)

    def test_hand_built_four_sample_case(self):
        # two correct at lengths 2 and 3, two incorrect both at length 2:
        # correct bins 2 and 3 get 0.5 each, incorrect bin 2 gets 1.0
        results = [
            result("a", "A", "A"),
            result("b", "A", "A"),
            result("c", "A", "B"),
            result("d", "A", "B"),
        ]
        lengths = {"a": 2, "b": 3, "c": 2, "d": 2}
        rows = {row[0]: row for row in length_histogram(results, lengths)}
        assert rows[2][1] == pytest.approx(0.5)
        assert rows[3][1] == pytest.approx(0.5)
        assert rows[2][2] == pytest.approx(1.0)
        assert rows[3][2] == pytest.approx(0.0)

    def test_lengths_beyond_cap_fold_into_top_bin(self):
        results = [result("a", "A", "A")]
        rows = {row[0]: row for row in length_histogram(results, {"a": 400}, cap=25)}
        assert rows[25][1] == pytest.approx(1.0)

    def test_csv_shape(self, tmp_path):
        results = [result("a", "A", "A")]
        rows = length_histogram(results, {"a": 3})
        path = tmp_path / "hist.csv"
        write_histogram_csv(rows, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "length,correct_freq,incorrect_freq"
        assert len(lines) == 27  # bins 0..25 plus header


def scored_results(rng, n=30, classes=("A", "B", "C", "D")):
    results = []
    for i in range(n):
        raw = rng.random(len(classes))
        scores = {c: float(v) for c, v in zip(classes, raw)}
        pred = max(scores, key=scores.get)
        gold = classes[int(rng.integers(len(classes)))]
        ordered = sorted(scores.values(), reverse=True)
        results.append(ClassificationResult(f"s{i}", scores, pred, ordered[0] - ordered[1], gold=gold))
    return results


class TestGenericCurve:
    def test_zero_tau_removes_nothing_without_ties(self):
        rng = np.random.default_rng(12)
        results = scored_results(rng)
        baseline = score(results).accuracy
        points = generic_curve(results, 2, [0.0])
        assert points[0].n_removed == 0
        assert points[0].accuracy == pytest.approx(baseline)

    def test_huge_tau_removes_everything(self):
        rng = np.random.default_rng(12)
        results = scored_results(rng)
        points = generic_curve(results, 2, [10.0])
        assert points[0].n_removed == len(results)
        assert points[0].accuracy is None

    def test_removal_monotone_in_tau_and_top_n(self):
        rng = np.random.default_rng(3)
        results = scored_results(rng, n=80)
        taus = [0.0, 0.05, 0.1, 0.2, 0.5]
        removed_by_top_n = {}
        for top_n in (2, 3, 4):
            points = generic_curve(results, top_n, taus)
            removed = [p.n_removed for p in points]
            assert removed == sorted(removed)
            removed_by_top_n[top_n] = removed
        for a, b, c in zip(removed_by_top_n[2], removed_by_top_n[3], removed_by_top_n[4]):
            assert a >= b >= c

    def test_removing_injected_generic_utterances_raises_accuracy(self):
        # corpus with speaker-exclusive wording plus injected utterances made
        # of shared filler only: the filler-only lines score near-ties and
        # should be the ones a moderate tau removes
        import random

        from speakerfp.corpus import Corpus, LabelMap, Scene, Turn, apply_labels, assemble_samples

        rng = random.Random(4)
        speakers = ["Speaker A", "Speaker B", "Speaker C"]
        private = {s: [f"spk{i}_w{j}" for j in range(12)] for i, s in enumerate(speakers)}
        filler = [f"filler_{j}" for j in range(8)]
        scenes = []
        for sc in range(40):
            turns = []
            for t in range(8):
                speaker = rng.choice(speakers)
                if t % 4 == 3:  # every fourth line is pure shared filler
                    words = rng.choices(filler, k=5)
                else:
                    words = rng.choices(private[speaker], k=5) + rng.choices(filler, k=1)
                turns.append(Turn(speaker=speaker, text=" ".join(words), index=t))
            scenes.append(Scene(scene_id=f"g{sc:03d}", episode="e", turns=tuple(turns)))
        labeled = apply_labels(Corpus(scenes=tuple(scenes)), LabelMap(main_speakers=tuple(speakers)))
        train = assemble_samples(Corpus(scenes=labeled.scenes[:32]), 0)
        test = assemble_samples(Corpus(scenes=labeled.scenes[32:]), 0)
        outcome = evaluate_split(train, test, size=40)
        baseline = outcome.report.accuracy
        points = generic_curve(outcome.results, 2, [0.05])
        assert 0 < points[0].n_removed < len(outcome.results)
        assert points[0].accuracy > baseline

    def test_empty_grid_rejected(self):
        with pytest.raises(EvalError, match="empty"):
            generic_curve([], 2, [])

    def test_csv_shape(self, tmp_path):
        points = [GenericCurvePoint(0.0, 2, 0, 75.0), GenericCurvePoint(1.0, 2, 4, None)]
        path = tmp_path / "generic.csv"
        write_generic_csv(points, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "tau,top_n,removed,accuracy"
        assert lines[1] == "0.0,2,0,75.00"
        assert lines[2] == "1.0,2,4,"


class TestEvaluateSplit:
    def test_exclusive_vocabulary_nearly_separable(self):
        corpus, label_map = exclusive_vocabulary_corpus(n_scenes=50, seed=3)
        labeled = apply_labels(corpus, label_map)
        splits = split(labeled, SplitSpec.random_split((0.8, 0.0, 0.2), seed=7))
        outcome = evaluate_split(
            assemble_samples(splits.train, 0),
            assemble_samples(splits.test, 0),
            size=50,
        )
        assert outcome.report.accuracy >= 95.0

    def test_determinism(self, tmp_path):
        corpus, label_map = exclusive_vocabulary_corpus(n_scenes=12)
        labeled = apply_labels(corpus, label_map)
        splits = split(labeled, SplitSpec.random_split((0.8, 0.0, 0.2), seed=2))
        train = assemble_samples(splits.train, 2)
        test = assemble_samples(splits.test, 2)
        first = evaluate_split(train, test, size=30)
        second = evaluate_split(train, test, size=30)
        assert first.report.to_dict() == second.report.to_dict()
        assert [r.scores for r in first.results] == [r.scores for r in second.results]

    def test_sweep_csvs_are_byte_identical_across_repeats(self, tmp_path):
        corpus, label_map = exclusive_vocabulary_corpus(n_scenes=12)
        labeled = apply_labels(corpus, label_map)
        splits = split(labeled, SplitSpec.random_split((0.8, 0.0, 0.2), seed=2))
        for repeat in ("a", "b"):
            points = sweep_context(splits.train, splits.test, [0, 1], size=30)
            write_context_sweep_csv(points, tmp_path / f"ctx-{repeat}.csv")
        assert (tmp_path / "ctx-a.csv").read_bytes() == (tmp_path / "ctx-b.csv").read_bytes()
