import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alia.data import Dataset, ImageRecord
from alia.editing import AugmentationRecord, EditParams, RecordStore
from alia.errors import ConfigError, MissingClassError, PreconditionError
from alia.filtering import (
    DEFAULT_SEMANTIC_DISTRACTORS,
    EmbeddingIndex,
    FilterConfig,
    MeanPoolEmbedder,
    ThresholdTable,
    build_embedding_index,
    compute_class_thresholds,
    confidence_filter,
    filter_pipeline,
    knn_filter,
    semantic_filter,
)

PARAMS = EditParams("img2img", 0.4, 5.0, seed=1)


def edit_record(edit_id="e1", label="A"):
    return AugmentationRecord(
        edit_id=edit_id, parent_id="p1", prompt_id="d1", label=label,
        params=PARAMS, uri=f"store://{edit_id}",
    )


def key_image(k: int) -> np.ndarray:
    """Images distinguished by a single byte so fake models can key on them."""
    img = np.zeros((4, 4, 3), dtype=np.uint8)
    img[0, 0, 0] = k
    return img


class TableClassifier:
    """softmax(image) looked up by the image's key byte."""

    def __init__(self, classes, table):
        self.classes = classes
        self.table = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}

    def softmax(self, image):
        return self.table[int(image[0, 0, 0])]


class TableZeroShot:
    def __init__(self, table):
        self.table = table

    def scores(self, image, prompts):
        return list(self.table[int(image[0, 0, 0])])


def train_dataset(labels_by_key: dict[int, str], classes=("A", "B")):
    records = tuple(
        ImageRecord(id=f"t{k}", uri=f"key://{k}", label=label, split="train")
        for k, label in labels_by_key.items()
    )
    return Dataset(records=records, classes=classes)


def key_loader(rec):
    return key_image(int(rec.id[1:]) if rec.id[0] == "t" else int(rec.id))


class TestThresholds:
    def test_mean_of_correct_label_scores(self):
        ds = train_dataset({0: "A", 1: "A", 2: "B"})
        clf = TableClassifier(ds.classes, {
            0: [0.9, 0.1], 1: [0.7, 0.3], 2: [0.4, 0.6],
        })
        table = compute_class_thresholds(clf, ds, key_loader)
        assert table["A"] == pytest.approx(0.8, abs=1e-12)
        assert table["B"] == pytest.approx(0.6, abs=1e-12)
        assert table.support == {"A": 2, "B": 1}

    def test_uniform_classifier_gives_uniform_thresholds(self):
        ds = train_dataset({0: "A", 1: "B"})
        clf = TableClassifier(ds.classes, {0: [0.5, 0.5], 1: [0.5, 0.5]})
        table = compute_class_thresholds(clf, ds, key_loader)
        assert table.t == {"A": 0.5, "B": 0.5}

    def test_single_image_class(self):
        ds = train_dataset({0: "A", 1: "B"})
        clf = TableClassifier(ds.classes, {0: [0.73, 0.27], 1: [0.2, 0.8]})
        table = compute_class_thresholds(clf, ds, key_loader)
        assert table["A"] == 0.73

    def test_missing_class_errors(self):
        ds = train_dataset({0: "A"}, classes=("A", "B"))
        clf = TableClassifier(ds.classes, {0: [1.0, 0.0]})
        with pytest.raises(MissingClassError, match="B"):
            compute_class_thresholds(clf, ds, key_loader)

    @settings(max_examples=50, deadline=None)
    @given(st.data())
    def test_matches_brute_force_mean(self, data):
        n_classes = data.draw(st.integers(2, 6))
        classes = tuple(f"c{i}" for i in range(n_classes))
        n = data.draw(st.integers(n_classes, 40))
        labels = {k: classes[k % n_classes] for k in range(n)}
        rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
        raw = rng.random((n, n_classes)) + 1e-9
        table_rows = {k: raw[k] / raw[k].sum() for k in range(n)}
        ds = train_dataset(labels, classes=classes)
        clf = TableClassifier(classes, table_rows)
        result = compute_class_thresholds(clf, ds, key_loader)
        for ci, cls in enumerate(classes):
            members = [k for k, lab in labels.items() if lab == cls]
            expected = sum(table_rows[k][ci] for k in members) / len(members)
            assert abs(result[cls] - expected) < 1e-12


class TestConfidenceFilter:
    CLASSES = ("A", "B")

    def run(self, label, probs, thresholds):
        clf = TableClassifier(self.CLASSES, {7: probs})
        table = ThresholdTable(t=thresholds, support={c: 1 for c in self.CLASSES})
        return confidence_filter(clf, edit_record(label=label), key_image(7), table, self.CLASSES)

    def test_identity_failure(self):
        verdict = self.run("A", [0.95, 0.05], {"A": 0.8, "B": 0.8})
        assert not verdict.keep
        assert verdict.detail["failure"] == "identity"
        assert verdict.detail["predicted"] == "A"

    def test_class_corruption_failure(self):
        verdict = self.run("A", [0.30, 0.70], {"A": 0.9, "B": 0.60})
        assert not verdict.keep
        assert verdict.detail["failure"] == "class-corruption"
        assert verdict.detail["predicted"] == "B"

    def test_kept_below_threshold(self):
        verdict = self.run("A", [0.55, 0.45], {"A": 0.60, "B": 0.60})
        assert verdict.keep
        assert "failure" not in verdict.detail

    def test_boundary_equality_filters(self):
        verdict = self.run("A", [0.60, 0.40], {"A": 0.60, "B": 0.9})
        assert not verdict.keep

    def test_argmax_tie_takes_lowest_class_index(self):
        verdict = self.run("B", [0.5, 0.5], {"A": 0.4, "B": 0.9})
        assert verdict.detail["predicted"] == "A"
        assert not verdict.keep
        assert verdict.detail["failure"] == "class-corruption"

    @settings(max_examples=100, deadline=None)
    @given(st.data())
    def test_keep_invariant_under_non_argmax_relabeling(self, data):
        k = data.draw(st.integers(2, 5))
        classes = tuple(f"c{i}" for i in range(k))
        raw = [data.draw(st.floats(0.01, 1.0)) for _ in range(k)]
        probs = np.array(raw) / np.sum(raw)
        thresholds = {c: data.draw(st.floats(0.0, 1.0)) for c in classes}
        table = ThresholdTable(t=thresholds, support={c: 1 for c in classes})
        clf = TableClassifier(classes, {7: probs})
        base = confidence_filter(clf, edit_record(label=classes[0]), key_image(7), table, classes)
        other = confidence_filter(clf, edit_record(label=classes[-1]), key_image(7), table, classes)
        assert base.keep == other.keep  # label changes failure kind, not the decision

    def test_degenerate_threshold_bounds(self):
        clf = TableClassifier(self.CLASSES, {7: [0.6, 0.4]})
        zero = ThresholdTable(t={"A": 0.0, "B": 0.0}, support={"A": 1, "B": 1})
        above_one = ThresholdTable(t={"A": 1.01, "B": 1.01}, support={"A": 1, "B": 1})
        rec = edit_record()
        assert not confidence_filter(clf, rec, key_image(7), zero, self.CLASSES).keep
        assert confidence_filter(clf, rec, key_image(7), above_one, self.CLASSES).keep


class TestSemanticFilter:
    def test_task_prompt_wins(self):
        zs = TableZeroShot({7: [0.9, 0.5, 0.4, 0.1, 0.2, 0.3]})
        verdict = semantic_filter(zs, edit_record(), key_image(7),
                                  "a photo of a bird", DEFAULT_SEMANTIC_DISTRACTORS)
        assert verdict.keep
        assert verdict.detail["argmax"] == "a photo of a bird"

    def test_distractor_wins(self):
        zs = TableZeroShot({7: [0.2, 0.1, 0.1, 0.1, 0.9, 0.1]})
        verdict = semantic_filter(zs, edit_record(), key_image(7),
                                  "a photo of a bird", DEFAULT_SEMANTIC_DISTRACTORS)
        assert not verdict.keep
        assert verdict.detail["argmax"] == "a photo"

    def test_tie_keeps(self):
        zs = TableZeroShot({7: [0.5, 0.5]})
        verdict = semantic_filter(zs, edit_record(), key_image(7), "task", ["other"])
        assert verdict.keep

    def test_distractors_required(self):
        zs = TableZeroShot({7: [0.5]})
        with pytest.raises(ConfigError):
            semantic_filter(zs, edit_record(), key_image(7), "task", [])

    def test_default_distractor_set(self):
        assert DEFAULT_SEMANTIC_DISTRACTORS == (
            "a photo of an object",
            "a photo of a scene",
            "a photo of geometric shapes",
            "a photo",
            "an image",
        )


class TestKnnFilter:
    def make_index(self):
        ds = train_dataset({0: "A", 1: "B"})
        return build_embedding_index(MeanPoolEmbedder(grid=2), ds, key_loader)

    def test_identical_image_same_class_kept(self):
        index = self.make_index()
        verdict = knn_filter(MeanPoolEmbedder(grid=2), edit_record(label="A"),
                             key_image(0), index)
        assert verdict.keep
        assert verdict.detail["neighbor_id"] == "t0"

    def test_nearest_other_class_filtered(self):
        index = self.make_index()
        verdict = knn_filter(MeanPoolEmbedder(grid=2), edit_record(label="A"),
                             key_image(1), index)
        assert not verdict.keep
        assert verdict.detail["neighbor_label"] == "B"

    def test_single_image_train_set(self):
        ds = train_dataset({0: "A"}, classes=("A",))
        index = build_embedding_index(MeanPoolEmbedder(grid=2), ds, key_loader)
        same = knn_filter(MeanPoolEmbedder(grid=2), edit_record(label="A"), key_image(5), index)
        assert same.keep

    def test_empty_index_errors(self):
        index = EmbeddingIndex(ids=(), labels=(), vectors=np.zeros((0, 4)))
        with pytest.raises(PreconditionError):
            index.nearest(np.ones(4))

    def test_distance_tie_breaks_to_lowest_id(self):
        vectors = np.array([[1.0, 0.0], [1.0, 0.0]])
        index = EmbeddingIndex(ids=("zz", "aa"), labels=("A", "B"), vectors=vectors)
        neighbor_id, label = index.nearest(np.array([1.0, 0.0]))
        assert neighbor_id == "aa"
        assert label == "B"


class TestFilterPipeline:
    CLASSES = ("A", "B")

    def setup_edits(self, n=6):
        return [edit_record(f"e{k}", label="A") for k in range(n)]

    @staticmethod
    def images_by_key(edits):
        mapping = {e.edit_id: key_image(i) for i, e in enumerate(edits)}
        return lambda e: mapping[e.edit_id]

    def test_all_stages_disabled_keeps_everything(self):
        edits = self.setup_edits()
        config = FilterConfig(semantic=False, confidence=False, knn=False)
        out = filter_pipeline(edits, self.images_by_key(edits), config)
        assert out.kept == edits
        assert out.filtered == []
        assert all(out.verdicts[e.edit_id] == [] for e in edits)

    def test_semantic_rejection_short_circuits(self):
        edits = self.setup_edits(2)
        zs = TableZeroShot({0: [0.1, 0.9], 1: [0.9, 0.1]})
        clf = TableClassifier(self.CLASSES, {0: [0.5, 0.5], 1: [0.1, 0.9]})
        thresholds = ThresholdTable(t={"A": 0.9, "B": 0.95}, support={"A": 1, "B": 1})
        config = FilterConfig(task_prompt="task", distractors=("d",))
        out = filter_pipeline(
            edits, self.images_by_key(edits), config,
            zero_shot=zs, task_classifier=clf, thresholds=thresholds,
            classes=self.CLASSES,
        )
        stages = {e: [v.stage for v in vs] for e, vs in out.verdicts.items()}
        assert stages["e0"] == ["semantic"]  # rejected, no confidence verdict
        assert stages["e1"] == ["semantic", "confidence"]

    def test_matches_brute_force_oracle(self):
        edits = self.setup_edits(6)
        zs_scores = {
            0: [0.9, 0.2], 1: [0.1, 0.8], 2: [0.7, 0.2],
            3: [0.9, 0.1], 4: [0.3, 0.6], 5: [0.8, 0.2],
        }
        softmaxes = {
            0: [0.4, 0.6], 1: [0.9, 0.1], 2: [0.95, 0.05],
            3: [0.2, 0.8], 4: [0.5, 0.5], 5: [0.55, 0.45],
        }
        thresholds = {"A": 0.6, "B": 0.7}

        # Independent oracle: reapply the two rules per edit, literally.
        expected_filtered = set()
        for k in range(6):
            task, distractor = zs_scores[k]
            if not (task >= distractor):
                expected_filtered.add(f"e{k}")
                continue
            probs = softmaxes[k]
            pred = 0 if probs[0] >= probs[1] else 1
            if probs[pred] >= thresholds[self.CLASSES[pred]]:
                expected_filtered.add(f"e{k}")

        zs = TableZeroShot(zs_scores)
        clf = TableClassifier(self.CLASSES, softmaxes)
        table = ThresholdTable(t=thresholds, support={"A": 1, "B": 1})
        config = FilterConfig(task_prompt="task", distractors=("d",))
        out = filter_pipeline(
            edits, self.images_by_key(edits), config,
            zero_shot=zs, task_classifier=clf, thresholds=table, classes=self.CLASSES,
        )
        assert {e.edit_id for e in out.filtered} == expected_filtered

    def test_partition_no_loss_no_duplication(self):
        edits = self.setup_edits(5)
        zs = TableZeroShot({k: [0.5 + 0.1 * (k % 2), 0.55] for k in range(5)})
        config = FilterConfig(confidence=False, task_prompt="t", distractors=("d",))
        out = filter_pipeline(edits, self.images_by_key(edits), config, zero_shot=zs)
        ids = [e.edit_id for e in out.kept] + [e.edit_id for e in out.filtered]
        assert sorted(ids) == sorted(e.edit_id for e in edits)

    def test_missing_thresholds_is_config_error(self):
        edits = self.setup_edits(1)
        config = FilterConfig(semantic=False, confidence=True)
        with pytest.raises(ConfigError, match="confidence"):
            filter_pipeline(edits, self.images_by_key(edits), config)

    def test_statuses_written_to_store(self, tmp_path):
        store = RecordStore(tmp_path)
        edits = self.setup_edits(2)
        for e in edits:
            store.append(e)
        zs = TableZeroShot({0: [0.9, 0.1], 1: [0.1, 0.9]})
        config = FilterConfig(confidence=False, task_prompt="t", distractors=("d",))
        filter_pipeline(edits, self.images_by_key(edits), config,
                        zero_shot=zs, store=store)
        loaded = store.load()
        assert loaded["e0"].status == "kept"
        assert loaded["e1"].status == "filtered-semantic"

    def test_monotone_in_thresholds(self):
        # Raising every threshold weakly grows the kept set.
        rng = np.random.default_rng(11)
        edits = self.setup_edits(6)
        softmaxes = {}
        for k in range(6):
            raw = rng.random(2) + 1e-9
            softmaxes[k] = raw / raw.sum()
        clf = TableClassifier(self.CLASSES, softmaxes)
        config = FilterConfig(semantic=False, confidence=True)

        def kept_with(ts):
            table = ThresholdTable(t=ts, support={"A": 1, "B": 1})
            out = filter_pipeline(edits, self.images_by_key(edits), config,
                                  task_classifier=clf, thresholds=table,
                                  classes=self.CLASSES)
            return {e.edit_id for e in out.kept}

        low = kept_with({"A": 0.3, "B": 0.3})
        high = kept_with({"A": 0.8, "B": 0.8})
        assert low <= high
