import json
import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alia.data import (
    ClassDistribution,
    Dataset,
    ImageRecord,
    build_bias_split,
    class_distribution,
    load_manifest,
    merge_augmented,
    sample_to_match,
)
from alia.errors import IntegrityError, ShortageError

# Per-(class, background) train counts for the contextual-bias aircraft split.
PLANES_TRAIN_SPEC = {
    "Airbus": {"sky": 98, "grass": 0, "road": 70},
    "Boeing": {"sky": 129, "grass": 112, "road": 0},
}


def rec(id_, label="A", split="train", provenance="original", **kw):
    return ImageRecord(id=id_, uri=f"store://{id_}", label=label, split=split,
                       provenance=provenance, **kw)


def pool_of(counts: dict[str, int], split="train", start=0):
    out = []
    n = start
    for label, k in counts.items():
        for _ in range(k):
            out.append(rec(f"r{n}", label=label, split=split))
            n += 1
    return out


def dataset_of(records, classes=("A", "B")):
    return Dataset(records=tuple(records), classes=classes)


class TestClassDistribution:
    def test_simple_counts(self):
        ds = dataset_of(pool_of({"A": 2, "B": 1}))
        assert class_distribution(ds, "train").counts == {"A": 2, "B": 1}

    def test_empty_split_is_all_zero(self):
        ds = dataset_of(pool_of({"A": 2}))
        assert class_distribution(ds, "val").counts == {"A": 0, "B": 0}


class TestSampleToMatch:
    def test_exact_counts(self):
        pool = pool_of({"A": 5, "B": 5})
        out = sample_to_match(pool, ClassDistribution({"A": 2, "B": 1}), seed=1)
        assert len(out) == 3
        assert sum(1 for r in out if r.label == "A") == 2
        assert sum(1 for r in out if r.label == "B") == 1

    def test_zero_target_is_empty(self):
        assert sample_to_match(pool_of({"A": 5}), ClassDistribution({"A": 0}), 1) == []

    def test_shortage_reports_class_and_deficit(self):
        with pytest.raises(ShortageError) as err:
            sample_to_match(pool_of({"A": 3}), ClassDistribution({"A": 2, "B": 1}), 1)
        assert err.value.deficits == {"B": 1}

    def test_deterministic_and_order_preserving(self):
        pool = pool_of({"A": 30})
        a = sample_to_match(pool, ClassDistribution({"A": 10}), seed=42)
        b = sample_to_match(pool, ClassDistribution({"A": 10}), seed=42)
        assert [r.id for r in a] == [r.id for r in b]
        order = {r.id: i for i, r in enumerate(pool)}
        positions = [order[r.id] for r in a]
        assert positions == sorted(positions)

    @settings(max_examples=60, deadline=None)
    @given(
        counts=st.dictionaries(
            st.sampled_from(["A", "B", "C", "D"]),
            st.integers(min_value=0, max_value=12),
            min_size=1,
        ),
        extra=st.integers(min_value=0, max_value=8),
        seed=st.integers(min_value=0, max_value=2**32),
    )
    def test_output_distribution_matches_target(self, counts, extra, seed):
        pool = pool_of({cls: n + extra for cls, n in counts.items()})
        out = sample_to_match(pool, ClassDistribution(counts), seed)
        got = {}
        for r in out:
            got[r.label] = got.get(r.label, 0) + 1
        assert got == {c: n for c, n in counts.items() if n > 0}
        assert len({r.id for r in out}) == len(out)


class TestMergeAugmented:
    def test_merge_counts_and_no_warning_inside_band(self, caplog):
        train = dataset_of(pool_of({"A": 50, "B": 50}))
        added = [rec(f"e{i}", provenance="txt2img") for i in range(37)]
        with caplog.at_level(logging.WARNING):
            merged = merge_augmented(train, added)
        assert len(merged) == 137
        assert not caplog.records

    def test_zero_added_warns(self, caplog):
        train = dataset_of(pool_of({"A": 100}), classes=("A",))
        with caplog.at_level(logging.WARNING):
            merged = merge_augmented(train, [])
        assert len(merged) == 100
        assert any("expansion ratio" in r.message for r in caplog.records)

    def test_overexpansion_warns(self, caplog):
        train = dataset_of(pool_of({"A": 100}), classes=("A",))
        added = [rec(f"e{i}", provenance="txt2img") for i in range(120)]
        with caplog.at_level(logging.WARNING):
            merged = merge_augmented(train, added)
        assert len(merged) == 220
        assert any("expansion ratio" in r.message for r in caplog.records)

    def test_added_records_become_train_split(self):
        train = dataset_of(pool_of({"A": 10}), classes=("A",))
        added = [rec("x1", provenance="real-extra", split="extra")]
        merged = merge_augmented(train, added)
        assert merged.by_id()["x1"].split == "train"

    def test_inputs_not_mutated(self):
        train = dataset_of(pool_of({"A": 10}), classes=("A",))
        before = tuple(train.records)
        added = [rec("x1", provenance="txt2img")]
        merge_augmented(train, added)
        assert train.records == before
        assert added[0].split == "train"  # caller's record untouched object-wise

    def test_id_collision_rejected(self):
        train = dataset_of(pool_of({"A": 2}), classes=("A",))
        clash = rec(train.records[0].id, provenance="txt2img")
        with pytest.raises(IntegrityError, match="collides"):
            merge_augmented(train, [clash])


class TestBiasSplit:
    @staticmethod
    def planes_pool():
        records = []
        n = 0
        for cls in ("Airbus", "Boeing"):
            for background in ("sky", "grass", "road"):
                for _ in range(150):
                    records.append(rec(
                        f"p{n}", label=cls, split="train",
                        domain_tags={"background": background},
                    ))
                    n += 1
        return Dataset(records=tuple(records), classes=("Airbus", "Boeing"),
                       superclass="airplane")

    def test_exact_cell_counts(self):
        out = build_bias_split(self.planes_pool(), PLANES_TRAIN_SPEC, seed=3)
        assert len(out) == 409
        cells = {}
        for r in out.records:
            key = (r.label, r.domain_tags["background"])
            cells[key] = cells.get(key, 0) + 1
        assert cells == {
            ("Airbus", "sky"): 98, ("Airbus", "road"): 70,
            ("Boeing", "sky"): 129, ("Boeing", "grass"): 112,
        }

    def test_all_zero_spec_is_empty(self):
        spec = {"Airbus": {"sky": 0}, "Boeing": {"grass": 0}}
        assert len(build_bias_split(self.planes_pool(), spec, seed=3)) == 0

    def test_shortage_per_cell(self):
        spec = {"Boeing": {"road": 1}}
        pool = Dataset(
            records=(rec("only", label="Boeing", domain_tags={"background": "grass"}),),
            classes=("Airbus", "Boeing"),
        )
        with pytest.raises(ShortageError) as err:
            build_bias_split(pool, spec, seed=3)
        assert err.value.deficits == {"Boeing/road": 1}

    def test_deterministic(self):
        a = build_bias_split(self.planes_pool(), PLANES_TRAIN_SPEC, seed=11)
        b = build_bias_split(self.planes_pool(), PLANES_TRAIN_SPEC, seed=11)
        assert [r.id for r in a.records] == [r.id for r in b.records]


def test_split_counts_at_camera_trap_scale(tmp_path):
    # Split sizes mirroring the camera-trap benchmark: 6052 train, 2224 extra,
    # 2826 val, 8483 test.
    sizes = {"train": 6052, "extra": 2224, "val": 2826, "test": 8483}
    path = tmp_path / "wild.jsonl"
    classes = ["background", "cattle", "elephant", "impala", "zebra", "giraffe", "dik-dik"]
    with path.open("w") as fh:
        n = 0
        for split, count in sizes.items():
            provenance = "real-extra" if split == "extra" else "original"
            for i in range(count):
                fh.write(json.dumps({
                    "id": f"w{n}", "uri": f"store://w{n}",
                    "label": classes[i % len(classes)],
                    "split": split, "provenance": provenance,
                }) + "\n")
                n += 1
    ds = load_manifest(path)
    got = {s: len(ds.split_records(s)) for s in sizes}
    assert got == sizes
