import pytest

from alia.data import ClassDistribution, Dataset, ImageRecord
from alia.errors import IntegrityError


def rec(id_, label="zebra", split="train", provenance="original", **kw):
    return ImageRecord(id=id_, uri=f"store://{id_}", label=label, split=split,
                       provenance=provenance, **kw)


def test_parent_id_required_iff_edited():
    with pytest.raises(IntegrityError):
        rec("a", provenance="edited")
    with pytest.raises(IntegrityError):
        rec("a", parent_id="b")
    edited = rec("a", provenance="edited", parent_id="b")
    assert edited.parent_id == "b"


def test_unknown_split_and_provenance_rejected():
    with pytest.raises(IntegrityError):
        rec("a", split="holdout")
    with pytest.raises(IntegrityError):
        rec("a", provenance="scraped")


def test_dataset_rejects_unknown_label_and_duplicate_ids():
    with pytest.raises(IntegrityError):
        Dataset(records=(rec("a", label="okapi"),), classes=("zebra",))
    with pytest.raises(IntegrityError):
        Dataset(records=(rec("a"), rec("a")), classes=("zebra",))


def test_validate_provenance_catches_dangling_parent():
    ds = Dataset(
        records=(rec("child", provenance="edited", parent_id="missing"),),
        classes=("zebra",),
    )
    with pytest.raises(IntegrityError, match="dangling"):
        ds.validate_provenance()


def test_validate_provenance_requires_original_parent():
    parent = rec("p", provenance="real-extra", split="extra")
    child = rec("c", provenance="edited", parent_id="p")
    ds = Dataset(records=(parent, child), classes=("zebra",))
    with pytest.raises(IntegrityError, match="not an original"):
        ds.validate_provenance()


def test_validate_provenance_split_extra_pairing():
    ds = Dataset(records=(rec("a", split="extra"),), classes=("zebra",))
    with pytest.raises(IntegrityError, match="extra"):
        ds.validate_provenance()


def test_class_distribution_type_rejects_negative():
    with pytest.raises(IntegrityError):
        ClassDistribution({"zebra": -1})
    dist = ClassDistribution({"zebra": 2, "impala": 0})
    assert dist.total == 2
    assert dist["giraffe"] == 0


def test_record_round_trips_through_dict():
    original = rec("a", domain_tags={"background": "grass"}, split="val")
    assert ImageRecord.from_dict(original.to_dict()) == original
