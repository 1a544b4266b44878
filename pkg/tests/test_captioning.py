import numpy as np
import pytest

from alia.captioning import (
    CaptionCache,
    CaptionPool,
    FailingCaptioner,
    StubCaptioner,
    caption_dataset,
    normalize_caption,
    sample_captions,
)
from alia.data import Dataset, ImageRecord
from alia.errors import BackendError, PreconditionError


def image(k: int) -> np.ndarray:
    return np.full((8, 8, 3), k % 251, dtype=np.uint8)


def tiny_dataset(n=3, label="zebra"):
    recs = tuple(
        ImageRecord(id=f"img{i}", uri=f"mem://{i}", label=label, split="train")
        for i in range(n)
    )
    return Dataset(records=recs, classes=(label,), superclass="animal")


def loader_for(dataset):
    index = {rec.id: image(i) for i, rec in enumerate(dataset.records)}
    return lambda rec: index[rec.id]


class ConstantCaptioner:
    def __init__(self, text):
        self.text = text
        self.calls = 0

    def caption(self, image):
        self.calls += 1
        return self.text


def test_identical_captions_collapse_to_one():
    ds = tiny_dataset(3)
    pool = caption_dataset(ds, ConstantCaptioner("a bird on a branch"), loader=loader_for(ds))
    assert pool.captions == ("a bird on a branch",)
    assert pool.source_counts["a bird on a branch"] == 3
    assert not pool.includes_context_only


def test_context_only_pool():
    ds = Dataset(records=(), classes=("zebra",), superclass="animal")
    ctx = [("bg0", image(0)), ("bg1", image(1))]
    pool = caption_dataset(ds, StubCaptioner(), context_images=ctx)
    assert 1 <= len(pool) <= 2
    assert pool.includes_context_only


def test_empty_everything_is_a_precondition_error():
    ds = Dataset(records=(), classes=(), superclass="animal")
    with pytest.raises(PreconditionError):
        caption_dataset(ds, StubCaptioner())


def test_whitespace_normalization_dedups():
    pool = CaptionPool.from_captions(["a  bird", "a bird ", " a bird"])
    assert pool.captions == ("a bird",)
    assert pool.source_counts == {"a bird": 3}
    assert normalize_caption("  a\t b\n") == "a b"


def test_total_failure_raises_after_threshold():
    ds = tiny_dataset(4)
    with pytest.raises(BackendError, match="failed for 4 of 4"):
        caption_dataset(ds, FailingCaptioner(), loader=loader_for(ds))


def test_partial_failure_tolerated(caplog):
    ds = tiny_dataset(4)
    loader = loader_for(ds)

    class Flaky:
        def __init__(self):
            self.calls = 0

        def caption(self, img):
            self.calls += 1
            if self.calls == 1:
                raise RuntimeError("boom")
            return f"caption {self.calls}"

    pool = caption_dataset(ds, Flaky(), loader=loader, max_workers=1)
    assert len(pool) == 3


def test_cache_reused_on_resume(tmp_path):
    ds = tiny_dataset(3)
    loader = loader_for(ds)
    cache = CaptionCache(tmp_path / "captions.json")
    first = ConstantCaptioner("x")
    caption_dataset(ds, first, loader=loader, cache=cache)
    assert first.calls == 3

    cache2 = CaptionCache(tmp_path / "captions.json")
    second = ConstantCaptioner("x")
    caption_dataset(ds, second, loader=loader, cache=cache2)
    assert second.calls == 0


def test_stub_captioner_is_deterministic():
    cap = StubCaptioner("animal")
    first = cap.caption(image(3))
    assert first == cap.caption(image(3))
    assert "animal" in first
    assert cap.caption(image(4)) != first or image(4).tobytes() == image(3).tobytes()


class TestSampleCaptions:
    def test_small_pool_returns_all(self):
        pool = CaptionPool.from_captions([f"c{i}" for i in range(5)])
        out = sample_captions(pool, n=200, seed=1)
        assert sorted(out) == sorted(pool.captions)

    def test_large_pool_returns_exactly_n_unique(self):
        pool = CaptionPool.from_captions([f"caption number {i}" for i in range(500)])
        out = sample_captions(pool, n=200, seed=1)
        assert len(out) == 200
        assert len(set(out)) == 200

    def test_deterministic_per_seed(self):
        pool = CaptionPool.from_captions([f"c{i}" for i in range(50)])
        assert sample_captions(pool, 10, seed=9) == sample_captions(pool, 10, seed=9)
        assert sample_captions(pool, 10, seed=9) != sample_captions(pool, 10, seed=10)

    def test_n_must_be_positive(self):
        pool = CaptionPool.from_captions(["a"])
        with pytest.raises(PreconditionError):
            sample_captions(pool, n=0, seed=1)
