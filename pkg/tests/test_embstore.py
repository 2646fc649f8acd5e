import io
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_dataset
from probe_bench import synthgen
from probe_bench.embstore import (
    HEADER_SIZE,
    EmbeddingDataset,
    EmbsFormatError,
    IncompleteSplitWarning,
    read_embs,
    read_embs_file,
    split_view,
    to_bytes,
    write_embs,
    write_embs_file,
)


def _quiet_dataset(**kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IncompleteSplitWarning)
        return EmbeddingDataset(**kwargs)


def minimal_dataset():
    return _quiet_dataset(
        embeddings=np.zeros((1, 1), dtype=np.float32),
        labels=np.array([0], dtype=np.uint32),
        groups=np.array([0], dtype=np.uint32),
        splits=np.array([0], dtype=np.uint8),
        class_count=2,
        group_count=1,
    )


class TestRoundTrip:
    def test_minimal_dataset_size_and_roundtrip(self):
        ds = minimal_dataset()
        blob = to_bytes(ds)
        # header 32 + one f32 + one u32 label + one u32 group + one u8 split
        assert len(blob) == HEADER_SIZE + 4 + 4 + 4 + 1 == 45
        assert len(blob) == ds.file_size()
        back = read_embs(io.BytesIO(blob))
        assert back.n == 1 and back.dim == 1
        assert np.array_equal(back.embeddings, ds.embeddings)

    def test_waterbirds_analog_size(self, default_ds):
        ds = default_ds
        assert ds.n == 11788
        blob = to_bytes(ds)
        assert len(blob) == 32 + 11788 * 16 * 4 + 11788 * (4 + 4 + 1)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_roundtrip_identity_random(self, seed):
        gen = np.random.default_rng(seed)
        ds = random_dataset(gen)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IncompleteSplitWarning)
            back = read_embs(io.BytesIO(to_bytes(ds)))
        assert back.n == ds.n and back.dim == ds.dim
        assert back.class_count == ds.class_count and back.group_count == ds.group_count
        # bit-exact float payload
        assert ds.embeddings.tobytes() == back.embeddings.tobytes()
        assert np.array_equal(ds.labels, back.labels)
        assert np.array_equal(ds.groups, back.groups)
        assert np.array_equal(ds.splits, back.splits)

    def test_file_roundtrip(self, tmp_path, small_balanced_ds):
        path = tmp_path / "ds.embs"
        write_embs_file(small_balanced_ds, path)
        back = read_embs_file(path)
        assert to_bytes(back) == to_bytes(small_balanced_ds)


class TestValidation:
    def test_nan_embedding_rejected_before_writing(self):
        emb = np.zeros((2, 3), dtype=np.float32)
        emb[1, 2] = np.nan
        with pytest.raises(ValueError, match="not finite"):
            _quiet_dataset(
                embeddings=emb,
                labels=np.zeros(2, dtype=np.uint32),
                groups=np.zeros(2, dtype=np.uint32),
                splits=np.zeros(2, dtype=np.uint8),
                class_count=2,
                group_count=1,
            )

    def test_label_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="label 5 at example 1"):
            _quiet_dataset(
                embeddings=np.zeros((2, 2), dtype=np.float32),
                labels=np.array([0, 5], dtype=np.uint32),
                groups=np.zeros(2, dtype=np.uint32),
                splits=np.zeros(2, dtype=np.uint8),
                class_count=2,
                group_count=1,
            )

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="labels"):
            _quiet_dataset(
                embeddings=np.zeros((3, 2), dtype=np.float32),
                labels=np.zeros(2, dtype=np.uint32),
                groups=np.zeros(3, dtype=np.uint32),
                splits=np.zeros(3, dtype=np.uint8),
                class_count=2,
                group_count=1,
            )

    def test_arrays_immutable(self):
        ds = minimal_dataset()
        with pytest.raises(ValueError):
            ds.embeddings[0, 0] = 1.0

    def test_missing_class_in_split_warns_not_errors(self):
        with pytest.warns(IncompleteSplitWarning, match="class"):
            EmbeddingDataset(
                embeddings=np.zeros((2, 1), dtype=np.float32),
                labels=np.array([0, 0], dtype=np.uint32),
                groups=np.zeros(2, dtype=np.uint32),
                splits=np.array([0, 1], dtype=np.uint8),
                class_count=2,
                group_count=1,
            )


class TestReader:
    def test_bad_magic_offset_zero(self):
        ds = minimal_dataset()
        blob = b"XXXX" + to_bytes(ds)[4:]
        with pytest.raises(EmbsFormatError, match="offset 0"):
            read_embs(io.BytesIO(blob))

    def test_unsupported_version(self):
        blob = bytearray(to_bytes(minimal_dataset()))
        blob[4] = 9
        with pytest.raises(EmbsFormatError, match=r"version.*offset 4"):
            read_embs(io.BytesIO(bytes(blob)))

    def test_nonzero_reserved(self):
        blob = bytearray(to_bytes(minimal_dataset()))
        blob[28] = 1
        with pytest.raises(EmbsFormatError, match="offset 28"):
            read_embs(io.BytesIO(bytes(blob)))

    def test_truncated_embedding_block(self, small_balanced_ds):
        blob = to_bytes(small_balanced_ds)
        n, dim = small_balanced_ds.n, small_balanced_ds.dim
        cut = HEADER_SIZE + (n * dim * 4) // 2
        expected = n * dim * 4
        with pytest.raises(EmbsFormatError) as exc:
            read_embs(io.BytesIO(blob[:cut]))
        msg = str(exc.value)
        assert f"expected {expected} bytes" in msg
        assert f"got {cut - HEADER_SIZE}" in msg
        assert f"offset {HEADER_SIZE}" in msg

    def test_truncated_label_block(self, small_balanced_ds):
        blob = to_bytes(small_balanced_ds)
        n, dim = small_balanced_ds.n, small_balanced_ds.dim
        cut = HEADER_SIZE + n * dim * 4 + 2
        with pytest.raises(EmbsFormatError, match="label"):
            read_embs(io.BytesIO(blob[:cut]))

    def test_out_of_range_group_names_example_and_offset(self):
        ds = _quiet_dataset(
            embeddings=np.zeros((3, 2), dtype=np.float32),
            labels=np.zeros(3, dtype=np.uint32),
            groups=np.zeros(3, dtype=np.uint32),
            splits=np.zeros(3, dtype=np.uint8),
            class_count=2,
            group_count=2,
        )
        blob = bytearray(to_bytes(ds))
        group_block = HEADER_SIZE + 3 * 2 * 4 + 3 * 4
        bad_offset = group_block + 4 * 2  # third group entry
        blob[bad_offset : bad_offset + 4] = (99).to_bytes(4, "little")
        with pytest.raises(EmbsFormatError) as exc:
            read_embs(io.BytesIO(bytes(blob)))
        assert "example 2" in str(exc.value)
        assert f"offset {bad_offset}" in str(exc.value)

    def test_non_finite_payload_rejected(self):
        blob = bytearray(to_bytes(minimal_dataset()))
        blob[HEADER_SIZE : HEADER_SIZE + 4] = np.array([np.inf], dtype="<f4").tobytes()
        with pytest.raises(EmbsFormatError, match="non-finite"):
            read_embs(io.BytesIO(bytes(blob)))

    def test_trailing_bytes_rejected_for_files(self, tmp_path):
        path = tmp_path / "junk.embs"
        path.write_bytes(to_bytes(minimal_dataset()) + b"!")
        with pytest.raises(EmbsFormatError, match="trailing"):
            read_embs_file(path)

    def test_fuzz_smoke(self):
        # the full 10^4-stream fuzz lives in the acceptance suite
        base = to_bytes(minimal_dataset())
        gen = np.random.default_rng(3)
        for _ in range(200):
            blob = bytearray(base)
            for _ in range(int(gen.integers(1, 4))):
                blob[int(gen.integers(0, len(blob)))] = int(gen.integers(0, 256))
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", IncompleteSplitWarning)
                    read_embs(io.BytesIO(bytes(blob)))
            except EmbsFormatError:
                pass


class TestSplitView:
    def test_default_split_sizes(self, default_ds):
        assert len(split_view(default_ds, 0)) == 4795
        assert len(split_view(default_ds, 1)) == 1199
        assert len(split_view(default_ds, 2)) == 5794

    def test_val_group_counts(self, default_ds):
        counts = split_view(default_ds, 1).group_counts()
        # count-tuple order (y1b1, y1b0, y0b1, y0b0) = group ids (3, 2, 1, 0)
        assert [int(counts[g]) for g in (3, 2, 1, 0)] == [467, 467, 133, 133]

    def test_partition(self):
        gen = np.random.default_rng(17)
        ds = random_dataset(gen, n=50)
        views = [split_view(ds, s) for s in (0, 1, 2)]
        all_idx = np.concatenate([v.indices for v in views])
        assert len(np.unique(all_idx)) == len(all_idx) == ds.n
        assert np.array_equal(np.sort(all_idx), np.arange(ds.n))
        for v in views:
            if len(v):
                assert np.all(np.diff(v.indices) > 0)
                assert np.all(ds.splits[v.indices] == v.split_id)

    def test_empty_view_permitted(self):
        ds = minimal_dataset()
        assert len(split_view(ds, 2)) == 0

    def test_invalid_split_id(self):
        with pytest.raises(ValueError, match="split_id"):
            split_view(minimal_dataset(), 3)


def test_write_then_read_buffer_identity(small_balanced_ds):
    buf = io.BytesIO()
    write_embs(small_balanced_ds, buf)
    assert buf.getvalue() == to_bytes(small_balanced_ds)


def test_default_synthetic_matches_spec_totals():
    spec = synthgen.SynthSpec()
    assert sum(spec.train_counts) == 4795
    assert sum(spec.val_counts) == 1199
    assert sum(spec.test_counts) == 5794
    assert spec.n == 11788
