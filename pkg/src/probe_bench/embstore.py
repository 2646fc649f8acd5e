"""EMBS v1: the binary embedding-dataset interchange format.

Layout, little-endian throughout:

    bytes 0-3    magic "EMBS"
    bytes 4-7    version   u32 = 1
    bytes 8-15   n         u64
    bytes 16-19  dim       u32
    bytes 20-23  class_count u32
    bytes 24-27  group_count u32
    bytes 28-31  reserved  u32 = 0
    then n*dim f32 embeddings, row-major
    then n u32 class labels
    then n u32 group ids
    then n u8 split ids (0 = train, 1 = validation, 2 = test)

Embeddings are stored as 32-bit floats (extractors emit single precision);
training math elsewhere promotes to 64-bit. One file holds all three splits:
split membership is data, not file structure. Group ids are opaque; the
conventional mapping for class/background data is group = 2*y + background,
but readers must not assume it.
"""

import struct
import warnings
from dataclasses import dataclass

import numpy as np

MAGIC = b"EMBS"
VERSION = 1
HEADER = struct.Struct("<4sIQIIII")  # magic, version, n, dim, classes, groups, reserved
HEADER_SIZE = HEADER.size  # 32

SPLIT_TRAIN, SPLIT_VAL, SPLIT_TEST = 0, 1, 2
SPLIT_NAMES = {SPLIT_TRAIN: "train", SPLIT_VAL: "val", SPLIT_TEST: "test"}


class EmbsFormatError(ValueError):
    """Malformed EMBS data. `offset` is the byte position of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class IncompleteSplitWarning(UserWarning):
    """A split present in the dataset is missing examples of some class."""


@dataclass(frozen=True)
class EmbeddingDataset:
    """N embedding vectors with class labels, group ids, and split ids.

    Immutable after construction (array buffers are locked), so instances are
    safe to share across concurrent readers.
    """

    embeddings: np.ndarray  # n x dim float32, row-major
    labels: np.ndarray  # n uint32, each < class_count
    groups: np.ndarray  # n uint32, each < group_count
    splits: np.ndarray  # n uint8, each in {0, 1, 2}
    class_count: int
    group_count: int

    def __post_init__(self):
        # Copy before locking: the dataset owns its buffers and callers keep theirs.
        emb = np.array(self.embeddings, dtype=np.float32, order="C")
        if emb.ndim != 2:
            raise ValueError(f"embeddings must be 2-D, got shape {emb.shape}")
        n, dim = emb.shape
        if n < 1 or dim < 1:
            raise ValueError(f"need n >= 1 and dim >= 1, got n={n}, dim={dim}")
        if self.class_count < 2:
            raise ValueError(f"class_count must be >= 2, got {self.class_count}")
        if self.group_count < 1:
            raise ValueError(f"group_count must be >= 1, got {self.group_count}")
        labels = np.array(self.labels, dtype=np.uint32)
        groups = np.array(self.groups, dtype=np.uint32)
        splits = np.array(self.splits, dtype=np.uint8)
        for name, arr in (("labels", labels), ("groups", groups), ("splits", splits)):
            if arr.shape != (n,):
                raise ValueError(f"{name} must have exactly {n} entries, got shape {arr.shape}")
        if not np.isfinite(emb).all():
            i = int(np.flatnonzero(~np.isfinite(emb).ravel())[0])
            raise ValueError(f"embedding entry {i // dim},{i % dim} is not finite")
        if labels.size and labels.max() >= self.class_count:
            i = int(np.flatnonzero(labels >= self.class_count)[0])
            raise ValueError(f"label {int(labels[i])} at example {i} >= class_count {self.class_count}")
        if groups.size and groups.max() >= self.group_count:
            i = int(np.flatnonzero(groups >= self.group_count)[0])
            raise ValueError(f"group id {int(groups[i])} at example {i} >= group_count {self.group_count}")
        if splits.size and splits.max() > SPLIT_TEST:
            i = int(np.flatnonzero(splits > SPLIT_TEST)[0])
            raise ValueError(f"split id {int(splits[i])} at example {i} not in {{0,1,2}}")
        for arr in (emb, labels, groups, splits):
            arr.flags.writeable = False
        object.__setattr__(self, "embeddings", emb)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "splits", splits)
        for msg in self.split_coverage_warnings():
            warnings.warn(msg, IncompleteSplitWarning, stacklevel=2)

    @property
    def n(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def split_coverage_warnings(self) -> list[str]:
        """Soft invariant: every present split should cover every class.

        Violations are warnings, not errors: minority groups may legitimately
        be absent from a split.
        """
        out = []
        for sid in (SPLIT_TRAIN, SPLIT_VAL, SPLIT_TEST):
            mask = self.splits == sid
            if not mask.any():
                continue
            present = np.bincount(self.labels[mask].astype(np.int64), minlength=self.class_count)
            missing = np.flatnonzero(present == 0)
            if missing.size:
                out.append(
                    f"split {SPLIT_NAMES[sid]} has no examples of class(es) "
                    f"{', '.join(str(c) for c in missing)}"
                )
        return out

    def file_size(self) -> int:
        """Size in bytes of this dataset's EMBS serialization."""
        return HEADER_SIZE + self.n * self.dim * 4 + self.n * 9


@dataclass(frozen=True)
class SplitView:
    """Index view over the examples of one split, in file order."""

    dataset: EmbeddingDataset
    split_id: int
    indices: np.ndarray  # int64, strictly increasing

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64)
        if idx.ndim != 1:
            raise ValueError("indices must be 1-D")
        if idx.size:
            if idx[0] < 0 or idx[-1] >= self.dataset.n:
                raise ValueError("indices out of range")
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly increasing")
            if np.any(self.dataset.splits[idx] != self.split_id):
                raise ValueError(f"indices must all have split id {self.split_id}")
        idx.flags.writeable = False
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return self.indices.size

    @property
    def embeddings(self) -> np.ndarray:
        return self.dataset.embeddings[self.indices]

    @property
    def labels(self) -> np.ndarray:
        return self.dataset.labels[self.indices]

    @property
    def groups(self) -> np.ndarray:
        return self.dataset.groups[self.indices]

    def group_counts(self) -> np.ndarray:
        return np.bincount(self.groups.astype(np.int64), minlength=self.dataset.group_count)


def split_view(dataset: EmbeddingDataset, split_id: int) -> SplitView:
    """View over exactly the examples with `split_id`, in file order."""
    if split_id not in (SPLIT_TRAIN, SPLIT_VAL, SPLIT_TEST):
        raise ValueError(f"split_id must be 0, 1, or 2, got {split_id}")
    idx = np.flatnonzero(dataset.splits == split_id).astype(np.int64)
    return SplitView(dataset, split_id, idx)


def write_embs(dataset: EmbeddingDataset, sink) -> None:
    """Serialize `dataset` to the binary sink, byte-exactly per the v1 layout."""
    # Dataset invariants hold by construction; nothing to re-check before writing.
    sink.write(
        HEADER.pack(MAGIC, VERSION, dataset.n, dataset.dim, dataset.class_count, dataset.group_count, 0)
    )
    sink.write(dataset.embeddings.astype("<f4", copy=False).tobytes())
    sink.write(dataset.labels.astype("<u4", copy=False).tobytes())
    sink.write(dataset.groups.astype("<u4", copy=False).tobytes())
    sink.write(dataset.splits.astype("u1", copy=False).tobytes())


def to_bytes(dataset: EmbeddingDataset) -> bytes:
    import io

    buf = io.BytesIO()
    write_embs(dataset, buf)
    return buf.getvalue()


def _read_block(source, size: int, offset: int, what: str) -> bytes:
    data = source.read(size)
    if len(data) != size:
        raise EmbsFormatError(
            f"truncated {what}: expected {size} bytes, got {len(data)}", offset
        )
    return data


def read_embs(source) -> EmbeddingDataset:
    """Parse an EMBS v1 stream, validating every invariant.

    Consumes exactly the bytes the header declares; trailing stream content is
    left unread. Raises EmbsFormatError with the offending byte offset on any
    malformed input.
    """
    header = _read_block(source, HEADER_SIZE, 0, "header")
    magic, version, n, dim, class_count, group_count, reserved = HEADER.unpack(header)
    if magic != MAGIC:
        raise EmbsFormatError(f"bad magic {magic!r}, expected {MAGIC!r}", 0)
    if version != VERSION:
        raise EmbsFormatError(f"unsupported version {version}, expected {VERSION}", 4)
    if n < 1:
        raise EmbsFormatError("n must be >= 1", 8)
    if dim < 1:
        raise EmbsFormatError("dim must be >= 1", 16)
    if class_count < 2:
        raise EmbsFormatError(f"class_count must be >= 2, got {class_count}", 20)
    if group_count < 1:
        raise EmbsFormatError("group_count must be >= 1", 24)
    if reserved != 0:
        raise EmbsFormatError(f"reserved field must be 0, got {reserved}", 28)

    offset = HEADER_SIZE
    emb_bytes = n * dim * 4
    raw = _read_block(source, emb_bytes, offset, "embedding block")
    emb = np.frombuffer(raw, dtype="<f4").reshape(n, dim)
    finite = np.isfinite(emb)
    if not finite.all():
        i = int(np.flatnonzero(~finite.ravel())[0])
        raise EmbsFormatError(
            f"non-finite embedding entry at example {i // dim}, component {i % dim}",
            offset + 4 * i,
        )
    offset += emb_bytes

    raw = _read_block(source, n * 4, offset, "label block")
    labels = np.frombuffer(raw, dtype="<u4")
    if labels.max() >= class_count:
        i = int(np.flatnonzero(labels >= class_count)[0])
        raise EmbsFormatError(
            f"label {int(labels[i])} at example {i} >= class_count {class_count}", offset + 4 * i
        )
    offset += n * 4

    raw = _read_block(source, n * 4, offset, "group block")
    groups = np.frombuffer(raw, dtype="<u4")
    if groups.max() >= group_count:
        i = int(np.flatnonzero(groups >= group_count)[0])
        raise EmbsFormatError(
            f"group id {int(groups[i])} at example {i} >= group_count {group_count}", offset + 4 * i
        )
    offset += n * 4

    raw = _read_block(source, n, offset, "split block")
    splits = np.frombuffer(raw, dtype="u1")
    if splits.max() > SPLIT_TEST:
        i = int(np.flatnonzero(splits > SPLIT_TEST)[0])
        raise EmbsFormatError(f"split id {int(splits[i])} at example {i} not in {{0,1,2}}", offset + i)

    return EmbeddingDataset(
        embeddings=emb,
        labels=labels,
        groups=groups,
        splits=splits,
        class_count=class_count,
        group_count=group_count,
    )


def read_embs_file(path) -> EmbeddingDataset:
    """Read an EMBS file, additionally rejecting trailing junk bytes."""
    with open(path, "rb") as f:
        ds = read_embs(f)
        extra = f.read(1)
        if extra:
            raise EmbsFormatError("trailing bytes after dataset payload", ds.file_size())
    return ds


def write_embs_file(dataset: EmbeddingDataset, path) -> None:
    with open(path, "wb") as f:
        write_embs(dataset, f)
