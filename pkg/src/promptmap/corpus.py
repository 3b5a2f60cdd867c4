"""Prompt-image corpus: manifest + precomputed embeddings on disk.

On-disk layout of a corpus/index directory:

    manifest.jsonl   one JSON object per record, keys exactly
                     {"id","prompt","image","guidance_scale","seed","source","row"}
    text.pmeb        N x 512 float32 text embeddings
    image.pmeb       N x 512 float32 image embeddings

PMEB binary format (bit-exact, little-endian):

    bytes 0-3    magic "PMEB" (0x50 0x4D 0x45 0x42)
    bytes 4-7    version, u32 (currently 1)
    bytes 8-11   row count, u32
    bytes 12-15  dim, u32
    then         rows*dim IEEE-754 float32, row-major, no padding, no trailer

Rows are expected unit-norm. On ingest, a row whose norm is within 1e-4 of 1
is kept bit-for-bit (so write -> ingest round-trips exactly); a norm within
1e-3 is silently renormalized (float32 quantization); anything further off
is rejected as wrong data.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .errors import (
    BadMagic,
    BadNorm,
    DimensionMismatch,
    DuplicateId,
    IoError,
    MalformedManifest,
    NotFound,
    RowOutOfRange,
)

PMEB_MAGIC = b"PMEB"
PMEB_VERSION = 1

MANIFEST_KEYS = {"id", "prompt", "image", "guidance_scale", "seed", "source", "row"}

NORM_KEEP_TOL = 1e-4    # |norm-1| <= this: row kept bit-exact
NORM_FIX_TOL = 1e-3     # |norm-1| <= this: row renormalized; beyond: rejected


@dataclass(frozen=True)
class PromptImageRecord:
    """One corpus or generated item."""

    id: str
    prompt: str
    image_ref: str
    guidance_scale: Optional[float]
    seed: Optional[int]
    source: str                    # "db" | "generated"
    row: int                       # index into the embedding matrices

    def to_manifest_obj(self) -> dict:
        return {
            "id": self.id,
            "prompt": self.prompt,
            "image": self.image_ref,
            "guidance_scale": self.guidance_scale,
            "seed": self.seed,
            "source": self.source,
            "row": self.row,
        }

    @classmethod
    def from_manifest_obj(cls, obj: dict) -> "PromptImageRecord":
        return cls(
            id=obj["id"],
            prompt=obj["prompt"],
            image_ref=obj["image"],
            guidance_scale=obj["guidance_scale"],
            seed=obj["seed"],
            source=obj["source"],
            row=obj["row"],
        )


def write_pmeb(path: Path, matrix: np.ndarray) -> None:
    """Write a float32 matrix in the PMEB format."""
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise DimensionMismatch(f"{path}: expected a 2-D matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{path}: matrix contains non-finite values")
    rows, dim = matrix.shape
    try:
        with open(path, "wb") as fh:
            fh.write(PMEB_MAGIC)
            fh.write(struct.pack("<III", PMEB_VERSION, rows, dim))
            fh.write(matrix.astype("<f4", copy=False).tobytes(order="C"))
    except OSError as exc:
        raise IoError(str(exc)) from exc


def read_pmeb(path: Path, expect_dim: Optional[int] = None) -> np.ndarray:
    """Read a PMEB file, validating magic, version and dimension."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if len(raw) < 16 or raw[:4] != PMEB_MAGIC:
        raise BadMagic(path)
    version, rows, dim = struct.unpack("<III", raw[4:16])
    if version != PMEB_VERSION:
        raise BadMagic(path)
    if expect_dim is not None and dim != expect_dim:
        raise DimensionMismatch(f"{path}: dim {dim}, expected {expect_dim}")
    if dim not in (512, 1024):
        raise DimensionMismatch(f"{path}: unsupported dim {dim}")
    expected = 16 + rows * dim * 4
    if len(raw) != expected:
        raise DimensionMismatch(f"{path}: {len(raw)} bytes, expected {expected} for {rows}x{dim}")
    data = np.frombuffer(raw, dtype="<f4", offset=16)
    return data.reshape(rows, dim).copy()


def _check_norms(matrix: np.ndarray, path) -> np.ndarray:
    """Enforce the unit-norm contract; renormalize only drifted rows."""
    if matrix.shape[0] == 0:
        return matrix
    norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
    dev = np.abs(norms - 1.0)
    bad = np.nonzero(~(dev <= NORM_FIX_TOL))[0]   # catches NaN/inf rows too
    if bad.size:
        raise BadNorm(int(bad[0]), float(norms[bad[0]]))
    fix = np.nonzero(dev > NORM_KEEP_TOL)[0]
    if fix.size:
        matrix = matrix.copy()
        matrix[fix] = (matrix[fix].astype(np.float64) / norms[fix, None]).astype(np.float32)
    return matrix


class CorpusHandle:
    """Immutable, validated view over a corpus; safe for concurrent readers."""

    def __init__(
        self,
        records: list[PromptImageRecord],
        text_features: np.ndarray,
        image_features: np.ndarray,
    ):
        text_features = np.ascontiguousarray(text_features, dtype=np.float32)
        image_features = np.ascontiguousarray(image_features, dtype=np.float32)
        n = len(records)
        if n == 0:
            if text_features.size or image_features.size:
                raise DimensionMismatch("empty record list with nonempty feature matrices")
            text_features = text_features.reshape(0, 512)
            image_features = image_features.reshape(0, 512)
        if text_features.shape != (n, 512):
            raise DimensionMismatch(
                f"text features {text_features.shape} do not match {n} records x 512"
            )
        if image_features.shape != (n, 512):
            raise DimensionMismatch(
                f"image features {image_features.shape} do not match {n} records x 512"
            )
        seen: dict[str, int] = {}
        for rec in records:
            if not rec.id:
                raise MalformedManifest(rec.row, "empty id")
            if rec.id in seen:
                raise DuplicateId(rec.id)
            seen[rec.id] = rec.row
            if rec.row < 0 or rec.row >= n:
                raise RowOutOfRange(rec.id, rec.row, n)
            if rec.source == "db" and not rec.prompt:
                raise MalformedManifest(rec.row, f"record {rec.id!r}: db record without prompt")
        # canonical order: record order always equals feature row order
        self.records = tuple(sorted(records, key=lambda r: r.row))
        self.text_features = _check_norms(text_features, "text")
        self.image_features = _check_norms(image_features, "image")
        self.text_features.setflags(write=False)
        self.image_features.setflags(write=False)
        self._by_id = {rec.id: rec for rec in self.records}

    @property
    def size(self) -> int:
        return len(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[PromptImageRecord]:
        return iter(self.records)

    def get_record(self, record_id: str) -> PromptImageRecord:
        try:
            return self._by_id[record_id]
        except KeyError:
            raise NotFound(record_id) from None

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._by_id

    def __eq__(self, other) -> bool:
        if not isinstance(other, CorpusHandle):
            return NotImplemented
        return (
            self.records == other.records
            and self.text_features.tobytes() == other.text_features.tobytes()
            and self.image_features.tobytes() == other.image_features.tobytes()
        )


def _parse_manifest_line(line_no: int, line: str) -> PromptImageRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedManifest(line_no, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict) or set(obj) != MANIFEST_KEYS:
        raise MalformedManifest(line_no, f"keys must be exactly {sorted(MANIFEST_KEYS)}")
    if obj["source"] not in ("db", "generated"):
        raise MalformedManifest(line_no, f"bad source {obj['source']!r}")
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise MalformedManifest(line_no, "id must be a nonempty string")
    if not isinstance(obj["row"], int) or obj["row"] < 0:
        raise MalformedManifest(line_no, "row must be a non-negative integer")
    gs = obj["guidance_scale"]
    if gs is not None and (not isinstance(gs, (int, float)) or gs < 0):
        raise MalformedManifest(line_no, "guidance_scale must be null or a real >= 0")
    seed = obj["seed"]
    if seed is not None and (not isinstance(seed, int) or not 0 <= seed < 2**64):
        raise MalformedManifest(line_no, "seed must be null or an unsigned 64-bit integer")
    return PromptImageRecord.from_manifest_obj(obj)


def ingest_manifest(manifest_path, embeddings_dir) -> CorpusHandle:
    """Load and validate a corpus from a manifest plus its embedding files."""
    manifest_path = Path(manifest_path)
    embeddings_dir = Path(embeddings_dir)
    text = read_pmeb(embeddings_dir / "text.pmeb", expect_dim=512)
    image = read_pmeb(embeddings_dir / "image.pmeb", expect_dim=512)
    records: list[PromptImageRecord] = []
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh):
                if not line.strip():
                    continue
                records.append(_parse_manifest_line(line_no, line))
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if text.shape[0] != len(records):
        raise DimensionMismatch(
            f"text.pmeb has {text.shape[0]} rows for {len(records)} manifest records"
        )
    if image.shape[0] != len(records):
        raise DimensionMismatch(
            f"image.pmeb has {image.shape[0]} rows for {len(records)} manifest records"
        )
    return CorpusHandle(records, text, image)


def write_corpus(handle: CorpusHandle, out_dir) -> None:
    """Persist a handle as manifest.jsonl + text.pmeb + image.pmeb.

    Record order in the manifest equals row order in both .pmeb files, so
    records are emitted sorted by row.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        ordered = sorted(handle.records, key=lambda r: r.row)
        with open(out_dir / "manifest.jsonl", "w", encoding="utf-8") as fh:
            for rec in ordered:
                fh.write(json.dumps(rec.to_manifest_obj(), ensure_ascii=False) + "\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    write_pmeb(out_dir / "text.pmeb", handle.text_features)
    write_pmeb(out_dir / "image.pmeb", handle.image_features)


def load_corpus(index_dir) -> CorpusHandle:
    """Load a corpus previously written by write_corpus."""
    index_dir = Path(index_dir)
    return ingest_manifest(index_dir / "manifest.jsonl", index_dir)


def get_record(handle: CorpusHandle, record_id: str) -> PromptImageRecord:
    return handle.get_record(record_id)


def with_row(record: PromptImageRecord, row: int) -> PromptImageRecord:
    """Copy of a record with its feature row remapped (used by sessions)."""
    return replace(record, row=row)
