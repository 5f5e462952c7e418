"""Mean speech-embedding substitution for unpaired text.

Unpaired transcripts get a stand-in speech representation: the frame-weighted
mean of all paired-data embedding frames, repeated ``frames_per_token`` times
per transcript token.

Feature files are ASCII::

    SEMFORGE-FEAT 1 <dim> <n_frames>
    <dim space-separated values, 9 significant digits>   (n_frames lines)
"""
from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from . import kernels

log = logging.getLogger(__name__)

FEATURE_MAGIC = "SEMFORGE-FEAT"
FEATURE_VERSION = 1
MANIFEST_NAME = "manifest.json"


class EmptyStore(ValueError):
    pass


class DimMismatch(ValueError):
    pass


class EmptyTranscript(ValueError):
    pass


class FeatureFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    frames: np.ndarray

    def __post_init__(self):
        frames = np.ascontiguousarray(self.frames, dtype=np.float32)
        if frames.ndim != 2 or frames.shape[0] < 1 or frames.shape[1] < 1:
            raise ValueError(f"expected a non-empty (frames, dim) block, got shape {frames.shape}")
        object.__setattr__(self, "frames", frames)

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    def __eq__(self, other):
        return isinstance(other, EmbeddingMatrix) and np.array_equal(self.frames, other.frames)


@dataclass(frozen=True, eq=False)
class MeanEmbedding:
    dim: int
    vector: np.ndarray
    n_frames_seen: int

    def __post_init__(self):
        vector = np.asarray(self.vector, dtype=np.float64)
        if vector.shape != (self.dim,):
            raise ValueError("vector length must equal dim")
        if not np.all(np.isfinite(vector)):
            raise ValueError("mean embedding is not finite")
        if self.n_frames_seen < 1:
            raise ValueError("n_frames_seen must be positive")
        object.__setattr__(self, "vector", vector)

    def to_json(self) -> str:
        return json.dumps(
            {"dim": self.dim, "n_frames_seen": self.n_frames_seen, "vector": [float(x) for x in self.vector]},
            indent=2,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> MeanEmbedding:
        data = json.loads(text)
        return cls(dim=int(data["dim"]), vector=np.array(data["vector"], dtype=np.float64),
                   n_frames_seen=int(data["n_frames_seen"]))


class MeanAccumulator:
    """Single-pass compensated frame sum; shards combine with :meth:`merge`."""

    def __init__(self, dim: int | None = None):
        self.dim = dim
        self.n_frames = 0
        self.total = None if dim is None else np.zeros(dim)
        self.comp = None if dim is None else np.zeros(dim)

    def _init(self, dim):
        self.dim = dim
        self.total = np.zeros(dim)
        self.comp = np.zeros(dim)

    def add(self, matrix: EmbeddingMatrix):
        if self.dim is None:
            self._init(matrix.dim)
        elif matrix.dim != self.dim:
            raise DimMismatch(f"expected dim {self.dim}, got {matrix.dim}")
        kernels.accumulate(matrix.frames, self.total, self.comp)
        self.n_frames += matrix.n_frames

    def merge(self, other: MeanAccumulator):
        if other.dim is None:
            return
        if self.dim is None:
            self._init(other.dim)
        elif other.dim != self.dim:
            raise DimMismatch(f"expected dim {self.dim}, got {other.dim}")
        # fold the other shard's sum and compensation in as two compensated rows
        rows = np.stack([other.total, other.comp]).astype(np.float64)
        for row in rows:
            t = self.total + row
            big = np.abs(self.total) >= np.abs(row)
            self.comp += np.where(big, (self.total - t) + row, (row - t) + self.total)
            self.total = t
        self.n_frames += other.n_frames

    def result(self) -> MeanEmbedding:
        if self.n_frames == 0:
            raise EmptyStore("no embedding frames were accumulated")
        return MeanEmbedding(self.dim, (self.total + self.comp) / self.n_frames, self.n_frames)


def compute_mean_embedding(store: Iterable[EmbeddingMatrix]) -> MeanEmbedding:
    """Frame-weighted component-wise mean over every frame of every utterance."""
    acc = MeanAccumulator()
    for matrix in store:
        acc.add(matrix)
    return acc.result()


def synth_representation(transcript: str, mean: MeanEmbedding, frames_per_token: int = 4) -> EmbeddingMatrix:
    if frames_per_token < 1:
        raise ValueError("frames_per_token must be positive")
    n_tokens = len(transcript.split())
    if n_tokens == 0:
        raise EmptyTranscript("transcript has no tokens")
    row = mean.vector.astype(np.float32)
    return EmbeddingMatrix(np.tile(row, (n_tokens * frames_per_token, 1)))


# -- feature files ------------------------------------------------------------


def format_features(matrix: EmbeddingMatrix) -> str:
    lines = [f"{FEATURE_MAGIC} {FEATURE_VERSION} {matrix.dim} {matrix.n_frames}"]
    for row in matrix.frames.tolist():
        lines.append(" ".join(format(x, ".9g") for x in row))
    return "\n".join(lines) + "\n"


def write_features(path, matrix: EmbeddingMatrix):
    Path(path).write_text(format_features(matrix), encoding="ascii", newline="\n")


def parse_features(text: str) -> EmbeddingMatrix:
    lines = text.splitlines()
    if not lines:
        raise FeatureFormatError("empty feature file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != FEATURE_MAGIC or header[1] != str(FEATURE_VERSION):
        raise FeatureFormatError(f"bad header {lines[0]!r}")
    try:
        dim, n_frames = int(header[2]), int(header[3])
    except ValueError:
        raise FeatureFormatError(f"bad header {lines[0]!r}") from None
    body = lines[1:]
    if len(body) != n_frames:
        raise FeatureFormatError(f"header says {n_frames} frames, found {len(body)}")
    try:
        rows = [[float(x) for x in line.split()] for line in body]
    except ValueError as exc:
        raise FeatureFormatError(str(exc)) from None
    if any(len(r) != dim for r in rows):
        raise FeatureFormatError(f"every frame must have {dim} values")
    return EmbeddingMatrix(np.array(rows, dtype=np.float32))


def read_features(path) -> EmbeddingMatrix:
    return parse_features(Path(path).read_text(encoding="ascii"))


def feature_filename(record_id: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9._-]", "_", record_id)
    if safe != record_id or safe.startswith("."):
        safe = f"{safe}-{hashlib.sha256(record_id.encode('utf-8')).hexdigest()[:8]}"
    return safe + ".feat"


def iter_record_features(records, base_dir) -> Iterable[EmbeddingMatrix]:
    """Feature blocks referenced by records' ``embedding_ref`` (relative to ``base_dir``)."""
    base = Path(base_dir)
    for record in records:
        if record.embedding_ref:
            yield read_features(base / record.embedding_ref)


def _update_manifest(feature_dir: Path, policy: dict, entries: dict):
    path = feature_dir / MANIFEST_NAME
    manifest = {"entries": {}}
    if path.exists():
        manifest = json.loads(path.read_text("utf-8"))
    manifest.update(policy)
    manifest.setdefault("entries", {}).update(entries)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def attach_representations(records, mean: MeanEmbedding, frames_per_token: int, feature_dir, ref_prefix=None):
    """Write a synthesized feature file per record and point ``embedding_ref`` at it.

    Records with empty transcripts are returned unchanged. ``ref_prefix``
    replaces ``feature_dir`` in the stored reference (for relocatable output).
    """
    feature_dir = Path(feature_dir)
    feature_dir.mkdir(parents=True, exist_ok=True)
    prefix = str(feature_dir) if ref_prefix is None else ref_prefix
    out, entries = [], {}
    for record in records:
        if record.embedding_ref:
            raise ValueError(f"{record.id} already has an embedding reference")
        if not record.transcript.split():
            log.info("no tokens in %s; skipping representation", record.id)
            out.append(record)
            continue
        name = feature_filename(record.id)
        write_features(feature_dir / name, synth_representation(record.transcript, mean, frames_per_token))
        entries[record.id] = name
        out.append(replace(record, embedding_ref=f"{prefix}/{name}", repr="jat"))
    _update_manifest(
        feature_dir,
        {"policy": "jat", "frames_per_token": frames_per_token, "dim": mean.dim, "n_frames_seen": mean.n_frames_seen},
        entries,
    )
    return out


def ingest_tts_features(records, tts_dir, ref_prefix=None):
    """Point records at externally synthesized feature files named by record id.

    Returns ``(tagged, missing)``; ``tagged`` keeps input order and carries
    ``repr="tts"`` where a file was found.
    """
    tts_dir = Path(tts_dir)
    prefix = str(tts_dir) if ref_prefix is None else ref_prefix
    out, missing = [], []
    for record in records:
        path = tts_dir / feature_filename(record.id)
        if path.exists():
            read_features(path)
            out.append(replace(record, embedding_ref=f"{prefix}/{path.name}", repr="tts"))
        else:
            out.append(record)
            missing.append(record.id)
    return out, missing
