import json
import random

import numpy as np
import pytest

from semforge.dataset import Record
from semforge.jat_embed import (
    DimMismatch,
    EmbeddingMatrix,
    EmptyStore,
    EmptyTranscript,
    FeatureFormatError,
    MeanAccumulator,
    MeanEmbedding,
    attach_representations,
    compute_mean_embedding,
    feature_filename,
    format_features,
    ingest_tts_features,
    iter_record_features,
    parse_features,
    read_features,
    synth_representation,
    write_features,
)


def m(rows):
    return EmbeddingMatrix(np.array(rows, dtype=np.float32))


def rec(i, transcript="rain in oslo"):
    words = transcript.split()
    return Record(id=f"r{i}", domain="weather", transcript=transcript,
                  seqlogical="[IN:GET_WEATHER " + "".join(w + " " for w in words) + "]")


def test_mean_single_utterance():
    mean = compute_mean_embedding([m([[1, 2], [3, 4]])])
    assert mean.vector.tolist() == [2.0, 3.0] and mean.n_frames_seen == 2


def test_mean_is_frame_weighted():
    mean = compute_mean_embedding([m([[1, 2]]), m([[3, 4], [5, 6]])])
    assert mean.vector.tolist() == [3.0, 4.0]


def test_mean_errors():
    with pytest.raises(DimMismatch):
        compute_mean_embedding([m([[1, 2]]), m([[1, 2, 3]])])
    with pytest.raises(EmptyStore):
        compute_mean_embedding([])
    with pytest.raises(ValueError):
        EmbeddingMatrix(np.zeros((0, 3)))


def test_merge_matches_single_pass():
    rng = np.random.default_rng(0)
    blocks = [m(rng.normal(size=(rng.integers(1, 20), 5))) for _ in range(40)]
    whole = compute_mean_embedding(blocks)
    left, right = MeanAccumulator(), MeanAccumulator()
    for i, b in enumerate(blocks):
        (left if i % 3 else right).add(b)
    left.merge(right)
    left.merge(MeanAccumulator())
    np.testing.assert_allclose(left.result().vector, whole.vector, rtol=0, atol=1e-12)
    assert left.result().n_frames_seen == whole.n_frames_seen


def test_mean_json_round_trip():
    mean = compute_mean_embedding([m([[0.1, -2.5]])])
    again = MeanEmbedding.from_json(mean.to_json())
    assert again.dim == 2 and again.vector.tolist() == mean.vector.tolist()


def test_synth_rows_equal_mean():
    mean = compute_mean_embedding([m([[1, 2], [3, 4]])])
    out = synth_representation("play some jazz", mean, frames_per_token=4)
    assert out.frames.shape == (12, 2)
    assert np.all(out.frames == np.float32([2, 3]))
    with pytest.raises(EmptyTranscript):
        synth_representation("   ", mean)
    with pytest.raises(ValueError):
        synth_representation("x", mean, frames_per_token=0)


def test_feature_file_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    matrix = m(rng.normal(size=(7, 3)))
    write_features(tmp_path / "a.feat", matrix)
    assert read_features(tmp_path / "a.feat") == matrix
    assert parse_features(format_features(matrix)) == matrix


@pytest.mark.parametrize(
    "text",
    ["", "NOPE 1 2 1\n1 2\n", "SEMFORGE-FEAT 2 2 1\n1 2\n", "SEMFORGE-FEAT 1 2 2\n1 2\n",
     "SEMFORGE-FEAT 1 2 1\n1 2 3\n", "SEMFORGE-FEAT 1 2 1\n1 x\n", "SEMFORGE-FEAT 1 a b\n"],
)
def test_feature_format_errors(text):
    with pytest.raises(FeatureFormatError):
        parse_features(text)


def test_feature_filename():
    assert feature_filename("nd-001-002") == "nd-001-002.feat"
    odd = feature_filename("a/b c")
    assert odd.startswith("a_b_c-") and odd.endswith(".feat")
    assert feature_filename("a/b c") != feature_filename("a_b c")


def test_attach_writes_one_file_per_record(tmp_path):
    mean = compute_mean_embedding([m([[1, 2], [3, 4]])])
    records = [rec(i) for i in range(10)]
    out = attach_representations(records, mean, 4, tmp_path / "f", ref_prefix="f")
    assert all(r.repr == "jat" and r.embedding_ref == f"f/r{i}.feat" for i, r in enumerate(out))
    files = sorted(p.name for p in (tmp_path / "f").iterdir())
    assert len(files) == 11 and "manifest.json" in files
    manifest = json.loads((tmp_path / "f" / "manifest.json").read_text())
    assert manifest["frames_per_token"] == 4 and len(manifest["entries"]) == 10
    blocks = list(iter_record_features(out, tmp_path))
    assert all(b.n_frames == 12 for b in blocks)


def test_attach_skips_empty_transcripts(tmp_path):
    mean = compute_mean_embedding([m([[1.0]])])
    empty = Record(id="e", domain="weather", transcript="", seqlogical="[IN:GET_WEATHER ]")
    out = attach_representations([empty, rec(1)], mean, 2, tmp_path)
    assert out[0] is empty and out[1].embedding_ref
    with pytest.raises(ValueError):
        attach_representations(out[1:], mean, 2, tmp_path)


def test_attach_is_byte_identical(tmp_path):
    mean = compute_mean_embedding([m([[0.3, 1 / 3]])])
    for name in ("a", "b"):
        attach_representations([rec(i) for i in range(5)], mean, 3, tmp_path / name, ref_prefix="x")
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_ingest_tts(tmp_path):
    write_features(tmp_path / "r1.feat", m([[1, 2]]))
    out, missing = ingest_tts_features([rec(0), rec(1)], tmp_path, ref_prefix="tts")
    assert missing == ["r0"]
    assert out[0].repr is None and out[1].repr == "tts" and out[1].embedding_ref == "tts/r1.feat"


def test_order_and_chunk_invariance_small():
    rng = random.Random(8)
    blocks = [m(np.full((rng.randint(1, 5), 2), rng.uniform(-1e3, 1e3))) for _ in range(200)]
    base = compute_mean_embedding(blocks).vector
    rng.shuffle(blocks)
    np.testing.assert_allclose(compute_mean_embedding(blocks).vector, base, rtol=1e-12, atol=1e-9)
