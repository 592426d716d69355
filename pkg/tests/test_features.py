import numpy as np
import pytest

from kgsemcom.features import (FEATURE_DIM, EmbeddingCache, EmbeddingModelLoadError, HashingEncoder,
                               SentenceTransformerEncoder, TextEmbedder)
from kgsemcom.kg import triples_to_graph


def cos(a, b):
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def test_hashing_encoder_shape_norm_and_determinism():
    enc = HashingEncoder()
    a = enc.encode(["Aarhus_Airport", "cityServed"])
    assert a.shape == (2, FEATURE_DIM) and a.dtype == np.float32
    np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-6)
    np.testing.assert_array_equal(a, HashingEncoder().encode(["Aarhus_Airport", "cityServed"]))


def test_hashing_encoder_related_labels_are_closer():
    enc = HashingEncoder()
    a, b, c = enc.encode(["Aarhus_Airport", "Aarhus", "Bacon_Explosion"])
    assert cos(a, b) > cos(a, c)
    q, u = enc.encode(['"Atlanta"', "Atlanta"])
    assert cos(q, u) > 0.9 and not np.array_equal(q, u)


def test_cache_roundtrip(tmp_path):
    path = tmp_path / "emb.bin"
    emb = TextEmbedder(HashingEncoder(), path)
    v = emb.encode(["x", "y", "x"])
    emb.flush()
    cache = EmbeddingCache("hashing-ngram-384", FEATURE_DIM, path)
    assert len(cache) == 2
    np.testing.assert_array_equal(cache.get("y"), v[1])


def test_cache_rejects_other_model(tmp_path):
    path = tmp_path / "emb.bin"
    emb = TextEmbedder(HashingEncoder(), path)
    emb.encode(["x"])
    emb.flush()
    with pytest.raises(ValueError):
        EmbeddingCache("some-other-model", FEATURE_DIM, path)


def test_embed_graph_aligns_with_nodes_and_edges():
    g = triples_to_graph([("a", "r", "b"), ("b", "s", "c")])
    emb = TextEmbedder()
    (nf, ef), = emb.embed_graphs([g])
    nf2, ef2 = emb.embed_graph(g)
    assert nf.shape == (3, FEATURE_DIM) and ef.shape == (2, FEATURE_DIM)
    np.testing.assert_array_equal(nf, nf2)
    np.testing.assert_array_equal(ef[1], emb.encode(["s"])[0])


def test_missing_model_raises_typed_error():
    with pytest.raises(EmbeddingModelLoadError):
        SentenceTransformerEncoder("/nonexistent/model/dir")
