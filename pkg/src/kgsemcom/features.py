"""Frozen text features for node and relation labels, with an on-disk cache."""

from __future__ import annotations

import hashlib
import json
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .kg import KnowledgeGraph, split_label

FEATURE_DIM = 384
DEFAULT_MODEL = "sentence-transformers/all-MiniLM-L12-v2"
HASHING_MODEL = "hashing-ngram-384"

_CACHE_MAGIC = b"KGSCEMB\x01"


class EmbeddingModelLoadError(RuntimeError):
    pass


@dataclass(frozen=True)
class TextEmbedding:
    vector: np.ndarray
    source_text: str


class TextEncoder(Protocol):
    model_id: str
    dim: int

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


class SentenceTransformerEncoder:
    """Pretrained sentence model, frozen and run in inference mode only."""

    def __init__(self, model_id: str = DEFAULT_MODEL, device: str = "cpu"):
        self.model_id = model_id
        try:
            from sentence_transformers import SentenceTransformer
            self._model = SentenceTransformer(model_id, device=device)
        except Exception as exc:  # offline hub, missing weights, bad id
            raise EmbeddingModelLoadError(f"cannot load sentence model {model_id!r}: {exc}") from exc
        self._model.eval()
        for p in self._model.parameters():
            p.requires_grad_(False)
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float32)
        out = self._model.encode(list(texts), batch_size=64, convert_to_numpy=True,
                                 show_progress_bar=False)
        return np.asarray(out, dtype=np.float32)


class HashingEncoder:
    """Offline deterministic stand-in for a sentence model.

    Signed feature hashing of word pieces (underscore and camelCase splits,
    lower-cased), character 3-grams and a quote marker, L2-normalised. Shared words give
    related labels overlapping features, the way a sentence model would.
    """

    def __init__(self, dim: int = FEATURE_DIM, word_weight: float = 2.0, char_n: int = 3):
        self.dim = dim
        self.word_weight = word_weight
        self.char_n = char_n
        self.model_id = f"hashing-ngram-{dim}" if (word_weight, char_n) == (2.0, 3) else \
            f"hashing-ngram-{dim}-w{word_weight}-c{char_n}"

    def _features(self, text: str):
        # quotes become a single punctuation token, as in a subword tokenizer
        if '"' in text:
            yield "p:quote", 1.0
            text = text.replace('"', "")
        for w in split_label(text):
            yield "w:" + w.lower(), self.word_weight
        padded = f"^{text}$"
        for k in range(len(padded) - self.char_n + 1):
            yield "c:" + padded[k:k + self.char_n], 1.0

    def _encode_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for feat, weight in self._features(text):
            h = hashlib.blake2b(feat.encode(), digest_size=8).digest()
            idx = int.from_bytes(h[:4], "little") % self.dim
            sign = 1.0 if h[4] & 1 else -1.0
            vec[idx] += sign * weight
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec.astype(np.float32)

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.stack([self._encode_one(t) for t in texts])


def load_encoder(model_id: str = DEFAULT_MODEL) -> TextEncoder:
    if model_id.startswith("hashing"):
        return HashingEncoder()
    return SentenceTransformerEncoder(model_id)


def text_digest(text: str) -> bytes:
    return hashlib.sha256(text.encode("utf-8")).digest()


class EmbeddingCache:
    """Vectors keyed by SHA-256 of the text, one file per model id.

    File layout: 8-byte magic, uint32 header length, JSON header
    ``{"model": ..., "dim": ..., "count": ...}``, then ``count`` records of
    32 digest bytes followed by ``dim`` little-endian float32 values.
    """

    def __init__(self, model_id: str, dim: int = FEATURE_DIM, path: str | Path | None = None):
        self.model_id = model_id
        self.dim = dim
        self.path = Path(path) if path is not None else None
        self._store: dict[bytes, np.ndarray] = {}
        self._lock = threading.Lock()
        self._dirty = False
        if self.path is not None and self.path.exists():
            self.load()

    def __len__(self):
        return len(self._store)

    def get(self, text: str) -> np.ndarray | None:
        return self._store.get(text_digest(text))

    def put(self, text: str, vector: np.ndarray) -> None:
        vector = np.asarray(vector, dtype=np.float32)
        if vector.shape != (self.dim,):
            raise ValueError(f"expected a {self.dim}-d vector, got {vector.shape}")
        with self._lock:
            self._store[text_digest(text)] = vector.copy()
            self._dirty = True

    def load(self) -> None:
        raw = self.path.read_bytes()
        if raw[:8] != _CACHE_MAGIC:
            raise ValueError(f"{self.path} is not an embedding cache")
        (hlen,) = struct.unpack("<I", raw[8:12])
        header = json.loads(raw[12:12 + hlen])
        if header["model"] != self.model_id or header["dim"] != self.dim:
            raise ValueError(f"cache {self.path} was built for {header['model']} ({header['dim']}-d)")
        body = np.frombuffer(raw, dtype=np.uint8, offset=12 + hlen)
        rec = 32 + 4 * self.dim
        if body.size != rec * header["count"]:
            raise ValueError(f"cache {self.path} is truncated")
        records = body.reshape(header["count"], rec)
        with self._lock:
            for row in records:
                self._store[row[:32].tobytes()] = row[32:].view("<f4").astype(np.float32)
            self._dirty = False

    def flush(self) -> None:
        if self.path is None or not self._dirty:
            return
        with self._lock:
            keys = sorted(self._store)
            header = json.dumps({"model": self.model_id, "dim": self.dim, "count": len(keys)}).encode()
            self.path.parent.mkdir(parents=True, exist_ok=True)
            tmp = self.path.with_suffix(self.path.suffix + ".tmp")
            with open(tmp, "wb") as fh:
                fh.write(_CACHE_MAGIC)
                fh.write(struct.pack("<I", len(header)))
                fh.write(header)
                for k in keys:
                    fh.write(k)
                    fh.write(self._store[k].astype("<f4").tobytes())
            tmp.replace(self.path)
            self._dirty = False


class TextEmbedder:
    """Cached front end over a frozen :class:`TextEncoder`."""

    def __init__(self, encoder: TextEncoder | None = None, cache_path: str | Path | None = None):
        self.encoder = encoder if encoder is not None else HashingEncoder()
        self.cache = EmbeddingCache(self.encoder.model_id, self.encoder.dim, cache_path)

    @property
    def dim(self) -> int:
        return self.encoder.dim

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        texts = list(texts)
        missing = list(dict.fromkeys(t for t in texts if self.cache.get(t) is None))
        if missing:
            vecs = self.encoder.encode(missing)
            for t, v in zip(missing, vecs):
                self.cache.put(t, v)
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.stack([self.cache.get(t) for t in texts])

    def embed_text(self, texts: Sequence[str]) -> list[TextEmbedding]:
        return [TextEmbedding(v, t) for t, v in zip(texts, self.encode(texts))]

    def embed_graph(self, g: KnowledgeGraph) -> tuple[np.ndarray, np.ndarray]:
        """Node features ``(N_e, dim)`` and edge features ``(|edges|, dim)``."""
        node_feats = self.encode(g.nodes)
        edge_feats = self.encode([r for _, _, r in g.edges])
        return node_feats, edge_feats

    def embed_graphs(self, graphs: Sequence[KnowledgeGraph]) -> list[tuple[np.ndarray, np.ndarray]]:
        """Embed many graphs with a single encoder call over their distinct texts."""
        texts = [t for g in graphs for t in (*g.nodes, *(r for _, _, r in g.edges))]
        flat = self.encode(texts)
        out, pos = [], 0
        for g in graphs:
            n, e = g.num_nodes, g.num_edges
            out.append((flat[pos:pos + n], flat[pos + n:pos + n + e]))
            pos += n + e
        return out

    def flush(self) -> None:
        self.cache.flush()
