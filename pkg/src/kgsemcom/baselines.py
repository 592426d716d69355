"""Classical comparison chain: Huffman or 6-bit text coding, Gray 64-QAM, AWGN."""

from __future__ import annotations

import heapq
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import noise_variance
from .kg import KnowledgeGraph, parse_serialized, serialize_for_baseline, triples_to_graph


class CodingError(ValueError):
    pass


class TruncatedCodeError(CodingError):
    def __init__(self, position: int, decoded: str):
        super().__init__(f"bitstream ends inside a codeword starting at bit {position}")
        self.position = position
        self.decoded = decoded


# --- Huffman ----------------------------------------------------------------

def huffman_lengths(freqs: dict[str, float]) -> dict[str, int]:
    """Optimal code lengths; a lone symbol gets length 1."""
    if not freqs:
        raise CodingError("cannot build a code over an empty alphabet")
    if len(freqs) == 1:
        return {next(iter(freqs)): 1}
    # (weight, tiebreak, symbols-in-subtree)
    heap = [(w, sym, [sym]) for sym, w in sorted(freqs.items())]
    heapq.heapify(heap)
    depth = Counter()
    while len(heap) > 1:
        w1, t1, s1 = heapq.heappop(heap)
        w2, t2, s2 = heapq.heappop(heap)
        for s in s1 + s2:
            depth[s] += 1
        heapq.heappush(heap, (w1 + w2, min(t1, t2), s1 + s2))
    return dict(depth)


def canonical_codes(lengths: dict[str, int]) -> dict[str, str]:
    code, prev = 0, 0
    out = {}
    for sym, length in sorted(lengths.items(), key=lambda kv: (kv[1], kv[0])):
        code <<= length - prev
        out[sym] = format(code, f"0{length}b")
        code += 1
        prev = length
    return out


@dataclass
class HuffmanCode:
    codes: dict[str, str]
    freqs: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self._decode = {bits: sym for sym, bits in self.codes.items()}
        self._max_len = max(len(b) for b in self.codes.values())

    @property
    def lengths(self) -> dict[str, int]:
        return {s: len(b) for s, b in self.codes.items()}

    def expected_length(self) -> float:
        total = sum(self.freqs.values())
        return sum(self.freqs[s] * len(self.codes[s]) for s in self.freqs) / total

    def encoded_length(self, text: str) -> int:
        try:
            return sum(len(self.codes[c]) for c in text)
        except KeyError as exc:
            raise CodingError(f"character {exc.args[0]!r} is not in the codebook") from None

    def encode(self, text: str) -> str:
        try:
            return "".join(self.codes[c] for c in text)
        except KeyError as exc:
            raise CodingError(f"character {exc.args[0]!r} is not in the codebook") from None

    def decode(self, bits: str, strict: bool = True) -> str:
        """Decode a bitstring; a dangling tail raises unless ``strict`` is False."""
        out = []
        cur = ""
        start = 0
        for pos, b in enumerate(bits):
            if not cur:
                start = pos
            cur += b
            sym = self._decode.get(cur)
            if sym is not None:
                out.append(sym)
                cur = ""
            elif len(cur) >= self._max_len:
                # only reachable for an incomplete code (single-symbol alphabet)
                if strict:
                    raise CodingError(f"invalid codeword at bit {start}")
                cur = ""
        if cur and strict:
            raise TruncatedCodeError(start, "".join(out))
        return "".join(out)

    def export(self, path: str | Path) -> None:
        lines = [f"{_escape(s)}\t{b}" for s, b in sorted(self.codes.items(), key=lambda kv: (len(kv[1]), kv[0]))]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _escape(ch: str) -> str:
    return {"\n": "\\n", "\t": "\\t", "\\": "\\\\"}.get(ch, ch)


def huffman_build(corpus: str, extra_symbols: str = "") -> HuffmanCode:
    """Canonical Huffman code over the characters of ``corpus``.

    ``extra_symbols`` are added with count 1 so that text containing
    characters absent from the corpus stays encodable.
    """
    if not corpus and not extra_symbols:
        raise CodingError("corpus is empty")
    freqs: dict[str, float] = dict(Counter(corpus))
    for ch in extra_symbols:
        freqs.setdefault(ch, 1)
    return HuffmanCode(canonical_codes(huffman_lengths(freqs)), freqs)


def huffman_encode(text: str, code: HuffmanCode) -> str:
    return code.encode(text)


def huffman_decode(bits: str, code: HuffmanCode) -> str:
    return code.decode(bits)


def entropy_bits(freqs: dict[str, float]) -> float:
    total = sum(freqs.values())
    return -sum((w / total) * math.log2(w / total) for w in freqs.values() if w > 0)


# --- fixed 6-bit code ----------------------------------------------------------

# 63 printable characters plus one reserved substitution code (index 63).
# Q, X and Z upper-case are left out to fit the separators and underscore.
DEFAULT_SIXBIT_ALPHABET = (" \n|_" + "0123456789" + "abcdefghijklmnopqrstuvwxyz"
                           + "ABCDEFGHIJKLMNOPRSTUVWY")
SUBSTITUTE = "?"


@dataclass
class SixBitCode:
    alphabet: str = DEFAULT_SIXBIT_ALPHABET
    substitutions: int = 0
    bits_per_char: int = 6

    def __post_init__(self):
        if len(self.alphabet) != 63 or len(set(self.alphabet)) != 63:
            raise CodingError("a 6-bit alphabet needs 63 distinct characters plus the reserved code")
        self._index = {c: i for i, c in enumerate(self.alphabet)}

    @classmethod
    def from_corpus(cls, corpus: str) -> "SixBitCode":
        """Take the 63 most frequent characters of ``corpus`` (ties by code point)."""
        counts = Counter(corpus)
        ranked = sorted(counts, key=lambda c: (-counts[c], c))[:63]
        for c in DEFAULT_SIXBIT_ALPHABET:
            if len(ranked) == 63:
                break
            if c not in ranked:
                ranked.append(c)
        return cls("".join(sorted(ranked)))

    def encode(self, text: str) -> str:
        out = []
        for c in text:
            idx = self._index.get(c)
            if idx is None:
                idx = 63
                self.substitutions += 1
            out.append(format(idx, "06b"))
        return "".join(out)

    def decode(self, bits: str) -> str:
        usable = len(bits) - len(bits) % 6
        out = []
        for k in range(0, usable, 6):
            idx = int(bits[k:k + 6], 2)
            out.append(SUBSTITUTE if idx == 63 else self.alphabet[idx])
        return "".join(out)


def sixbit_encode(text: str, code: SixBitCode | None = None) -> str:
    return (code or SixBitCode()).encode(text)


def sixbit_decode(bits: str, code: SixBitCode | None = None) -> str:
    return (code or SixBitCode()).decode(bits)


# --- 64-QAM -------------------------------------------------------------------

def _gray(n: int) -> int:
    return n ^ (n >> 1)


def qam64_constellation() -> np.ndarray:
    """Points indexed by their 6-bit label; bits 0-2 pick I, bits 3-5 pick Q (Gray per axis)."""
    levels = np.arange(-7, 8, 2, dtype=float)
    axis = np.empty(8)
    for pos in range(8):
        axis[_gray(pos)] = levels[pos]
    labels = np.arange(64)
    points = axis[labels >> 3] + 1j * axis[labels & 7]
    return points / math.sqrt(42.0)


QAM64 = qam64_constellation()


def _bits_to_array(bits) -> np.ndarray:
    if isinstance(bits, str):
        return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    return np.asarray(bits, dtype=np.uint8)


def qam64_modulate(bits) -> tuple[np.ndarray, int]:
    """Map bits to symbols, zero-padding to a multiple of 6; returns (symbols, pad)."""
    arr = _bits_to_array(bits)
    pad = (-arr.size) % 6
    if pad:
        arr = np.concatenate([arr, np.zeros(pad, dtype=np.uint8)])
    labels = arr.reshape(-1, 6) @ (1 << np.arange(5, -1, -1))
    return QAM64[labels], pad


def qam64_demodulate(received: np.ndarray, pad: int = 0) -> str:
    """Minimum-distance hard decisions back to a bitstring (padding removed)."""
    received = np.asarray(received).reshape(-1)
    if received.size == 0:
        return ""
    labels = np.empty(received.size, dtype=np.int64)
    for k in range(0, received.size, 8192):
        chunk = received[k:k + 8192]
        labels[k:k + chunk.size] = np.abs(chunk[:, None] - QAM64[None, :]).argmin(axis=1)
    bits = ((labels[:, None] >> np.arange(5, -1, -1)) & 1).astype(np.uint8).reshape(-1)
    if pad:
        bits = bits[:-pad]
    return (bits + ord("0")).tobytes().decode("ascii")


def awgn_complex(symbols: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Same noise model as the semantic chain: complex variance ``10^(-snr/10)``."""
    if math.isinf(snr_db) and snr_db > 0:
        return symbols.copy()
    std = math.sqrt(noise_variance(snr_db) / 2)
    noise = rng.standard_normal(symbols.shape) + 1j * rng.standard_normal(symbols.shape)
    return symbols + std * noise


# --- full chain ---------------------------------------------------------------

@dataclass
class BaselineResult:
    decoded: KnowledgeGraph | None
    triples: list
    bits: int
    dropped_lines: int
    text: str


def classical_pipeline_run(g: KnowledgeGraph, coder: str, snr_db: float, seed: int,
                           huffman: HuffmanCode | None = None, sixbit: SixBitCode | None = None) -> BaselineResult:
    """serialize -> source code -> 64-QAM -> AWGN -> demodulate -> source decode -> parse."""
    text = serialize_for_baseline(g)
    if coder == "huffman":
        if huffman is None:
            raise ValueError("huffman coder needs a codebook")
        bits = huffman.encode(text)
    elif coder == "sixbit":
        sixbit = sixbit or SixBitCode()
        bits = sixbit.encode(text)
    else:
        raise ValueError(f"unknown coder {coder!r}")
    symbols, pad = qam64_modulate(bits)
    rx = awgn_complex(symbols, snr_db, np.random.default_rng(seed))
    rx_bits = qam64_demodulate(rx, pad)
    if coder == "huffman":
        rx_text = huffman.decode(rx_bits, strict=False)
    else:
        rx_text = sixbit.decode(rx_bits)
    triples, dropped = parse_serialized(rx_text)
    decoded = triples_to_graph(triples, graph_id=g.graph_id) if triples else None
    return BaselineResult(decoded, [t.as_tuple() for t in triples], len(bits), dropped, rx_text)
