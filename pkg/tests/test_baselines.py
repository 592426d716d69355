import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kgsemcom.baselines import (QAM64, CodingError, HuffmanCode, SixBitCode, TruncatedCodeError, awgn_complex,
                                classical_pipeline_run, entropy_bits, huffman_build, huffman_decode, huffman_encode,
                                huffman_lengths, qam64_demodulate, qam64_modulate)
from kgsemcom.kg import serialize_for_baseline, triples_to_graph


def brute_force_optimal_length(freqs):
    """Minimum expected length over all length vectors satisfying Kraft's inequality."""
    syms = list(freqs)
    total = sum(freqs.values())
    best = math.inf
    for lens in itertools.product(range(1, len(syms)), repeat=len(syms)):
        if sum(2.0 ** -l for l in lens) <= 1:
            best = min(best, sum(freqs[s] * l for s, l in zip(syms, lens)) / total)
    return best


def test_huffman_known_cases():
    assert huffman_lengths({"a": 0.5, "b": 0.25, "c": 0.25}) == {"a": 1, "b": 2, "c": 2}
    assert set(huffman_lengths({c: 1 for c in "wxyz"}).values()) == {2}
    code = huffman_build("abca")
    assert len(huffman_encode("abca", code)) == 6
    assert huffman_lengths({"only": 3}) == {"only": 1}


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.sampled_from("abcdef"), st.integers(1, 50), min_size=2, max_size=6))
def test_huffman_is_optimal(freqs):
    code = huffman_build("".join(s * n for s, n in freqs.items()))
    assert math.isclose(code.expected_length(), brute_force_optimal_length(freqs), rel_tol=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.text(min_size=1, max_size=200))
def test_huffman_properties(corpus):
    code = huffman_build(corpus)
    words = list(code.codes.values())
    for a, b in itertools.permutations(words, 2):
        assert not b.startswith(a)
    assert huffman_decode(huffman_encode(corpus, code), code) == corpus
    h = entropy_bits(code.freqs)
    L = code.expected_length()
    if len(code.codes) > 1:  # a lone symbol still needs one bit while H = 0
        assert h - 1e-9 <= L < h + 1


def test_huffman_unknown_symbol_and_truncation():
    code = huffman_build("aaabbc")
    with pytest.raises(CodingError):
        code.encode("z")
    bits = code.encode("abc")
    with pytest.raises(TruncatedCodeError) as info:
        code.decode(bits[:-1])
    assert info.value.decoded.startswith("ab")
    assert code.decode(bits[:-1], strict=False).startswith("ab")


def test_huffman_extra_symbols_are_encodable():
    code = huffman_build("aaaa", extra_symbols="xyz")
    assert code.decode(code.encode("zax")) == "zax"


def test_codebook_export(tmp_path):
    code = huffman_build("a\nb|b")
    code.export(tmp_path / "cb.tsv")
    lines = (tmp_path / "cb.tsv").read_text().splitlines()
    assert len(lines) == 4 and any(l.startswith("\\n\t") for l in lines)


def test_sixbit_fixed_length_roundtrip():
    text = "Aarhus | country | Denmark\n"
    bits = SixBitCode().encode(text)
    assert len(bits) == 6 * len(text)
    assert SixBitCode().decode(bits) == text


def test_sixbit_substitution():
    code = SixBitCode()
    assert code.decode(code.encode("é")) == "?"
    assert code.substitutions == 1


def test_sixbit_from_corpus_covers_frequent_chars():
    code = SixBitCode.from_corpus("Zürich | Q | X\n")
    assert code.decode(code.encode("Zürich | Q | X\n")) == "Zürich | Q | X\n"


def _label_bits(label):
    return format(label, "06b")


def test_qam_exhaustive_noiseless_roundtrip():
    bits = "".join(_label_bits(l) for l in range(64))
    symbols, pad = qam64_modulate(bits)
    assert pad == 0 and symbols.size == 64
    assert qam64_demodulate(symbols, pad) == bits
    assert len(set(np.round(symbols, 9))) == 64


def test_qam_unit_power_and_gray_adjacency():
    assert math.isclose(np.mean(np.abs(QAM64) ** 2), 1.0, rel_tol=1e-12)
    d_min = 2 / math.sqrt(42)
    for a in range(64):
        for b in range(a + 1, 64):
            if math.isclose(abs(QAM64[a] - QAM64[b]), d_min, rel_tol=1e-9):
                assert bin(a ^ b).count("1") == 1


@given(st.text(alphabet="01", max_size=40))
def test_qam_padding_roundtrip(bits):
    symbols, pad = qam64_modulate(bits)
    assert qam64_demodulate(symbols, pad) == bits


def test_qam_symbol_error_rate_matches_closed_form():
    # square 64-QAM with min-distance decisions: per-axis 8-PAM errors are independent
    snr_db = 10.0
    es_n0 = 10 ** (snr_db / 10)
    q = 0.5 * math.erfc(math.sqrt(3 * es_n0 / 63) / math.sqrt(2))
    p_axis = 2 * (1 - 1 / 8) * q
    ser_theory = 1 - (1 - p_axis) ** 2
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 64, 200_000)
    rx = awgn_complex(QAM64[labels], snr_db, rng)
    decided = np.abs(rx[:, None] - QAM64[None, :]).argmin(axis=1)
    ser = np.mean(decided != labels)
    assert abs(ser / ser_theory - 1) < 0.05


def test_pipeline_clean_at_high_snr():
    g = triples_to_graph([("Aarhus_Airport", "cityServed", '"Aarhus, Denmark"'), ("Aarhus", "country", "Denmark")])
    text = serialize_for_baseline(g)
    code = huffman_build(text)
    for coder in ("huffman", "sixbit"):
        res = classical_pipeline_run(g, coder, 60.0, seed=0, huffman=code, sixbit=SixBitCode.from_corpus(text))
        assert res.decoded == g and res.dropped_lines == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(-5, 15))
def test_pipeline_never_crashes_on_corruption(seed, snr):
    g = triples_to_graph([("a_b", "rel", "c d"), ("c d", "other", "1.5")])
    code = huffman_build(serialize_for_baseline(g) + "xyz")
    for coder in ("huffman", "sixbit"):
        res = classical_pipeline_run(g, coder, snr, seed=seed, huffman=code)
        assert res.bits > 0
