import itertools

import pytest
from hypothesis import given, settings, strategies as st

from kgsemcom.baselines import SixBitCode, huffman_build
from kgsemcom.evaluation import (bits_per_graph, f1_from_counts, node_accuracy, snr_to_reach, triple_f1,
                                 triple_f1_from_triples)
from kgsemcom.experiments import fig4_table, write_csv, FIG4_COLUMNS
from kgsemcom.kg import DatasetSplit, graph_to_triples, serialize_for_baseline, triples_to_graph


def exhaustive_matches(pred, ref):
    """Largest one-to-one exact matching by trying every assignment."""
    best = 0
    padded = list(ref) + [None] * len(pred)
    for perm in itertools.permutations(range(len(padded)), len(pred)):
        best = max(best, sum(1 for p, k in zip(pred, perm) if padded[k] == p))
    return best


small = st.sampled_from(["a", "b", "c"])
triple = st.tuples(small, st.sampled_from(["r", "s"]), small)


@settings(max_examples=150, deadline=None)
@given(st.lists(triple, min_size=1, max_size=4), st.lists(triple, min_size=1, max_size=4))
def test_triple_f1_matches_exhaustive_oracle(pred, ref):
    gp, gr = triples_to_graph(pred), triples_to_graph(ref)
    tp = [t.as_tuple() for t in graph_to_triples(gp)]
    tr = [t.as_tuple() for t in graph_to_triples(gr)]
    m = exhaustive_matches(tp, tr)
    p, r = m / len(tp), m / len(tr)
    expected = 2 * p * r / (p + r) if m else 0.0
    assert triple_f1(gp, gr).f1 == pytest.approx(expected, abs=1e-12)


def test_triple_f1_partial():
    ref = triples_to_graph([("a", "r", "b"), ("b", "r", "c"), ("c", "s", "a")])
    pred = triples_to_graph([("a", "r", "b"), ("b", "r", "c"), ("c", "r", "a")])
    rep = triple_f1(pred, ref)
    assert (rep.precision, rep.recall) == pytest.approx((2 / 3, 2 / 3))
    assert rep.f1 == pytest.approx(2 / 3)


def test_duplicates_match_once():
    rep = triple_f1_from_triples([("a", "r", "b")] * 2, [("a", "r", "b")])
    assert rep.matched == 1 and rep.f1 == pytest.approx(2 / 3)


def test_empty_prediction():
    assert f1_from_counts(0, 0, 3).f1 == 0.0


def test_node_accuracy():
    assert node_accuracy([1, 2, 3, 4], [1, 2, 0, 4]) == 0.75
    with pytest.raises(ValueError):
        node_accuracy([1], [1, 2])


def test_semantic_bits_per_graph():
    g = triples_to_graph([("a", "r", "b"), ("b", "r", "c"), ("c", "r", "d")])
    assert bits_per_graph(g, "semantic_gnn", k=5, bits_per_symbol=6).bits_per_graph == 120


def test_baseline_bits_per_graph():
    g = triples_to_graph([("ab", "r", "c")])
    text = serialize_for_baseline(g)
    code = huffman_build(text)
    assert bits_per_graph(g, "huffman", huffman=code).bits_per_graph == len(code.encode(text))
    assert bits_per_graph(g, "sixbit", sixbit=SixBitCode()).bits_per_graph == 6 * len(text)


def test_snr_to_reach_interpolates():
    assert snr_to_reach([0, 10, 20], [0.0, 0.5, 1.0], 0.9) == pytest.approx(18.0)
    assert snr_to_reach([0, 10], [1.0, 1.0]) == 0.0


def test_fig4_table_is_reproducible(tmp_path, tiny_dataset):
    rows_a, sum_a = fig4_table(tiny_dataset)
    rows_b, sum_b = fig4_table(tiny_dataset)
    write_csv(tmp_path / "a.csv", FIG4_COLUMNS, rows_a)
    write_csv(tmp_path / "b.csv", FIG4_COLUMNS, rows_b)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert sum(r["graphs"] for r in rows_a) == len(tiny_dataset.test)
    assert sum_a["gain_vs_sixbit"] > sum_a["gain_vs_huffman"] > 1


def test_fig4_gain_is_ratio_of_totals():
    g1 = triples_to_graph([("a", "r", "b")])
    g2 = triples_to_graph([("aaaa", "r", "b"), ("b", "s", "c")])
    ds = DatasetSplit(train=[g1, g2], test=[g1, g2])
    _, summary = fig4_table(ds, k=1, bits_per_symbol=1)
    chars = len(serialize_for_baseline(g1)) + len(serialize_for_baseline(g2))
    assert summary["gain_vs_sixbit"] == pytest.approx(6 * chars / 5)
