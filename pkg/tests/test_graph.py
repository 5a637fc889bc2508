import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bayesplit.graph import (EdgeListError, InteractionSequence, LabelVector, UndirectedGraph,
                             crossing_edge_count, degrees, induced_subgraph, load_edge_list,
                             n_units, write_edge_list)
from conftest import graph_from_edges


def _write(tmp_path, text, name="edges.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_symmetric_pair_is_deduplicated(tmp_path):
    g = load_edge_list(_write(tmp_path, "a,b\nb,a\n"), mode="undirected")
    assert g.n == 2 and g.n_edges == 1


def test_directed_keeps_multiplicity(tmp_path):
    seq = load_edge_list(_write(tmp_path, "a,b\na,b\n"), mode="directed")
    assert isinstance(seq, InteractionSequence)
    assert seq.M == 2 and seq.pairs() == [("a", "b"), ("a", "b")]


def test_self_loop_dropped_and_counted(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        g = load_edge_list(_write(tmp_path, "a,a\n"), mode="undirected")
    assert (g.n, g.n_edges, g.dropped_self_loops) == (1, 0, 1)
    assert "self-loop" in caplog.text


def test_tab_separator(tmp_path):
    g = load_edge_list(_write(tmp_path, "x\ty\ny\tz\n"))
    assert g.node_ids == ("x", "y", "z") and g.n_edges == 2


def test_malformed_line_names_line(tmp_path):
    with pytest.raises(EdgeListError, match=":2:"):
        load_edge_list(_write(tmp_path, "a,b\na,b,c\n"))


def test_empty_and_missing_files(tmp_path):
    with pytest.raises(EdgeListError):
        load_edge_list(_write(tmp_path, "\n\n"))
    with pytest.raises(EdgeListError):
        load_edge_list(tmp_path / "absent.csv")


def test_write_then_load_round_trip(tmp_path):
    seq = InteractionSequence.from_pairs([("u", "v"), ("v", "w"), ("u", "v"), ("w", "w")])
    p = tmp_path / "seq.csv"
    write_edge_list(seq, p)
    assert load_edge_list(p, mode="directed") == seq
    g = graph_from_edges(4, [(0, 1), (1, 2), (2, 3)])
    write_edge_list(g, p)
    assert load_edge_list(p) == g


def test_induced_subgraph_examples(triangle):
    sub = induced_subgraph(triangle, ["0", "1"])
    assert sub.n == 2 and sub.n_edges == 1
    assert induced_subgraph(triangle, triangle.node_ids) == triangle
    path = graph_from_edges(3, [(0, 1), (1, 2)])
    sub = induced_subgraph(path, ["0", "2"])
    assert sub.n == 2 and sub.n_edges == 0


def test_induced_subgraph_keeps_parent_order_and_rejects_unknown(triangle):
    assert induced_subgraph(triangle, ["2", "0"]).node_ids == ("0", "2")
    with pytest.raises(KeyError):
        induced_subgraph(triangle, ["0", "nope"])


def test_induced_subsequence_drops_crossing(small_sequence):
    sub = induced_subgraph(small_sequence, ["a", "b"])
    assert sub.pairs() == [("a", "b"), ("b", "a")]


def test_degrees(triangle, small_sequence):
    assert degrees(triangle).tolist() == [2, 2, 2]
    assert degrees(graph_from_edges(3, [])).tolist() == [0, 0, 0]
    assert dict(zip(small_sequence.node_ids, degrees(small_sequence))) == {"a": 3, "b": 2, "c": 1}
    assert degrees(small_sequence, "out").tolist() == [2, 1, 0]


def test_n_units(triangle, small_sequence):
    assert n_units(triangle) == 3 and n_units(small_sequence) == 3


def test_graph_validation():
    with pytest.raises(ValueError):
        UndirectedGraph(2, np.array([[0, 0]]), ("a", "b"))
    with pytest.raises(ValueError):
        UndirectedGraph(2, np.array([[0, 1], [1, 0]]), ("a", "b"))
    with pytest.raises(ValueError):
        UndirectedGraph(2, np.array([[0, 2]]), ("a", "b"))


def test_label_vector():
    lv = LabelVector.from_zero_based([0, 1, 1])
    assert lv.labels.tolist() == [1, 2, 2] and lv.K == 2
    assert lv.zero_based.tolist() == [0, 1, 1]
    with pytest.raises(ValueError):
        LabelVector([0, 1])
    with pytest.raises(ValueError):
        LabelVector([1, 3], K=2)


@st.composite
def graphs_with_parts(draw):
    n = draw(st.integers(1, 12))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    edges = [p for p, m in zip(pairs, mask) if m]
    side = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    return graph_from_edges(n, edges), side


@given(graphs_with_parts())
def test_bipartition_edge_accounting(arg):
    g, side = arg
    v1 = [g.node_ids[i] for i in range(g.n) if side[i]]
    v2 = [g.node_ids[i] for i in range(g.n) if not side[i]]
    e1 = induced_subgraph(g, v1).n_edges if v1 else 0
    e2 = induced_subgraph(g, v2).n_edges if v2 else 0
    assert g.n_edges == e1 + e2 + crossing_edge_count(g, v1)
    assert degrees(g).sum() == 2 * g.n_edges
    assert induced_subgraph(g, g.node_ids) == g
