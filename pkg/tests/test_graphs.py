import json
import os

import numpy as np
import pytest

from sharpgcl.graphs import (DataError, build_graph, compute_degrees,
                             graphs_equal, induced_subgraph, load_graph,
                             load_splits, save_graph, save_splits, split_nodes)
from synth import path_graph


def test_load_save_round_trip(tmp_path, citation_graph):
    d = tmp_path / "ds"
    save_graph(citation_graph, str(d))
    loaded = load_graph(str(d))
    assert graphs_equal(citation_graph, loaded)
    # idempotent re-serialization
    d2 = tmp_path / "ds2"
    save_graph(loaded, str(d2))
    assert (d / "features.bin").read_bytes() == (d2 / "features.bin").read_bytes()
    assert (d / "edges.csv").read_text() == (d2 / "edges.csv").read_text()


def test_load_single_node_graph(tmp_path):
    g = build_graph(np.ones((1, 3)), [], [0], 1)
    save_graph(g, str(tmp_path))
    loaded = load_graph(str(tmp_path))
    assert loaded.num_nodes == 1 and loaded.num_edges == 0


def test_load_rejects_out_of_range_edge(tmp_path):
    g = build_graph(np.ones((10, 2)), [[0, 1]], None, 0)
    save_graph(g, str(tmp_path))
    (tmp_path / "edges.csv").write_text("0,99\n")
    with pytest.raises(DataError, match="out of range"):
        load_graph(str(tmp_path))


def test_load_rejects_missing_file(tmp_path, citation_graph):
    save_graph(citation_graph, str(tmp_path))
    os.remove(tmp_path / "features.bin")
    with pytest.raises(DataError, match="missing file"):
        load_graph(str(tmp_path))


def test_load_rejects_row_count_mismatch(tmp_path, citation_graph):
    save_graph(citation_graph, str(tmp_path))
    lines = (tmp_path / "labels.csv").read_text().splitlines()
    (tmp_path / "labels.csv").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(DataError, match="labels.csv"):
        load_graph(str(tmp_path))


def test_load_rejects_unknown_version(tmp_path, citation_graph):
    save_graph(citation_graph, str(tmp_path))
    meta = json.loads((tmp_path / "meta.json").read_text())
    meta["format_version"] = 99
    (tmp_path / "meta.json").write_text(json.dumps(meta))
    with pytest.raises(DataError, match="format version"):
        load_graph(str(tmp_path))


def test_build_graph_rejects_bad_labels():
    with pytest.raises(DataError, match="label out of range"):
        build_graph(np.ones((3, 2)), [[0, 1]], [0, 1, 5], 2)


def test_degrees_path_graph():
    g = path_graph(3)
    assert compute_degrees(g).tolist() == [1, 2, 1]


def test_degrees_empty_edges():
    g = build_graph(np.ones((3, 2)), [], None, 0)
    assert compute_degrees(g).tolist() == [0, 0, 0]


def test_degree_sum_is_twice_edges(citation_graph):
    deg = compute_degrees(citation_graph)
    assert int(deg.sum()) == 2 * citation_graph.num_edges


def test_split_counts():
    s = split_nodes(100, 0.6, 0.2, r=0.0, seed=0)
    assert s.train_labelled.size == 60
    assert s.train_unlabelled.size == 0
    assert s.val.size == 20 and s.test.size == 20


def test_split_unlabelled_fraction():
    s = split_nodes(100, 0.6, 0.2, r=0.3, seed=0)
    assert s.train_unlabelled.size == 18
    assert s.train_labelled.size == 42


def test_split_deterministic():
    a = split_nodes(500, 0.6, 0.2, r=0.25, seed=42)
    b = split_nodes(500, 0.6, 0.2, r=0.25, seed=42)
    for x, y in zip((a.train_labelled, a.train_unlabelled, a.val, a.test),
                    (b.train_labelled, b.train_unlabelled, b.val, b.test)):
        assert np.array_equal(x, y)
    c = split_nodes(500, 0.6, 0.2, r=0.25, seed=43)
    assert not np.array_equal(a.train_labelled, c.train_labelled)


def test_split_disjoint_and_in_range():
    s = split_nodes(97, 0.5, 0.3, r=0.4, seed=3)
    parts = [s.train_labelled, s.train_unlabelled, s.val, s.test]
    merged = np.concatenate(parts)
    assert np.unique(merged).size == merged.size
    assert merged.min() >= 0 and merged.max() < 97


def test_split_rejects_bad_fractions():
    with pytest.raises(DataError):
        split_nodes(10, 0.0, 0.2)
    with pytest.raises(DataError):
        split_nodes(10, 0.9, 0.3)
    with pytest.raises(DataError):
        split_nodes(10, 0.5, 0.2, r=1.0)


def test_induced_subgraph_triangle():
    g = build_graph(np.eye(3), [[0, 1], [0, 2], [1, 2]], [0, 0, 0], 1)
    sub, ids = induced_subgraph(g, [0, 1])
    assert sub.num_nodes == 2 and sub.num_edges == 1
    assert ids.tolist() == [0, 1]


def test_induced_subgraph_identity(citation_graph):
    sub, ids = induced_subgraph(citation_graph, np.arange(citation_graph.num_nodes))
    assert graphs_equal(sub, citation_graph)
    assert np.array_equal(ids, np.arange(citation_graph.num_nodes))


def test_induced_subgraph_edge_count_matches_brute_force(citation_graph):
    rng = np.random.default_rng(5)
    nodes = rng.choice(citation_graph.num_nodes, size=42, replace=False)
    sub, _ = induced_subgraph(citation_graph, nodes)
    node_set = set(int(v) for v in nodes)
    expected = sum(1 for i, j in citation_graph.edges
                   if int(i) in node_set and int(j) in node_set)
    assert sub.num_edges == expected


def test_induced_subgraph_remaps_labels_and_features(citation_graph):
    nodes = np.array([5, 17, 3])
    sub, ids = induced_subgraph(citation_graph, nodes)
    assert ids.tolist() == [3, 5, 17]
    for new, old in enumerate(ids):
        assert sub.labels[new] == citation_graph.labels[old]
        assert np.array_equal(sub.features[new], citation_graph.features[old])


def test_induced_subgraph_rejects_out_of_range(citation_graph):
    with pytest.raises(DataError):
        induced_subgraph(citation_graph, [citation_graph.num_nodes])


def test_splits_json_round_trip(tmp_path):
    s = split_nodes(50, 0.6, 0.2, r=0.0, seed=9)
    path = str(tmp_path / "splits.json")
    save_splits(s, path)
    loaded = load_splits(path, r=0.5, seed=9)
    assert np.array_equal(loaded.train, s.train)
    assert np.array_equal(loaded.val, s.val)
    assert np.array_equal(loaded.test, s.test)
    assert loaded.train_unlabelled.size == round(0.5 * s.train.size)


def test_real_cora_statistics():
    from conftest import dataset_dir_or_skip
    path = dataset_dir_or_skip("cora")
    g = load_graph(path)
    assert g.num_nodes == 2708
    assert g.num_classes == 7
    assert g.num_features == 1433
    deg = compute_degrees(g)
    assert int(deg.sum()) == 2 * g.num_edges
