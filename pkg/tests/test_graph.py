import pytest

from kindsim.graph import (
    ConnectivityRetryExhausted,
    Disconnected,
    DuplicateEdge,
    EmptyGraph,
    Graph,
    GraphSpec,
    InvalidSpec,
    ParseError,
    SelfLoop,
    complete_graph,
    cycle_graph,
    generate,
    grid_graph,
    is_connected,
    parse_edge_list,
    path_graph,
    serialize_edge_list,
    shortest_path,
)


def test_complete_4():
    g = generate(GraphSpec("complete", n=4), 0)
    assert g.n_vertices == 4
    assert g.n_edges == 6
    assert g.n_oriented == 12


def test_cycle_5_degrees():
    g = generate(GraphSpec("cycle", n=5), 0)
    assert (g.n_vertices, g.n_edges) == (5, 5)
    assert all(g.degree(x) == 2 for x in range(5))


def test_erdos_renyi_p1_is_complete():
    g = generate(GraphSpec("erdos_renyi", n=10, p=1.0), 123)
    assert g.edges == complete_graph(10).edges


def test_erdos_renyi_deterministic_and_connected():
    spec = GraphSpec("erdos_renyi", n=20, p=0.2)
    a, b = generate(spec, 5), generate(spec, 5)
    assert a.edges == b.edges
    assert is_connected(a)


def test_erdos_renyi_retry_budget():
    with pytest.raises(ConnectivityRetryExhausted):
        generate(GraphSpec("erdos_renyi", n=30, p=0.01), 1)


def test_grid_shape():
    g = grid_graph(4, 4)
    assert g.n_vertices == 16
    assert g.n_edges == 24
    assert g.neighbors(5) == (1, 4, 6, 9)


@pytest.mark.parametrize("kwargs", [
    {"kind": "complete", "n": 1},
    {"kind": "cycle", "n": 2},
    {"kind": "grid", "width": 1, "height": 1},
    {"kind": "erdos_renyi", "n": 5, "p": 0.0},
    {"kind": "erdos_renyi", "n": 5, "p": 1.5},
    {"kind": "torus", "n": 5},
    {"kind": "file"},
])
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidSpec):
        GraphSpec(**kwargs)


def test_parse_path():
    g = parse_edge_list("0 1\n1 2")
    assert g.n_vertices == 3
    assert is_connected(g)
    assert g.edges == ((0, 1), (1, 2))


def test_parse_comments_and_blank_lines():
    g = parse_edge_list("# a triangle\n\n0 1\n  1 2  \n# done\n2 0\n")
    assert g == complete_graph(3)


@pytest.mark.parametrize("text, err", [
    ("0 1\n2 3", Disconnected),
    ("0 0", SelfLoop),
    ("0 1\n1 0", DuplicateEdge),
    ("0 1\n0 1", DuplicateEdge),
    ("0 1 2", ParseError),
    ("0 x", ParseError),
    ("0 -1", ParseError),
    ("# nothing\n\n", EmptyGraph),
    ("0 1\n1 3", Disconnected),  # index gap: vertex 2 never appears
])
def test_parse_errors(text, err):
    with pytest.raises(err):
        parse_edge_list(text)


def test_is_connected_examples():
    assert is_connected(complete_graph(3))
    assert not is_connected([(1,), (0,), (3,), (2,)])
    assert is_connected([()])


def test_from_edges_rejects_disconnected():
    with pytest.raises(Disconnected):
        Graph.from_edges(4, [(0, 1), (2, 3)])


def test_shortest_path_cycle4():
    path = shortest_path(cycle_graph(4), 0, 2)
    assert len(path) == 3
    assert path == [0, 1, 2]  # lowest-index neighbor first


def test_shortest_path_identity_and_path_graph():
    assert shortest_path(complete_graph(5), 3, 3) == [3]
    assert shortest_path(path_graph(3), 0, 2) == [0, 1, 2]


@pytest.mark.parametrize("spec", [
    GraphSpec("complete", n=7),
    GraphSpec("cycle", n=9),
    GraphSpec("grid", width=3, height=5),
    GraphSpec("erdos_renyi", n=25, p=0.15),
])
def test_invariants_and_round_trip(spec):
    g = generate(spec, 11)
    assert is_connected(g)
    assert g.n_oriented == 2 * g.n_edges
    for u, v in g.edges:
        assert u != v
        assert v in g.adjacency[u] and u in g.adjacency[v]
    assert sum(len(a) for a in g.adjacency) == 2 * g.n_edges
    assert len(set(g.edges)) == g.n_edges
    assert parse_edge_list(serialize_edge_list(g)).edges == g.edges
    assert set(g.oriented_edges()) == {(u, v) for u, v in g.edges} | {(v, u) for u, v in g.edges}


def test_spec_dict_round_trip():
    for spec in (GraphSpec("grid", width=2, height=3), GraphSpec("erdos_renyi", n=4, p=0.5)):
        assert GraphSpec.from_dict(spec.to_dict()) == spec


def test_with_n():
    assert GraphSpec("complete", n=2).with_n(40) == GraphSpec("complete", n=40)
    assert GraphSpec("grid", width=2, height=2).with_n(16) == GraphSpec("grid", width=4, height=4)
    with pytest.raises(InvalidSpec):
        GraphSpec("grid", width=2, height=2).with_n(10)


def test_file_spec(tmp_path):
    path = tmp_path / "g.edges"
    path.write_text(serialize_edge_list(cycle_graph(6)))
    g = generate(GraphSpec("file", path=str(path)))
    assert g == cycle_graph(6)
