import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specloc.errors import DegenerateDegreeError, GenerationError, ParseError, ValidationError
from specloc.graph import (
    Graph,
    degree_fluctuation,
    degree_stats,
    generate,
    laplacian,
    load_edge_list,
    load_graph,
    normalized_laplacian,
    parse_edge_list,
    write_edge_list,
)


def test_load_minimal_path(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("0 1\n1 2")
    g = load_edge_list(f)
    assert g.n_nodes == 3
    assert g.edges == ((0, 1, 1.0), (1, 2, 1.0))


def test_duplicate_pairs_merge_by_weight_sum(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("0 1 2.5\n1 0 0.5\n")
    g = load_edge_list(f)
    assert g.n_nodes == 2
    assert g.edges == ((0, 1, 3.0),)


def test_csv_format_and_comments(tmp_path):
    f = tmp_path / "g.csv"
    f.write_text("# header comment\n0,1,2\n\n1, 2\n")
    g = load_edge_list(f, format="csv")
    assert g.edges == ((0, 1, 2.0), (1, 2, 1.0))


@pytest.mark.parametrize("text, lineno", [("0 1\n0 0", 2), ("0 1\n1 2 -1", 2), ("0 1 0", 1)])
def test_forbidden_lines_are_validation_errors(text, lineno):
    with pytest.raises(ValidationError, match=f":{lineno}:|^{lineno}:"):
        parse_edge_list(text, path="g.txt")


@pytest.mark.parametrize("text", ["0 1 2 3", "a b", "0 -1", "0 1 x"])
def test_malformed_lines_report_line_number(text):
    with pytest.raises(ParseError) as exc:
        parse_edge_list("0 1\n" + text)
    assert exc.value.lineno == 2


def test_self_loop_rejected(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("0 0")
    with pytest.raises(ValidationError, match="self-loop"):
        load_edge_list(f)


def test_graph_invariants_enforced():
    with pytest.raises(ValidationError):
        Graph(2, ((0, 1, 1.0), (1, 0, 1.0)))
    with pytest.raises(ValidationError):
        Graph(2, ((0, 2, 1.0),))
    with pytest.raises(ValidationError):
        Graph(2, ((0, 1, math.inf),))
    with pytest.raises(ValidationError):
        Graph(0)


def test_adjacency_symmetric_and_readonly():
    g = generate("erdos_renyi", n=20, p=0.3, seed=2)
    a = g.adjacency
    assert np.array_equal(a, a.T)
    with pytest.raises(ValueError):
        a[0, 0] = 1.0


def test_ring_and_star():
    ring = generate("ring", n=4)
    assert ring.n_edges == 4
    assert np.all(ring.degrees == 2)
    star = generate("star", n=4)
    assert list(star.degrees) == [3, 1, 1, 1]


def test_grid_and_complete():
    g = generate("grid2d", rows=3, cols=4)
    assert g.n_nodes == 12 and g.n_edges == 3 * 3 + 2 * 4
    k = generate("complete", n=5)
    assert k.n_edges == 10


def test_random_generators_deterministic():
    a = generate("erdos_renyi", n=50, p=0.1, seed=7)
    b = generate("erdos_renyi", n=50, p=0.1, seed=7)
    assert a.edges == b.edges
    assert a.is_connected()
    c = generate("barabasi_albert", n=40, m=2, seed=7)
    assert c.edges == generate("barabasi_albert", n=40, m=2, seed=7).edges
    assert c.n_edges == 2 + 2 * (40 - 3)
    assert c.is_connected()


def test_random_generator_requires_seed_and_valid_params():
    with pytest.raises(ValidationError):
        generate("erdos_renyi", n=10, p=0.2)
    with pytest.raises(ValidationError):
        generate("erdos_renyi", n=10, p=0.0, seed=1)
    with pytest.raises(ValidationError):
        generate("barabasi_albert", n=3, m=3, seed=1)
    with pytest.raises(ValidationError):
        generate("hypercube", n=3)


def test_connectivity_retry_budget_exhausted():
    with pytest.raises(GenerationError):
        generate("erdos_renyi", n=200, p=0.001, seed=1, max_retries=3)


def _hand_normalized_laplacian(a):
    # independent of the package: literal I - D^-1/2 A D^-1/2
    d = a.sum(axis=1)
    n = len(d)
    out = np.eye(n)
    for i in range(n):
        for j in range(n):
            out[i, j] -= a[i, j] / math.sqrt(d[i] * d[j])
    return out


@pytest.mark.parametrize(
    "g, expected",
    [
        (generate("complete", n=3), [0.0, 1.5, 1.5]),
        (generate("ring", n=4), [0.0, 1.0, 1.0, 2.0]),
        (generate("star", n=4), [0.0, 1.0, 1.0, 2.0]),
    ],
)
def test_small_spectra(g, expected):
    lam = np.linalg.eigvalsh(normalized_laplacian(g))
    oracle = np.linalg.eigvalsh(_hand_normalized_laplacian(np.array(g.adjacency)))
    np.testing.assert_allclose(lam, expected, atol=1e-8)
    np.testing.assert_allclose(oracle, expected, atol=1e-8)


@pytest.mark.parametrize("n", [3, 5, 8])
def test_complete_graph_closed_form(n):
    lam = np.linalg.eigvalsh(normalized_laplacian(generate("complete", n=n)))
    np.testing.assert_allclose(lam, [0.0] + [n / (n - 1)] * (n - 1), atol=1e-10)


@pytest.mark.parametrize("n", [5, 6, 11])
def test_ring_closed_form(n):
    lam = np.linalg.eigvalsh(normalized_laplacian(generate("ring", n=n)))
    expected = np.sort(1 - np.cos(2 * np.pi * np.arange(n) / n))
    np.testing.assert_allclose(lam, expected, atol=1e-10)


def test_normalized_laplacian_properties():
    for seed in range(3):
        g = generate("erdos_renyi", n=40, p=0.15, seed=seed)
        lap = normalized_laplacian(g)
        assert np.max(np.abs(lap - lap.T)) <= 1e-12
        sqrt_d = np.sqrt(g.degrees)
        assert np.max(np.abs(lap @ sqrt_d)) < 1e-10
        lam, vecs = np.linalg.eigh(lap)
        assert lam[0] > -1e-10 and lam[-1] < 2 + 1e-10
        cos = abs(vecs[:, 0] @ sqrt_d) / np.linalg.norm(sqrt_d)
        assert cos > 1 - 1e-10


def test_isolated_node_rejected():
    g = Graph(3, ((0, 1, 1.0),))
    with pytest.raises(DegenerateDegreeError) as exc:
        normalized_laplacian(g)
    assert exc.value.node == 2


def test_weighted_laplacian():
    g = Graph(3, ((0, 1, 2.0), (1, 2, 1.0)))
    assert list(g.degrees) == [2.0, 3.0, 1.0]
    np.testing.assert_allclose(laplacian(g).sum(axis=1), 0.0)
    assert g.is_weighted


def test_degree_fluctuation_examples():
    assert degree_fluctuation(generate("ring", n=4)) == 0.0
    assert degree_fluctuation(Graph(2, ((0, 1, 1.0),))) == 0.0
    # degrees (3, 1, 1, 1): (1/4) sqrt(2.25 + 3 * 0.25)
    assert degree_fluctuation(generate("star", n=4)) == pytest.approx(0.4330127, abs=1e-7)
    assert degree_fluctuation(generate("star", n=4)) == pytest.approx(math.sqrt(3.0) / 4, rel=1e-15)


def test_degree_stats_fields():
    s = degree_stats(generate("star", n=4))
    assert s.mean_degree == 1.5
    assert s.stddev == pytest.approx(s.fluctuation * math.sqrt(4))
    assert degree_stats(generate("complete", n=6)).fluctuation == 0.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32), perm_seed=st.integers(0, 2**32))
def test_degree_fluctuation_permutation_invariant(seed, perm_seed):
    g = generate("erdos_renyi", n=25, p=0.2, seed=seed)
    perm = np.random.default_rng(perm_seed).permutation(g.n_nodes)
    h = Graph(g.n_nodes, tuple((int(perm[u]), int(perm[v]), w) for u, v, w in g.edges))
    assert degree_fluctuation(h) == pytest.approx(degree_fluctuation(g), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("fmt", ["whitespace", "csv"])
def test_edge_list_round_trip(tmp_path, fmt):
    g = generate("barabasi_albert", n=30, m=3, seed=4)
    g = Graph(g.n_nodes, tuple((u, v, w * 0.1 + 0.3) for u, v, w in g.edges))
    f = tmp_path / "g.txt"
    write_edge_list(g, f, format=fmt)
    h = load_edge_list(f, format=fmt)
    assert np.array_equal(h.adjacency, g.adjacency)


def test_json_round_trip(tmp_path):
    g = generate("grid2d", rows=3, cols=3)
    f = tmp_path / "g.json"
    f.write_text(json.dumps(g.to_dict()))
    assert load_graph(f) == g
    with pytest.raises(ValidationError):
        Graph.from_dict({"edges": []})
