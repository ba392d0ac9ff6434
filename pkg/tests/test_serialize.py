import json

import numpy as np
import pytest

from phases.graphon import FiniteGraph, StepGraphon, SubgraphPattern
from phases.permuton import GridPermuton, Permutation, project_uniform_marginals
from phases.serialize import (
    FileFormatError,
    load_finite_graph,
    load_grid_permuton,
    load_pattern,
    load_permutation,
    load_step_graphon,
    save_finite_graph,
    save_grid_permuton,
    save_permutation,
    save_step_graphon,
)
from conftest import random_step_graphon


def test_graphon_round_trip(tmp_path, rng):
    q = random_step_graphon(rng, 3)
    path = tmp_path / "q.json"
    save_step_graphon(q, str(path))
    q2 = load_step_graphon(str(path))
    assert np.array_equal(q.masses, q2.masses)
    assert np.array_equal(q.values, q2.values)


def test_graphon_missing_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"masses": [1.0]}))
    with pytest.raises(FileFormatError, match="values"):
        load_step_graphon(str(path))


def test_graphon_invalid_json_names_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(FileFormatError, match="broken.json"):
        load_step_graphon(str(path))


def test_finite_graph_edge_list_round_trip(tmp_path):
    g = FiniteGraph.cycle(6)
    path = tmp_path / "g.txt"
    save_finite_graph(g, str(path))
    g2 = load_finite_graph(str(path))
    assert np.array_equal(g.adjacency, g2.adjacency)


def test_finite_graph_json_adjacency(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"adjacency": [[0, 1], [1, 0]]}))
    g = load_finite_graph(str(path))
    assert g.n == 2 and g.edge_count == 1


def test_finite_graph_bad_line(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("0 1\n2\n")
    with pytest.raises(FileFormatError, match="line 2"):
        load_finite_graph(str(path))


def test_pattern_names_and_files(tmp_path):
    assert load_pattern("triangle") == SubgraphPattern.triangle()
    assert load_pattern("kstar:3") == SubgraphPattern.star(3)
    assert load_pattern("t1") == SubgraphPattern.signed_two_star()
    path = tmp_path / "pat.json"
    path.write_text(json.dumps({"k": 4, "edges": [[1, 2]], "absent": [[3, 4]]}))
    pat = load_pattern(str(path))
    assert pat == SubgraphPattern(4, ((1, 2),), ((3, 4),))
    with pytest.raises(ValueError, match="unknown pattern"):
        load_pattern("nonsense")


def test_permutation_round_trip(tmp_path):
    pi = Permutation((3, 1, 4, 2))
    path = tmp_path / "pi.txt"
    save_permutation(pi, str(path))
    assert load_permutation(str(path)) == pi


def test_permutation_invalid(tmp_path):
    path = tmp_path / "pi.txt"
    path.write_text("1 1 2\n")
    with pytest.raises(FileFormatError, match="values"):
        load_permutation(str(path))


def test_grid_permuton_round_trip(tmp_path, rng):
    g = GridPermuton(project_uniform_marginals(rng.uniform(0.5, 1.5, (6, 6))))
    path = tmp_path / "perm.json"
    save_grid_permuton(g, str(path))
    g2 = load_grid_permuton(str(path))
    assert np.array_equal(g.g, g2.g)


def test_grid_permuton_k_mismatch(tmp_path):
    path = tmp_path / "perm.json"
    path.write_text(json.dumps({"k": 3, "g": [[2.0, 0.0], [0.0, 2.0]]}))
    with pytest.raises(FileFormatError, match="g"):
        load_grid_permuton(str(path))
