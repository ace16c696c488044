import json
import math

import numpy as np
import pytest

import roba


def small_settings(seed=3, sigma=0.0):
    s = roba.SimSettings()
    s.n = 8
    s.sigma = sigma
    s.seed = seed
    return s


def test_exp_log_round_trip():
    u = np.array([0.3, -1.2, 0.5])
    r = roba.exp_map(u)
    assert np.allclose(r @ r.T, np.eye(3), atol=1e-12)
    assert np.allclose(roba.log_map(r), u, atol=1e-12)
    assert roba.geodesic_distance(r, np.eye(3)) == pytest.approx(np.linalg.norm(u))


def test_smallest_eigenvalue_matches_numpy():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = rng.normal(size=(3, 3))
        m = a @ a.T
        assert roba.smallest_eigenvalue(m) == pytest.approx(
            np.linalg.eigvalsh(m)[0], abs=1e-9)
        assert np.allclose(roba.symmetric_eigenvalues(m), np.linalg.eigvalsh(m),
                           atol=1e-9)


def test_moments_assemble_direct_sum():
    rng = np.random.default_rng(1)
    f_j = rng.normal(size=(20, 3))
    f_k = rng.normal(size=(20, 3))
    f_j /= np.linalg.norm(f_j, axis=1, keepdims=True)
    f_k /= np.linalg.norm(f_k, axis=1, keepdims=True)
    moments = roba.precompute_moments(list(f_j), list(f_k))
    r = roba.exp_map(np.array([0.1, 0.2, -0.3]))
    direct = np.zeros((3, 3))
    for a, b in zip(f_j, f_k):
        n = np.cross(a, r @ b)
        direct += np.outer(n, n)
    assert np.allclose(roba.assemble_m(r, moments), direct, atol=1e-12)
    lam = np.linalg.eigvalsh(direct)[0]
    assert roba.edge_cost(r, moments) == pytest.approx(math.sqrt(lam), abs=1e-8)


def test_generate_optimize_evaluate():
    graph = roba.generate_dataset(small_settings())
    gt = graph.gt_rotations
    assert graph.num_cameras == 8 and graph.num_edges > 0
    assert roba.total_cost(gt, graph, use_sqrt=False) < 1e-10 * graph.num_edges

    init = roba.perturb_rotations(gt, 5.0, 11)
    start = graph.with_initial_rotations(init)
    result = roba.optimize(start, iters=50)
    assert result.evaluations_per_iteration == 4 * graph.num_edges
    assert len(result.costs) == 50
    assert result.final_cost < result.initial_cost
    before = roba.error_report(init, gt)
    after = roba.error_report(result.rotations, gt)
    assert after.mn1 < before.mn1
    assert after.mn1 <= after.mn2 + 1e-9


def test_graph_json_round_trip(tmp_path):
    graph = roba.generate_dataset(small_settings(seed=4, sigma=1.0))
    path = tmp_path / "g.json"
    roba.save_graph(graph, path)
    back = roba.load_graph(path)
    assert back.num_edges == graph.num_edges
    again = roba.ViewGraph.from_json(back.to_json())
    assert [(e.j, e.k) for e in again.edges] == [(e.j, e.k) for e in graph.edges]
    for a, b in zip(again.initial_rotations, graph.initial_rotations):
        assert np.allclose(a, b, atol=1e-15)
    doc = json.loads(path.read_text())
    assert doc["n"] == graph.num_cameras


def test_errors_carry_kind(tmp_path):
    with pytest.raises(roba.Error) as info:
        roba.load_graph(tmp_path / "missing.json")
    assert info.value.kind == "io"
    with pytest.raises(roba.Error):
        roba.optimize(roba.generate_dataset(small_settings()), alpha=-1.0)


def test_cli_help_and_synth(tmp_path):
    code, out, _ = roba.run_cli(["--help"])
    assert code == 0 and "optimize" in out
    code, _, _ = roba.run_cli(["synth", "--n", "6", "--seed", "2", "--out",
                               str(tmp_path)])
    assert code == 0
    assert any(p.suffix == ".json" for p in tmp_path.iterdir())
