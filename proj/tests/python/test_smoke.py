"""End-to-end smoke tests for the python bindings."""

import math

import pytest

import _lapcert as lc


@pytest.fixture(scope="module")
def graph():
    return lc.make_erdos_renyi(40, 0.25, seed=7)


def test_graph_basics(tmp_path):
    g = lc.Graph.from_edges(3, [(0, 1, 1.0), (1, 2, 3.0)])
    assert g.n == 3
    assert g.num_edges == 2
    assert g.total_weight == pytest.approx(4.0)
    assert g.cut_value([1, 0, 0]) == pytest.approx(1.0)
    assert list(g.degree_vector()) == pytest.approx([1.0, 4.0, 3.0])

    ng, scale = g.normalized()
    assert scale == pytest.approx(4.0)
    assert ng.total_weight == pytest.approx(1.0)

    path = tmp_path / "g.txt"
    path.write_text("0 1 1.0\n1 2 3.0\n")
    g2 = lc.Graph.load(str(path))
    assert g2.edges() == g.edges()

    with pytest.raises(ValueError):
        lc.Graph.load(str(tmp_path / "missing.txt"))


def test_probabilities_sum_to_one(graph):
    for probs in (
        lc.edge_weight_probs(graph),
        lc.effective_resistance_probs(graph, tol=1e-8),
        lc.approx_effective_resistance_probs(graph, eps=1.0, seed=3, tol=1e-8),
    ):
        assert sum(probs.probs) == pytest.approx(1.0)
        assert min(probs.probs) > 0


def test_tree_er_probs_uniform():
    tree = lc.make_random_tree(12, seed=4)
    probs = lc.effective_resistance_probs(tree, tol=1e-10)
    for p in probs.probs:
        assert p == pytest.approx(1.0 / tree.num_edges, abs=1e-9)


def test_sample_roundtrip_and_matvec(graph, tmp_path):
    probs = lc.edge_weight_probs(graph)
    s = lc.draw_sample(graph, probs, 60, seed=5)
    assert sum(s.counts) == 60
    assert s.N == 60

    ones = [1.0] * graph.n
    assert max(abs(v) for v in s.matvec(ones)) < 1e-12

    path = tmp_path / "sample.txt"
    s.save(str(path))
    s2 = lc.SparsifiedSample.load(str(path), graph)
    assert s2.counts == s.counts
    assert s2.edge_index == s.edge_index


def test_algorithm1_quantile(graph):
    probs = lc.edge_weight_probs(graph)
    s = lc.draw_sample(graph, probs, 80, seed=9)
    est = lc.algorithm1_quantile(s, lc.frobenius(), b_outer=40, b_inner=20, alpha=0.1, seed=11)
    assert est.q_hat >= 0
    again = lc.algorithm1_quantile(s, lc.frobenius(), b_outer=40, b_inner=20, alpha=0.1, seed=11)
    assert again.q_hat == est.q_hat  # deterministic

    est2 = lc.algorithm1_quantile(s, lc.frobenius_sq(), b_outer=40, b_inner=20, alpha=0.1, seed=11)
    assert est.q_hat == pytest.approx(math.sqrt(est2.q_hat))

    psi = lc.psi_sample_vs_exact(lc.frobenius(), s, graph)
    assert psi >= 0
    assert "q_hat" in est.csv()


def test_single_edge_degeneracy():
    g = lc.Graph.from_edges(2, [(0, 1, 1.0)])
    s = lc.draw_sample(g, lc.edge_weight_probs(g), 10, seed=1)
    est = lc.algorithm1_quantile(s, lc.op_norm(), seed=2)
    assert est.q_hat == 0.0
    assert lc.psi_sample_vs_exact(lc.op_norm(), s, g) == pytest.approx(0.0)


def test_cut_cis(graph):
    probs = lc.edge_weight_probs(graph)
    s = lc.draw_sample(graph, probs, 70, seed=13)
    cuts = [[(i * k) % 2 for i in range(graph.n)] for k in range(1, 6)]
    res = lc.algorithm2_cut_cis(s, cuts, b=40, alpha=0.1, seed=15)
    assert res.q_hat >= 0
    for iv in res.cuts:
        assert iv.lo <= iv.c_hat <= iv.hi
    assert res.cmax_interval[0] <= res.cmax_interval[1]


def test_eigenvalue_cis(graph):
    probs = lc.edge_weight_probs(graph)
    s = lc.draw_sample(graph, probs, 90, seed=17)
    res = lc.eigenvalue_cis(s, r=5, b=30, alpha=0.1, seed=19)
    assert res.intervals[0] == (0.0, 0.0)
    for lam, (lo, hi) in zip(res.lambda_hat[1:], res.intervals[1:]):
        assert lo <= lam <= hi


def test_regression_functional(graph):
    data = lc.synth_regression_data(graph, seed=23)
    assert data.y.shape == (graph.n,)
    s = lc.draw_sample(graph, lc.edge_weight_probs(graph), 80, seed=25)
    spec = lc.regression_l2(data.y, 0.01)
    est = lc.algorithm1_quantile(s, spec, b_outer=20, b_inner=10, seed=27)
    assert est.q_hat >= 0


def test_extrapolation():
    assert lc.extrapolate_quantile(1.0, 100, 400) == pytest.approx(0.5)
    assert lc.forecast_sample_size(1.0, 100, 0.25) == 1600
    assert lc.forecast_sample_size(0.1, 100, 0.25) == 100


def test_poisson_stream(tmp_path):
    path = tmp_path / "stream.txt"
    path.write_text("".join(f"{i} {i + 1} 1.0\n" for i in range(5000)))
    s = lc.poisson_stream_sample(str(path), n=5001, num_edges=5000, n_target=500, seed=3, block_rows=512)
    assert s.N == sum(s.counts)
    assert s.N > 0
    # block size must not change the outcome
    s2 = lc.poisson_stream_sample(str(path), n=5001, num_edges=5000, n_target=500, seed=3, block_rows=17)
    assert s2.counts == s.counts
    assert s2.edge_index == s.edge_index


def test_frobenius_mean_check():
    g = lc.Graph.from_edges(4, [(0, 1, 0.5), (2, 3, 0.5)])
    chk = lc.frobenius_mean_check(g, N=10, trials=500, seed=5)
    assert chk.analytic_mean == pytest.approx(0.2)
    assert abs(chk.z_score) < 4.0


def test_coverage_experiment(tmp_path):
    cfg = tmp_path / "cov.cfg"
    cfg.write_text(
        "graph = path\nn = 2\nscheme = ew\nn_samples = 5\nfunctionals = fro\n"
        "levels = 0.90\ntrials = 10\nb_outer = 8\nb_inner = 4\nseed = 3\n"
    )
    report = lc.run_coverage_experiment(str(cfg))
    assert report.rows[0].coverage == pytest.approx(1.0)
    assert report.failed_trials == 0
    assert report.csv().startswith("task,level,coverage,std_error,trials")
