#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "lapcert/bootstrap.hpp"
#include "lapcert/functionals.hpp"
#include "lapcert/graph.hpp"
#include "lapcert/harness.hpp"
#include "lapcert/sampling.hpp"

namespace py = pybind11;
using namespace lapcert;

namespace {

Graph graph_from_edges(std::int64_t n, const std::vector<std::tuple<std::int64_t, std::int64_t, double>>& edges) {
    std::vector<EdgeListRow> rows;
    rows.reserve(edges.size());
    for (const auto& [i, j, w] : edges) rows.push_back({i, j, w});
    return Graph::from_edges(n, std::move(rows));
}

Graph graph_load(const std::string& path, const std::string& format, bool one_based, bool header,
                 std::int64_t n_override) {
    LoadOptions opt;
    if (format == "edges") opt.format = EdgeFileFormat::WhitespaceEdgeList;
    else if (format == "csv") opt.format = EdgeFileFormat::Csv;
    else if (format == "mtx") opt.format = EdgeFileFormat::MatrixMarketSymmetric;
    else throw std::invalid_argument("format must be edges|csv|mtx");
    opt.one_based = one_based;
    opt.has_header = header;
    opt.n_override = n_override;
    return Graph::load_edge_list_file(path, opt);
}

CutVector to_cut(const std::vector<int>& bits) {
    CutVector c;
    c.bits.reserve(bits.size());
    for (int b : bits) c.bits.push_back(b ? 1 : 0);
    return c;
}

std::vector<CutVector> to_cuts(const std::vector<std::vector<int>>& cuts) {
    std::vector<CutVector> out;
    out.reserve(cuts.size());
    for (const auto& c : cuts) out.push_back(to_cut(c));
    return out;
}

BootstrapConfig make_cfg(int b_outer, int b_inner, double alpha, std::uint64_t seed, int threads) {
    BootstrapConfig cfg;
    cfg.b_outer = b_outer;
    cfg.b_inner = b_inner;
    cfg.alpha = alpha;
    cfg.seed = seed;
    cfg.threads = threads;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_lapcert, m) {
    m.doc() = "Randomized graph sparsification with bootstrap error certificates";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

    py::class_<Graph>(m, "Graph")
        .def_static("from_edges", &graph_from_edges, py::arg("n"), py::arg("edges"),
                    "Build a graph from (i, j, w) tuples; n < 0 infers the vertex count")
        .def_static("load", &graph_load, py::arg("path"), py::arg("format") = "edges",
                    py::arg("one_based") = false, py::arg("header") = false, py::arg("n_override") = -1)
        .def_property_readonly("n", &Graph::num_vertices)
        .def_property_readonly("num_edges", &Graph::num_edges)
        .def_property_readonly("total_weight", &Graph::total_weight)
        .def_property_readonly("num_components", &Graph::num_components)
        .def("edges",
             [](const Graph& g) {
                 std::vector<std::tuple<std::int64_t, std::int64_t, double>> out;
                 for (std::int64_t e = 0; e < g.num_edges(); ++e)
                     out.emplace_back(g.edge_u()[static_cast<std::size_t>(e)],
                                      g.edge_v()[static_cast<std::size_t>(e)],
                                      g.edge_w()[static_cast<std::size_t>(e)]);
                 return out;
             })
        .def("laplacian_matvec",
             [](const Graph& g, const Eigen::VectorXd& v) { return g.laplacian_matvec(v); })
        .def("cut_value", [](const Graph& g, const std::vector<int>& bits) { return g.cut_value(to_cut(bits)); })
        .def("degree_vector", &Graph::degree_vector)
        .def("normalized", [](const Graph& g) {
            auto [ng, scale] = normalize_weights(g);
            return py::make_tuple(ng, scale);
        });

    py::class_<EdgeProbabilities>(m, "EdgeProbabilities")
        .def_property_readonly("probs", [](const EdgeProbabilities& p) { return p.probs; })
        .def_property_readonly("scheme", [](const EdgeProbabilities& p) { return scheme_name(p.scheme); });

    m.def("edge_weight_probs", &edge_weight_probs, py::arg("graph"));
    m.def("effective_resistance_probs", &effective_resistance_probs, py::arg("graph"),
          py::arg("tol") = 1e-8, py::arg("threads") = 1);
    m.def("approx_effective_resistance_probs", &approx_effective_resistance_probs, py::arg("graph"),
          py::arg("eps"), py::arg("seed"), py::arg("tol") = 1e-8, py::arg("threads") = 1);
    m.def("leverage_masses", &leverage_masses, py::arg("graph"), py::arg("tol") = 1e-8, py::arg("threads") = 1);

    py::class_<SparsifiedSample>(m, "SparsifiedSample")
        .def_readonly("n", &SparsifiedSample::n)
        .def_readonly("N", &SparsifiedSample::num_draws)
        .def_readonly("seed", &SparsifiedSample::seed)
        .def_property_readonly("scheme", [](const SparsifiedSample& s) { return scheme_name(s.scheme); })
        .def_property_readonly("edge_index", [](const SparsifiedSample& s) { return s.edge_index; })
        .def_property_readonly("counts", [](const SparsifiedSample& s) { return s.counts; })
        .def_property_readonly("scale", [](const SparsifiedSample& s) { return s.scale; })
        .def_property_readonly("unique_edges", &SparsifiedSample::unique_edges)
        .def("max_scale", &SparsifiedSample::max_scale)
        .def("matvec",
             [](const SparsifiedSample& s, const Eigen::VectorXd& v,
                const std::optional<std::vector<std::int64_t>>& reweight) {
                 return sparsified_matvec(s, v, reweight ? &*reweight : nullptr);
             },
             py::arg("v"), py::arg("reweight") = py::none())
        .def("save", &SparsifiedSample::save_file, py::arg("path"))
        .def_static("load", &SparsifiedSample::load_file, py::arg("path"), py::arg("graph"),
                    py::arg("threads") = 1);

    m.def("draw_sample", &draw_sample, py::arg("graph"), py::arg("probs"), py::arg("N"), py::arg("seed"));
    m.def(
        "poisson_stream_sample",
        [](const std::string& path, std::int64_t n, std::int64_t num_edges, std::int64_t n_target,
           std::uint64_t seed, std::size_t block_rows, bool csv, bool one_based, bool header) {
            LoadOptions opt;
            opt.format = csv ? EdgeFileFormat::Csv : EdgeFileFormat::WhitespaceEdgeList;
            opt.one_based = one_based;
            opt.has_header = header;
            EdgeListFileSource src(path, opt, block_rows);
            return poisson_stream_sample(src, n, num_edges, n_target, seed);
        },
        py::arg("path"), py::arg("n"), py::arg("num_edges"), py::arg("n_target"), py::arg("seed"),
        py::arg("block_rows") = (1u << 22), py::arg("csv") = false, py::arg("one_based") = false,
        py::arg("header") = false,
        "Blockwise Poisson edge sampling over an equal-weight edge-list file");

    py::class_<FunctionalSpec>(m, "FunctionalSpec")
        .def_property_readonly("name", [](const FunctionalSpec& s) { return std::string(s.name()); });
    m.def("frobenius", [] { return FunctionalSpec::frobenius(); });
    m.def("frobenius_sq", [] { return FunctionalSpec::frobenius_sq(); });
    m.def("op_norm", [] { return FunctionalSpec::operator_norm(); });
    m.def(
        "regression_l2",
        [](const Eigen::VectorXd& y, double tau) { return FunctionalSpec::regression_l2(y, tau); },
        py::arg("y"), py::arg("tau"));

    m.def(
        "psi_sample_vs_exact",
        [](const FunctionalSpec& spec, const SparsifiedSample& s, const Graph& g,
           const std::optional<std::vector<std::int64_t>>& reweight) {
            return eval_functional(spec, LaplacianOperand::sampled(s, reweight ? &*reweight : nullptr),
                                   LaplacianOperand::exact(g));
        },
        py::arg("spec"), py::arg("sample"), py::arg("graph"), py::arg("reweight") = py::none(),
        "psi between a (reweighted) sample Laplacian and the exact Laplacian");
    m.def(
        "psi_sample_pair",
        [](const FunctionalSpec& spec, const SparsifiedSample& s,
           const std::optional<std::vector<std::int64_t>>& wa,
           const std::optional<std::vector<std::int64_t>>& wb) {
            return eval_functional(spec, LaplacianOperand::sampled(s, wa ? &*wa : nullptr),
                                   LaplacianOperand::sampled(s, wb ? &*wb : nullptr));
        },
        py::arg("spec"), py::arg("sample"), py::arg("wa") = py::none(), py::arg("wb") = py::none(),
        "psi between two reweightings of one sample");

    py::class_<QuantileEstimate>(m, "QuantileEstimate")
        .def_readonly("q_hat", &QuantileEstimate::q_hat)
        .def_readonly("mu_hat", &QuantileEstimate::mu_hat)
        .def_readonly("sigma_hat", &QuantileEstimate::sigma_hat)
        .def_readonly("alpha", &QuantileEstimate::alpha)
        .def_readonly("b_outer", &QuantileEstimate::b_outer)
        .def_readonly("b_inner", &QuantileEstimate::b_inner)
        .def_readonly("seed", &QuantileEstimate::seed)
        .def_readonly("functional", &QuantileEstimate::functional)
        .def("csv", [](const QuantileEstimate& e) {
            std::ostringstream out;
            write_csv(e, out);
            return out.str();
        });

    m.def(
        "algorithm1_quantile",
        [](const SparsifiedSample& s, const FunctionalSpec& spec, int b_outer, int b_inner, double alpha,
           std::uint64_t seed, int threads) {
            return algorithm1_quantile(s, spec, make_cfg(b_outer, b_inner, alpha, seed, threads));
        },
        py::arg("sample"), py::arg("spec"), py::arg("b_outer") = 50, py::arg("b_inner") = 30,
        py::arg("alpha") = 0.05, py::arg("seed") = 0, py::arg("threads") = 1);

    py::class_<CutInterval>(m, "CutInterval")
        .def_readonly("cut_id", &CutInterval::cut_id)
        .def_readonly("c_hat", &CutInterval::c_hat)
        .def_readonly("sigma_hat", &CutInterval::sigma_hat)
        .def_readonly("lo", &CutInterval::lo)
        .def_readonly("hi", &CutInterval::hi);

    py::class_<CutCIResult>(m, "CutCIResult")
        .def_readonly("q_hat", &CutCIResult::q_hat)
        .def_readonly("alpha", &CutCIResult::alpha)
        .def_readonly("cuts", &CutCIResult::cuts)
        .def_readonly("cmax_interval", &CutCIResult::cmax_interval)
        .def_readonly("cmin_interval", &CutCIResult::cmin_interval)
        .def("csv", [](const CutCIResult& r) {
            std::ostringstream out;
            write_csv(r, out);
            return out.str();
        });

    m.def(
        "algorithm2_cut_cis",
        [](const SparsifiedSample& s, const std::vector<std::vector<int>>& cuts, int b, double alpha,
           std::uint64_t seed, int threads) {
            return algorithm2_cut_cis(s, to_cuts(cuts), make_cfg(b, 2, alpha, seed, threads));
        },
        py::arg("sample"), py::arg("cuts"), py::arg("b") = 50, py::arg("alpha") = 0.05, py::arg("seed") = 0,
        py::arg("threads") = 1);

    py::class_<EigCIResult>(m, "EigCIResult")
        .def_readonly("q_hat", &EigCIResult::q_hat)
        .def_readonly("alpha", &EigCIResult::alpha)
        .def_readonly("lambda_hat", &EigCIResult::lambda_hat)
        .def_readonly("intervals", &EigCIResult::intervals)
        .def("csv", [](const EigCIResult& r) {
            std::ostringstream out;
            write_csv(r, out);
            return out.str();
        });

    m.def(
        "eigenvalue_cis",
        [](const SparsifiedSample& s, int r, int b, double alpha, std::uint64_t seed, int threads) {
            return eigenvalue_cis(s, r, make_cfg(b, 2, alpha, seed, threads), SolverConfig{});
        },
        py::arg("sample"), py::arg("r"), py::arg("b") = 50, py::arg("alpha") = 0.05, py::arg("seed") = 0,
        py::arg("threads") = 1);

    m.def("empirical_quantile",
          [](const std::vector<double>& values, double level) { return empirical_quantile(values, level); },
          py::arg("values"), py::arg("level"));
    m.def("extrapolate_quantile", &extrapolate_quantile, py::arg("q0"), py::arg("n0"), py::arg("n"));
    m.def("forecast_sample_size", &forecast_sample_size, py::arg("q0"), py::arg("n0"), py::arg("threshold"));

    // harness helpers
    m.def("make_complete", &make_complete, py::arg("n"));
    m.def("make_path", &make_path, py::arg("n"));
    m.def("make_erdos_renyi", &make_erdos_renyi, py::arg("n"), py::arg("p"), py::arg("seed"));
    m.def("make_random_tree", &make_random_tree, py::arg("n"), py::arg("seed"));
    m.def("make_mixture_points", &make_mixture_points, py::arg("components"), py::arg("points_per_component"),
          py::arg("seed"));
    m.def("make_gaussian_kernel_graph", &make_gaussian_kernel_graph, py::arg("points"), py::arg("bandwidth"));
    m.def("subsample_by_degree", &subsample_by_degree, py::arg("graph"), py::arg("k"), py::arg("seed"));

    py::class_<FrobeniusMeanCheck>(m, "FrobeniusMeanCheck")
        .def_readonly("observed_mean", &FrobeniusMeanCheck::observed_mean)
        .def_readonly("analytic_mean", &FrobeniusMeanCheck::analytic_mean)
        .def_readonly("z_score", &FrobeniusMeanCheck::z_score);
    m.def("frobenius_mean_check", &frobenius_mean_check, py::arg("graph"), py::arg("N"), py::arg("trials"),
          py::arg("seed"), py::arg("threads") = 1);

    py::class_<RegressionData>(m, "RegressionData")
        .def_readonly("y", &RegressionData::y)
        .def_readonly("beta0", &RegressionData::beta0)
        .def_readonly("varsigma2", &RegressionData::varsigma2);
    m.def("synth_regression_data", &synth_regression_data, py::arg("graph"), py::arg("seed"));

    py::class_<CoverageRow>(m, "CoverageRow")
        .def_readonly("task", &CoverageRow::task)
        .def_readonly("level", &CoverageRow::level)
        .def_readonly("coverage", &CoverageRow::coverage)
        .def_readonly("std_error", &CoverageRow::std_error)
        .def_readonly("trials", &CoverageRow::trials);
    py::class_<CoverageReport>(m, "CoverageReport")
        .def_readonly("rows", &CoverageReport::rows)
        .def_readonly("failed_trials", &CoverageReport::failed_trials)
        .def_readonly("wall_time_s", &CoverageReport::wall_time_s)
        .def_readonly("eig_gap_hist", &CoverageReport::eig_gap_hist)
        .def("csv", [](const CoverageReport& r) {
            std::ostringstream out;
            write_report_csv(r, out);
            return out.str();
        });
    m.def(
        "run_coverage_experiment",
        [](const std::string& config_path) { return run_coverage_experiment(ExperimentConfig::from_file(config_path)); },
        py::arg("config_path"), "Run a coverage experiment from a flat key = value config file");
}
