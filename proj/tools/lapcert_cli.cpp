// lapcert: sparsify weighted graph Laplacians and compute bootstrap error
// certificates for them (quantile estimates, simultaneous cut / eigenvalue
// CIs, sample-size forecasts).

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>

#include "lapcert/bootstrap.hpp"
#include "lapcert/functionals.hpp"
#include "lapcert/graph.hpp"
#include "lapcert/harness.hpp"
#include "lapcert/parallel.hpp"
#include "lapcert/sampling.hpp"

namespace {

using namespace lapcert;

struct GraphFlags {
    std::string path;
    std::string format = "auto";
    bool one_based = false;
    bool header = false;
    std::int64_t n_override = -1;
};

void add_graph_flags(CLI::App* cmd, GraphFlags& gf) {
    cmd->add_option("--graph", gf.path, "graph file (edge list, CSV, or Matrix Market)")->required();
    cmd->add_option("--format", gf.format, "graph format: auto|edges|csv|mtx (auto = by extension)")
        ->check(CLI::IsMember({"auto", "edges", "csv", "mtx"}));
    cmd->add_flag("--one-based", gf.one_based, "vertex ids in the file start at 1");
    cmd->add_flag("--header", gf.header, "skip the first data line");
    cmd->add_option("--num-vertices", gf.n_override, "override the inferred vertex count");
}

Graph load_graph(const GraphFlags& gf) {
    LoadOptions opt;
    std::string fmt = gf.format;
    if (fmt == "auto") {
        if (gf.path.size() >= 4 && gf.path.substr(gf.path.size() - 4) == ".mtx") fmt = "mtx";
        else if (gf.path.size() >= 4 && gf.path.substr(gf.path.size() - 4) == ".csv") fmt = "csv";
        else fmt = "edges";
    }
    if (fmt == "edges") opt.format = EdgeFileFormat::WhitespaceEdgeList;
    else if (fmt == "csv") opt.format = EdgeFileFormat::Csv;
    else opt.format = EdgeFileFormat::MatrixMarketSymmetric;
    opt.one_based = gf.one_based;
    opt.has_header = gf.header;
    opt.n_override = gf.n_override;
    return Graph::load_edge_list_file(gf.path, opt);
}

Eigen::VectorXd load_vector(const std::string& path, std::int64_t n) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vector file: " + path);
    std::vector<double> vals;
    double v;
    while (in >> v) vals.push_back(v);
    if (static_cast<std::int64_t>(vals.size()) != n)
        throw std::runtime_error("vector file " + path + " has " + std::to_string(vals.size()) +
                                 " entries, expected " + std::to_string(n));
    return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

FunctionalSpec build_spec(const std::string& name, const Graph& g, double tau,
                          const std::optional<std::string>& y_path) {
    const FunctionalKind kind = functional_from_name(name);
    if (kind == FunctionalKind::RegressionL2) {
        if (!y_path) throw CLI::ValidationError("--functional reg requires --y (and --tau)");
        return FunctionalSpec::regression_l2(load_vector(*y_path, g.num_vertices()), tau);
    }
    if (kind == FunctionalKind::OperatorNorm) return FunctionalSpec::operator_norm();
    if (kind == FunctionalKind::Frobenius) return FunctionalSpec::frobenius();
    return FunctionalSpec::frobenius_sq();
}

void write_file_or_stdout(const std::optional<std::string>& path,
                          const std::function<void(std::ostream&)>& emit) {
    if (path) {
        std::ofstream out(*path);
        if (!out) throw std::runtime_error("cannot write output file: " + *path);
        emit(out);
    } else {
        emit(std::cout);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized graph sparsification with bootstrap error certificates"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = LAPCERT_THREADS or hardware)");

    // ---- sparsify ----
    auto* sparsify = app.add_subcommand("sparsify", "draw an i.i.d. edge sample and write it to a file");
    sparsify->fallthrough();
    GraphFlags sp_graph;
    add_graph_flags(sparsify, sp_graph);
    std::string sp_scheme = "ew";
    sparsify->add_option("--scheme", sp_scheme, "sampling scheme")->check(CLI::IsMember({"ew", "er", "aer"}));
    std::int64_t sp_n = 0;
    double sp_fraction = 0.0;
    auto* opt_n = sparsify->add_option("--n-samples", sp_n, "number of edge draws N");
    auto* opt_frac = sparsify->add_option("--fraction", sp_fraction, "N as a fraction of |E|");
    opt_n->excludes(opt_frac);
    std::uint64_t sp_seed = 0;
    sparsify->add_option("--seed", sp_seed, "RNG seed")->required();
    std::string sp_out;
    sparsify->add_option("--out", sp_out, "output sample file")->required();
    double sp_eps = 1.0, sp_tol = 1e-8;
    sparsify->add_option("--eps", sp_eps, "AER accuracy parameter in (0,1]");
    sparsify->add_option("--tol", sp_tol, "CG tolerance for er/aer probabilities");

    // ---- estimate ----
    auto* estimate = app.add_subcommand("estimate", "Algorithm 1 quantile estimate for an error functional");
    estimate->fallthrough();
    GraphFlags es_graph;
    std::string es_sample;
    estimate->add_option("--sample", es_sample, "sample file from `sparsify`")->required();
    add_graph_flags(estimate, es_graph);
    std::string es_fn = "fro";
    estimate->add_option("--functional", es_fn, "error functional")->check(CLI::IsMember({"fro", "fro2", "op", "reg"}));
    double es_alpha = 0.05;
    estimate->add_option("--alpha", es_alpha, "miscoverage level");
    int es_bo = 50, es_bi = 30;
    estimate->add_option("--b-outer", es_bo, "outer bootstrap replicates");
    estimate->add_option("--b-inner", es_bi, "inner bootstrap replicates");
    std::uint64_t es_seed = 0;
    estimate->add_option("--seed", es_seed, "RNG seed")->required();
    double es_tau = 0.0;
    std::optional<std::string> es_y;
    estimate->add_option("--tau", es_tau, "regression penalty (reg only)");
    estimate->add_option("--y", es_y, "observations file, one value per line (reg only)");
    std::optional<std::string> es_out;
    estimate->add_option("--out", es_out, "write the CSV report here (default: report to stdout)");

    // ---- cut-ci ----
    auto* cutci = app.add_subcommand("cut-ci", "Algorithm 2 simultaneous CIs for cut query values");
    cutci->fallthrough();
    GraphFlags cc_graph;
    std::string cc_sample, cc_cuts;
    cutci->add_option("--sample", cc_sample, "sample file")->required();
    add_graph_flags(cutci, cc_graph);
    cutci->add_option("--cuts", cc_cuts, "cuts file: 0/1 strings or vertex-id lists, one cut per line")->required();
    double cc_alpha = 0.05;
    cutci->add_option("--alpha", cc_alpha, "miscoverage level");
    int cc_b = 50;
    cutci->add_option("--b", cc_b, "bootstrap replicates");
    std::uint64_t cc_seed = 0;
    cutci->add_option("--seed", cc_seed, "RNG seed")->required();
    std::optional<std::string> cc_out;
    cutci->add_option("--out", cc_out, "write the CSV here (default stdout)");

    // ---- eig-ci ----
    auto* eigci = app.add_subcommand("eig-ci", "simultaneous CIs for the bottom Laplacian eigenvalues");
    eigci->fallthrough();
    GraphFlags ec_graph;
    std::string ec_sample;
    eigci->add_option("--sample", ec_sample, "sample file")->required();
    add_graph_flags(eigci, ec_graph);
    int ec_r = 0;
    eigci->add_option("--r", ec_r, "number of bottom eigenvalues (>= 2)")->required();
    double ec_alpha = 0.05;
    eigci->add_option("--alpha", ec_alpha, "miscoverage level");
    int ec_b = 50;
    eigci->add_option("--b", ec_b, "bootstrap replicates");
    std::uint64_t ec_seed = 0;
    eigci->add_option("--seed", ec_seed, "RNG seed")->required();
    std::optional<std::string> ec_out;
    eigci->add_option("--out", ec_out, "write the CSV here (default stdout)");

    // ---- refine ----
    auto* refine = app.add_subcommand("refine", "forecast the sample size needed to reach an error threshold");
    refine->fallthrough();
    GraphFlags rf_graph;
    std::string rf_sample;
    refine->add_option("--sample", rf_sample, "sample file at the pilot size N0")->required();
    add_graph_flags(refine, rf_graph);
    std::string rf_fn = "fro";
    refine->add_option("--functional", rf_fn, "error functional")->check(CLI::IsMember({"fro", "fro2", "op", "reg"}));
    double rf_threshold = 0.0;
    refine->add_option("--threshold", rf_threshold, "target quantile threshold")->required();
    double rf_alpha = 0.05;
    refine->add_option("--alpha", rf_alpha, "miscoverage level");
    int rf_bo = 50, rf_bi = 30;
    refine->add_option("--b-outer", rf_bo, "outer bootstrap replicates");
    refine->add_option("--b-inner", rf_bi, "inner bootstrap replicates");
    std::uint64_t rf_seed = 0;
    refine->add_option("--seed", rf_seed, "RNG seed")->required();
    double rf_tau = 0.0;
    std::optional<std::string> rf_y;
    refine->add_option("--tau", rf_tau, "regression penalty (reg only)");
    refine->add_option("--y", rf_y, "observations file (reg only)");
    std::vector<std::int64_t> rf_grid;
    refine->add_option("--grid", rf_grid, "extra sample sizes N to print the extrapolated curve at");

    // ---- coverage ----
    auto* coverage = app.add_subcommand("coverage", "Monte Carlo coverage experiment from a config file");
    coverage->fallthrough();
    std::string cv_config;
    coverage->add_option("--config", cv_config, "flat key = value experiment config")->required();
    std::optional<std::string> cv_out;
    coverage->add_option("--out", cv_out, "write the CSV here (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;  // usage errors exit 1; --help exits 0
    }

    try {
        if (*sparsify) {
            const Graph g = load_graph(sp_graph);
            if (sp_n <= 0 && sp_fraction <= 0.0)
                throw CLI::ValidationError("one of --n-samples or --fraction is required");
            const std::int64_t n_draws =
                sp_n > 0 ? sp_n
                         : std::max<std::int64_t>(1, std::llround(sp_fraction * static_cast<double>(g.num_edges())));
            EdgeProbabilities probs;
            if (sp_scheme == "ew") probs = edge_weight_probs(g);
            else if (sp_scheme == "er") probs = effective_resistance_probs(g, sp_tol, threads);
            else probs = approx_effective_resistance_probs(g, sp_eps, sp_seed, sp_tol, threads);
            const SparsifiedSample sample = draw_sample(g, probs, n_draws, sp_seed);
            sample.save_file(sp_out);
            std::cout << "N " << sample.num_draws << "\n";
            std::cout << "unique_edges " << sample.unique_edges() << "\n";
            std::cout << "max_scale " << format_double(sample.max_scale()) << "\n";
            if (sp_scheme == "er" || sp_scheme == "aer") {
                double mn = 1.0, mx = 0.0;
                for (double p : probs.probs) {
                    mn = std::min(mn, p);
                    mx = std::max(mx, p);
                }
                std::cout << "prob_min " << format_double(mn) << "\nprob_max " << format_double(mx) << "\n";
            }
        } else if (*estimate) {
            const Graph g = load_graph(es_graph);
            const SparsifiedSample sample = SparsifiedSample::load_file(es_sample, g, threads);
            if (es_fn == "reg" && !es_y) throw CLI::ValidationError("--functional reg requires --y");
            const FunctionalSpec spec = build_spec(es_fn, g, es_tau, es_y);
            BootstrapConfig cfg;
            cfg.b_outer = es_bo;
            cfg.b_inner = es_bi;
            cfg.alpha = es_alpha;
            cfg.seed = es_seed;
            cfg.threads = threads;
            const QuantileEstimate est = algorithm1_quantile(sample, spec, cfg);
            write_report(est, std::cout);
            if (es_out) write_file_or_stdout(es_out, [&](std::ostream& out) { write_csv(est, out); });
        } else if (*cutci) {
            const Graph g = load_graph(cc_graph);
            const SparsifiedSample sample = SparsifiedSample::load_file(cc_sample, g, threads);
            const std::vector<CutVector> cuts = load_cuts_file(cc_cuts, g.num_vertices());
            if (cuts.empty()) throw CLI::ValidationError("cuts file contains no cuts");
            BootstrapConfig cfg;
            cfg.b_outer = cc_b;
            cfg.alpha = cc_alpha;
            cfg.seed = cc_seed;
            cfg.threads = threads;
            const CutCIResult res = algorithm2_cut_cis(sample, cuts, cfg);
            write_file_or_stdout(cc_out, [&](std::ostream& out) { write_csv(res, out); });
        } else if (*eigci) {
            if (ec_r < 2) throw CLI::ValidationError("--r must be >= 2");
            const Graph g = load_graph(ec_graph);
            const SparsifiedSample sample = SparsifiedSample::load_file(ec_sample, g, threads);
            BootstrapConfig cfg;
            cfg.b_outer = ec_b;
            cfg.alpha = ec_alpha;
            cfg.seed = ec_seed;
            cfg.threads = threads;
            const EigCIResult res = eigenvalue_cis(sample, ec_r, cfg, SolverConfig{});
            write_file_or_stdout(ec_out, [&](std::ostream& out) { write_csv(res, out); });
        } else if (*refine) {
            const Graph g = load_graph(rf_graph);
            const SparsifiedSample sample = SparsifiedSample::load_file(rf_sample, g, threads);
            if (rf_fn == "reg" && !rf_y) throw CLI::ValidationError("--functional reg requires --y");
            const FunctionalSpec spec = build_spec(rf_fn, g, rf_tau, rf_y);
            BootstrapConfig cfg;
            cfg.b_outer = rf_bo;
            cfg.b_inner = rf_bi;
            cfg.alpha = rf_alpha;
            cfg.seed = rf_seed;
            cfg.threads = threads;
            const QuantileEstimate est = algorithm1_quantile(sample, spec, cfg);
            const std::int64_t n0 = sample.num_draws;
            const std::int64_t n1 = forecast_sample_size(est.q_hat, n0, rf_threshold);
            std::cout << "q_hat_n0 " << format_double(est.q_hat) << "\n";
            std::cout << "n0 " << n0 << "\n";
            std::cout << "threshold " << format_double(rf_threshold) << "\n";
            std::cout << "n1 " << n1 << "\n";
            if (est.q_hat <= rf_threshold) std::cout << "no refinement needed\n";
            for (std::int64_t n : rf_grid) {
                if (n < n0) throw CLI::ValidationError("--grid entries must be >= the sample's N0");
                std::cout << "q_hat_at " << n << " " << format_double(extrapolate_quantile(est.q_hat, n0, n))
                          << "\n";
            }
        } else if (*coverage) {
            ExperimentConfig cfg = ExperimentConfig::from_file(cv_config);
            if (threads > 0) cfg.threads = threads;
            const CoverageReport report = run_coverage_experiment(cfg);
            write_file_or_stdout(cv_out, [&](std::ostream& out) { write_report_csv(report, out); });
            std::cerr << "wall_time_s " << report.wall_time_s << "\n";
            if (report.failed_trials > 0) std::cerr << "failed_trials " << report.failed_trials << "\n";
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
