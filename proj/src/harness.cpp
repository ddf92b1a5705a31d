#include "lapcert/harness.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "lapcert/parallel.hpp"
#include "lapcert/spectral.hpp"

namespace lapcert {

Graph make_complete(std::int64_t n) {
    std::vector<EdgeListRow> rows;
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = i + 1; j < n; ++j) rows.push_back({i, j, 1.0});
    return Graph::from_edges(n, std::move(rows));
}

Graph make_path(std::int64_t n) {
    std::vector<EdgeListRow> rows;
    for (std::int64_t i = 0; i + 1 < n; ++i) rows.push_back({i, i + 1, 1.0});
    return Graph::from_edges(n, std::move(rows));
}

Graph make_erdos_renyi(std::int64_t n, double p, std::uint64_t seed) {
    RngStream rng(stream_key(seed, "erdos-renyi"));
    std::vector<EdgeListRow> rows;
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = i + 1; j < n; ++j)
            if (rng.uniform01() < p) rows.push_back({i, j, 1.0});
    return Graph::from_edges(n, std::move(rows));
}

Graph make_random_tree(std::int64_t n, std::uint64_t seed) {
    RngStream rng(stream_key(seed, "random-tree"));
    std::vector<EdgeListRow> rows;
    for (std::int64_t i = 1; i < n; ++i) {
        const auto j = static_cast<std::int64_t>(rng.uniform01() * static_cast<double>(i));
        rows.push_back({std::min(j, i - 1), i, 1.0});
    }
    return Graph::from_edges(n, std::move(rows));
}

Eigen::MatrixXd make_mixture_points(int components, std::int64_t points_per_component, std::uint64_t seed) {
    if (components < 1 || components > 5)
        throw std::invalid_argument("make_mixture_points: components must be in [1,5]");
    // fixed mean layout in R^6 from the clustering experiments
    const double means[5][6] = {
        {0, 0, 0, 0, 0, 0}, {5, 5, 5, 0, 0, 0}, {0, 5, 5, 5, 0, 0}, {0, 0, 5, 5, 5, 0}, {0, 0, 0, 5, 5, 5},
    };
    const std::int64_t total = components * points_per_component;
    Eigen::MatrixXd pts(total, 6);
    RngStream rng(stream_key(seed, "mixture"));
    for (int c = 0; c < components; ++c)
        for (std::int64_t i = 0; i < points_per_component; ++i) {
            const std::int64_t row = c * points_per_component + i;
            for (int d = 0; d < 6; ++d) pts(row, d) = means[c][d] + rng.normal();
        }
    // rescale each feature to [0,1]
    for (int d = 0; d < 6; ++d) {
        const double lo = pts.col(d).minCoeff();
        const double hi = pts.col(d).maxCoeff();
        if (hi > lo) pts.col(d) = (pts.col(d).array() - lo) / (hi - lo);
    }
    return pts;
}

Graph make_gaussian_kernel_graph(const Eigen::MatrixXd& points, double bandwidth) {
    const std::int64_t n = points.rows();
    const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
    std::vector<EdgeListRow> rows;
    rows.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = i + 1; j < n; ++j) {
            const double d2 = (points.row(i) - points.row(j)).squaredNorm();
            rows.push_back({i, j, std::exp(-d2 * inv)});
        }
    return Graph::from_edges(n, std::move(rows));
}

Graph subsample_by_degree(const Graph& g, std::int64_t k, std::uint64_t seed) {
    const std::int64_t n = g.num_vertices();
    if (k < 1 || k > n) throw std::invalid_argument("subsample_by_degree: k out of range");
    Eigen::VectorXd weight = g.degree_vector();
    RngStream rng(stream_key(seed, "degree-subsample"));
    std::vector<std::int8_t> chosen(static_cast<std::size_t>(n), 0);
    double total = weight.sum();
    for (std::int64_t t = 0; t < k; ++t) {
        if (!(total > 0.0)) throw std::runtime_error("subsample_by_degree: degree mass exhausted");
        double u = rng.uniform01() * total;
        std::int64_t pick = -1;
        for (std::int64_t v = 0; v < n; ++v) {
            if (chosen[static_cast<std::size_t>(v)]) continue;
            u -= weight[v];
            if (u <= 0.0) {
                pick = v;
                break;
            }
        }
        if (pick < 0) {  // floating-point spill; take the last unchosen vertex
            for (std::int64_t v = n - 1; v >= 0; --v)
                if (!chosen[static_cast<std::size_t>(v)]) {
                    pick = v;
                    break;
                }
        }
        chosen[static_cast<std::size_t>(pick)] = 1;
        total -= weight[pick];
    }
    std::vector<std::int64_t> remap(static_cast<std::size_t>(n), -1);
    std::int64_t next = 0;
    for (std::int64_t v = 0; v < n; ++v)
        if (chosen[static_cast<std::size_t>(v)]) remap[static_cast<std::size_t>(v)] = next++;
    std::vector<EdgeListRow> rows;
    for (std::int64_t e = 0; e < g.num_edges(); ++e) {
        const auto i = remap[static_cast<std::size_t>(g.edge_u()[static_cast<std::size_t>(e)])];
        const auto j = remap[static_cast<std::size_t>(g.edge_v()[static_cast<std::size_t>(e)])];
        if (i >= 0 && j >= 0) rows.push_back({i, j, g.edge_w()[static_cast<std::size_t>(e)]});
    }
    return Graph::from_edges(k, std::move(rows), /*allow_empty=*/true);
}

std::vector<CutVector> random_bernoulli_cuts(std::int64_t n, std::int64_t count, std::uint64_t seed) {
    std::vector<CutVector> cuts(static_cast<std::size_t>(count));
    for (std::int64_t c = 0; c < count; ++c) {
        RngStream rng(stream_key(seed, "cut", static_cast<std::uint64_t>(c)));
        CutVector& cut = cuts[static_cast<std::size_t>(c)];
        cut.bits.resize(static_cast<std::size_t>(n));
        for (std::int64_t v = 0; v < n; ++v) cut.bits[static_cast<std::size_t>(v)] = rng.next_u64() & 1u;
    }
    return cuts;
}

// ---- config ------------------------------------------------------------------

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ParseError("config: bad boolean for key '" + key + "': " + v);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_stream(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            bool blank = true;
            for (char c : line)
                if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
            if (blank) continue;
            throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "graph") cfg.graph = val;
            else if (key == "n") cfg.n = std::stoll(val);
            else if (key == "p") cfg.er_p = std::stod(val);
            else if (key == "graph_seed") cfg.graph_seed = std::stoull(val);
            else if (key == "graph_file") cfg.graph_file = val;
            else if (key == "graph_format") cfg.graph_format = val;
            else if (key == "one_based") cfg.one_based = parse_bool(val, key);
            else if (key == "header") cfg.header = parse_bool(val, key);
            else if (key == "subsample") cfg.subsample = std::stoll(val);
            else if (key == "mixture_components") cfg.mixture_components = std::stoi(val);
            else if (key == "points_per_component") cfg.points_per_component = std::stoll(val);
            else if (key == "bandwidth") cfg.bandwidth = std::stod(val);
            else if (key == "scheme") cfg.scheme = val;
            else if (key == "eps") cfg.eps = std::stod(val);
            else if (key == "solver_tol") cfg.solver_tol = std::stod(val);
            else if (key == "n_samples") cfg.n_samples = std::stoll(val);
            else if (key == "fraction") cfg.fraction = std::stod(val);
            else if (key == "functionals") cfg.functionals = split_list(val);
            else if (key == "tau") cfg.tau = std::stod(val);
            else if (key == "cuts") cfg.cuts = std::stoll(val);
            else if (key == "eig_r") cfg.eig_r = std::stoi(val);
            else if (key == "levels") {
                cfg.levels.clear();
                for (const auto& tok : split_list(val)) cfg.levels.push_back(std::stod(tok));
            } else if (key == "trials") cfg.trials = std::stoll(val);
            else if (key == "b_outer") cfg.b_outer = std::stoi(val);
            else if (key == "b_inner") cfg.b_inner = std::stoi(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "threads") cfg.threads = std::stoi(val);
            else throw ParseError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw ParseError("config line " + std::to_string(line_no) + ": bad value for key '" + key + "'");
        } catch (const std::out_of_range&) {
            throw ParseError("config line " + std::to_string(line_no) + ": value out of range for key '" + key + "'");
        }
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    return from_stream(in);
}

// ---- coverage experiment -------------------------------------------------------

namespace {

Graph build_graph(const ExperimentConfig& cfg) {
    Graph g = [&] {
        if (cfg.graph == "er") return make_erdos_renyi(cfg.n, cfg.er_p, cfg.graph_seed);
        if (cfg.graph == "complete") return make_complete(cfg.n);
        if (cfg.graph == "path") return make_path(cfg.n);
        if (cfg.graph == "tree") return make_random_tree(cfg.n, cfg.graph_seed);
        if (cfg.graph == "mixture")
            return make_gaussian_kernel_graph(
                make_mixture_points(cfg.mixture_components, cfg.points_per_component, cfg.graph_seed),
                cfg.bandwidth);
        if (cfg.graph == "file") {
            LoadOptions opt;
            if (cfg.graph_format == "edges") opt.format = EdgeFileFormat::WhitespaceEdgeList;
            else if (cfg.graph_format == "csv") opt.format = EdgeFileFormat::Csv;
            else if (cfg.graph_format == "mtx") opt.format = EdgeFileFormat::MatrixMarketSymmetric;
            else throw ParseError("config: unknown graph_format '" + cfg.graph_format + "'");
            opt.one_based = cfg.one_based;
            opt.has_header = cfg.header;
            return Graph::load_edge_list_file(cfg.graph_file, opt);
        }
        throw ParseError("config: unknown graph kind '" + cfg.graph + "'");
    }();
    if (cfg.subsample > 0) g = subsample_by_degree(g, cfg.subsample, stream_key(cfg.seed, "subsample"));
    return g;
}

EdgeProbabilities build_probs(const ExperimentConfig& cfg, const Graph& g, int threads) {
    const SamplingScheme scheme = scheme_from_name(cfg.scheme);
    switch (scheme) {
        case SamplingScheme::EdgeWeight: return edge_weight_probs(g);
        case SamplingScheme::EffectiveResistance: return effective_resistance_probs(g, cfg.solver_tol, threads);
        case SamplingScheme::ApproxEffectiveResistance:
            return approx_effective_resistance_probs(g, cfg.eps, stream_key(cfg.seed, "aer-sketch"),
                                                     cfg.solver_tol, threads);
    }
    throw std::logic_error("build_probs: unreachable");
}

}  // namespace

CoverageReport run_coverage_experiment(const ExperimentConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    if (cfg.trials < 1) throw std::invalid_argument("coverage experiment: trials must be >= 1");
    for (double lv : cfg.levels)
        if (!(lv > 0.0 && lv < 1.0)) throw std::invalid_argument("coverage experiment: levels must be in (0,1)");

    const int threads = resolve_threads(cfg.threads);
    const Graph g = build_graph(cfg);
    const EdgeProbabilities probs = build_probs(cfg, g, threads);
    const std::int64_t n_draws = cfg.n_samples > 0
                                     ? cfg.n_samples
                                     : std::max<std::int64_t>(1, std::llround(cfg.fraction * static_cast<double>(g.num_edges())));

    // functional specs and per-graph ground-truth context
    std::vector<FunctionalSpec> specs;
    for (const auto& name : cfg.functionals) {
        const FunctionalKind kind = functional_from_name(name);
        if (kind == FunctionalKind::RegressionL2) {
            const RegressionData data = synth_regression_data(g, stream_key(cfg.seed, "regdata"));
            SolverConfig sc;
            specs.push_back(FunctionalSpec::regression_l2(data.y, cfg.tau, sc));
        } else if (kind == FunctionalKind::OperatorNorm) {
            specs.push_back(FunctionalSpec::operator_norm());
        } else if (kind == FunctionalKind::Frobenius) {
            specs.push_back(FunctionalSpec::frobenius());
        } else {
            specs.push_back(FunctionalSpec::frobenius_sq());
        }
    }

    std::vector<CutVector> cuts;
    std::vector<double> cut_truth;
    if (cfg.cuts > 0) {
        cuts = random_bernoulli_cuts(g.num_vertices(), cfg.cuts, stream_key(cfg.seed, "cutgen"));
        cut_truth.reserve(cuts.size());
        for (const auto& x : cuts) cut_truth.push_back(g.cut_value(x));
    }

    SolverConfig eig_solver;
    std::vector<double> eig_truth;
    if (cfg.eig_r > 0) {
        Eigen::VectorXd lam = bottom_eigenvalues(graph_operator(g), cfg.eig_r, eig_solver);
        lam[0] = 0.0;
        eig_truth.assign(lam.data(), lam.data() + cfg.eig_r);
    }

    const std::size_t n_levels = cfg.levels.size();
    const std::size_t n_tasks = specs.size() + (cfg.cuts > 0 ? 1 : 0) + (cfg.eig_r > 0 ? 1 : 0);
    // covered[task][level][trial]
    std::vector<std::uint8_t> covered(n_tasks * n_levels * static_cast<std::size_t>(cfg.trials), 0);
    std::vector<std::uint8_t> failed(static_cast<std::size_t>(cfg.trials), 0);
    std::vector<std::int32_t> gap_argmax(static_cast<std::size_t>(cfg.trials), -1);
    auto slot = [&](std::size_t task, std::size_t level, std::int64_t trial) {
        return (task * n_levels + level) * static_cast<std::size_t>(cfg.trials) + static_cast<std::size_t>(trial);
    };

    parallel_for(cfg.trials, threads, [&](std::int64_t trial) {
        const std::uint64_t trial_key = stream_key(cfg.seed, "trial", static_cast<std::uint64_t>(trial));
        try {
            const SparsifiedSample sample = draw_sample(g, probs, n_draws, stream_key(trial_key, "sample"));
            std::size_t task = 0;
            for (std::size_t f = 0; f < specs.size(); ++f, ++task) {
                BootstrapConfig bc;
                bc.b_outer = cfg.b_outer;
                bc.b_inner = cfg.b_inner;
                bc.seed = stream_key(trial_key, "fn", static_cast<std::uint64_t>(f));
                bc.threads = 1;
                const Algorithm1Replicates rep = algorithm1_replicates(sample, specs[f], bc);
                const double psi_true =
                    eval_functional(specs[f], LaplacianOperand::sampled(sample), LaplacianOperand::exact(g));
                for (std::size_t lv = 0; lv < n_levels; ++lv) {
                    const double q = empirical_quantile(rep.values, cfg.levels[lv]);
                    covered[slot(task, lv, trial)] = psi_true <= q ? 1 : 0;
                }
            }
            if (cfg.cuts > 0) {
                BootstrapConfig bc;
                bc.b_outer = cfg.b_outer;
                bc.b_inner = cfg.b_inner;
                bc.seed = stream_key(trial_key, "cuts");
                bc.threads = 1;
                const CutStatistics stats = cut_statistics(sample, cuts);
                const std::vector<double> xi = algorithm2_replicates(sample, stats, bc);
                for (std::size_t lv = 0; lv < n_levels; ++lv) {
                    const double q = empirical_quantile(xi, cfg.levels[lv]);
                    bool all = true;
                    for (std::size_t c = 0; c < cuts.size() && all; ++c) {
                        const double half = stats.sigma_hat[c] * q;
                        all = std::abs(cut_truth[c] - stats.c_hat[c]) <= half;
                    }
                    covered[slot(task, lv, trial)] = all ? 1 : 0;
                }
                ++task;
            }
            if (cfg.eig_r > 0) {
                BootstrapConfig bc;
                bc.b_outer = cfg.b_outer;
                bc.b_inner = cfg.b_inner;
                bc.seed = stream_key(trial_key, "eig");
                bc.threads = 1;
                const LinearOperator op = sample_operator(sample);
                Eigen::VectorXd lam = bottom_eigenvalues(op, cfg.eig_r, eig_solver);
                lam[0] = 0.0;
                std::vector<double> lam_vec(lam.data(), lam.data() + cfg.eig_r);
                const std::vector<double> xi = eigenvalue_replicates(sample, lam_vec, bc, eig_solver);
                for (std::size_t lv = 0; lv < n_levels; ++lv) {
                    const double q = empirical_quantile(xi, cfg.levels[lv]);
                    bool all = true;
                    for (int j = 0; j < cfg.eig_r && all; ++j) {
                        const auto [lo, hi] = j == 0 ? std::pair<double, double>{0.0, 0.0}
                                                     : eig_interval(lam_vec[static_cast<std::size_t>(j)], q);
                        all = eig_truth[static_cast<std::size_t>(j)] >= lo &&
                              eig_truth[static_cast<std::size_t>(j)] <= hi;
                    }
                    covered[slot(task, lv, trial)] = all ? 1 : 0;
                    // argmax of the gap between consecutive CI endpoints,
                    // recorded at the first level (j counts gaps I_j -> I_{j+1})
                    if (lv == 0) {
                        double best_gap = -std::numeric_limits<double>::infinity();
                        std::int32_t best_j = -1;
                        double prev_hi = 0.0;  // interval 1 is [0,0]
                        for (int j = 1; j < cfg.eig_r; ++j) {
                            const auto [lo, hi] = eig_interval(lam_vec[static_cast<std::size_t>(j)], q);
                            const double gap = lo - prev_hi;
                            if (gap > best_gap) {
                                best_gap = gap;
                                best_j = j;
                            }
                            prev_hi = hi;
                        }
                        gap_argmax[static_cast<std::size_t>(trial)] = best_j;
                    }
                }
                ++task;
            }
        } catch (const std::exception&) {
            failed[static_cast<std::size_t>(trial)] = 1;
        }
    });

    std::int64_t n_failed = 0;
    for (auto f : failed) n_failed += f;
    if (static_cast<double>(n_failed) > 0.01 * static_cast<double>(cfg.trials))
        throw std::runtime_error("coverage experiment: " + std::to_string(n_failed) + " of " +
                                 std::to_string(cfg.trials) + " trials failed");
    const std::int64_t ok_trials = cfg.trials - n_failed;

    CoverageReport report;
    report.failed_trials = n_failed;
    auto add_rows = [&](const std::string& name, std::size_t task) {
        for (std::size_t lv = 0; lv < n_levels; ++lv) {
            std::int64_t hits = 0;
            for (std::int64_t t = 0; t < cfg.trials; ++t)
                if (!failed[static_cast<std::size_t>(t)]) hits += covered[slot(task, lv, t)];
            CoverageRow row;
            row.task = name;
            row.level = cfg.levels[lv];
            row.coverage = ok_trials > 0 ? static_cast<double>(hits) / static_cast<double>(ok_trials) : 0.0;
            row.std_error = ok_trials > 0 ? std::sqrt(row.coverage * (1.0 - row.coverage) /
                                                      static_cast<double>(ok_trials))
                                          : 0.0;
            row.trials = ok_trials;
            report.rows.push_back(row);
        }
    };
    std::size_t task = 0;
    for (std::size_t f = 0; f < specs.size(); ++f, ++task) add_rows(specs[f].name(), task);
    if (cfg.cuts > 0) add_rows("cuts", task++);
    if (cfg.eig_r > 0) {
        add_rows("eigs", task++);
        report.eig_gap_hist.assign(static_cast<std::size_t>(cfg.eig_r), 0);
        for (std::int64_t t = 0; t < cfg.trials; ++t)
            if (!failed[static_cast<std::size_t>(t)] && gap_argmax[static_cast<std::size_t>(t)] >= 0)
                ++report.eig_gap_hist[static_cast<std::size_t>(gap_argmax[static_cast<std::size_t>(t)])];
    }
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

void write_report_csv(const CoverageReport& report, std::ostream& out) {
    out << "task,level,coverage,std_error,trials\n";
    for (const auto& row : report.rows)
        out << row.task << "," << format_double(row.level) << "," << format_double(row.coverage) << ","
            << format_double(row.std_error) << "," << row.trials << "\n";
}

// ---- analytic and enumeration oracles ---------------------------------------

double trace_l_squared(const Graph& g) {
    const Eigen::VectorXd d = g.degree_vector();
    double tr = d.squaredNorm();
    for (double w : g.edge_w()) tr += 2.0 * w * w;
    return tr;
}

FrobeniusMeanCheck frobenius_mean_check(const Graph& g, std::int64_t n_draws, std::int64_t trials,
                                        std::uint64_t seed, int threads) {
    if (std::abs(g.total_weight() - 1.0) > 1e-9)
        throw std::invalid_argument("frobenius_mean_check: graph must be weight-normalized (w(E) = 1)");
    const EdgeProbabilities probs = edge_weight_probs(g);
    const FunctionalSpec spec = FunctionalSpec::frobenius_sq();

    std::vector<double> vals(static_cast<std::size_t>(trials));
    parallel_for(trials, threads, [&](std::int64_t t) {
        const SparsifiedSample s = draw_sample(g, probs, n_draws, stream_key(seed, "trial", static_cast<std::uint64_t>(t)));
        FrobeniusAccumulator acc(g.num_vertices());
        vals[static_cast<std::size_t>(t)] =
            acc.diff_sq(LaplacianOperand::sampled(s), LaplacianOperand::exact(g));
    });

    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(trials);
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= static_cast<double>(std::max<std::int64_t>(trials - 1, 1));

    FrobeniusMeanCheck out;
    out.observed_mean = mean;
    out.analytic_mean = (4.0 - trace_l_squared(g)) / static_cast<double>(n_draws);
    const double se = std::sqrt(var / static_cast<double>(trials));
    out.z_score = se > 0.0 ? (mean - out.analytic_mean) / se
                           : (mean == out.analytic_mean ? 0.0 : std::numeric_limits<double>::infinity());
    return out;
}

double ExactDistribution::total_mass() const {
    return std::accumulate(probs.begin(), probs.end(), 0.0);
}

double ExactDistribution::cdf(double t) const {
    double cum = 0.0;
    for (std::size_t i = 0; i < values.size() && values[i] <= t; ++i) cum += probs[i];
    return cum;
}

double ExactDistribution::quantile(double level) const {
    double cum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        cum += probs[i];
        if (cum + 1e-12 >= level) return values[i];
    }
    return values.back();
}

double ExactDistribution::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * probs[i];
    return m;
}

double ExactDistribution::variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) v += (values[i] - m) * (values[i] - m) * probs[i];
    return v;
}

namespace {

void sort_distribution(ExactDistribution& dist) {
    std::vector<std::size_t> order(dist.values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return dist.values[a] < dist.values[b]; });
    ExactDistribution sorted;
    sorted.values.reserve(order.size());
    sorted.probs.reserve(order.size());
    for (std::size_t i : order) {
        if (!sorted.values.empty() && sorted.values.back() == dist.values[i]) {
            sorted.probs.back() += dist.probs[i];
        } else {
            sorted.values.push_back(dist.values[i]);
            sorted.probs.push_back(dist.probs[i]);
        }
    }
    dist = std::move(sorted);
}

std::int64_t composition_count(std::int64_t n, std::int64_t m) {
    // C(n + m - 1, m - 1)
    double c = 1.0;
    for (std::int64_t i = 1; i < m; ++i) c *= static_cast<double>(n + i) / static_cast<double>(i);
    return static_cast<std::int64_t>(std::llround(c));
}

// visits every nonnegative integer composition of n over m slots
void for_each_composition(std::int64_t n, std::size_t m,
                          const std::function<void(const std::vector<std::int64_t>&)>& visit) {
    std::vector<std::int64_t> comp(m, 0);
    std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t slot, std::int64_t left) {
        if (slot + 1 == m) {
            comp[slot] = left;
            visit(comp);
            return;
        }
        for (std::int64_t c = 0; c <= left; ++c) {
            comp[slot] = c;
            rec(slot + 1, left - c);
        }
    };
    if (m > 0) rec(0, n);
}

double log_factorial(std::int64_t n) {
    return std::lgamma(static_cast<double>(n) + 1.0);
}

double multinomial_pmf(const std::vector<std::int64_t>& counts, const std::vector<double>& p,
                       std::int64_t n) {
    double logp = log_factorial(n);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        if (p[i] <= 0.0) return 0.0;
        logp += static_cast<double>(counts[i]) * std::log(p[i]) - log_factorial(counts[i]);
    }
    return std::exp(logp);
}

}  // namespace

ExactDistribution brute_force_psi_distribution(const Graph& g, const EdgeProbabilities& p,
                                               std::int64_t n_draws, const FunctionalSpec& spec,
                                               std::int64_t max_outcomes) {
    const std::int64_t m = g.num_edges();
    if (composition_count(n_draws, m) > max_outcomes)
        throw std::invalid_argument("brute_force_psi_distribution: outcome space above cap");

    ExactDistribution dist;
    for_each_composition(n_draws, static_cast<std::size_t>(m), [&](const std::vector<std::int64_t>& comp) {
        const double prob = multinomial_pmf(comp, p.probs, n_draws);
        if (prob == 0.0) return;
        // materialize the sample this composition represents
        SparsifiedSample s;
        s.n = g.num_vertices();
        s.num_draws = n_draws;
        s.scheme = p.scheme;
        for (std::size_t e = 0; e < comp.size(); ++e) {
            if (comp[e] == 0) continue;
            s.edge_index.push_back(static_cast<std::int64_t>(e));
            s.u.push_back(g.edge_u()[e]);
            s.v.push_back(g.edge_v()[e]);
            s.counts.push_back(comp[e]);
            s.scale.push_back(g.edge_w()[e] / (static_cast<double>(n_draws) * p.probs[e]));
        }
        const double psi =
            eval_functional(spec, LaplacianOperand::sampled(s), LaplacianOperand::exact(g));
        dist.values.push_back(psi);
        dist.probs.push_back(prob);
    });
    sort_distribution(dist);
    return dist;
}

ExactDistribution brute_force_algorithm1_population(const SparsifiedSample& sample,
                                                    const FunctionalSpec& spec,
                                                    std::int64_t max_outcomes) {
    const std::int64_t n_draws = sample.num_draws;
    const std::size_t k = sample.counts.size();
    const std::int64_t outcomes = composition_count(n_draws, static_cast<std::int64_t>(k));
    if (outcomes * outcomes > max_outcomes * max_outcomes)
        throw std::invalid_argument("brute_force_algorithm1_population: outcome space above cap");

    const bool sqrt_wrap = spec.kind == FunctionalKind::Frobenius;
    FunctionalSpec inner_spec = spec;
    if (sqrt_wrap) inner_spec.kind = FunctionalKind::FrobeniusSq;

    std::vector<double> base_probs(k);
    for (std::size_t e = 0; e < k; ++e)
        base_probs[e] = static_cast<double>(sample.counts[e]) / static_cast<double>(n_draws);

    FrobeniusAccumulator acc(sample.n);
    auto psi = [&](const std::vector<std::int64_t>& wa, const std::vector<std::int64_t>& wb) {
        if (inner_spec.kind == FunctionalKind::FrobeniusSq)
            return acc.diff_sq_aligned(sample, wa, wb);
        return eval_functional(inner_spec, LaplacianOperand::sampled(sample, &wa),
                               LaplacianOperand::sampled(sample, &wb));
    };

    // outer pass: population mean and sd of eps* over W*
    struct OuterRow {
        std::vector<std::int64_t> w_star;
        double prob;
        double eps;
        double zeta;
    };
    std::vector<OuterRow> outer;
    for_each_composition(n_draws, k, [&](const std::vector<std::int64_t>& w_star) {
        const double prob = multinomial_pmf(w_star, base_probs, n_draws);
        if (prob == 0.0) return;
        OuterRow row;
        row.w_star = w_star;
        row.prob = prob;
        row.eps = psi(w_star, sample.counts);
        outer.push_back(std::move(row));
    });

    double mu = 0.0;
    for (const auto& row : outer) mu += row.prob * row.eps;
    double var = 0.0;
    for (const auto& row : outer) var += row.prob * (row.eps - mu) * (row.eps - mu);
    const double sigma = std::sqrt(var);

    // inner pass: exact conditional moments of eps** given each W*
    for (auto& row : outer) {
        std::vector<double> inner_probs(k);
        for (std::size_t e = 0; e < k; ++e)
            inner_probs[e] = static_cast<double>(row.w_star[e]) / static_cast<double>(n_draws);
        double mu_b = 0.0, second = 0.0;
        for_each_composition(n_draws, k, [&](const std::vector<std::int64_t>& w_ss) {
            const double prob = multinomial_pmf(w_ss, inner_probs, n_draws);
            if (prob == 0.0) return;
            const double e2 = psi(w_ss, row.w_star);
            mu_b += prob * e2;
            second += prob * e2 * e2;
        });
        const double var_b = std::max(0.0, second - mu_b * mu_b);
        const double sigma_b = std::sqrt(var_b);
        row.zeta = sigma_b == 0.0 ? 0.0 : (row.eps - mu_b) / sigma_b;
    }

    ExactDistribution dist;
    for (const auto& row : outer) {
        double v = mu + sigma * row.zeta;
        if (sqrt_wrap) v = std::sqrt(std::max(0.0, v));
        dist.values.push_back(v);
        dist.probs.push_back(row.prob);
    }
    sort_distribution(dist);
    return dist;
}

RegressionData synth_regression_data(const Graph& g, std::uint64_t seed) {
    const std::int64_t n = g.num_vertices();
    Eigen::MatrixXd lap;
    graph_operator(g).assemble(lap);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
    if (es.info() != Eigen::Success) throw std::runtime_error("synth_regression_data: eigensolver failed");

    const int k = static_cast<int>(std::min<std::int64_t>(20, n));
    Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd vec = es.eigenvectors().col(j);
        const double nrm = vec.norm();
        if (std::abs(nrm - 1.0) > 1e-8)
            throw std::runtime_error("synth_regression_data: eigenvector is not unit norm");
        // deterministic sign: largest-magnitude entry is positive
        Eigen::Index arg = 0;
        vec.cwiseAbs().maxCoeff(&arg);
        if (vec[arg] < 0.0) vec = -vec;
        beta0 += vec;
    }
    beta0 /= static_cast<double>(k);

    const double mean = beta0.mean();
    const double varsigma2 = (beta0.array() - mean).square().sum() / static_cast<double>(n);

    RegressionData data;
    data.beta0 = beta0;
    data.varsigma2 = varsigma2;
    data.y = beta0;
    if (varsigma2 > 0.0) {
        RngStream rng(stream_key(seed, "regression-y"));
        const double sd = std::sqrt(varsigma2);
        for (std::int64_t i = 0; i < n; ++i) data.y[i] += sd * rng.normal();
    }
    return data;
}

}  // namespace lapcert
