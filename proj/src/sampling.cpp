#include "lapcert/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lapcert/parallel.hpp"
#include "lapcert/rng.hpp"

namespace lapcert {

std::string scheme_name(SamplingScheme s) {
    switch (s) {
        case SamplingScheme::EdgeWeight: return "ew";
        case SamplingScheme::EffectiveResistance: return "er";
        case SamplingScheme::ApproxEffectiveResistance: return "aer";
    }
    return "ew";
}

SamplingScheme scheme_from_name(const std::string& name) {
    if (name == "ew") return SamplingScheme::EdgeWeight;
    if (name == "er") return SamplingScheme::EffectiveResistance;
    if (name == "aer") return SamplingScheme::ApproxEffectiveResistance;
    throw ParseError("unknown sampling scheme '" + name + "'");
}

EdgeProbabilities edge_weight_probs(const Graph& g) {
    if (g.num_edges() == 0) throw std::runtime_error("edge_weight_probs: graph has no edges");
    EdgeProbabilities p;
    p.scheme = SamplingScheme::EdgeWeight;
    p.probs.resize(static_cast<std::size_t>(g.num_edges()));
    const double total = g.total_weight();
    for (std::size_t e = 0; e < p.probs.size(); ++e) p.probs[e] = g.edge_w()[e] / total;
    return p;
}

namespace {

std::vector<double> normalized(std::vector<double> masses) {
    const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
    if (!(total > 0.0)) throw std::runtime_error("sampling probabilities have zero total mass");
    for (double& m : masses) m /= total;
    return masses;
}

}  // namespace

std::vector<double> leverage_masses(const Graph& g, double tol, int threads) {
    if (g.num_edges() == 0) throw std::runtime_error("leverage_masses: graph has no edges");
    if (!(tol > 0.0)) throw std::invalid_argument("leverage_masses: tol must be positive");
    const std::int64_t n = g.num_vertices();
    const std::int64_t m = g.num_edges();
    const LinearOperator lap = graph_operator(g);
    const auto nullspace = component_nullspace(g);
    SolverConfig cfg;
    cfg.tol = tol;
    cfg.jacobi = true;

    std::vector<double> masses(static_cast<std::size_t>(m));
    if (m <= n) {
        // per-edge solves: R_eff(e) = delta_e' pinv(L) delta_e
        parallel_for(m, threads, [&](std::int64_t e) {
            Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
            b[g.edge_u()[static_cast<std::size_t>(e)]] = 1.0;
            b[g.edge_v()[static_cast<std::size_t>(e)]] = -1.0;
            const Eigen::VectorXd z = cg_solve_deflated(lap, b, nullspace, cfg);
            masses[static_cast<std::size_t>(e)] = g.edge_w()[static_cast<std::size_t>(e)] * b.dot(z);
        });
    } else {
        // pseudoinverse columns: R_eff(i,j) = P_ii + P_jj - 2 P_ij
        Eigen::MatrixXd cols(n, n);
        parallel_for(n, threads, [&](std::int64_t i) {
            Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
            b[i] = 1.0;
            cols.col(i) = cg_solve_deflated(lap, b, nullspace, cfg);
        });
        parallel_for(m, threads, [&](std::int64_t e) {
            const auto i = g.edge_u()[static_cast<std::size_t>(e)];
            const auto j = g.edge_v()[static_cast<std::size_t>(e)];
            const double reff = cols(i, i) + cols(j, j) - cols(i, j) - cols(j, i);
            masses[static_cast<std::size_t>(e)] = g.edge_w()[static_cast<std::size_t>(e)] * reff;
        });
    }
    return masses;
}

EdgeProbabilities effective_resistance_probs(const Graph& g, double tol, int threads) {
    EdgeProbabilities p;
    p.scheme = SamplingScheme::EffectiveResistance;
    p.tol = tol;
    p.probs = normalized(leverage_masses(g, tol, threads));
    return p;
}

EdgeProbabilities approx_effective_resistance_probs(const Graph& g, double eps, std::uint64_t seed,
                                                    double tol, int threads) {
    if (!(eps > 0.0) || eps > 1.0) throw std::invalid_argument("approx_effective_resistance_probs: need 0 < eps <= 1");
    if (g.num_edges() == 0) throw std::runtime_error("approx_effective_resistance_probs: graph has no edges");
    const std::int64_t n = g.num_vertices();
    const std::int64_t m = g.num_edges();
    const int k = static_cast<int>(std::ceil(24.0 * std::log(static_cast<double>(std::max<std::int64_t>(n, 2))) /
                                             (eps * eps)));
    const LinearOperator lap = graph_operator(g);
    const auto nullspace = component_nullspace(g);
    SolverConfig cfg;
    cfg.tol = tol;
    cfg.jacobi = true;

    // Row r of the sketch solves L z = B' rho_r where rho_r has entries
    // +-sqrt(w(e))/sqrt(k) over edges; the approximate resistance of e is
    // the squared sketch length sum_r (z_r,i - z_r,j)^2.
    std::vector<double> masses(static_cast<std::size_t>(m), 0.0);
    std::vector<Eigen::VectorXd> rows(static_cast<std::size_t>(k));
    const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k));
    parallel_for(k, threads, [&](std::int64_t row) {
        RngStream rng(stream_key(seed, "aer-row", static_cast<std::uint64_t>(row)));
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        for (std::int64_t e = 0; e < m; ++e) {
            const double sign = (rng.next_u64() & 1u) ? 1.0 : -1.0;
            const double val = sign * inv_sqrt_k * std::sqrt(g.edge_w()[static_cast<std::size_t>(e)]);
            b[g.edge_u()[static_cast<std::size_t>(e)]] += val;
            b[g.edge_v()[static_cast<std::size_t>(e)]] -= val;
        }
        rows[static_cast<std::size_t>(row)] = cg_solve_deflated(lap, b, nullspace, cfg);
    });
    for (const auto& z : rows) {
        for (std::int64_t e = 0; e < m; ++e) {
            const double d = z[g.edge_u()[static_cast<std::size_t>(e)]] - z[g.edge_v()[static_cast<std::size_t>(e)]];
            masses[static_cast<std::size_t>(e)] += d * d;
        }
    }
    for (std::int64_t e = 0; e < m; ++e) masses[static_cast<std::size_t>(e)] *= g.edge_w()[static_cast<std::size_t>(e)];

    EdgeProbabilities p;
    p.scheme = SamplingScheme::ApproxEffectiveResistance;
    p.eps = eps;
    p.sketch_seed = seed;
    p.tol = tol;
    p.probs = normalized(std::move(masses));
    return p;
}

double SparsifiedSample::max_scale() const {
    double mx = 0.0;
    for (double s : scale) mx = std::max(mx, s);
    return mx;
}

void SparsifiedSample::matvec(const Eigen::VectorXd& x, Eigen::VectorXd& out,
                              const std::vector<std::int64_t>* reweight) const {
    if (x.size() != n) throw std::invalid_argument("sparsified matvec: length mismatch");
    if (reweight) {
        if (static_cast<std::int64_t>(reweight->size()) != unique_edges())
            throw std::invalid_argument("sparsified matvec: reweight index mismatch");
        const std::int64_t total = std::accumulate(reweight->begin(), reweight->end(), std::int64_t{0});
        if (total != num_draws) throw std::invalid_argument("sparsified matvec: reweight does not sum to N");
    }
    out.setZero(n);
    for (std::size_t e = 0; e < counts.size(); ++e) {
        const double r = reweight ? static_cast<double>((*reweight)[e]) : static_cast<double>(counts[e]);
        if (r == 0.0) continue;
        const double coef = r * scale[e];
        const double d = coef * (x[u[e]] - x[v[e]]);
        out[u[e]] += d;
        out[v[e]] -= d;
    }
}

Eigen::VectorXd sparsified_matvec(const SparsifiedSample& s, const Eigen::VectorXd& x,
                                  const std::vector<std::int64_t>* reweight) {
    Eigen::VectorXd out;
    s.matvec(x, out, reweight);
    return out;
}

SparsifiedSample draw_sample(const Graph& g, const EdgeProbabilities& p, std::int64_t n_draws,
                             std::uint64_t seed) {
    if (n_draws < 1) throw std::invalid_argument("draw_sample: N must be >= 1");
    if (static_cast<std::int64_t>(p.probs.size()) != g.num_edges())
        throw std::invalid_argument("draw_sample: probabilities not aligned with graph");

    RngStream rng(stream_key(seed, "draw"));
    const std::vector<std::int64_t> all_counts = multinomial_counts(n_draws, p.probs, rng);

    SparsifiedSample s;
    s.n = g.num_vertices();
    s.num_draws = n_draws;
    s.seed = seed;
    s.scheme = p.scheme;
    s.eps = p.eps;
    s.sketch_seed = p.sketch_seed;
    s.tol = p.tol;
    for (std::size_t e = 0; e < all_counts.size(); ++e) {
        if (all_counts[e] == 0) continue;
        s.edge_index.push_back(static_cast<std::int64_t>(e));
        s.u.push_back(g.edge_u()[e]);
        s.v.push_back(g.edge_v()[e]);
        s.counts.push_back(all_counts[e]);
        s.scale.push_back(g.edge_w()[e] / (static_cast<double>(n_draws) * p.probs[e]));
    }
    return s;
}

namespace {

void write_double(std::ostream& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

}  // namespace

void SparsifiedSample::save(std::ostream& out) const {
    out << "lapcert-sample v1\n";
    out << "n " << n << "\n";
    out << "N " << num_draws << "\n";
    out << "seed " << seed << "\n";
    out << "scheme " << scheme_name(scheme) << "\n";
    if (scheme != SamplingScheme::EdgeWeight) {
        out << "tol ";
        write_double(out, tol);
        out << "\n";
    }
    if (scheme == SamplingScheme::ApproxEffectiveResistance) {
        out << "eps ";
        write_double(out, eps);
        out << "\nsketch_seed " << sketch_seed << "\n";
    }
    out << "unique " << unique_edges() << "\n";
    for (std::size_t e = 0; e < counts.size(); ++e) out << edge_index[e] << " " << counts[e] << "\n";
}

void SparsifiedSample::save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write sample file: " + path);
    save(out);
}

SparsifiedSample SparsifiedSample::load(std::istream& in, const Graph& g, int threads) {
    std::string line;
    if (!std::getline(in, line) || line != "lapcert-sample v1")
        throw ParseError("not a lapcert sample file");
    SparsifiedSample s;
    std::int64_t unique = -1;
    std::string scheme_str = "ew";
    while (unique < 0 && std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "n") ls >> s.n;
        else if (key == "N") ls >> s.num_draws;
        else if (key == "seed") ls >> s.seed;
        else if (key == "scheme") ls >> scheme_str;
        else if (key == "tol") ls >> s.tol;
        else if (key == "eps") ls >> s.eps;
        else if (key == "sketch_seed") ls >> s.sketch_seed;
        else if (key == "unique") ls >> unique;
        else throw ParseError("sample file: unknown header key '" + key + "'");
        if (ls.fail()) throw ParseError("sample file: bad value for key '" + key + "'");
    }
    if (unique < 0) throw ParseError("sample file: missing 'unique' count");
    if (s.n != g.num_vertices()) throw ParseError("sample file does not match graph (vertex count)");
    s.scheme = scheme_from_name(scheme_str);

    // Re-derive the sampling distribution exactly as recorded.
    EdgeProbabilities p;
    switch (s.scheme) {
        case SamplingScheme::EdgeWeight: p = edge_weight_probs(g); break;
        case SamplingScheme::EffectiveResistance:
            p = effective_resistance_probs(g, s.tol > 0 ? s.tol : 1e-8, threads);
            break;
        case SamplingScheme::ApproxEffectiveResistance:
            p = approx_effective_resistance_probs(g, s.eps, s.sketch_seed, s.tol > 0 ? s.tol : 1e-8, threads);
            break;
    }

    std::int64_t total = 0;
    for (std::int64_t k = 0; k < unique; ++k) {
        std::int64_t e = -1, c = 0;
        if (!(in >> e >> c)) throw ParseError("sample file: truncated pair list");
        if (e < 0 || e >= g.num_edges()) throw ParseError("sample file: edge index out of range");
        if (c < 1) throw ParseError("sample file: count must be >= 1");
        s.edge_index.push_back(e);
        s.u.push_back(g.edge_u()[static_cast<std::size_t>(e)]);
        s.v.push_back(g.edge_v()[static_cast<std::size_t>(e)]);
        s.counts.push_back(c);
        s.scale.push_back(g.edge_w()[static_cast<std::size_t>(e)] /
                          (static_cast<double>(s.num_draws) * p.probs[static_cast<std::size_t>(e)]));
        total += c;
    }
    if (total != s.num_draws) throw ParseError("sample file: counts do not sum to N");
    return s;
}

SparsifiedSample SparsifiedSample::load_file(const std::string& path, const Graph& g, int threads) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open sample file: " + path);
    return load(in, g, threads);
}

struct EdgeListFileSource::Impl {
    std::ifstream in;
    LoadOptions opt;
    std::size_t block_rows;
    std::int64_t line_no = 0;
    bool header_pending = false;
};

EdgeListFileSource::EdgeListFileSource(const std::string& path, const LoadOptions& opt, std::size_t block_rows)
    : impl_(new Impl{std::ifstream(path), opt, std::max<std::size_t>(block_rows, 1), 0, opt.has_header}) {
    if (!impl_->in) {
        delete impl_;
        throw ParseError("cannot open graph file: " + path);
    }
    if (opt.format == EdgeFileFormat::MatrixMarketSymmetric)
        throw std::runtime_error("streaming source supports edge-list formats only");
}

EdgeListFileSource::~EdgeListFileSource() { delete impl_; }

std::size_t EdgeListFileSource::next_block(std::vector<EdgeListRow>& out) {
    out.clear();
    std::string line;
    const bool csv = impl_->opt.format == EdgeFileFormat::Csv;
    const std::int64_t base = impl_->opt.one_based ? 1 : 0;
    while (out.size() < impl_->block_rows && std::getline(impl_->in, line)) {
        ++impl_->line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        bool blank = true;
        for (char c : line) {
            if (!std::isspace(static_cast<unsigned char>(c))) {
                blank = c == '#' || c == '%';
                break;
            }
        }
        if (blank) continue;
        if (impl_->header_pending) {
            impl_->header_pending = false;
            continue;
        }
        std::istringstream ls(line);
        EdgeListRow row;
        char comma;
        if (csv) {
            if (!(ls >> row.i >> comma >> row.j))
                throw ParseError("edge list parse error at line " + std::to_string(impl_->line_no));
            if (!(ls >> comma >> row.w)) row.w = 1.0;
        } else {
            if (!(ls >> row.i >> row.j))
                throw ParseError("edge list parse error at line " + std::to_string(impl_->line_no));
            if (!(ls >> row.w)) row.w = 1.0;
        }
        row.i -= base;
        row.j -= base;
        out.push_back(row);
    }
    return out.size();
}

SparsifiedSample poisson_stream_sample(EdgeBlockSource& source, std::int64_t n, std::int64_t num_edges,
                                       std::int64_t n_target, std::uint64_t seed) {
    if (n_target < 1) throw std::invalid_argument("poisson_stream_sample: N_target must be >= 1");
    if (num_edges < 1) throw std::invalid_argument("poisson_stream_sample: |E| must be >= 1");
    const double rate = static_cast<double>(n_target) / static_cast<double>(num_edges);

    SparsifiedSample s;
    s.n = n;
    s.seed = seed;
    s.scheme = SamplingScheme::EdgeWeight;

    std::vector<EdgeListRow> block;
    std::int64_t ordinal = 0;
    double ref_weight = 0.0;
    bool have_ref = false;
    std::int64_t realized = 0;

    while (source.next_block(block) > 0) {
        for (const EdgeListRow& row : block) {
            if (!have_ref) {
                ref_weight = row.w;
                have_ref = true;
            } else if (row.w != ref_weight) {
                throw std::runtime_error(
                    "poisson_stream_sample: unequal edge weight at edge ordinal " + std::to_string(ordinal) +
                    " (" + std::to_string(row.w) + " vs " + std::to_string(ref_weight) +
                    "); the Poisson approximation requires equal weights");
            }
            // counts are keyed by ordinal, so the block partition is immaterial
            RngStream rng(stream_key(seed, "poisson", static_cast<std::uint64_t>(ordinal)));
            const std::int64_t c = rng.poisson(rate);
            if (c > 0) {
                s.edge_index.push_back(ordinal);
                s.u.push_back(static_cast<std::int32_t>(row.i));
                s.v.push_back(static_cast<std::int32_t>(row.j));
                s.counts.push_back(c);
                s.scale.push_back(0.0);  // filled once the realized total is known
                realized += c;
            }
            ++ordinal;
        }
    }
    if (ordinal != num_edges)
        throw std::runtime_error("poisson_stream_sample: stream produced " + std::to_string(ordinal) +
                                 " edges, expected " + std::to_string(num_edges));
    if (realized == 0)
        throw std::runtime_error("poisson_stream_sample: realized sample is empty; retry with a new seed");

    // Unbiased conditional on the realized total: p(e) = 1/|E| under equal
    // weights, so s_e = w |E| / N_realized.
    s.num_draws = realized;
    const double sc = ref_weight * static_cast<double>(num_edges) / static_cast<double>(realized);
    for (double& v : s.scale) v = sc;
    return s;
}

LinearOperator sample_operator(const SparsifiedSample& s, const std::vector<std::int64_t>* reweight) {
    if (reweight) {
        if (static_cast<std::int64_t>(reweight->size()) != s.unique_edges())
            throw std::invalid_argument("sample_operator: reweight index mismatch");
        const std::int64_t total = std::accumulate(reweight->begin(), reweight->end(), std::int64_t{0});
        if (total != s.num_draws) throw std::invalid_argument("sample_operator: reweight does not sum to N");
    }
    LinearOperator op;
    op.dim = s.n;
    op.laplacian_like = true;
    op.apply = [&s, reweight](const Eigen::VectorXd& x, Eigen::VectorXd& out) { s.matvec(x, out, reweight); };
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(s.n);
    for (std::size_t e = 0; e < s.counts.size(); ++e) {
        const double r = reweight ? static_cast<double>((*reweight)[e]) : static_cast<double>(s.counts[e]);
        const double coef = r * s.scale[e];
        diag[s.u[e]] += coef;
        diag[s.v[e]] += coef;
    }
    op.diag = diag;
    op.assemble = [&s, reweight](Eigen::MatrixXd& m) {
        m.setZero(s.n, s.n);
        for (std::size_t e = 0; e < s.counts.size(); ++e) {
            const double r = reweight ? static_cast<double>((*reweight)[e]) : static_cast<double>(s.counts[e]);
            if (r == 0.0) continue;
            const double coef = r * s.scale[e];
            m(s.u[e], s.u[e]) += coef;
            m(s.v[e], s.v[e]) += coef;
            m(s.u[e], s.v[e]) -= coef;
            m(s.v[e], s.u[e]) -= coef;
        }
    };
    return op;
}

}  // namespace lapcert
