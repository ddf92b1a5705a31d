#include "lapcert/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <ostream>

#include "lapcert/parallel.hpp"

namespace lapcert {

double empirical_quantile(std::span<const double> values, double level) {
    if (values.empty()) throw std::invalid_argument("empirical_quantile: empty input");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("empirical_quantile: level must be in (0,1)");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto b = static_cast<double>(sorted.size());
    for (std::size_t k = 1; k <= sorted.size(); ++k) {
        if (static_cast<double>(k) / b >= level) return sorted[k - 1];
    }
    return sorted.back();
}

std::vector<std::int64_t> multinomial_weights(std::span<const std::int64_t> base, RngStream& rng) {
    const std::int64_t total = std::accumulate(base.begin(), base.end(), std::int64_t{0});
    return multinomial_counts(total, base, rng);
}

namespace {

// psi between two reweightings of one sample; prepare() returns per-weighting
// state reused across pairings (the fitted coefficients for regression).
class PsiKernel {
public:
    virtual ~PsiKernel() = default;
    virtual Eigen::VectorXd prepare(const std::vector<std::int64_t>&) { return {}; }
    virtual double psi(const std::vector<std::int64_t>& wa, const Eigen::VectorXd& pa,
                       const std::vector<std::int64_t>& wb, const Eigen::VectorXd& pb) = 0;
};

class FroSqKernel final : public PsiKernel {
public:
    explicit FroSqKernel(const SparsifiedSample& s) : sample_(s), acc_(s.n) {}
    double psi(const std::vector<std::int64_t>& wa, const Eigen::VectorXd&,
               const std::vector<std::int64_t>& wb, const Eigen::VectorXd&) override {
        return acc_.diff_sq_aligned(sample_, wa, wb);
    }

private:
    const SparsifiedSample& sample_;
    FrobeniusAccumulator acc_;
};

class OpNormKernel final : public PsiKernel {
public:
    OpNormKernel(const SparsifiedSample& s, const SolverConfig& cfg)
        : sample_(s), cfg_(cfg), coef_(s.counts.size()) {}

    double psi(const std::vector<std::int64_t>& wa, const Eigen::VectorXd&,
               const std::vector<std::int64_t>& wb, const Eigen::VectorXd&) override {
        const auto k = sample_.counts.size();
        for (std::size_t e = 0; e < k; ++e)
            coef_[e] = static_cast<double>(wa[e] - wb[e]) * sample_.scale[e];
        LinearOperator diff;
        diff.dim = sample_.n;
        diff.apply = [this](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
            out.setZero(sample_.n);
            for (std::size_t e = 0; e < coef_.size(); ++e) {
                if (coef_[e] == 0.0) continue;
                const double d = coef_[e] * (x[sample_.u[e]] - x[sample_.v[e]]);
                out[sample_.u[e]] += d;
                out[sample_.v[e]] -= d;
            }
        };
        return operator_norm(diff, cfg_);
    }

private:
    const SparsifiedSample& sample_;
    SolverConfig cfg_;
    std::vector<double> coef_;
};

class RegressionKernel final : public PsiKernel {
public:
    RegressionKernel(const SparsifiedSample& s, const FunctionalSpec& spec) : sample_(s), spec_(spec) {
        if (spec_.y.size() != s.n)
            throw std::invalid_argument("regression payload dimension mismatch");
    }

    Eigen::VectorXd prepare(const std::vector<std::int64_t>& w) override {
        if (spec_.tau == 0.0) return spec_.y;
        return regression_fit(sample_operator(sample_, &w), spec_.y, spec_.tau, spec_.solver);
    }

    double psi(const std::vector<std::int64_t>&, const Eigen::VectorXd& pa,
               const std::vector<std::int64_t>&, const Eigen::VectorXd& pb) override {
        return (pa - pb).norm();
    }

private:
    const SparsifiedSample& sample_;
    const FunctionalSpec& spec_;
};

std::unique_ptr<PsiKernel> make_kernel(const SparsifiedSample& s, const FunctionalSpec& spec) {
    switch (spec.kind) {
        case FunctionalKind::FrobeniusSq:
        case FunctionalKind::Frobenius:
            return std::make_unique<FroSqKernel>(s);
        case FunctionalKind::OperatorNorm:
            return std::make_unique<OpNormKernel>(s, spec.solver);
        case FunctionalKind::RegressionL2:
            return std::make_unique<RegressionKernel>(s, spec);
    }
    throw std::logic_error("make_kernel: unreachable");
}

}  // namespace

Algorithm1Replicates algorithm1_replicates(const SparsifiedSample& sample, const FunctionalSpec& spec,
                                           const BootstrapConfig& cfg) {
    if (cfg.b_outer < 2 || cfg.b_inner < 2)
        throw std::invalid_argument("algorithm1: B_outer and B_inner must be >= 2");
    const int b_outer = cfg.b_outer;
    const int b_inner = cfg.b_inner;
    const std::vector<std::int64_t>& counts = sample.counts;

    // The Frobenius pipeline is the squared pipeline plus a final square
    // root, which makes q_hat(fro) = sqrt(q_hat(fro2)) an exact identity.
    const bool sqrt_wrap = spec.kind == FunctionalKind::Frobenius;

    // base preparation shared by every outer replicate
    std::unique_ptr<PsiKernel> base_kernel = make_kernel(sample, spec);
    const Eigen::VectorXd base_prep = base_kernel->prepare(counts);

    std::vector<double> eps_star(static_cast<std::size_t>(b_outer));
    std::vector<double> zeta(static_cast<std::size_t>(b_outer));

    parallel_for(b_outer, cfg.threads, [&](std::int64_t b) {
        const std::uint64_t outer_key = stream_key(cfg.seed, "outer", static_cast<std::uint64_t>(b));
        RngStream outer_rng(outer_key);
        const std::vector<std::int64_t> w_star = multinomial_weights(counts, outer_rng);

        std::unique_ptr<PsiKernel> kernel = make_kernel(sample, spec);
        const Eigen::VectorXd star_prep = kernel->prepare(w_star);
        const double eps = kernel->psi(w_star, star_prep, counts, base_prep);

        double sum = 0.0, sum_sq = 0.0;
        for (int bp = 0; bp < b_inner; ++bp) {
            RngStream inner_rng(stream_key(outer_key, "inner", static_cast<std::uint64_t>(bp)));
            const std::vector<std::int64_t> w_ss = multinomial_weights(w_star, inner_rng);
            const Eigen::VectorXd ss_prep = kernel->prepare(w_ss);
            const double e2 = kernel->psi(w_ss, ss_prep, w_star, star_prep);
            sum += e2;
            sum_sq += e2 * e2;
        }
        const double mu_b = sum / b_inner;
        const double var_b = std::max(0.0, sum_sq / b_inner - mu_b * mu_b);
        const double sigma_b = std::sqrt(var_b);
        eps_star[static_cast<std::size_t>(b)] = eps;
        zeta[static_cast<std::size_t>(b)] = sigma_b == 0.0 ? 0.0 : (eps - mu_b) / sigma_b;
    });

    double mu = 0.0;
    for (double e : eps_star) mu += e;
    mu /= b_outer;
    double var = 0.0;
    for (double e : eps_star) var += (e - mu) * (e - mu);
    var /= b_outer;  // Algorithm 1 uses the divide-by-B variance
    const double sigma = std::sqrt(var);

    Algorithm1Replicates rep;
    rep.values.resize(static_cast<std::size_t>(b_outer));
    for (int b = 0; b < b_outer; ++b)
        rep.values[static_cast<std::size_t>(b)] = mu + sigma * zeta[static_cast<std::size_t>(b)];
    rep.mu_hat = mu;
    rep.sigma_hat = sigma;
    if (sqrt_wrap) {
        for (double& v : rep.values) v = std::sqrt(std::max(0.0, v));
        rep.mu_hat = std::sqrt(std::max(0.0, mu));
        rep.sigma_hat = std::sqrt(sigma);
    }
    return rep;
}

QuantileEstimate algorithm1_quantile(const SparsifiedSample& sample, const FunctionalSpec& spec,
                                     const BootstrapConfig& cfg) {
    const Algorithm1Replicates rep = algorithm1_replicates(sample, spec, cfg);
    QuantileEstimate est;
    est.q_hat = empirical_quantile(rep.values, 1.0 - cfg.alpha);
    est.mu_hat = rep.mu_hat;
    est.sigma_hat = rep.sigma_hat;
    est.alpha = cfg.alpha;
    est.b_outer = cfg.b_outer;
    est.b_inner = cfg.b_inner;
    est.seed = cfg.seed;
    est.functional = spec.name();
    return est;
}

CutStatistics cut_statistics(const SparsifiedSample& sample, const std::vector<CutVector>& cuts) {
    if (cuts.empty()) throw std::invalid_argument("cut_statistics: no cuts");
    const auto k = sample.counts.size();
    const double n_draws = static_cast<double>(sample.num_draws);

    CutStatistics st;
    st.c_hat.resize(cuts.size());
    st.sigma_hat.resize(cuts.size());
    st.offsets.assign(cuts.size() + 1, 0);

    for (std::size_t c = 0; c < cuts.size(); ++c) {
        const CutVector& x = cuts[c];
        if (x.size() != sample.n)
            throw std::invalid_argument("cut_statistics: cut " + std::to_string(c) + " has length " +
                                        std::to_string(x.size()) + ", expected " + std::to_string(sample.n));
        double mean = 0.0;
        std::int64_t crossing_draws = 0;
        for (std::size_t e = 0; e < k; ++e) {
            if (x.bits[static_cast<std::size_t>(sample.u[e])] == x.bits[static_cast<std::size_t>(sample.v[e])])
                continue;
            st.crossing.push_back(static_cast<std::int32_t>(e));
            mean += static_cast<double>(sample.counts[e]) * sample.scale[e];
            crossing_draws += sample.counts[e];
        }
        st.offsets[c + 1] = static_cast<std::int64_t>(st.crossing.size());
        st.c_hat[c] = mean;

        // population variance over the N draws: crossing draws contribute
        // (v_e - mean)^2, the rest contribute mean^2, with v_e = N s_e
        double ss = static_cast<double>(sample.num_draws - crossing_draws) * mean * mean;
        for (std::int64_t t = st.offsets[c]; t < st.offsets[c + 1]; ++t) {
            const auto e = static_cast<std::size_t>(st.crossing[static_cast<std::size_t>(t)]);
            const double v_e = n_draws * sample.scale[e];
            ss += static_cast<double>(sample.counts[e]) * (v_e - mean) * (v_e - mean);
        }
        st.sigma_hat[c] = std::sqrt(std::max(0.0, ss / n_draws));
    }
    return st;
}

std::vector<double> algorithm2_replicates(const SparsifiedSample& sample, const CutStatistics& stats,
                                          const BootstrapConfig& cfg) {
    if (cfg.b_outer < 1) throw std::invalid_argument("algorithm2: B must be >= 1");
    const std::size_t n_cuts = stats.c_hat.size();
    std::vector<double> xi(static_cast<std::size_t>(cfg.b_outer));

    parallel_for(cfg.b_outer, cfg.threads, [&](std::int64_t b) {
        RngStream rng(stream_key(cfg.seed, "outer", static_cast<std::uint64_t>(b)));
        const std::vector<std::int64_t> w_star = multinomial_weights(sample.counts, rng);
        // d_e = (W*_e - c_e) s_e accumulates the centered bootstrap sum
        std::vector<double> d(sample.counts.size());
        for (std::size_t e = 0; e < d.size(); ++e)
            d[e] = static_cast<double>(w_star[e] - sample.counts[e]) * sample.scale[e];
        double mx = 0.0;
        for (std::size_t c = 0; c < n_cuts; ++c) {
            if (stats.sigma_hat[c] == 0.0) continue;  // ratio treated as 0
            double t = 0.0;
            for (std::int64_t k = stats.offsets[c]; k < stats.offsets[c + 1]; ++k)
                t += d[static_cast<std::size_t>(stats.crossing[static_cast<std::size_t>(k)])];
            mx = std::max(mx, std::abs(t) / stats.sigma_hat[c]);
        }
        xi[static_cast<std::size_t>(b)] = mx;
    });
    return xi;
}

CutCIResult algorithm2_cut_cis(const SparsifiedSample& sample, const std::vector<CutVector>& cuts,
                               const BootstrapConfig& cfg) {
    const CutStatistics stats = cut_statistics(sample, cuts);
    const std::vector<double> xi = algorithm2_replicates(sample, stats, cfg);

    CutCIResult res;
    res.q_hat = empirical_quantile(xi, 1.0 - cfg.alpha);
    res.alpha = cfg.alpha;
    res.b_outer = cfg.b_outer;
    res.seed = cfg.seed;
    res.cuts.resize(cuts.size());
    double max_lo = -std::numeric_limits<double>::infinity();
    double max_hi = -std::numeric_limits<double>::infinity();
    double min_lo = std::numeric_limits<double>::infinity();
    double min_hi = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cuts.size(); ++c) {
        CutInterval& iv = res.cuts[c];
        iv.cut_id = static_cast<std::int64_t>(c);
        iv.c_hat = stats.c_hat[c];
        iv.sigma_hat = stats.sigma_hat[c];
        const double half = stats.sigma_hat[c] * res.q_hat;
        iv.lo = iv.c_hat - half;
        iv.hi = iv.c_hat + half;
        max_lo = std::max(max_lo, iv.lo);
        max_hi = std::max(max_hi, iv.hi);
        min_lo = std::min(min_lo, iv.lo);
        min_hi = std::min(min_hi, iv.hi);
    }
    res.cmax_interval = {max_lo, max_hi};
    res.cmin_interval = {min_lo, min_hi};
    return res;
}

std::vector<double> eigenvalue_replicates(const SparsifiedSample& sample, std::span<const double> lambda_hat,
                                          const BootstrapConfig& cfg, const SolverConfig& solver) {
    const int r = static_cast<int>(lambda_hat.size());
    // treat eigenvalues at solver accuracy as exact zeros
    double lam_max = 0.0;
    for (double l : lambda_hat) lam_max = std::max(lam_max, std::abs(l));
    const double zero_tol = std::max(solver.eig_tol, 1e-12) * lam_max;

    std::vector<double> xi(static_cast<std::size_t>(cfg.b_outer));
    parallel_for(cfg.b_outer, cfg.threads, [&](std::int64_t b) {
        RngStream rng(stream_key(cfg.seed, "outer", static_cast<std::uint64_t>(b)));
        const std::vector<std::int64_t> w_star = multinomial_weights(sample.counts, rng);
        const LinearOperator op = sample_operator(sample, &w_star);
        const Eigen::VectorXd lam_star = bottom_eigenvalues(op, r, solver);
        double mx = 0.0;
        for (int j = 1; j < r; ++j) {  // j = 2..r in 1-based terms
            const double lam = lambda_hat[static_cast<std::size_t>(j)];
            if (std::abs(lam) <= zero_tol) continue;  // implies lambda_j(L-hat*) = 0 too
            mx = std::max(mx, std::abs(lam_star[j] / lam - 1.0));
        }
        xi[static_cast<std::size_t>(b)] = mx;
    });
    return xi;
}

EigCIResult eigenvalue_cis(const SparsifiedSample& sample, int r, const BootstrapConfig& cfg,
                           const SolverConfig& solver) {
    if (r < 2 || r > sample.n) throw std::invalid_argument("eigenvalue_cis: need 2 <= r <= n");
    const LinearOperator op = sample_operator(sample);
    Eigen::VectorXd lam = bottom_eigenvalues(op, r, solver);
    lam[0] = 0.0;  // lambda_1 of a Laplacian is exactly 0

    std::vector<double> lam_vec(lam.data(), lam.data() + r);
    const std::vector<double> xi = eigenvalue_replicates(sample, lam_vec, cfg, solver);

    EigCIResult res;
    res.q_hat = empirical_quantile(xi, 1.0 - cfg.alpha);
    res.alpha = cfg.alpha;
    res.b_outer = cfg.b_outer;
    res.seed = cfg.seed;
    res.lambda_hat = lam_vec;
    res.intervals.resize(static_cast<std::size_t>(r));
    res.intervals[0] = {0.0, 0.0};
    for (int j = 1; j < r; ++j)
        res.intervals[static_cast<std::size_t>(j)] = eig_interval(lam_vec[static_cast<std::size_t>(j)], res.q_hat);
    return res;
}

std::pair<double, double> eig_interval(double lambda, double q_hat) {
    const double lo = lambda / (1.0 + q_hat);
    const double hi =
        q_hat >= 1.0 ? std::numeric_limits<double>::infinity() : lambda / (1.0 - q_hat);
    return {lo, hi};
}

double extrapolate_quantile(double q0, std::int64_t n0, std::int64_t n) {
    if (q0 < 0.0) throw std::invalid_argument("extrapolate_quantile: q0 must be >= 0");
    if (n0 < 1 || n < n0)
        throw std::invalid_argument("extrapolate_quantile: need N >= N0 >= 1 (forward extrapolation only)");
    return std::sqrt(static_cast<double>(n0) / static_cast<double>(n)) * q0;
}

std::int64_t forecast_sample_size(double q0, std::int64_t n0, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("forecast_sample_size: threshold must be positive");
    if (q0 < 0.0) throw std::invalid_argument("forecast_sample_size: q0 must be >= 0");
    if (n0 < 1) throw std::invalid_argument("forecast_sample_size: N0 must be >= 1");
    if (q0 <= threshold) return n0;
    const double ratio = q0 / threshold;
    const double target = static_cast<double>(n0) * ratio * ratio;
    if (!(target < 4.0e18))
        throw std::overflow_error("forecast_sample_size: required sample size exceeds the representable range");
    auto meets = [&](std::int64_t n) { return extrapolate_quantile(q0, n0, n) <= threshold; };
    // bracket the boundary around the closed form, then bisect for the
    // smallest qualifying N so floating-point edges cannot shift the answer
    std::int64_t hi = std::max(n0, static_cast<std::int64_t>(std::ceil(target)));
    while (!meets(hi)) {
        if (hi > static_cast<std::int64_t>(4.5e18))
            throw std::overflow_error("forecast_sample_size: required sample size exceeds the representable range");
        hi += std::max<std::int64_t>(1, hi / 1024);
    }
    std::int64_t lo = n0;  // invariant: meets(hi), and lo fails unless lo == n0 == answer
    if (meets(lo)) return lo;
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (meets(mid)) hi = mid;
        else lo = mid;
    }
    return hi;
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const QuantileEstimate& est, std::ostream& out) {
    out << "q_hat,mu_hat,sigma_hat,alpha,B_outer,B_inner,seed,functional\n";
    out << format_double(est.q_hat) << "," << format_double(est.mu_hat) << "," << format_double(est.sigma_hat)
        << "," << format_double(est.alpha) << "," << est.b_outer << "," << est.b_inner << "," << est.seed << ","
        << est.functional << "\n";
}

void write_report(const QuantileEstimate& est, std::ostream& out) {
    out << "q_hat " << format_double(est.q_hat) << "\n";
    out << "mu_hat " << format_double(est.mu_hat) << "\n";
    out << "sigma_hat " << format_double(est.sigma_hat) << "\n";
    out << "alpha " << format_double(est.alpha) << "\n";
    out << "B_outer " << est.b_outer << "\n";
    out << "B_inner " << est.b_inner << "\n";
    out << "seed " << est.seed << "\n";
    out << "functional " << est.functional << "\n";
}

void write_csv(const CutCIResult& res, std::ostream& out) {
    out << "kind,cut_id,c_hat,sigma_hat,lo,hi,q_hat\n";
    for (const auto& iv : res.cuts)
        out << "cut," << iv.cut_id << "," << format_double(iv.c_hat) << "," << format_double(iv.sigma_hat) << ","
            << format_double(iv.lo) << "," << format_double(iv.hi) << "," << format_double(res.q_hat) << "\n";
    out << "cmax,,,," << format_double(res.cmax_interval.first) << "," << format_double(res.cmax_interval.second)
        << "," << format_double(res.q_hat) << "\n";
    out << "cmin,,,," << format_double(res.cmin_interval.first) << "," << format_double(res.cmin_interval.second)
        << "," << format_double(res.q_hat) << "\n";
}

void write_report(const CutCIResult& res, std::ostream& out) {
    out << "q_hat " << format_double(res.q_hat) << "\n";
    out << "alpha " << format_double(res.alpha) << "\n";
    out << "B_outer " << res.b_outer << "\n";
    out << "seed " << res.seed << "\n";
    out << "cuts " << res.cuts.size() << "\n";
    out << "cmax_interval " << format_double(res.cmax_interval.first) << " "
        << format_double(res.cmax_interval.second) << "\n";
    out << "cmin_interval " << format_double(res.cmin_interval.first) << " "
        << format_double(res.cmin_interval.second) << "\n";
}

void write_csv(const EigCIResult& res, std::ostream& out) {
    out << "index,lambda_hat,lo,hi,q_hat\n";
    for (std::size_t j = 0; j < res.intervals.size(); ++j)
        out << (j + 1) << "," << format_double(res.lambda_hat[j]) << "," << format_double(res.intervals[j].first)
            << "," << format_double(res.intervals[j].second) << "," << format_double(res.q_hat) << "\n";
}

void write_report(const EigCIResult& res, std::ostream& out) {
    out << "q_hat " << format_double(res.q_hat) << "\n";
    out << "alpha " << format_double(res.alpha) << "\n";
    out << "B_outer " << res.b_outer << "\n";
    out << "seed " << res.seed << "\n";
    out << "r " << res.intervals.size() << "\n";
}

}  // namespace lapcert
