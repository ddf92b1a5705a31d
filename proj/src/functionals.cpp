#include "lapcert/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lapcert {

const char* FunctionalSpec::name() const {
    switch (kind) {
        case FunctionalKind::FrobeniusSq: return "fro2";
        case FunctionalKind::Frobenius: return "fro";
        case FunctionalKind::OperatorNorm: return "op";
        case FunctionalKind::RegressionL2: return "reg";
    }
    return "fro2";
}

FunctionalKind functional_from_name(const std::string& name) {
    if (name == "fro2") return FunctionalKind::FrobeniusSq;
    if (name == "fro") return FunctionalKind::Frobenius;
    if (name == "op") return FunctionalKind::OperatorNorm;
    if (name == "reg") return FunctionalKind::RegressionL2;
    throw std::runtime_error("unknown functional '" + name + "' (expected fro|fro2|op|reg)");
}

std::int64_t LaplacianOperand::dim() const {
    if (graph) return graph->num_vertices();
    if (sample) return sample->n;
    throw std::logic_error("empty LaplacianOperand");
}

namespace {

void check_reweight(const LaplacianOperand& op) {
    if (!op.sample || !op.reweight) return;
    if (static_cast<std::int64_t>(op.reweight->size()) != op.sample->unique_edges())
        throw std::invalid_argument("operand reweight index mismatch");
    const std::int64_t total = std::accumulate(op.reweight->begin(), op.reweight->end(), std::int64_t{0});
    if (total != op.sample->num_draws) throw std::invalid_argument("operand reweight does not sum to N");
}

}  // namespace

LinearOperator operand_operator(const LaplacianOperand& op) {
    check_reweight(op);
    if (op.graph) return graph_operator(*op.graph);
    return sample_operator(*op.sample, op.reweight);
}

FrobeniusAccumulator::FrobeniusAccumulator(std::int64_t n)
    : diag_(static_cast<std::size_t>(n), 0.0) {}

double FrobeniusAccumulator::finish_edges(std::span<const std::int32_t> us,
                                          std::span<const std::int32_t> vs,
                                          std::span<const double> coefs) {
    double off = 0.0;
    for (std::size_t k = 0; k < coefs.size(); ++k) {
        const double d = coefs[k];
        if (d == 0.0) continue;
        off += 2.0 * d * d;
        const auto i = static_cast<std::size_t>(us[k]);
        const auto j = static_cast<std::size_t>(vs[k]);
        if (diag_[i] == 0.0) touched_.push_back(us[k]);
        diag_[i] += d;
        if (diag_[j] == 0.0) touched_.push_back(vs[k]);
        diag_[j] += d;
    }
    double diag_sq = 0.0;
    for (const auto i : touched_) {
        diag_sq += diag_[static_cast<std::size_t>(i)] * diag_[static_cast<std::size_t>(i)];
        diag_[static_cast<std::size_t>(i)] = 0.0;
    }
    touched_.clear();
    return off + diag_sq;
}

double FrobeniusAccumulator::diff_sq_aligned(const SparsifiedSample& s,
                                             std::span<const std::int64_t> wa,
                                             std::span<const std::int64_t> wb) {
    const std::size_t k = s.counts.size();
    if (wa.size() != k || wb.size() != k)
        throw std::invalid_argument("diff_sq_aligned: weight length mismatch");
    double off = 0.0;
    for (std::size_t e = 0; e < k; ++e) {
        const double d = static_cast<double>(wa[e] - wb[e]) * s.scale[e];
        if (d == 0.0) continue;
        off += 2.0 * d * d;
        const auto i = static_cast<std::size_t>(s.u[e]);
        const auto j = static_cast<std::size_t>(s.v[e]);
        if (diag_[i] == 0.0) touched_.push_back(s.u[e]);
        diag_[i] += d;
        if (diag_[j] == 0.0) touched_.push_back(s.v[e]);
        diag_[j] += d;
    }
    double diag_sq = 0.0;
    for (const auto i : touched_) {
        diag_sq += diag_[static_cast<std::size_t>(i)] * diag_[static_cast<std::size_t>(i)];
        diag_[static_cast<std::size_t>(i)] = 0.0;
    }
    touched_.clear();
    return off + diag_sq;
}

double FrobeniusAccumulator::diff_sq(const LaplacianOperand& a, const LaplacianOperand& b) {
    // Same-sample operands share their index set; take the aligned path.
    if (a.sample && b.sample && a.sample == b.sample) {
        const auto& s = *a.sample;
        std::span<const std::int64_t> wa = a.reweight ? std::span<const std::int64_t>(*a.reweight)
                                                      : std::span<const std::int64_t>(s.counts);
        std::span<const std::int64_t> wb = b.reweight ? std::span<const std::int64_t>(*b.reweight)
                                                      : std::span<const std::int64_t>(s.counts);
        return diff_sq_aligned(s, wa, wb);
    }

    // General path: merge signed per-edge coefficients keyed by endpoints.
    entries_.clear();
    auto collect = [this](const LaplacianOperand& op, double sign) {
        if (op.graph) {
            const auto& g = *op.graph;
            for (std::int64_t e = 0; e < g.num_edges(); ++e) {
                const auto key = (static_cast<std::uint64_t>(g.edge_u()[static_cast<std::size_t>(e)]) << 32) |
                                 static_cast<std::uint64_t>(g.edge_v()[static_cast<std::size_t>(e)]);
                entries_.emplace_back(key, sign * g.edge_w()[static_cast<std::size_t>(e)]);
            }
        } else if (op.sample) {
            const auto& s = *op.sample;
            for (std::size_t e = 0; e < s.counts.size(); ++e) {
                const double r = op.reweight ? static_cast<double>((*op.reweight)[e])
                                             : static_cast<double>(s.counts[e]);
                const auto key = (static_cast<std::uint64_t>(s.u[e]) << 32) | static_cast<std::uint64_t>(s.v[e]);
                entries_.emplace_back(key, sign * r * s.scale[e]);
            }
        }
    };
    collect(a, 1.0);
    collect(b, -1.0);
    std::sort(entries_.begin(), entries_.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });

    double off = 0.0;
    double diag_sq = 0.0;
    for (std::size_t k = 0; k < entries_.size();) {
        double d = entries_[k].second;
        std::size_t k2 = k + 1;
        while (k2 < entries_.size() && entries_[k2].first == entries_[k].first) {
            d += entries_[k2].second;
            ++k2;
        }
        if (d != 0.0) {
            off += 2.0 * d * d;
            const auto i = static_cast<std::size_t>(entries_[k].first >> 32);
            const auto j = static_cast<std::size_t>(entries_[k].first & 0xffffffffu);
            if (diag_[i] == 0.0) touched_.push_back(static_cast<std::int32_t>(i));
            diag_[i] += d;
            if (diag_[j] == 0.0) touched_.push_back(static_cast<std::int32_t>(j));
            diag_[j] += d;
        }
        k = k2;
    }
    for (const auto i : touched_) {
        diag_sq += diag_[static_cast<std::size_t>(i)] * diag_[static_cast<std::size_t>(i)];
        diag_[static_cast<std::size_t>(i)] = 0.0;
    }
    touched_.clear();
    return off + diag_sq;
}

double eval_functional(const FunctionalSpec& spec, const LaplacianOperand& a, const LaplacianOperand& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("eval_functional: operand dimension mismatch");
    check_reweight(a);
    check_reweight(b);

    switch (spec.kind) {
        case FunctionalKind::FrobeniusSq: {
            FrobeniusAccumulator acc(a.dim());
            return acc.diff_sq(a, b);
        }
        case FunctionalKind::Frobenius: {
            FrobeniusAccumulator acc(a.dim());
            return std::sqrt(std::max(0.0, acc.diff_sq(a, b)));
        }
        case FunctionalKind::OperatorNorm: {
            const LinearOperator diff = difference_operator(operand_operator(a), operand_operator(b));
            return operator_norm(diff, spec.solver);
        }
        case FunctionalKind::RegressionL2: {
            if (spec.y.size() != a.dim())
                throw std::invalid_argument("eval_functional: regression payload dimension mismatch");
            if (spec.tau == 0.0) return 0.0;  // both fits return y
            const Eigen::VectorXd fa = regression_fit(operand_operator(a), spec.y, spec.tau, spec.solver);
            const Eigen::VectorXd fb = regression_fit(operand_operator(b), spec.y, spec.tau, spec.solver);
            return (fa - fb).norm();
        }
    }
    throw std::logic_error("eval_functional: unreachable");
}

}  // namespace lapcert
