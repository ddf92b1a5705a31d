#include "lapcert/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace lapcert {

double RngStream::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform01() - 1.0;
        v = 2.0 * uniform01() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
}

std::int64_t RngStream::binomial(std::int64_t n, double p) {
    if (n < 0) throw std::invalid_argument("binomial: n < 0");
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (p > 0.5) return n - binomial(n, 1.0 - p);
    // Count successes by summing geometric gaps until the n trials run out.
    const double log_q = std::log1p(-p);
    std::int64_t successes = 0;
    std::int64_t consumed = 0;
    for (;;) {
        const double g = std::floor(std::log(uniform01()) / log_q);
        if (g >= static_cast<double>(n - consumed)) break;
        consumed += static_cast<std::int64_t>(g) + 1;
        if (consumed > n) break;
        ++successes;
        if (consumed == n) break;
    }
    return successes;
}

std::int64_t RngStream::poisson(double rate) {
    if (rate < 0.0) throw std::invalid_argument("poisson: negative rate");
    if (rate == 0.0) return 0;
    std::int64_t total = 0;
    // Poisson(a+b) = Poisson(a) + Poisson(b); chunking keeps exp(-rate) away
    // from the underflow range of the product method.
    while (rate > 30.0) {
        total += poisson(30.0);
        rate -= 30.0;
    }
    const double limit = std::exp(-rate);
    double prod = 1.0;
    std::int64_t k = 0;
    do {
        ++k;
        prod *= uniform01();
    } while (prod > limit);
    return total + (k - 1);
}

std::vector<std::int64_t> multinomial_counts(std::int64_t n_draws,
                                             std::span<const double> weights,
                                             RngStream& rng) {
    const std::size_t m = weights.size();
    std::vector<std::int64_t> counts(m, 0);
    if (n_draws == 0) return counts;
    if (m == 0) throw std::invalid_argument("multinomial_counts: no categories");

    std::vector<double> suffix(m + 1, 0.0);
    std::size_t last_positive = m;  // highest-index positive category
    for (std::size_t i = m; i-- > 0;) {
        if (weights[i] < 0.0) throw std::invalid_argument("multinomial_counts: negative weight");
        suffix[i] = suffix[i + 1] + weights[i];
        if (weights[i] > 0.0 && last_positive == m) last_positive = i;
    }
    if (suffix[0] <= 0.0) throw std::invalid_argument("multinomial_counts: zero total weight");

    std::int64_t remaining = n_draws;
    for (std::size_t i = 0; i < m && remaining > 0; ++i) {
        if (weights[i] <= 0.0) continue;
        if (i == last_positive) {
            counts[i] = remaining;
            remaining = 0;
            break;
        }
        double p = weights[i] / suffix[i];
        if (p > 1.0) p = 1.0;
        counts[i] = rng.binomial(remaining, p);
        remaining -= counts[i];
    }
    if (remaining > 0) counts[last_positive] += remaining;
    return counts;
}

std::vector<std::int64_t> multinomial_counts(std::int64_t n_draws,
                                             std::span<const std::int64_t> weights,
                                             RngStream& rng) {
    const std::size_t m = weights.size();
    std::vector<std::int64_t> counts(m, 0);
    if (n_draws == 0) return counts;
    if (m == 0) throw std::invalid_argument("multinomial_counts: no categories");

    std::int64_t total = 0;
    std::size_t last_positive = m;
    for (std::size_t i = 0; i < m; ++i) {
        if (weights[i] < 0) throw std::invalid_argument("multinomial_counts: negative weight");
        total += weights[i];
        if (weights[i] > 0) last_positive = i;
    }
    if (total <= 0) throw std::invalid_argument("multinomial_counts: zero total weight");

    std::int64_t remaining = n_draws;
    std::int64_t mass = total;
    for (std::size_t i = 0; i < m && remaining > 0; ++i) {
        if (weights[i] <= 0) continue;
        if (i == last_positive || weights[i] == mass) {
            counts[i] = remaining;
            remaining = 0;
            break;
        }
        const double p = static_cast<double>(weights[i]) / static_cast<double>(mass);
        counts[i] = rng.binomial(remaining, p);
        remaining -= counts[i];
        mass -= weights[i];
    }
    if (remaining > 0) counts[last_positive] += remaining;
    return counts;
}

}  // namespace lapcert
