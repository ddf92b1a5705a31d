#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace lapcert {

// splitmix64 finalizer; used to derive stream keys, never as a generator.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Folds a purpose tag and an index into an existing key. Chaining calls
// builds hierarchical keys, e.g. key(seed,"outer",b) then key(.,"inner",b2),
// so every logical draw owns a stream independent of execution order.
inline std::uint64_t stream_key(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
    std::uint64_t h = mix64(base);
    for (unsigned char c : tag) h = mix64(h ^ c);
    return mix64(h ^ index);
}

// Deterministic counter-based RNG stream: draw i is mix64(key ^ mix64(i)),
// so construction is O(1) (cheap enough for one stream per edge or per
// bootstrap replicate) and distinct keys give non-overlapping sequences.
// All sampling in the library goes through the samplers below rather than
// <random> distributions, which are implementation-defined.
class RngStream {
public:
    explicit RngStream(std::uint64_t key) : key_(mix64(key ^ 0x853c49e6748fea9bULL)) {}

    std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

    // Uniform on the open interval (0,1).
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via the polar method.
    double normal();

    // Exact Binomial(n, p) by geometric waiting times, O(n*min(p,1-p)+1).
    std::int64_t binomial(std::int64_t n, double p);

    // Exact Poisson(rate); splits large rates to keep the product method stable.
    std::int64_t poisson(double rate);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Multinomial(n_draws; weights / sum(weights)) by conditional binomials in
// fixed index order. Zero-weight categories always receive zero.
std::vector<std::int64_t> multinomial_counts(std::int64_t n_draws,
                                             std::span<const double> weights,
                                             RngStream& rng);

// Integer-weight variant with exact conditional probabilities.
std::vector<std::int64_t> multinomial_counts(std::int64_t n_draws,
                                             std::span<const std::int64_t> weights,
                                             RngStream& rng);

}  // namespace lapcert
