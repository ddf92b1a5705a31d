#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lapcert/bootstrap.hpp"
#include "lapcert/harness.hpp"
#include "test_util.hpp"

using namespace lapcert;
using namespace lapcert::test;

TEST_CASE("empirical quantile follows the multiset definition") {
    std::vector<double> deciles;
    for (int k = 1; k <= 10; ++k) deciles.push_back(0.1 * k);
    CHECK(empirical_quantile(deciles, 0.9) == doctest::Approx(0.9));

    CHECK(empirical_quantile(std::vector<double>{3.25}, 0.5) == doctest::Approx(3.25));
    CHECK(empirical_quantile(std::vector<double>{3.25}, 0.999) == doctest::Approx(3.25));

    std::vector<double> ties{1.0, 1.0, 1.0, 5.0};
    CHECK(empirical_quantile(ties, 0.75) == doctest::Approx(1.0));

    // monotone in the level
    std::vector<double> vals{0.3, 1.2, -0.5, 2.2, 0.0, 7.0, 1.1};
    CHECK(empirical_quantile(vals, 0.95) >= empirical_quantile(vals, 0.90));

    CHECK_THROWS_AS(empirical_quantile(std::vector<double>{}, 0.5), std::invalid_argument);
}

TEST_CASE("multinomial_weights") {
    SUBCASE("degenerate base is returned unchanged") {
        const std::vector<std::int64_t> base{0, 12, 0};
        RngStream rng(stream_key(1, "mw"));
        CHECK(multinomial_weights(base, rng) == base);
    }
    SUBCASE("sum is preserved and zero categories stay zero") {
        const std::vector<std::int64_t> base{3, 0, 5, 2, 0, 7};
        for (int t = 0; t < 200; ++t) {
            RngStream rng(stream_key(2, "mw", static_cast<std::uint64_t>(t)));
            const auto w = multinomial_weights(base, rng);
            std::int64_t total = 0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                total += w[i];
                if (base[i] == 0) CHECK(w[i] == 0);
            }
            CHECK(total == 17);
        }
    }
    SUBCASE("moments of the two-category case") {
        const std::int64_t n = 10000;
        const std::vector<std::int64_t> base{n / 2, n / 2};
        const int draws = 2000;
        double sum = 0.0, sq = 0.0;
        for (int t = 0; t < draws; ++t) {
            RngStream rng(stream_key(3, "mw", static_cast<std::uint64_t>(t)));
            const auto w = multinomial_weights(base, rng);
            sum += static_cast<double>(w[0]);
            sq += static_cast<double>(w[0]) * static_cast<double>(w[0]);
        }
        const double mean = sum / draws;
        const double var = sq / draws - mean * mean;
        const double expected_var = static_cast<double>(n) * 0.25;
        CHECK(std::abs(mean - 5000.0) <= 3 * std::sqrt(expected_var / draws));
        CHECK(std::abs(var - expected_var) <= 0.1 * expected_var);
    }
}

TEST_CASE("algorithm 1 degenerates to zero on a single-edge graph") {
    const Graph g = single_edge(0.6);
    const SparsifiedSample s = draw_sample(g, edge_weight_probs(g), 12, 4);
    for (const FunctionalSpec& spec :
         {FunctionalSpec::frobenius(), FunctionalSpec::frobenius_sq(), FunctionalSpec::operator_norm()}) {
        BootstrapConfig cfg;
        cfg.alpha = 0.1;
        cfg.seed = 99;
        const QuantileEstimate est = algorithm1_quantile(s, spec, cfg);
        CHECK(est.q_hat == doctest::Approx(0.0));
        CHECK(est.mu_hat == doctest::Approx(0.0));
        CHECK(est.sigma_hat == doctest::Approx(0.0));
    }
}

TEST_CASE("algorithm 1 replicate values bracket the reported quantile") {
    const Graph g = make_erdos_renyi(25, 0.3, 15);
    const SparsifiedSample s = draw_sample(g, edge_weight_probs(g), 60, 2);
    BootstrapConfig cfg;
    cfg.alpha = 0.1;
    cfg.seed = 5;
    const Algorithm1Replicates rep = algorithm1_replicates(s, FunctionalSpec::frobenius_sq(), cfg);
    const double q = empirical_quantile(rep.values, 1.0 - cfg.alpha);
    CHECK(q >= *std::min_element(rep.values.begin(), rep.values.end()));
    CHECK(q <= *std::max_element(rep.values.begin(), rep.values.end()));
}

TEST_CASE("algorithm 1 is deterministic across runs and worker counts") {
    const Graph g = make_erdos_renyi(30, 0.25, 8);
    const SparsifiedSample s = draw_sample(g, edge_weight_probs(g), 80, 11);
    BootstrapConfig cfg;
    cfg.alpha = 0.05;
    cfg.seed = 31;
    cfg.threads = 1;
    const Algorithm1Replicates a = algorithm1_replicates(s, FunctionalSpec::frobenius_sq(), cfg);
    cfg.threads = 4;
    const Algorithm1Replicates b = algorithm1_replicates(s, FunctionalSpec::frobenius_sq(), cfg);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
    CHECK(a.mu_hat == b.mu_hat);
    CHECK(a.sigma_hat == b.sigma_hat);
}

TEST_CASE("frobenius pipeline is the square root of the squared pipeline") {
    const Graph g = make_erdos_renyi(20, 0.3, 12);
    const SparsifiedSample s = draw_sample(g, edge_weight_probs(g), 50, 21);
    BootstrapConfig cfg;
    cfg.alpha = 0.1;
    cfg.seed = 77;
    const QuantileEstimate f2 = algorithm1_quantile(s, FunctionalSpec::frobenius_sq(), cfg);
    const QuantileEstimate f = algorithm1_quantile(s, FunctionalSpec::frobenius(), cfg);
    CHECK(f.q_hat == std::sqrt(std::max(0.0, f2.q_hat)));
    CHECK(f.mu_hat == std::sqrt(std::max(0.0, f2.mu_hat)));
    CHECK(f.sigma_hat == std::sqrt(f2.sigma_hat));
}

TEST_CASE("algorithm 1 quantile monotone in the level") {
    const Graph g = make_erdos_renyi(18, 0.35, 6);
    const SparsifiedSample s = draw_sample(g, edge_weight_probs(g), 45, 9);
    BootstrapConfig cfg;
    cfg.seed = 3;
    const Algorithm1Replicates rep = algorithm1_replicates(s, FunctionalSpec::frobenius_sq(), cfg);
    CHECK(empirical_quantile(rep.values, 0.95) >= empirical_quantile(rep.values, 0.90));
}

TEST_CASE("monte carlo q_hat brackets the exact bootstrap population quantile") {
    // 3-edge normalized graph, N = 2, alpha = 0.1, exhaustive (W*, W**) oracle
    const Graph raw = Graph::from_edges(3, {{0, 1, 1.0}, {1, 2, 2.0}, {0, 2, 3.0}});
    const auto [g, scale] = normalize_weights(raw);
    const SparsifiedSample s = draw_sample(g, edge_weight_probs(g), 2, 123);
    REQUIRE(s.unique_edges() >= 1);

    const FunctionalSpec spec = FunctionalSpec::frobenius_sq();
    const ExactDistribution pop = brute_force_algorithm1_population(s, spec);
    CHECK(pop.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    const double exact_q = pop.quantile(0.9);

    BootstrapConfig cfg;
    cfg.alpha = 0.1;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int run = 0; run < 5000; ++run) {
        cfg.seed = static_cast<std::uint64_t>(run);
        const QuantileEstimate est = algorithm1_quantile(s, spec, cfg);
        lo = std::min(lo, est.q_hat);
        hi = std::max(hi, est.q_hat);
    }
    CHECK(lo <= exact_q);
    CHECK(hi >= exact_q);
}

TEST_CASE("cut statistics") {
    SUBCASE("hand-computed three-draw example") {
        // two edges of weight 1/2 (p = 1/2 each, v_e = 1); counts {1, 2};
        // a cut crossed only by the second edge sees C_i = {0, 1, 1}
        const Graph g = Graph::from_edges(4, {{0, 1, 0.5}, {2, 3, 0.5}});
        const EdgeProbabilities p = edge_weight_probs(g);
        SparsifiedSample s;
        s.n = 4;
        s.num_draws = 3;
        s.edge_index = {0, 1};
        s.u = {0, 2};
        s.v = {1, 3};
        s.counts = {1, 2};
        s.scale = {0.5 / (3 * 0.5), 0.5 / (3 * 0.5)};  // 1/3 each
        CutVector x;
        x.bits = {0, 0, 1, 0};  // crosses edge {2,3} only
        const CutStatistics st = cut_statistics(s, {x});
        CHECK(st.c_hat[0] == doctest::Approx(2.0 / 3.0));
        CHECK(st.sigma_hat[0] * st.sigma_hat[0] == doctest::Approx(2.0 / 9.0));
    }
    SUBCASE("cut crossing no sampled edge") {
        const Graph g = make_path(6);
        const SparsifiedSample s = draw_sample(g, edge_weight_probs(g), 10, 2);
        CutVector x;
        x.bits.assign(6, 0);  // empty side crosses nothing
        const CutStatistics st = cut_statistics(s, {x});
        CHECK(st.c_hat[0] == doctest::Approx(0.0));
        CHECK(st.sigma_hat[0] == doctest::Approx(0.0));
    }
    SUBCASE("single-edge graph is degenerate") {
        const Graph g = single_edge(1.0);
        const SparsifiedSample s = draw_sample(g, edge_weight_probs(g), 7, 3);
        CutVector x;
        x.bits = {1, 0};
        const CutStatistics st = cut_statistics(s, {x});
        CHECK(st.c_hat[0] == doctest::Approx(g.cut_value(x)));
        CHECK(st.sigma_hat[0] == doctest::Approx(0.0));
    }
    SUBCASE("length mismatch is rejected") {
        const Graph g = make_path(6);
        const SparsifiedSample s = draw_sample(g, edge_weight_probs(g), 10, 2);
        CutVector x;
        x.bits.assign(5, 0);
        CHECK_THROWS_AS(cut_statistics(s, {x}), std::invalid_argument);
    }
}

TEST_CASE("algorithm 2 cut CIs") {
    SUBCASE("degenerate single cut") {
        const Graph g = single_edge(1.0);
        const SparsifiedSample s = draw_sample(g, edge_weight_probs(g), 9, 1);
        CutVector x;
        x.bits = {1, 0};
        BootstrapConfig cfg;
        cfg.alpha = 0.1;
        cfg.seed = 2;
        const CutCIResult res = algorithm2_cut_cis(s, {x}, cfg);
        CHECK(res.q_hat == doctest::Approx(0.0));
        CHECK(res.cuts[0].lo == doctest::Approx(res.cuts[0].c_hat));
        CHECK(res.cuts[0].hi == doctest::Approx(res.cuts[0].c_hat));
    }
    SUBCASE("intervals are centered and replicates nonnegative") {
        const Graph g = make_erdos_renyi(25, 0.3, 44);
        const SparsifiedSample s = draw_sample(g, edge_weight_probs(g), 70, 5);
        const auto cuts = random_bernoulli_cuts(25, 40, 7);
        BootstrapConfig cfg;
        cfg.alpha = 0.1;
        cfg.seed = 3;
        const CutStatistics st = cut_statistics(s, cuts);
        for (double xi : algorithm2_replicates(s, st, cfg)) CHECK(xi >= 0.0);
        const CutCIResult res = algorithm2_cut_cis(s, cuts, cfg);
        CHECK(res.q_hat >= 0.0);
        for (const auto& iv : res.cuts) {
            CHECK(iv.lo <= iv.c_hat + 1e-15);
            CHECK(iv.hi >= iv.c_hat - 1e-15);
        }
        // cmax/cmin intervals are the maxima/minima of the endpoints
        double max_lo = -1e300, max_hi = -1e300, min_lo = 1e300, min_hi = 1e300;
        for (const auto& iv : res.cuts) {
            max_lo = std::max(max_lo, iv.lo);
            max_hi = std::max(max_hi, iv.hi);
            min_lo = std::min(min_lo, iv.lo);
            min_hi = std::min(min_hi, iv.hi);
        }
        CHECK(res.cmax_interval.first == doctest::Approx(max_lo));
        CHECK(res.cmax_interval.second == doctest::Approx(max_hi));
        CHECK(res.cmin_interval.first == doctest::Approx(min_lo));
        CHECK(res.cmin_interval.second == doctest::Approx(min_hi));
    }
    SUBCASE("deterministic across worker counts") {
        const Graph g = make_erdos_renyi(20, 0.3, 1);
        const SparsifiedSample s = draw_sample(g, edge_weight_probs(g), 50, 6);
        const auto cuts = random_bernoulli_cuts(20, 30, 9);
        BootstrapConfig cfg;
        cfg.seed = 17;
        cfg.threads = 1;
        const CutCIResult a = algorithm2_cut_cis(s, cuts, cfg);
        cfg.threads = 5;
        const CutCIResult b = algorithm2_cut_cis(s, cuts, cfg);
        CHECK(a.q_hat == b.q_hat);
        for (std::size_t c = 0; c < a.cuts.size(); ++c) {
            CHECK(a.cuts[c].lo == b.cuts[c].lo);
            CHECK(a.cuts[c].hi == b.cuts[c].hi);
        }
    }
}

TEST_CASE("eigenvalue interval formula") {
    const auto [lo, hi] = eig_interval(2.0, 0.25);
    CHECK(lo == doctest::Approx(1.6));
    CHECK(hi == doctest::Approx(2.0 / 0.75));
    CHECK(std::isinf(eig_interval(2.0, 1.0).second));
    CHECK(eig_interval(2.0, 1.0).first == doctest::Approx(1.0));
}

TEST_CASE("eigenvalue CIs on a single-edge graph collapse") {
    const Graph g = single_edge(1.0);
    const SparsifiedSample s = draw_sample(g, edge_weight_probs(g), 8, 2);
    BootstrapConfig cfg;
    cfg.alpha = 0.1;
    cfg.seed = 4;
    const EigCIResult res = eigenvalue_cis(s, 2, cfg, {});
    CHECK(res.q_hat == doctest::Approx(0.0));
    CHECK(res.intervals[0].first == 0.0);
    CHECK(res.intervals[0].second == 0.0);
    CHECK(res.intervals[1].first == doctest::Approx(res.lambda_hat[1]));
    CHECK(res.intervals[1].second == doctest::Approx(res.lambda_hat[1]));
    CHECK(res.lambda_hat[1] == doctest::Approx(2.0));
}

TEST_CASE("eigenvalue CIs: intervals follow the formula and contain lambda_hat") {
    const Graph g = make_erdos_renyi(30, 0.25, 13);
    const SparsifiedSample s = draw_sample(g, edge_weight_probs(g), 90, 8);
    BootstrapConfig cfg;
    cfg.alpha = 0.1;
    cfg.seed = 15;
    const EigCIResult res = eigenvalue_cis(s, 5, cfg, {});
    for (std::size_t j = 1; j < res.intervals.size(); ++j) {
        const auto expected = eig_interval(res.lambda_hat[j], res.q_hat);
        CHECK(res.intervals[j].first == expected.first);
        CHECK(res.intervals[j].second == expected.second);
        CHECK(res.intervals[j].first <= res.lambda_hat[j] + 1e-12);
        CHECK(res.intervals[j].second >= res.lambda_hat[j] - 1e-12);
    }
    CHECK_THROWS_AS(eigenvalue_cis(s, 1, cfg, {}), std::invalid_argument);
}

TEST_CASE("extrapolation and forecasting") {
    CHECK(extrapolate_quantile(1.0, 100, 400) == doctest::Approx(0.5));
    CHECK(extrapolate_quantile(0.7, 250, 250) == doctest::Approx(0.7));
    CHECK(extrapolate_quantile(0.0, 10, 1000) == doctest::Approx(0.0));
    CHECK_THROWS_AS(extrapolate_quantile(1.0, 100, 50), std::invalid_argument);

    CHECK(forecast_sample_size(1.0, 100, 0.25) == 1600);
    CHECK(forecast_sample_size(0.2, 500, 0.25) == 500);
    CHECK(forecast_sample_size(0.5, 200, 0.1) == 5000);
    CHECK(forecast_sample_size(0.0, 75, 0.5) == 75);

    // consistency: N1 meets the threshold, N1 - 1 does not (when above N0)
    RngStream rng(stream_key(8, "fc"));
    for (int rep = 0; rep < 200; ++rep) {
        const double q0 = rng.uniform01() * 3.0;
        const std::int64_t n0 = 1 + static_cast<std::int64_t>(rng.uniform01() * 1000);
        const double thr = 0.01 + rng.uniform01();
        const std::int64_t n1 = forecast_sample_size(q0, n0, thr);
        CHECK(n1 >= n0);
        CHECK(extrapolate_quantile(q0, n0, n1) <= thr);
        if (n1 - 1 >= n0 && n1 > n0) CHECK(extrapolate_quantile(q0, n0, n1 - 1) > thr);
    }
}

TEST_CASE("result serialization") {
    QuantileEstimate est;
    est.q_hat = 1.25;
    est.mu_hat = 1.0;
    est.sigma_hat = 0.125;
    est.alpha = 0.1;
    est.b_outer = 50;
    est.b_inner = 30;
    est.seed = 42;
    est.functional = "fro";
    std::ostringstream csv;
    write_csv(est, csv);
    CHECK(csv.str() ==
          "q_hat,mu_hat,sigma_hat,alpha,B_outer,B_inner,seed,functional\n"
          "1.25,1,0.125,0.10000000000000001,50,30,42,fro\n");
    std::ostringstream rep;
    write_report(est, rep);
    CHECK(rep.str().find("q_hat 1.25\n") != std::string::npos);
    CHECK(rep.str().find("B_outer 50\n") != std::string::npos);

    EigCIResult eig;
    eig.q_hat = 1.5;
    eig.alpha = 0.05;
    eig.b_outer = 50;
    eig.lambda_hat = {0.0, 2.0};
    eig.intervals = {{0.0, 0.0}, eig_interval(2.0, 1.5)};
    std::ostringstream ecsv;
    write_csv(eig, ecsv);
    CHECK(ecsv.str().find("2,2,0.80000000000000004,inf,1.5\n") != std::string::npos);
    CHECK(ecsv.str().find("1,0,0,0,1.5\n") != std::string::npos);

    // round trip at full precision
    const double v = 0.12345678901234567;
    CHECK(std::stod(format_double(v)) == v);
}
