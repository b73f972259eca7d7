#include <doctest.h>

#include <cmath>
#include <vector>

#include "gammalab/parallel.hpp"
#include "gammalab/stats.hpp"

using namespace gammalab;

namespace {
EstimatorConfig small_cfg(std::int64_t samples) {
    EstimatorConfig cfg;
    cfg.samples = samples;
    cfg.max_samples = samples; // no doubling unless the test asks for it
    return cfg;
}
} // namespace

TEST_CASE("mc_variance: constant, standard normal, linear scaling") {
    auto constant = [](RngStream&) { return 3.14; };
    auto est = mc_variance(constant, small_cfg(1024), RngStream(1, 0));
    CHECK(est.value == doctest::Approx(0.0));
    CHECK(est.std_error == doctest::Approx(0.0));

    auto normal = [](RngStream& s) { return s.next_normal(); };
    est = mc_variance(normal, small_cfg(100000), RngStream(1, 1));
    CHECK(std::abs(est.value - 1.0) <= 3.0 * est.std_error);
    CHECK(est.std_error < 0.05);

    // f = a . x: variance |a|^2
    const std::vector<double> a = {0.5, -1.5, 2.0};
    auto lin = [&a](RngStream& s) {
        double v = 0.0;
        for (double c : a) v += c * s.next_normal();
        return v;
    };
    est = mc_variance(lin, small_cfg(100000), RngStream(1, 2));
    const double expect = 0.25 + 2.25 + 4.0;
    CHECK(std::abs(est.value - expect) <= 3.0 * est.std_error);
}

TEST_CASE("batch stderr shrinks like 1/sqrt(samples)") {
    auto normal = [](RngStream& s) { return s.next_normal(); };
    double prev = 0.0;
    std::vector<double> ratios;
    for (int k = 0; k < 4; ++k) {
        const std::int64_t n = 16384ll << k;
        auto est = mc_variance(normal, small_cfg(n), RngStream(5, 0));
        if (k > 0) ratios.push_back(est.std_error / prev);
        prev = est.std_error;
    }
    for (double r : ratios) {
        CHECK(r > 0.5);
        CHECK(r < 0.95);
    }
    // average ratio near 1/sqrt(2)
    double avg = 0.0;
    for (double r : ratios) avg += r;
    avg /= static_cast<double>(ratios.size());
    CHECK(avg > 0.6);
    CHECK(avg < 0.85);
}

TEST_CASE("results are bit-identical for any thread cap") {
    auto normal = [](RngStream& s) { return s.next_normal(); };
    set_max_threads(1);
    auto a = mc_variance(normal, small_cfg(32768), RngStream(9, 4));
    set_max_threads(8);
    auto b = mc_variance(normal, small_cfg(32768), RngStream(9, 4));
    set_max_threads(0);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
    CHECK(a.seed_fingerprint == b.seed_fingerprint);
}

TEST_CASE("auto-doubling stops at the cap and flags low precision") {
    auto noisy = [](RngStream& s) {
        const double z = s.next_normal();
        return z * z * z; // heavy-ish tails, slow CI convergence
    };
    EstimatorConfig cfg;
    cfg.samples = 64;
    cfg.batches = 32;
    cfg.target_rel_ci = 1e-6; // unreachable
    cfg.max_samples = 4096;
    auto est = mc_variance(noisy, cfg, RngStream(2, 2));
    CHECK(est.low_precision);
    CHECK(est.n_samples <= 4096);
}

TEST_CASE("lp_norm: constants, p=2 consistency, monotone in p") {
    auto constant = [](RngStream&) { return 2.5; };
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
        auto est = lp_norm(constant, p, small_cfg(512), RngStream(3, 0));
        CHECK(est.value == doctest::Approx(2.5).epsilon(1e-12));
    }

    auto folded = [](RngStream& s) { return std::abs(s.next_normal()); };
    auto n2 = lp_norm(folded, 2.0, small_cfg(65536), RngStream(3, 1));
    // ||X||_2 for folded normal is 1
    CHECK(std::abs(n2.value - 1.0) <= 3.0 * n2.std_error);

    // Jensen: nondecreasing in p within CI
    auto n1 = lp_norm(folded, 1.0, small_cfg(65536), RngStream(3, 2));
    auto n15 = lp_norm(folded, 1.5, small_cfg(65536), RngStream(3, 3));
    CHECK(n1.value <= n15.value + 3.0 * (n1.std_error + n15.std_error));
    CHECK(n15.value <= n2.value + 3.0 * (n15.std_error + n2.std_error));

    auto zero = [](RngStream&) { return 0.0; };
    auto z = lp_norm(zero, 2.0, small_cfg(512), RngStream(3, 4));
    CHECK(z.value == 0.0);
    CHECK(z.low_precision); // flagged, not silently accepted
}

TEST_CASE("full determinism: same config and seed reproduce the estimate") {
    auto normal = [](RngStream& s) { return s.next_normal(); };
    auto a = mc_mean(normal, small_cfg(8192), RngStream(77, 3));
    auto b = mc_mean(normal, small_cfg(8192), RngStream(77, 3));
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
    CHECK(a.n_samples == b.n_samples);
}

TEST_CASE("hypercontractive integral: constant g closed form c^2/4") {
    // ||c||_p = c for all p, so the integrand is c^2 e^{-2s}(1 - e^{-2s});
    // the integral over [0, inf) is c^2 (1/2 - 1/4).
    const double c = 1.7;
    std::vector<double> s_grid, norms;
    for (int i = 0; i <= 4000; ++i) {
        s_grid.push_back(12.0 * i / 4000.0);
        norms.push_back(c);
    }
    const double got = hypercontractive_integral(s_grid, norms);
    CHECK(got == doctest::Approx(c * c / 4.0).epsilon(1e-5));

    // comparator with ||g||_2 = ||g||_1: the log term vanishes
    CHECK(hypercontractive_comparator(c, c, 1.0) == doctest::Approx(c * c).epsilon(1e-14));
    CHECK_THROWS_AS(hypercontractive_comparator(1.0, 0.0), std::domain_error);
}
