#include <doctest.h>

#include <cmath>

#include "gammalab/rng.hpp"

using gammalab::RngStream;

TEST_CASE("identical (seed, stream) pairs replay the same sequence") {
    RngStream a(42, 7), b(42, 7);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    RngStream c(42, 7), d(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(c.next_normal() == d.next_normal());
}

TEST_CASE("distinct streams decorrelate") {
    RngStream a(42, 0), b(42, 1), c(43, 0);
    const int n = 200000;
    double corr_ab = 0.0, corr_ac = 0.0, mean_a = 0.0;
    for (int i = 0; i < n; ++i) {
        const double xa = a.next_uniform() - 0.5;
        const double xb = b.next_uniform() - 0.5;
        const double xc = c.next_uniform() - 0.5;
        corr_ab += xa * xb;
        corr_ac += xa * xc;
        mean_a += xa;
    }
    // raw moments of U(-1/2,1/2): variance 1/12; correlations ~ N(0, 1/(12 sqrt(n)))
    CHECK(std::abs(corr_ab / n) < 5.0 / (12.0 * std::sqrt(n)));
    CHECK(std::abs(corr_ac / n) < 5.0 / (12.0 * std::sqrt(n)));
    CHECK(std::abs(mean_a / n) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("derived streams differ from the parent and from each other") {
    RngStream base(1, 2);
    RngStream c0 = base.derive(0), c1 = base.derive(1);
    CHECK(c0.stream_id() != c1.stream_id());
    RngStream p(1, 2);
    CHECK(c0.next_u64() != c1.next_u64());
    CHECK(base.derive(0).next_u64() == p.derive(0).next_u64());
}

TEST_CASE("normals have the right first moments") {
    RngStream s(2024, 0);
    const int n = 400000;
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.next_normal();
        m1 += z;
        m2 += z * z;
    }
    m1 /= n;
    m2 /= n;
    CHECK(std::abs(m1) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("uniforms stay inside the open interval") {
    RngStream s(7, 7);
    for (int i = 0; i < 100000; ++i) {
        const double u = s.next_uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}
