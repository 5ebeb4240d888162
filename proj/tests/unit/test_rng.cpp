#include <cmath>
#include <set>

#include "doctest.h"
#include "rsma/rng.hpp"

using namespace rsma;

TEST_CASE("streams are reproducible") {
    Rng a(42, {1, 2});
    Rng b(42, {1, 2});
    for (int i = 0; i < 100; ++i) {
        CHECK(a.uniform() == b.uniform());
        CHECK(a.normal() == b.normal());
    }
    CHECK(derive_seed(42, {1, 2}) != derive_seed(42, {2, 1}));
    CHECK(derive_seed(42, {1}) != derive_seed(43, {1}));
}

TEST_CASE("uniform range and moments") {
    Rng rng(5);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("complex normal moments") {
    Rng rng(6);
    const int n = 100000;
    const double var = 10.0;
    std::complex<double> mean = 0.0;
    double power = 0.0;
    double re2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto z = rng.complex_normal(var);
        mean += z;
        power += std::norm(z);
        re2 += z.real() * z.real();
    }
    mean /= n;
    const double se = std::sqrt(var / n);
    CHECK(std::abs(mean.real()) < 4.0 * se);
    CHECK(std::abs(mean.imag()) < 4.0 * se);
    // E|z|^4 = 2 var^2 for CN(0, var), so sd(|z|^2) = var
    CHECK(std::abs(power / n - var) < 4.0 * var / std::sqrt(n));
    CHECK(std::abs(re2 / n - var / 2.0) < 4.0 * var / std::sqrt(2.0 * n));
}

TEST_CASE("index covers its range") {
    Rng rng(7);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const auto k = rng.index(5);
        REQUIRE(k < 5);
        seen.insert(k);
    }
    CHECK(seen.size() == 5);
}
