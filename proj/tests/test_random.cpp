#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "archbo/random.hpp"

using namespace archbo;

TEST_CASE("named substreams are reproducible and distinct") {
    CHECK(derive_seed(7, "doe") == derive_seed(7, "doe"));
    CHECK(derive_seed(7, "doe") != derive_seed(7, "fit"));
    CHECK(derive_seed(7, "fit", 1) != derive_seed(7, "fit", 2));
    CHECK(derive_seed(7, "doe") != derive_seed(8, "doe"));

    Rng a(3, "infill", 4), b(3, "infill", 4);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("uniform draws stay in range and look uniform") {
    Rng rng(1);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));

    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[rng.index(7)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("normal draws have unit moments") {
    Rng rng(2);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("shuffle is a permutation") {
    Rng rng(5);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    rng.shuffle(v.begin(), v.end());
    CHECK(std::set<int>(v.begin(), v.end()).size() == 50);
}
