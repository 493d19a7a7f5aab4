#include <doctest.h>

#include "erma/parallel.hpp"
#include "erma/quadrature.hpp"
#include "erma/rng.hpp"
#include "erma/types.hpp"

#include <atomic>
#include <cmath>
#include <set>

using namespace erma;

TEST_SUITE("basics") {

TEST_CASE("gauss hermite moments") {
    for (int K : {1, 2, 5, 41, 101}) {
        GaussHermite gh = gauss_hermite(K);
        REQUIRE(gh.size() == static_cast<std::size_t>(K));
        double w = 0;
        for (double v : gh.weights) w += v;
        CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
        for (int i = 0; i < K; ++i) CHECK(gh.nodes[i] == -gh.nodes[K - 1 - i]);
    }
    GaussHermite gh = gauss_hermite(41);
    double dfact = 1.0;
    for (int m = 2; m <= 20; m += 2) {
        dfact *= m - 1;
        double s = 0;
        for (std::size_t k = 0; k < gh.size(); ++k) s += gh.weights[k] * std::pow(gh.nodes[k], m);
        CHECK(s == doctest::Approx(dfact).epsilon(1e-11));
    }
    CHECK_THROWS(gauss_hermite(0));
}

TEST_CASE("seed derivation") {
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    std::set<std::uint64_t> seen;
    for (std::uint64_t m = 0; m < 4; ++m)
        for (std::uint64_t i = 0; i < 50; ++i)
            for (std::uint64_t s = 0; s < 5; ++s) seen.insert(derive_seed(m, i, s));
    CHECK(seen.size() == 1000);
    Rng a = make_rng(5, 1), b = make_rng(5, 1);
    CHECK(a() == b());
}

TEST_CASE("chunked parallel loop is thread-count independent") {
    std::size_t n = 100003;
    auto run = [&](int threads) {
        set_threads(threads);
        std::vector<double> part(chunk_count(n, 1000), 0.0);
        for_chunks(n, 1000, [&](std::size_t c, std::size_t b, std::size_t e) {
            double s = 0;
            for (std::size_t i = b; i < e; ++i) s += std::sin(double(i));
            part[c] = s;
        });
        double total = 0;
        for (double v : part) total += v;
        return total;
    };
    double t1 = run(1), t4 = run(4), t3 = run(3);
    set_threads(0);
    CHECK(t1 == t4);
    CHECK(t1 == t3);

    std::atomic<int> count{0};
    for_chunks(10, 1, [&](std::size_t, std::size_t, std::size_t) {
        for_chunks(10, 1, [&](std::size_t, std::size_t, std::size_t) { ++count; });
    });
    CHECK(count.load() == 100);
}

}
