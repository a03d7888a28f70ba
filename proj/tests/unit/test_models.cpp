#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "hrr/models.hpp"

using namespace hrr;

TEST_CASE("gbm with zero volatility follows the drift") {
    GbmParams p;
    p.sigma = 0.0;
    const auto paths = simulate_gbm(p, 50, 7);
    for (std::size_t m = 0; m < paths.num_paths(); ++m) {
        for (std::size_t k = 0; k < p.dim; ++k) {
            CHECK(paths.state(m, 9)[k] == doctest::Approx(100.0 * std::exp(-0.05)).epsilon(1e-12));
        }
    }
    CHECK(paths.state(0, 9)[0] == doctest::Approx(95.1229).epsilon(1e-5));
}

TEST_CASE("gbm terminal mean matches the closed form") {
    GbmParams p;
    const std::size_t M = 100000;
    const auto paths = simulate_gbm(p, M, 11);
    for (std::size_t k = 0; k < p.dim; ++k) {
        double sum = 0.0;
        double sq = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            const double v = paths.state(m, 9)[k];
            sum += v;
            sq += v * v;
        }
        const double mean = sum / M;
        const double se = std::sqrt((sq / M - mean * mean) / M);
        CHECK(std::abs(mean - 100.0 * std::exp((p.rate - p.dividend) * p.maturity)) < 4.0 * se);
    }
}

TEST_CASE("gbm is deterministic and independent of worker count") {
    GbmParams p;
    p.dim = 3;
    const auto a = simulate_gbm(p, 1000, 5, 1);
    const auto b = simulate_gbm(p, 1000, 5, 4);
    CHECK(a == b);
    CHECK(!(a == simulate_gbm(p, 1000, 6)));
    GbmSource source(p, 5);
    const auto block = source.generate(300, 200);
    for (std::size_t m = 0; m < 200; ++m) {
        const auto x = block.path(m);
        const auto y = a.path(300 + m);
        CHECK(std::equal(x.begin(), x.end(), y.begin()));
    }
}

TEST_CASE("oil/gas without noise or jumps follows the mean-reversion ODE") {
    OilGasParams p;
    p.lambda = 0.0;
    p.sigma1 = 0.0;
    p.sigma2 = 0.0;
    const auto paths = simulate_oil_gas(p, 3, 1);
    CHECK(paths.horizon() == 365);
    const double exact = 45.0 + 55.0 * std::exp(-0.25);
    CHECK(exact == doctest::Approx(87.834).epsilon(1e-5));
    CHECK(std::abs(paths.state(0, 365)[0] - exact) < 0.1);
}

TEST_CASE("oil/gas jump counts average lambda T") {
    OilGasParams p;
    const std::size_t M = 100000;
    std::vector<int> counts;
    simulate_oil_gas(p, M, 3, 365, 1, 1, &counts);
    const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / M;
    double var = 0.0;
    for (int c : counts) var += (c - mean) * (c - mean);
    var /= (M - 1);
    CHECK(std::abs(mean - 2.0) < 4.0 * std::sqrt(var / M));
}

TEST_CASE("oil/gas Brownian increments have the stated correlation") {
    OilGasParams p;
    p.lambda = 0.0;
    const std::size_t M = 100000;
    const auto paths = simulate_oil_gas(p, M, 9, 1, 1);
    std::vector<double> a(M), b(M);
    for (std::size_t m = 0; m < M; ++m) {
        a[m] = paths.state(m, 1)[0] - paths.state(m, 0)[0];
        b[m] = paths.state(m, 1)[1] - paths.state(m, 0)[1];
    }
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / M;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / M;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        sab += (a[m] - ma) * (b[m] - mb);
        saa += (a[m] - ma) * (a[m] - ma);
        sbb += (b[m] - mb) * (b[m] - mb);
    }
    const double rho = sab / std::sqrt(saa * sbb);
    const double se = (1.0 - 0.36) / std::sqrt(static_cast<double>(M));
    CHECK(std::abs(rho - 0.6) < 4.0 * se);
}

TEST_CASE("subsampling") {
    OilGasParams p;
    const auto fine = simulate_oil_gas(p, 20, 4);
    const auto weekly = subsample(fine, 7);
    CHECK(weekly.num_dates() == 53);
    CHECK(weekly.horizon() == 52);
    CHECK(weekly.state(3, 52)[1] == fine.state(3, 364)[1]);
    CHECK(simulate_oil_gas(p, 20, 4, 7) == weekly);
    CHECK(simulate_oil_gas(p, 20, 4, 1, 365, 3) == fine);

    const auto same = subsample(fine, 1, 10);
    CHECK(same.num_dates() == 11);
    for (std::size_t j = 0; j <= 10; ++j) CHECK(same.state(5, j)[0] == fine.state(5, j)[0]);

    OilGasSource source(p, 4, 7, 52);
    const auto block = source.generate(10, 5);
    for (std::size_t m = 0; m < 5; ++m) CHECK(block.state(m, 52)[0] == weekly.state(10 + m, 52)[0]);
}

TEST_CASE("binary round trip") {
    GbmParams p;
    const auto paths = simulate_gbm(p, 17, 3);
    const auto file = std::filesystem::temp_directory_path() / "hrr_paths_roundtrip.bin";
    write_binary(paths, file);
    CHECK(read_binary(file) == paths);
    std::filesystem::remove(file);
}

TEST_CASE("parameter validation") {
    GbmParams bad;
    bad.sigma = -0.1;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    OilGasParams og;
    og.rho_w = 1.5;
    CHECK_THROWS_AS(validate(og), std::invalid_argument);
    CHECK_THROWS(simulate_gbm(GbmParams{}, 0, 1));
}
