#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "hrr/regression.hpp"
#include "oracles.hpp"

using namespace hrr;

namespace {

Eigen::MatrixXd three_rows() {
    Eigen::MatrixXd A(3, 2);
    A << 1, 0, 1, 1, 1, 2;
    return A;
}

} // namespace

TEST_CASE("exact fit in the column span") {
    Eigen::VectorXd t(3);
    t << 1, 3, 5;
    const auto fit = fit_least_squares(three_rows(), t);
    CHECK(fit.coefficients(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.coefficients(1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.residual_ss < 1e-24);
    CHECK(fit.rank == 2);
}

TEST_CASE("hand-solved normal equations") {
    Eigen::VectorXd t(3);
    t << 0, 1, 1;
    const auto fit = fit_least_squares(three_rows(), t);
    CHECK(fit.coefficients(0) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(fit.coefficients(1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit.residual_ss == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("collinear design keeps the full-rank residual") {
    Eigen::MatrixXd A(3, 3);
    A << 1, 0, 0, 1, 1, 1, 1, 2, 2;
    Eigen::VectorXd t(3);
    t << 0, 1, 1;
    const auto full = fit_least_squares(A, t);
    const auto sub = fit_least_squares(three_rows(), t);
    CHECK(full.rank == 2);
    CHECK(full.coefficients.allFinite());
    CHECK(full.residual_ss == doctest::Approx(sub.residual_ss).epsilon(1e-10));
    CHECK(full.coefficients(1) == doctest::Approx(full.coefficients(2)).epsilon(1e-10));
}

TEST_CASE("agrees with extended-precision normal equations on badly scaled columns") {
    std::mt19937_64 eng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    const Eigen::Index M = 500;
    Eigen::MatrixXd A(M, 4);
    Eigen::VectorXd t(M);
    for (Eigen::Index m = 0; m < M; ++m) {
        const double x = 100.0 + 20.0 * n(eng);
        A(m, 0) = 1.0;
        A(m, 1) = x;
        A(m, 2) = x * x;
        A(m, 3) = 1e-3 * n(eng);
        t(m) = 3.0 - 0.1 * x + 0.002 * x * x + n(eng);
    }
    const auto fit = fit_least_squares(A, t);
    const Eigen::VectorXd ref = oracle::normal_equations(A, t);
    for (Eigen::Index k = 0; k < 4; ++k) {
        CHECK(fit.coefficients(k) == doctest::Approx(ref(k)).epsilon(1e-6));
    }
}

TEST_CASE("multiple right-hand sides share the factorization") {
    Eigen::MatrixXd T(3, 2);
    T << 1, 0, 3, 1, 5, 1;
    const auto fits = fit_least_squares(three_rows(), T);
    REQUIRE(fits.size() == 2);
    CHECK(fits[0].coefficients(1) == doctest::Approx(2.0));
    CHECK(fits[1].coefficients(0) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("ridge shrinks the coefficients") {
    Eigen::VectorXd t(3);
    t << 1, 3, 5;
    LeastSquaresOptions opt;
    opt.ridge = 1.0;
    const auto ridge = fit_least_squares(three_rows(), t, opt);
    const auto plain = fit_least_squares(three_rows(), t);
    CHECK(ridge.coefficients.norm() < plain.coefficients.norm());
}

TEST_CASE("input errors") {
    Eigen::VectorXd short_t(2);
    short_t << 1, 2;
    CHECK_THROWS_AS(fit_least_squares(three_rows(), short_t), std::invalid_argument);
    Eigen::VectorXd nan_t(3);
    nan_t << 1, std::numeric_limits<double>::quiet_NaN(), 2;
    CHECK_THROWS_AS(fit_least_squares(three_rows(), nan_t), std::invalid_argument);
}

TEST_CASE("truncation") {
    const double W = 4.0;
    CHECK(truncate(0.5 * W, W) == 0.5 * W);
    CHECK(truncate(2.0 * W, W) == W);
    CHECK(truncate(-2.0 * W, W) == -W);
}
