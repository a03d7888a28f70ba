#pragma once

#include <Eigen/Dense>
#include <vector>

namespace hrr {

struct LeastSquaresOptions {
    // Relative pivot threshold below which a column is treated as dependent.
    double rank_threshold = 1e-10;
    // Optional ridge penalty on the coefficients (0 = plain least squares).
    double ridge = 0.0;
};

struct LeastSquaresFit {
    Eigen::VectorXd coefficients;
    double residual_ss = 0.0; // sum of squared residuals on the given design
    Eigen::Index rank = 0;
};

// Minimizes ||A g - t||^2 through a complete orthogonal decomposition of the
// column-equilibrated design. Rank-deficient designs get the minimum-norm
// solution (in equilibrated coordinates). Throws std::invalid_argument on
// dimension mismatch or non-finite input.
LeastSquaresFit fit_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets,
                                  const LeastSquaresOptions& options = {});

// Same as above for every column of `targets`, sharing one factorization.
std::vector<LeastSquaresFit> fit_least_squares(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets,
                                               const LeastSquaresOptions& options = {});

// T_W: clips value to [-W, W].
double truncate(double value, double bound);

} // namespace hrr
