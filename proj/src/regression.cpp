#include "hrr/regression.hpp"

#include <cmath>
#include <stdexcept>

namespace hrr {

std::vector<LeastSquaresFit> fit_least_squares(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets,
                                               const LeastSquaresOptions& options) {
    const Eigen::Index rows = design.rows();
    const Eigen::Index cols = design.cols();
    if (rows < 1 || cols < 1) throw std::invalid_argument("least squares: empty design");
    if (targets.rows() != rows) throw std::invalid_argument("least squares: targets length != design rows");
    if (!design.allFinite() || !targets.allFinite()) {
        throw std::invalid_argument("least squares: non-finite input");
    }
    if (options.ridge < 0.0) throw std::invalid_argument("least squares: ridge must be >= 0");

    Eigen::VectorXd scale = design.colwise().norm().transpose();
    for (Eigen::Index k = 0; k < cols; ++k) {
        if (scale(k) == 0.0) scale(k) = 1.0;
    }
    const Eigen::VectorXd inv_scale = scale.cwiseInverse();

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(options.rank_threshold);
    Eigen::MatrixXd scaled_solution;
    if (options.ridge > 0.0) {
        Eigen::MatrixXd A(rows + cols, cols);
        A.topRows(rows) = design * inv_scale.asDiagonal();
        A.bottomRows(cols) = (std::sqrt(options.ridge) * inv_scale).asDiagonal();
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(rows + cols, targets.cols());
        T.topRows(rows) = targets;
        cod.compute(A);
        scaled_solution = cod.solve(T);
    } else {
        cod.compute(design * inv_scale.asDiagonal());
        scaled_solution = cod.solve(targets);
    }

    std::vector<LeastSquaresFit> fits(static_cast<std::size_t>(targets.cols()));
    for (Eigen::Index c = 0; c < targets.cols(); ++c) {
        auto& fit = fits[static_cast<std::size_t>(c)];
        fit.coefficients = inv_scale.cwiseProduct(scaled_solution.col(c));
        fit.residual_ss = (design * fit.coefficients - targets.col(c)).squaredNorm();
        fit.rank = cod.rank();
    }
    return fits;
}

LeastSquaresFit fit_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets,
                                  const LeastSquaresOptions& options) {
    Eigen::MatrixXd T = targets;
    return std::move(fit_least_squares(design, T, options).front());
}

double truncate(double value, double bound) {
    if (!(bound > 0.0)) throw std::invalid_argument("truncate: bound must be > 0");
    if (std::abs(value) <= bound) return value;
    return value > 0.0 ? bound : -bound;
}

} // namespace hrr
