#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hrr/control.hpp"
#include "json.hpp"

namespace hrr {

// Coordinates of x in nonincreasing order, so f_1 = max coordinate.
std::vector<double> sorted_features(State x);

enum class BasisKind {
    psi1,       // {1, f_1..f_d}
    psi1g,      // psi1 plus the max-call payoff (f_1 - C)_+
    psi2,       // psi1 plus f_i f_j, i <= j
    psi3,       // psi2 plus f_i f_j f_k, i <= j <= k
    poly_gas,   // P_n(X2): x2^p, p = 0..n
    poly_joint  // P_n(X1, X2): x1^p x2^q, p + q <= n
};

// Ordered family of scalar regression features on the d-dimensional state.
// The constant function is always first.
class BasisFamily {
public:
    // Names: psi1, psi1g, psi2, psi3, P<n>(X2), P<n>(X1,X2). psi1g needs the strike.
    static BasisFamily build(std::string_view name, std::size_t dim, std::optional<double> strike = std::nullopt);
    static BasisFamily from_descriptor(const nlohmann::json& descriptor);

    const std::string& name() const { return name_; }
    BasisKind kind() const { return kind_; }
    std::size_t size() const { return size_; }
    std::size_t dim() const { return dim_; }
    int degree() const { return degree_; }
    const std::vector<std::string>& feature_names() const { return names_; }
    nlohmann::json descriptor() const;

    // Writes all size() features of x into out.
    void evaluate(State x, std::span<double> out) const;
    double feature(std::size_t k, State x) const;

private:
    BasisFamily() = default;
    void index_monomials();

    std::string name_;
    BasisKind kind_ = BasisKind::psi1;
    std::size_t dim_ = 0;
    int degree_ = 1;
    double strike_ = 0.0;
    std::size_t size_ = 0;
    std::vector<std::string> names_;
    // Monomial exponents for poly_joint, as (p, q) pairs in feature order.
    std::vector<std::pair<int, int>> exponents_;
};

// Cardinalities of the max-call families as closed-form counts.
std::size_t psi_cardinality(BasisKind kind, std::size_t dim);

// M x (K + R): basis features of each row of `states` (row-major, M x d)
// followed by the reinforcement columns in order.
Eigen::MatrixXd design_matrix(const BasisFamily& basis, std::span<const double> states,
                              const std::vector<std::span<const double>>& reinforced = {});

} // namespace hrr
