#include "hrr/basis.hpp"

#include <algorithm>
#include <functional>
#include <regex>
#include <stdexcept>

namespace hrr {

std::vector<double> sorted_features(State x) {
    std::vector<double> f(x.begin(), x.end());
    std::sort(f.begin(), f.end(), std::greater<>());
    return f;
}

std::size_t psi_cardinality(BasisKind kind, std::size_t d) {
    switch (kind) {
    case BasisKind::psi1: return d + 1;
    case BasisKind::psi1g: return d + 2;
    case BasisKind::psi2: return (d * d + 3 * d + 2) / 2;
    case BasisKind::psi3: return (d * d * d + 6 * d * d + 11 * d + 6) / 6;
    default: throw std::invalid_argument("psi_cardinality: not a max-call family");
    }
}

BasisFamily BasisFamily::build(std::string_view name, std::size_t dim, std::optional<double> strike) {
    if (dim < 1) throw std::invalid_argument("basis: dimension must be >= 1");
    BasisFamily b;
    b.name_ = std::string(name);
    b.dim_ = dim;
    const auto f = [](std::size_t i) { return "f" + std::to_string(i + 1); };

    static const std::regex poly_gas(R"(P(\d+)\(X2\))");
    static const std::regex poly_joint(R"(P(\d+)\(X1,X2\))");
    std::match_results<std::string_view::const_iterator> match;

    if (name == "psi1" || name == "psi1g" || name == "psi2" || name == "psi3") {
        b.kind_ = name == "psi1" ? BasisKind::psi1
                : name == "psi1g" ? BasisKind::psi1g
                : name == "psi2" ? BasisKind::psi2 : BasisKind::psi3;
        b.names_.push_back("1");
        for (std::size_t i = 0; i < dim; ++i) b.names_.push_back(f(i));
        if (b.kind_ == BasisKind::psi1g) {
            if (!strike) throw std::invalid_argument("basis psi1g needs the payoff strike");
            b.strike_ = *strike;
            b.names_.push_back("g");
        }
        if (b.kind_ == BasisKind::psi2 || b.kind_ == BasisKind::psi3) {
            b.degree_ = 2;
            for (std::size_t i = 0; i < dim; ++i)
                for (std::size_t j = i; j < dim; ++j) b.names_.push_back(f(i) + "*" + f(j));
        }
        if (b.kind_ == BasisKind::psi3) {
            b.degree_ = 3;
            for (std::size_t i = 0; i < dim; ++i)
                for (std::size_t j = i; j < dim; ++j)
                    for (std::size_t k = j; k < dim; ++k) b.names_.push_back(f(i) + "*" + f(j) + "*" + f(k));
        }
    } else if (std::regex_match(name.begin(), name.end(), match, poly_gas)) {
        if (dim != 2) throw std::invalid_argument("basis " + b.name_ + " needs a 2-dimensional state");
        b.kind_ = BasisKind::poly_gas;
        b.degree_ = std::stoi(match[1].str());
        for (int p = 0; p <= b.degree_; ++p) b.names_.push_back("x2^" + std::to_string(p));
    } else if (std::regex_match(name.begin(), name.end(), match, poly_joint)) {
        if (dim != 2) throw std::invalid_argument("basis " + b.name_ + " needs a 2-dimensional state");
        b.kind_ = BasisKind::poly_joint;
        b.degree_ = std::stoi(match[1].str());
        b.index_monomials();
    } else {
        throw std::invalid_argument("unknown basis family '" + b.name_ + "'");
    }
    b.size_ = b.names_.size();
    return b;
}

// Total degree ascending, then decreasing power of x1: 1, x1, x2, x1^2, x1 x2, x2^2, ...
void BasisFamily::index_monomials() {
    for (int n = 0; n <= degree_; ++n) {
        for (int p = n; p >= 0; --p) {
            exponents_.emplace_back(p, n - p);
            names_.push_back("x1^" + std::to_string(p) + "*x2^" + std::to_string(n - p));
        }
    }
}

BasisFamily BasisFamily::from_descriptor(const nlohmann::json& d) {
    std::optional<double> strike;
    if (d.contains("strike")) strike = d.at("strike").get<double>();
    return build(d.at("name").get<std::string>(), d.at("dim").get<std::size_t>(), strike);
}

nlohmann::json BasisFamily::descriptor() const {
    nlohmann::json d = {{"name", name_}, {"dim", dim_}, {"size", size_}};
    if (kind_ == BasisKind::psi1g) d["strike"] = strike_;
    return d;
}

void BasisFamily::evaluate(State x, std::span<double> out) const {
    if (x.size() != dim_) throw std::invalid_argument("basis: state dimension mismatch");
    if (out.size() < size_) throw std::invalid_argument("basis: output buffer too small");
    switch (kind_) {
    case BasisKind::poly_gas: {
        double v = 1.0;
        for (int p = 0; p <= degree_; ++p) {
            out[static_cast<std::size_t>(p)] = v;
            v *= x[1];
        }
        return;
    }
    case BasisKind::poly_joint: {
        // Small degrees only; direct powers keep each feature independent of the others.
        for (std::size_t k = 0; k < exponents_.size(); ++k) {
            double v = 1.0;
            for (int p = 0; p < exponents_[k].first; ++p) v *= x[0];
            for (int q = 0; q < exponents_[k].second; ++q) v *= x[1];
            out[k] = v;
        }
        return;
    }
    default: break;
    }

    // Max-call families work on sorted coordinates.
    const std::size_t d = dim_;
    double sorted_buf[64];
    std::vector<double> heap;
    double* f = sorted_buf;
    if (d > 64) {
        heap.resize(d);
        f = heap.data();
    }
    std::copy(x.begin(), x.end(), f);
    std::sort(f, f + d, std::greater<>());

    std::size_t c = 0;
    out[c++] = 1.0;
    for (std::size_t i = 0; i < d; ++i) out[c++] = f[i];
    if (kind_ == BasisKind::psi1g) out[c++] = std::max(f[0] - strike_, 0.0);
    if (kind_ == BasisKind::psi2 || kind_ == BasisKind::psi3) {
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) out[c++] = f[i] * f[j];
    }
    if (kind_ == BasisKind::psi3) {
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j)
                for (std::size_t k = j; k < d; ++k) out[c++] = f[i] * f[j] * f[k];
    }
}

double BasisFamily::feature(std::size_t k, State x) const {
    if (k >= size_) throw std::out_of_range("basis: feature index out of range");
    std::vector<double> all(size_);
    evaluate(x, all);
    return all[k];
}

Eigen::MatrixXd design_matrix(const BasisFamily& basis, std::span<const double> states,
                              const std::vector<std::span<const double>>& reinforced) {
    const std::size_t d = basis.dim();
    if (states.size() % d != 0) throw std::invalid_argument("design_matrix: state array is not M x d");
    const std::size_t rows = states.size() / d;
    for (const auto& col : reinforced) {
        if (col.size() != rows) throw std::invalid_argument("design_matrix: reinforcement column length != M");
    }
    const std::size_t K = basis.size();
    Eigen::MatrixXd A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(K + reinforced.size()));
    std::vector<double> row(K);
    for (std::size_t m = 0; m < rows; ++m) {
        basis.evaluate(states.subspan(m * d, d), row);
        const auto r = static_cast<Eigen::Index>(m);
        for (std::size_t k = 0; k < K; ++k) A(r, static_cast<Eigen::Index>(k)) = row[k];
        for (std::size_t k = 0; k < reinforced.size(); ++k) {
            A(r, static_cast<Eigen::Index>(K + k)) = reinforced[k][m];
        }
    }
    return A;
}

} // namespace hrr
