#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace hrr {

// M trajectories of J+1 states in d dimensions, stored path-major.
class PathSet {
public:
    PathSet() = default;
    PathSet(std::size_t paths, std::size_t dates, std::size_t dim, std::uint64_t seed,
            std::vector<double> times, nlohmann::json params);

    std::size_t num_paths() const { return paths_; }
    std::size_t num_dates() const { return dates_; }
    int horizon() const { return static_cast<int>(dates_) - 1; }
    std::size_t dim() const { return dim_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<double>& times() const { return times_; }
    const nlohmann::json& params() const { return params_; }
    const std::vector<double>& data() const { return data_; }

    std::span<const double> state(std::size_t m, std::size_t j) const {
        return {data_.data() + (m * dates_ + j) * dim_, dim_};
    }
    std::span<double> state(std::size_t m, std::size_t j) {
        return {data_.data() + (m * dates_ + j) * dim_, dim_};
    }
    // Full trajectory of path m.
    std::span<double> path(std::size_t m) { return {data_.data() + m * dates_ * dim_, dates_ * dim_}; }
    std::span<const double> path(std::size_t m) const {
        return {data_.data() + m * dates_ * dim_, dates_ * dim_};
    }

    // Row-major (M x d) copy of all states at epoch j.
    std::vector<double> slice(std::size_t j) const;

    bool operator==(const PathSet&) const = default;

private:
    std::size_t paths_ = 0;
    std::size_t dates_ = 0;
    std::size_t dim_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<double> times_;
    nlohmann::json params_;
    std::vector<double> data_;
};

// Engine for path m of a run seeded with `seed`; streams for different
// (seed, m) pairs are decorrelated through a splitmix64 mix.
std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t m);

struct GbmParams {
    std::size_t dim = 2;
    double x0 = 100.0;
    double rate = 0.05;
    double dividend = 0.1;
    double sigma = 0.2;
    double maturity = 1.0;
    int dates = 9; // J
};

struct OilGasParams {
    double beta = 45.0;
    double alpha1 = 0.25;
    double alpha2 = 0.5;
    double sigma1 = 0.2;
    double sigma2 = 0.2;
    double rho_w = 0.6;
    double lambda = 2.0;
    double mu1 = 100.0;
    double mu2 = 100.0;
    double eta1 = 30.0;
    double eta2 = 30.0;
    double rho_j = 0.6;
    std::array<double, 2> x0{100.0, 100.0};
    int euler_steps = 365;
    double horizon_years = 1.0;
    bool floor_at_zero = false;
};

nlohmann::json to_json(const GbmParams& p);
nlohmann::json to_json(const OilGasParams& p);
void validate(const GbmParams& p);
void validate(const OilGasParams& p);

// Exact log-normal transitions on t_j = j T / J.
PathSet simulate_gbm(const GbmParams& params, std::size_t paths, std::uint64_t seed, std::size_t workers = 1);

// Daily Euler scheme with a shared Poisson jump signal. With stride > 1 only
// every stride-th fine-grid state is kept (J = dates, default floor(steps/stride));
// the result equals subsample() of the stride-1 output. If jump_counts is
// non-null it receives the number of jumps per path.
PathSet simulate_oil_gas(const OilGasParams& params, std::size_t paths, std::uint64_t seed,
                         int stride = 1, int dates = -1, std::size_t workers = 1,
                         std::vector<int>* jump_counts = nullptr);

// Keeps the initial state and every stride-th state, J+1 states per path.
PathSet subsample(const PathSet& paths, int stride, int dates = -1);

// Generates any contiguous block of a seeded path population; block
// boundaries do not change the generated paths.
class PathSource {
public:
    virtual ~PathSource() = default;
    virtual PathSet generate(std::size_t first, std::size_t count) const = 0;
    virtual std::uint64_t seed() const = 0;
    virtual std::size_t dim() const = 0;
    virtual int horizon() const = 0;
    virtual nlohmann::json descriptor() const = 0;
};

class GbmSource final : public PathSource {
public:
    GbmSource(GbmParams params, std::uint64_t seed, std::size_t workers = 1);
    PathSet generate(std::size_t first, std::size_t count) const override;
    std::uint64_t seed() const override { return seed_; }
    std::size_t dim() const override { return params_.dim; }
    int horizon() const override { return params_.dates; }
    nlohmann::json descriptor() const override { return to_json(params_); }

private:
    GbmParams params_;
    std::uint64_t seed_;
    std::size_t workers_;
};

class OilGasSource final : public PathSource {
public:
    OilGasSource(OilGasParams params, std::uint64_t seed, int stride, int dates, std::size_t workers = 1);
    PathSet generate(std::size_t first, std::size_t count) const override;
    std::uint64_t seed() const override { return seed_; }
    std::size_t dim() const override { return 2; }
    int horizon() const override { return dates_; }
    nlohmann::json descriptor() const override;

private:
    OilGasParams params_;
    std::uint64_t seed_;
    int stride_;
    int dates_;
    std::size_t workers_;
};

// Binary layout (native little-endian):
//   char[8] "HRRPATH1"; u64 paths, dates, dim, seed; u64 n; char[n] params JSON;
//   f64[dates] times; f64[paths*dates*dim] states (path-major).
void write_binary(const PathSet& paths, const std::filesystem::path& file);
PathSet read_binary(const std::filesystem::path& file);
// CSV with '#'-prefixed header lines for params and seed, then
// path,date,time,x1..xd rows. Values are printed with 17 significant digits.
void write_csv(const PathSet& paths, const std::filesystem::path& file);

} // namespace hrr
