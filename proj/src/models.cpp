#include "hrr/models.hpp"

#include "hrr/parallel.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace hrr {

PathSet::PathSet(std::size_t paths, std::size_t dates, std::size_t dim, std::uint64_t seed,
                 std::vector<double> times, nlohmann::json params)
    : paths_(paths), dates_(dates), dim_(dim), seed_(seed), times_(std::move(times)),
      params_(std::move(params)), data_(paths * dates * dim, 0.0) {
    if (times_.size() != dates_) throw std::invalid_argument("PathSet: time grid size mismatch");
}

std::vector<double> PathSet::slice(std::size_t j) const {
    std::vector<double> out(paths_ * dim_);
    for (std::size_t m = 0; m < paths_; ++m) {
        const auto s = state(m, j);
        std::copy(s.begin(), s.end(), out.begin() + static_cast<std::ptrdiff_t>(m * dim_));
    }
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t m) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(m + 0x632be59bd9b4e019ULL)));
}

nlohmann::json to_json(const GbmParams& p) {
    return {{"model", "gbm"},       {"dim", p.dim},     {"x0", p.x0},
            {"rate", p.rate},       {"dividend", p.dividend}, {"sigma", p.sigma},
            {"maturity", p.maturity}, {"dates", p.dates}};
}

nlohmann::json to_json(const OilGasParams& p) {
    return {{"model", "oil_gas"}, {"beta", p.beta},     {"alpha1", p.alpha1}, {"alpha2", p.alpha2},
            {"sigma1", p.sigma1}, {"sigma2", p.sigma2}, {"rho_w", p.rho_w},   {"lambda", p.lambda},
            {"mu1", p.mu1},       {"mu2", p.mu2},       {"eta1", p.eta1},     {"eta2", p.eta2},
            {"rho_j", p.rho_j},   {"x0", p.x0},         {"euler_steps", p.euler_steps},
            {"horizon_years", p.horizon_years}, {"floor_at_zero", p.floor_at_zero}};
}

void validate(const GbmParams& p) {
    if (p.dim < 1) throw std::invalid_argument("gbm: dim must be >= 1");
    if (!(p.x0 > 0.0)) throw std::invalid_argument("gbm: x0 must be > 0");
    if (!(p.sigma >= 0.0)) throw std::invalid_argument("gbm: sigma must be >= 0");
    if (!(p.maturity > 0.0)) throw std::invalid_argument("gbm: maturity must be > 0");
    if (p.dates < 1) throw std::invalid_argument("gbm: dates must be >= 1");
}

void validate(const OilGasParams& p) {
    if (p.euler_steps < 1) throw std::invalid_argument("oil_gas: euler_steps must be >= 1");
    if (!(p.horizon_years > 0.0)) throw std::invalid_argument("oil_gas: horizon_years must be > 0");
    if (p.rho_w < 0.0 || p.rho_w > 1.0) throw std::invalid_argument("oil_gas: rho_w must be in [0,1]");
    if (p.rho_j < 0.0 || p.rho_j > 1.0) throw std::invalid_argument("oil_gas: rho_j must be in [0,1]");
    if (p.lambda < 0.0) throw std::invalid_argument("oil_gas: lambda must be >= 0");
    if (p.sigma1 < 0.0 || p.sigma2 < 0.0 || p.eta1 < 0.0 || p.eta2 < 0.0) {
        throw std::invalid_argument("oil_gas: volatilities must be >= 0");
    }
}

// ---------------------------------------------------------------------------
// GBM

namespace {

void fill_gbm(const GbmParams& p, std::uint64_t seed, std::size_t first, PathSet& out, std::size_t workers) {
    const double dt = p.maturity / p.dates;
    const double drift = (p.rate - p.dividend - 0.5 * p.sigma * p.sigma) * dt;
    const double vol = p.sigma * std::sqrt(dt);
    const std::size_t d = p.dim;
    parallel_for(out.num_paths(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t m = begin; m < end; ++m) {
            auto eng = path_engine(seed, first + m);
            std::normal_distribution<double> normal(0.0, 1.0);
            auto x = out.path(m);
            for (std::size_t k = 0; k < d; ++k) x[k] = p.x0;
            for (int j = 1; j <= p.dates; ++j) {
                const std::size_t prev = static_cast<std::size_t>(j - 1) * d;
                const std::size_t cur = static_cast<std::size_t>(j) * d;
                for (std::size_t k = 0; k < d; ++k) {
                    x[cur + k] = x[prev + k] * std::exp(drift + vol * normal(eng));
                }
            }
        }
    });
}

std::vector<double> gbm_times(const GbmParams& p) {
    std::vector<double> t(static_cast<std::size_t>(p.dates) + 1);
    for (int j = 0; j <= p.dates; ++j) t[static_cast<std::size_t>(j)] = j * (p.maturity / p.dates);
    return t;
}

} // namespace

PathSet simulate_gbm(const GbmParams& params, std::size_t paths, std::uint64_t seed, std::size_t workers) {
    return GbmSource(params, seed, workers).generate(0, paths);
}

GbmSource::GbmSource(GbmParams params, std::uint64_t seed, std::size_t workers)
    : params_(params), seed_(seed), workers_(workers) {
    validate(params_);
}

PathSet GbmSource::generate(std::size_t first, std::size_t count) const {
    if (count < 1) throw std::invalid_argument("gbm: number of paths must be >= 1");
    PathSet out(count, static_cast<std::size_t>(params_.dates) + 1, params_.dim, seed_, gbm_times(params_),
                to_json(params_));
    fill_gbm(params_, seed_, first, out, workers_);
    return out;
}

// ---------------------------------------------------------------------------
// Oil / gas jump diffusion

namespace {

int resolve_dates(const OilGasParams& p, int stride, int dates) {
    if (stride < 1) throw std::invalid_argument("oil_gas: stride must be >= 1");
    if (dates < 0) dates = p.euler_steps / stride;
    if (static_cast<long>(stride) * dates > p.euler_steps) {
        throw std::invalid_argument("oil_gas: stride * dates overruns the Euler grid");
    }
    return dates;
}

void fill_oil_gas(const OilGasParams& p, std::uint64_t seed, std::size_t first, int stride, int dates,
                  PathSet& out, std::size_t workers, std::vector<int>* jumps) {
    const double dt = p.horizon_years / p.euler_steps;
    const double sqdt = std::sqrt(dt);
    const double jump_prob = 1.0 - std::exp(-p.lambda * dt);
    const double rw = std::sqrt(1.0 - p.rho_w * p.rho_w);
    const double rj = std::sqrt(1.0 - p.rho_j * p.rho_j);
    const int last_step = stride * dates;
    parallel_for(out.num_paths(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t m = begin; m < end; ++m) {
            auto eng = path_engine(seed, first + m);
            std::normal_distribution<double> normal(0.0, 1.0);
            std::uniform_real_distribution<double> uniform(0.0, 1.0);
            double x1 = p.x0[0];
            double x2 = p.x0[1];
            int count = 0;
            auto s0 = out.state(m, 0);
            s0[0] = x1;
            s0[1] = x2;
            for (int step = 1; step <= last_step; ++step) {
                const double z1 = normal(eng);
                const double z2 = p.rho_w * z1 + rw * normal(eng);
                double n1 = x1 + p.alpha1 * (p.beta - x1) * dt + p.sigma1 * x1 * sqdt * z1;
                double n2 = x2 + p.alpha2 * (x1 - x2) * dt + p.sigma2 * x2 * sqdt * z2;
                if (uniform(eng) < jump_prob) {
                    const double g1 = normal(eng);
                    const double g2 = p.rho_j * g1 + rj * normal(eng);
                    n1 = p.mu1 + p.eta1 * g1;
                    n2 = p.mu2 + p.eta2 * g2;
                    ++count;
                }
                if (p.floor_at_zero) {
                    n1 = std::max(n1, 0.0);
                    n2 = std::max(n2, 0.0);
                }
                x1 = n1;
                x2 = n2;
                if (step % stride == 0) {
                    auto s = out.state(m, static_cast<std::size_t>(step / stride));
                    s[0] = x1;
                    s[1] = x2;
                }
            }
            if (jumps) (*jumps)[m] = count;
        }
    });
}

std::vector<double> stride_times(int stride, int dates) {
    std::vector<double> t(static_cast<std::size_t>(dates) + 1);
    for (int j = 0; j <= dates; ++j) t[static_cast<std::size_t>(j)] = static_cast<double>(j) * stride;
    return t;
}

nlohmann::json oil_gas_descriptor(const OilGasParams& p, int stride, int dates) {
    auto d = to_json(p);
    d["stride"] = stride;
    d["dates"] = dates;
    return d;
}

} // namespace

PathSet simulate_oil_gas(const OilGasParams& params, std::size_t paths, std::uint64_t seed, int stride,
                         int dates, std::size_t workers, std::vector<int>* jump_counts) {
    validate(params);
    dates = resolve_dates(params, stride, dates);
    if (paths < 1) throw std::invalid_argument("oil_gas: number of paths must be >= 1");
    PathSet out(paths, static_cast<std::size_t>(dates) + 1, 2, seed, stride_times(stride, dates),
                oil_gas_descriptor(params, stride, dates));
    if (jump_counts) jump_counts->assign(paths, 0);
    fill_oil_gas(params, seed, 0, stride, dates, out, workers, jump_counts);
    return out;
}

PathSet subsample(const PathSet& paths, int stride, int dates) {
    if (stride < 1) throw std::invalid_argument("subsample: stride must be >= 1");
    const int fine = paths.horizon();
    if (dates < 0) dates = fine / stride;
    if (static_cast<long>(stride) * dates > fine) {
        throw std::invalid_argument("subsample: stride * dates overruns the path grid");
    }
    std::vector<double> times;
    for (int j = 0; j <= dates; ++j) times.push_back(paths.times()[static_cast<std::size_t>(j * stride)]);
    auto params = paths.params();
    if (params.is_object()) {
        const int base = params.value("stride", 1);
        params["stride"] = base * stride;
        params["dates"] = dates;
    }
    PathSet out(paths.num_paths(), static_cast<std::size_t>(dates) + 1, paths.dim(), paths.seed(),
                std::move(times), std::move(params));
    for (std::size_t m = 0; m < paths.num_paths(); ++m) {
        for (int j = 0; j <= dates; ++j) {
            const auto src = paths.state(m, static_cast<std::size_t>(j * stride));
            auto dst = out.state(m, static_cast<std::size_t>(j));
            std::copy(src.begin(), src.end(), dst.begin());
        }
    }
    return out;
}

OilGasSource::OilGasSource(OilGasParams params, std::uint64_t seed, int stride, int dates, std::size_t workers)
    : params_(params), seed_(seed), stride_(stride), dates_(0), workers_(workers) {
    validate(params_);
    dates_ = resolve_dates(params_, stride, dates);
}

PathSet OilGasSource::generate(std::size_t first, std::size_t count) const {
    if (count < 1) throw std::invalid_argument("oil_gas: number of paths must be >= 1");
    PathSet out(count, static_cast<std::size_t>(dates_) + 1, 2, seed_, stride_times(stride_, dates_),
                oil_gas_descriptor(params_, stride_, dates_));
    fill_oil_gas(params_, seed_, first, stride_, dates_, out, workers_, nullptr);
    return out;
}

nlohmann::json OilGasSource::descriptor() const { return oil_gas_descriptor(params_, stride_, dates_); }

// ---------------------------------------------------------------------------
// I/O

namespace {

constexpr char kMagic[8] = {'H', 'R', 'R', 'P', 'A', 'T', 'H', '1'};

void put_u64(std::ofstream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t get_u64(std::ifstream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

} // namespace

void write_binary(const PathSet& paths, const std::filesystem::path& file) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + file.string() + " for writing");
    os.write(kMagic, sizeof kMagic);
    put_u64(os, paths.num_paths());
    put_u64(os, paths.num_dates());
    put_u64(os, paths.dim());
    put_u64(os, paths.seed());
    const std::string params = paths.params().dump();
    put_u64(os, params.size());
    os.write(params.data(), static_cast<std::streamsize>(params.size()));
    os.write(reinterpret_cast<const char*>(paths.times().data()),
             static_cast<std::streamsize>(paths.times().size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(paths.data().data()),
             static_cast<std::streamsize>(paths.data().size() * sizeof(double)));
    if (!os) throw std::runtime_error("write failed for " + file.string());
}

PathSet read_binary(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + file.string());
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw std::runtime_error(file.string() + " is not a path file");
    }
    const auto paths = get_u64(is);
    const auto dates = get_u64(is);
    const auto dim = get_u64(is);
    const auto seed = get_u64(is);
    std::string params(get_u64(is), '\0');
    is.read(params.data(), static_cast<std::streamsize>(params.size()));
    std::vector<double> times(dates);
    is.read(reinterpret_cast<char*>(times.data()), static_cast<std::streamsize>(dates * sizeof(double)));
    PathSet out(paths, dates, dim, seed, std::move(times), nlohmann::json::parse(params));
    for (std::size_t m = 0; m < paths; ++m) {
        auto p = out.path(m);
        is.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
    }
    if (!is) throw std::runtime_error(file.string() + " is truncated");
    return out;
}

void write_csv(const PathSet& paths, const std::filesystem::path& file) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot open " + file.string() + " for writing");
    os << "# params " << paths.params().dump() << '\n';
    os << "# seed " << paths.seed() << '\n';
    os << "path,date,time";
    for (std::size_t k = 0; k < paths.dim(); ++k) os << ",x" << (k + 1);
    os << '\n' << std::setprecision(17);
    for (std::size_t m = 0; m < paths.num_paths(); ++m) {
        for (std::size_t j = 0; j < paths.num_dates(); ++j) {
            os << m << ',' << j << ',' << paths.times()[j];
            for (double v : paths.state(m, j)) os << ',' << v;
            os << '\n';
        }
    }
}

} // namespace hrr
