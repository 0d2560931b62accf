#include "shapefit/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>

namespace shapefit {

namespace {

double quadrature_mean(const FunctionDescriptor& f) {
    // Midpoint rule; the step functions are exact up to one cell per break.
    constexpr int cells = 200000;
    const double h = (kDomainHigh - kDomainLow) / cells;
    double s = 0.0;
    for (int i = 0; i < cells; ++i)
        s += f.raw(kDomainLow + (i + 0.5) * h);
    return s / cells;
}

FunctionDescriptor centered(FunctionDescriptor::Kind kind, std::vector<double> params) {
    FunctionDescriptor f{kind, std::move(params), 0.0};
    f.offset = quadrature_mean(f);
    return f;
}

}  // namespace

double FunctionDescriptor::raw(double x) const {
    const auto& q = params;
    switch (kind) {
    case Kind::step: {
        const std::size_t levels = (q.size() + 1) / 2;
        std::size_t k = 0;
        while (k + 1 < levels && x >= q[k])
            ++k;
        return q[levels - 1 + k];
    }
    case Kind::sine: return q[0] * std::sin(q[1] * x);
    case Kind::cosine: return q[0] * std::cos(q[1] * x);
    case Kind::cubic: return q[0] * x * x * x;
    case Kind::gaussian_bump: {
        const double u = (x - q[1]) / q[2];
        return q[0] * std::exp(-0.5 * u * u);
    }
    case Kind::abs_value: return q[0] * std::abs(x - q[1]);
    case Kind::hinge: return q[0] * std::max(x - q[1], 0.0);
    case Kind::triangle: return q[0] * std::max(0.0, 1.0 - std::abs(x - q[1]) / q[2]);
    }
    return 0.0;
}

std::string to_string(FunctionDescriptor::Kind kind) {
    using K = FunctionDescriptor::Kind;
    switch (kind) {
    case K::step: return "step";
    case K::sine: return "sine";
    case K::cosine: return "cosine";
    case K::cubic: return "cubic";
    case K::gaussian_bump: return "gaussian_bump";
    case K::abs_value: return "abs_value";
    case K::hinge: return "hinge";
    case K::triangle: return "triangle";
    }
    return "unknown";
}

Scenario Scenario::make(int id) {
    using K = FunctionDescriptor::Kind;
    Scenario s;
    s.id = id;
    switch (id) {
    case 1:
        s.functions = {
            centered(K::step, {-1.0, 1.0, -1.2, 0.4, 1.5}),
            centered(K::step, {-1.5, 0.0, 1.5, 1.0, -1.0, 1.5, -0.5}),
            centered(K::step, {-0.5, 1.25, -1.0, 1.0, 0.0}),
            centered(K::step, {-1.25, 0.25, 1.75, 1.2, -0.6, 0.6, -1.2}),
        };
        break;
    case 2:
        s.functions = {
            centered(K::sine, {1.5, 1.2}),
            centered(K::cosine, {1.2, 1.0}),
            centered(K::cubic, {0.12}),
            centered(K::gaussian_bump, {2.5, 0.0, 0.6}),
        };
        break;
    case 3:
        s.functions = {
            centered(K::abs_value, {0.9, 0.0}),
            centered(K::sine, {1.5, 1.0}),
            centered(K::hinge, {1.2, 0.5}),
            centered(K::triangle, {1.5, -0.5, 1.5}),
        };
        break;
    default:
        throw std::invalid_argument("scenario id must be 1, 2 or 3");
    }
    return s;
}

double Scenario::signal(const double* x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < 4; ++j)
        s += functions[j](x[j]);
    return s;
}

double Scenario::signal_sd() const {
    static std::mutex mu;
    static std::array<double, 4> cache{};
    std::lock_guard lock(mu);
    if (id >= 1 && id <= 3 && cache[id] > 0.0)
        return cache[id];
    std::mt19937_64 rng(20170501ULL + static_cast<std::uint64_t>(id));
    std::uniform_real_distribution<double> unif(kDomainLow, kDomainHigh);
    constexpr int draws = 100000;
    double mean = 0.0, m2 = 0.0;
    double x[4];
    for (int i = 0; i < draws; ++i) {
        for (double& v : x)
            v = unif(rng);
        const double s = signal(x);
        const double delta = s - mean;
        mean += delta / (i + 1);
        m2 += delta * (s - mean);
    }
    const double sd = std::sqrt(m2 / (draws - 1));
    if (id >= 1 && id <= 3)
        cache[id] = sd;
    return sd;
}

void SimConfig::validate() const {
    if (n < 2)
        throw std::invalid_argument("simulation: n must be at least 2");
    if (p < 4)
        throw std::invalid_argument("simulation: p must be at least 4");
    if (!(snr > 0.0))
        throw std::invalid_argument("simulation: snr must be positive");
}

SimulatedData generate(const Scenario& scenario, const SimConfig& cfg) {
    cfg.validate();
    SimulatedData out;
    out.sigma = std::isinf(cfg.snr) ? 0.0 : scenario.signal_sd() / cfg.snr;
    out.support = {0, 1, 2, 3};

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(kDomainLow, kDomainHigh);
    Matrix X(cfg.n, cfg.p);
    for (std::size_t i = 0; i < cfg.n; ++i)
        for (std::size_t j = 0; j < cfg.p; ++j)
            X(i, j) = unif(rng);

    std::normal_distribution<double> noise(0.0, 1.0);
    out.signal.resize(cfg.n);
    out.data.y.resize(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        const double x4[4] = {X(i, 0), X(i, 1), X(i, 2), X(i, 3)};
        out.signal[i] = scenario.signal(x4);
        const double eps = out.sigma > 0.0 ? out.sigma * noise(rng) : 0.0;
        out.data.y[i] = out.signal[i] + eps;
    }
    out.data.X = std::move(X);
    out.data.names.reserve(cfg.p);
    for (std::size_t j = 0; j < cfg.p; ++j)
        out.data.names.push_back("x" + std::to_string(j + 1));
    return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

SimulatedSplits generate_splits(const Scenario& scenario, const SimConfig& cfg) {
    SimConfig c = cfg;
    SimulatedSplits out;
    c.seed = derive_seed(cfg.seed, 0);
    out.train = generate(scenario, c);
    c.seed = derive_seed(cfg.seed, 1);
    out.validation = generate(scenario, c);
    c.seed = derive_seed(cfg.seed, 2);
    out.test = generate(scenario, c);
    return out;
}

Dataset augment_spurious(const Dataset& data, std::size_t p_total, std::uint64_t seed) {
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    if (p_total < p)
        throw std::invalid_argument("augment_spurious: p_total (" + std::to_string(p_total) +
                                    ") is smaller than the current column count (" +
                                    std::to_string(p) + ")");
    Dataset out;
    out.y = data.y;
    out.X = Matrix(n, p_total);
    for (std::size_t j = 0; j < p; ++j) {
        const auto col = data.X.col(j);
        const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        const double range = *hi - *lo;
        auto dst = out.X.col(j);
        for (std::size_t i = 0; i < n; ++i)
            dst[i] = range > 0.0 ? (col[i] - *lo) / range : 0.0;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t j = p; j < p_total; ++j)
        for (double& v : out.X.col(j))
            v = unif(rng);

    out.names = data.names;
    if (out.names.empty())
        for (std::size_t j = 0; j < p; ++j)
            out.names.push_back("x" + std::to_string(j + 1));
    for (std::size_t j = p; j < p_total; ++j)
        out.names.push_back("spurious" + std::to_string(j - p + 1));
    return out;
}

}  // namespace shapefit
