#pragma once

// Synthetic additive-regression scenarios and spurious-variable augmentation.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "shapefit/dataset.hpp"

namespace shapefit {

/// A univariate test function on [-2.5, 2.5], centered by `offset`.
struct FunctionDescriptor {
    enum class Kind { step, sine, cosine, cubic, gaussian_bump, abs_value, hinge, triangle };

    Kind kind = Kind::sine;
    // step: breaks b_1 < ... < b_{k-1} followed by k levels.
    // sine/cosine: amplitude, frequency.  cubic: coefficient.
    // gaussian_bump: height, center, width.  abs_value: scale, center.
    // hinge: scale, knot.  triangle: height, center, half-width.
    std::vector<double> params;
    double offset = 0.0;  // subtracted so the mean under Uniform(-2.5, 2.5) is zero

    double raw(double x) const;
    double operator()(double x) const { return raw(x) - offset; }

    bool is_piecewise_constant() const noexcept { return kind == Kind::step; }
    bool is_piecewise_linear() const noexcept {
        return kind == Kind::abs_value || kind == Kind::hinge || kind == Kind::triangle;
    }
    bool is_smooth() const noexcept {
        return kind == Kind::sine || kind == Kind::cosine || kind == Kind::cubic ||
               kind == Kind::gaussian_bump;
    }
};

std::string to_string(FunctionDescriptor::Kind kind);

inline constexpr double kDomainLow = -2.5;
inline constexpr double kDomainHigh = 2.5;

/// Four nonzero components on covariates 0..3; every other covariate is noise.
struct Scenario {
    int id = 1;
    std::array<FunctionDescriptor, 4> functions;

    /// 1: piecewise constant, 2: smooth, 3: f_2 smooth and the rest piecewise
    /// linear. Throws for other ids.
    static Scenario make(int id);

    double signal(const double* x_row_first4) const;

    /// Standard deviation of the noiseless signal under Uniform(-2.5, 2.5)^4,
    /// from a fixed 1e5-point Monte Carlo draw (computed once per id).
    double signal_sd() const;
};

struct SimConfig {
    std::size_t n = 100;
    std::size_t p = 200;
    double snr = 5.0;  // sd(signal) / sigma; infinity means no noise
    std::uint64_t seed = 0;

    void validate() const;
};

struct SimulatedData {
    Dataset data;
    std::vector<std::size_t> support;  // {0, 1, 2, 3}
    std::vector<double> signal;        // noiseless response
    double sigma = 0.0;
};

/// x_ij ~ Uniform(-2.5, 2.5), y_i = sum_{j<4} f_j(x_ij) + N(0, sigma^2).
/// Deterministic in cfg.seed.
SimulatedData generate(const Scenario& scenario, const SimConfig& cfg);

struct SimulatedSplits {
    SimulatedData train, validation, test;
};

/// Three independent draws of the same size, seeded from cfg.seed.
SimulatedSplits generate_splits(const Scenario& scenario, const SimConfig& cfg);

/// Rescales every column of `data` to [0, 1] and appends p_total - p
/// Uniform(0, 1) columns. Constant columns map to 0.
Dataset augment_spurious(const Dataset& data, std::size_t p_total, std::uint64_t seed);

/// Derives independent sub-seeds (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace shapefit
