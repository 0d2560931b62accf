#pragma once

// Exact univariate proximal operators and projections.
//
// Every operator here is a pure function of its inputs. The weighted
// overloads minimize (1/2) sum_i c_i (z_i - v_i)^2 + penalty(z) with
// strictly positive weights c; they are used when tied covariate values are
// pooled into a single level carrying the tie count as weight.

#include <span>
#include <vector>

namespace shapefit {

/// Penalty scale paired with a prox step size; the operator sees lambda * step.
struct Weights {
    double lambda = 0.0;
    double step = 1.0;

    Weights() = default;
    Weights(double lambda_, double step_);

    double effective() const noexcept { return lambda * step; }
};

/// Projection onto {z : sum z = 0}.
std::vector<double> center(std::span<const double> z);

/// (1 - lambda_s / ||r||)_+ r. Zero vector when ||r|| <= lambda_s.
std::vector<double> block_soft_threshold(std::span<const double> r, double lambda_s);

/// Scales r in place by the block soft-threshold factor and returns the factor.
double block_soft_threshold_inplace(std::span<double> r, double lambda_s);

/// argmin_z (1/2)||z - v||^2 + lambda * sum_i |z_i - z_{i-1}|.
std::vector<double> tv_prox(std::span<const double> v, double lambda);
std::vector<double> tv_prox(std::span<const double> v, Weights w);
std::vector<double> tv_prox(std::span<const double> v, std::span<const double> weights,
                            double lambda);

/// Projection onto the isotonic cone {z_1 <= ... <= z_n}.
std::vector<double> pav_isotonic(std::span<const double> v);
std::vector<double> pav_isotonic(std::span<const double> v, std::span<const double> weights);

/// Projection onto {0 <= z_1 <= ... <= z_n}, computed as max(pav_isotonic(v), 0).
std::vector<double> pav_isotonic_nonneg(std::span<const double> v);
std::vector<double> pav_isotonic_nonneg(std::span<const double> v,
                                        std::span<const double> weights);

/// argmin_z (1/2)||z - v||^2 + lambda * sum_i max(z_{i-1} - z_i, 0).
/// Only decreases are charged; the lambda -> infinity limit is pav_isotonic(v).
std::vector<double> oneside_tv_prox(std::span<const double> v, double lambda);
std::vector<double> oneside_tv_prox(std::span<const double> v, std::span<const double> weights,
                                    double lambda);

/// Scratch buffers for the chain dynamic program. Reusing one avoids
/// allocation inside inner iterations.
struct ChainProxWorkspace {
    struct Knot {
        double x;
        double d_slope;
        double d_offset;
    };
    std::vector<Knot> knots;
    std::vector<double> lower;
    std::vector<double> upper;
};

/// Exact O(n) solver for
///   argmin_z (1/2) sum_i c_i (z_i - v_i)^2
///            + sum_i [ lambda_up (z_i - z_{i-1})_+ + lambda_down (z_{i-1} - z_i)_+ ].
/// Empty `weights` means unit weights. `out` may alias `v`.
void chain_prox(std::span<const double> v, std::span<const double> weights, double lambda_down,
                double lambda_up, std::span<double> out, ChainProxWorkspace& ws);

/// In-place weighted PAV; `weights` may be empty. `scratch` is resized as needed.
struct PavWorkspace {
    std::vector<double> value;
    std::vector<double> weight;
    std::vector<std::size_t> length;
};
void pav_inplace(std::span<double> v, std::span<const double> weights, PavWorkspace& ws);

// Penalty values matching the operators above.
double tv_seminorm(std::span<const double> z);
double oneside_tv_seminorm(std::span<const double> z);

}  // namespace shapefit
