#pragma once

// Modified backfitting for sparse shape-constrained additive models.
//
// The solver minimizes
//
//   (1/2) sum_i (y_i - mean(y) - sum_j z_ij)^2 + sum_j [ pen_j(z~_j) + lambda_s ||z_j||_2 ]
//
// with every z_j centered and subject to its shape constraint, by cyclic
// block minimization. Each block update is an exact prox (see component.hpp),
// so the objective is non-increasing from sweep to sweep.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "shapefit/component.hpp"
#include "shapefit/covariate.hpp"
#include "shapefit/dataset.hpp"
#include "shapefit/shape.hpp"

namespace shapefit {

enum class SweepOrder { cyclic, randomized };

struct FitConfig {
    ShapeSpec shape;
    std::vector<ShapeSpec> per_component;  // overrides `shape` when nonempty (size p)
    double outer_tol = 1e-6;
    int max_sweeps = 200;
    InnerOptions inner;
    SweepOrder sweep_order = SweepOrder::cyclic;
    std::uint64_t seed = 0;
    TieHandling ties = TieHandling::group;
    bool active_set = true;
    int warmup_sweeps = 2;
    int active_sweeps = 5;
    // Loosen the inner tolerance (up to 1e-4) while sweeps still change the
    // objective by a lot; the final sweep always uses inner.tol.
    bool adaptive_inner = true;

    const ShapeSpec& spec_for(std::size_t j) const {
        return per_component.empty() ? shape : per_component[j];
    }
    void validate(std::size_t p) const;
};

struct ComponentFit {
    ShapeSpec spec;
    std::vector<double> knots_x;  // distinct training values, increasing
    std::vector<double> knots_f;  // fitted value at each knot
    double group_norm = 0.0;      // ||z_j||_2 over training rows
};

struct AdditiveFit {
    double intercept = 0.0;
    Matrix Z;  // n x p component fits in training row order
    std::vector<ComponentFit> components;
    std::vector<std::size_t> active_set;
    std::vector<double> objective_trace;  // objective after each sweep
    double objective = 0.0;
    int sweeps = 0;
    bool converged = false;
    bool inner_converged = true;  // every inner solve of the last sweep converged

    std::vector<double> fitted_values() const;
};

struct Prediction {
    std::vector<double> values;
    std::vector<std::size_t> out_of_range;  // per column: queries clamped to the boundary
};

/// Sorted covariates, residual and warm-start state for repeated fits on one
/// dataset (e.g. along a lambda path). Not thread-safe; use one per thread.
class Backfitter {
public:
    explicit Backfitter(const Dataset& data, TieHandling ties = TieHandling::group);
    // Solvers hold pointers into covs_.
    Backfitter(const Backfitter&) = delete;
    Backfitter& operator=(const Backfitter&) = delete;

    /// Runs backfitting from the current state (zero on construction, the
    /// previous solution afterwards).
    AdditiveFit run(const FitConfig& config);

    /// Zeroes all components. Inner-solver warm starts survive when
    /// keep_warm_start is set (useful when moving along a shape-penalty grid).
    void reset(bool keep_warm_start = false);

    /// Smallest lambda_s that zeroes every component at Z = 0 for the given
    /// shape (lambda_s of `spec` is ignored).
    double lambda_s_max(const ShapeSpec& spec);

    /// Smallest shape penalty at which every inner prox at Z = 0 collapses:
    /// affine for dc, constant for tv and isotonic (lambda_t). approx_convex
    /// reuses the dc value as its scale. Zero for modes without a penalty.
    double shape_lambda_max(ShapeMode mode) const;

    const Dataset& data() const noexcept { return *data_; }
    const std::vector<SortedCovariate>& covariates() const noexcept { return covs_; }
    double intercept() const noexcept { return mean_y_; }
    /// Running residual y - mean(y) - row sums of Z.
    const std::vector<double>& residual() const noexcept { return r_; }

private:
    double component_objective(std::size_t j, const ShapeSpec& spec) const;
    void update_component(std::size_t j, const ShapeSpec& spec, const InnerOptions& opts,
                          bool& inner_ok);

    const Dataset* data_;
    double mean_y_ = 0.0;
    std::vector<SortedCovariate> covs_;
    std::vector<ComponentSolver> solvers_;
    Matrix Z_;
    std::vector<double> r_;
    std::vector<double> z_new_;
    std::vector<double> penalty_;  // shape penalty per component at current Z
    std::vector<double> norm_;     // ||Z_j|| per component
};

/// Backfitting from Z = 0 with a fresh Backfitter.
AdditiveFit fit(const Dataset& data, const FitConfig& config);

/// Penalized objective recomputed from its definition for an arbitrary Z.
/// Hard constraints contribute nothing; see constraint_violation().
double objective(const Dataset& data, const Matrix& Z, const FitConfig& config);

/// Largest violation of any component's hard shape constraint.
double constraint_violation(const Dataset& data, const Matrix& Z, const FitConfig& config);

/// Piecewise-linear interpolation of each component between its knots;
/// queries outside the training range take the boundary value.
Prediction predict(const AdditiveFit& fit, const Matrix& Xnew);

/// Value of one component at x, clamped outside the knot range.
double interpolate(const ComponentFit& comp, double x, bool* clamped = nullptr);

}  // namespace shapefit
