#pragma once

// Per-component subproblem of the backfitting loop:
//
//   min_z  (1/2)||r - z||^2 + penalty(z~) + lambda_s ||z||_2   s.t. sum z = 0,
//
// solved as block_soft_threshold(center(inner_prox(r~))). For the slope-based
// modes the inner prox is computed through the change of variables
// z~ = A (s, w), with s the value at the first level and w the slopes between
// consecutive levels, so that the curvature penalty becomes a penalty on w
// alone.

#include <cstddef>
#include <span>
#include <vector>

#include "shapefit/covariate.hpp"
#include "shapefit/prox.hpp"
#include "shapefit/shape.hpp"

namespace shapefit {

/// (s, w): value at the first level and slopes between consecutive levels.
struct SlopeParam {
    double intercept = 0.0;
    std::vector<double> slopes;
};

/// Sum over interior levels of |slope_i - slope_{i-1}|. Zero for n <= 2.
double dc_seminorm(std::span<const double> z_sorted, std::span<const double> gaps);

/// Sum over interior levels of max(slope_{i-1} - slope_i, 0). Zero iff convex.
double ac_seminorm(std::span<const double> z_sorted, std::span<const double> gaps);

/// Divided differences (z_{i+1} - z_i) / gaps[i].
std::vector<double> slopes_of(std::span<const double> z_sorted, std::span<const double> gaps);

SlopeParam slope_param_of(std::span<const double> z_sorted, std::span<const double> gaps);

/// z~_1 = s, z~_i = s + sum_{k<i} w_k gaps[k].
std::vector<double> apply_A(const SlopeParam& param, std::span<const double> gaps);

/// (sum_i v_i, (gaps[k] * sum_{i>k} v_i)_k).
SlopeParam apply_A_transpose(std::span<const double> v, std::span<const double> gaps);

/// Largest eigenvalue of A^T C A (C = diag(weights), identity when empty),
/// by power iteration.
double operator_norm_sq(std::span<const double> gaps, std::span<const double> weights = {});

/// Largest eigenvalue of the slope block once the intercept is minimized out:
/// B^T C (I - 1 c^T / sum(c)) B, where B drops the first column of A. This is
/// the Lipschitz constant the inner loop steps with.
double profiled_operator_norm_sq(std::span<const double> gaps,
                                 std::span<const double> weights = {});

struct InnerOptions {
    double tol = 1e-8;
    int max_iter = 2000;
};

/// Warm-start state of one component: the last slope iterate and the cached
/// step size. Owned by the caller; reset() when the covariate changes.
struct InnerState {
    std::vector<double> slopes;
    double step = 0.0;

    void reset() {
        slopes.clear();
        step = 0.0;
    }
};

struct InnerResult {
    std::vector<double> fit;
    int iterations = 0;
    bool converged = true;
};

/// Scratch space for the inner solve; reused across calls.
struct InnerWorkspace {
    std::vector<double> x, y, grad, trial, resid, levels, metric, e_x, e_y, e_t;
    ChainProxWorkspace chain;
    PavWorkspace pav;
};

struct InnerStatus {
    int iterations = 0;
    bool converged = true;
};

/// Solves the inner prox in level space, writing z~ into `out` (length m).
/// `r_levels` are level means, `weights` the level multiplicities (empty for
/// unit weights). For slope modes the slope iterate is warm-started from and
/// written back to `state`.
InnerStatus inner_prox_solve_into(std::span<const double> r_levels, std::span<const double> gaps,
                                  std::span<const double> weights, const ShapeSpec& spec,
                                  const InnerOptions& opts, InnerState& state, InnerWorkspace& ws,
                                  std::span<double> out);

InnerResult inner_prox_solve(std::span<const double> r_sorted, std::span<const double> gaps,
                             const ShapeSpec& spec, const InnerOptions& opts = {},
                             std::span<const double> weights = {}, InnerState* state = nullptr);

struct SubproblemResult {
    std::vector<double> z;    // original row order
    double inner_norm = 0.0;  // ||center(inner prox)||_2 before thresholding
    int iterations = 0;
    bool converged = true;
};

/// Reusable solver for one covariate. Holds warm-start state and workspaces.
class ComponentSolver {
public:
    explicit ComponentSolver(const SortedCovariate& cov);

    /// Solves the subproblem for partial residual `r` (original order) and
    /// writes the component fit into `z`. Returns the inner status.
    InnerStatus solve(std::span<const double> r, const ShapeSpec& spec, const InnerOptions& opts,
                      std::span<double> z);

    /// ||center(inner prox)|| from the last solve; the smallest lambda_s that
    /// zeroes the component. Zero if the last solve was screened out.
    double last_inner_norm() const noexcept { return inner_norm_; }
    /// Fitted value per level from the last solve (after thresholding).
    const std::vector<double>& level_fit() const noexcept { return level_fit_; }

    const SortedCovariate& covariate() const noexcept { return *cov_; }
    InnerState& state() noexcept { return state_; }

private:
    const SortedCovariate* cov_;
    InnerState state_;
    InnerWorkspace ws_;
    std::vector<double> level_r_;
    std::vector<double> level_fit_;
    double inner_norm_ = 0.0;
    // Level means and ||center(inner prox)|| at the last full solve, reused to
    // certify zeros without solving (the prox is non-expansive).
    std::vector<double> anchor_r_;
    double anchor_norm_ = 0.0;
    ShapeSpec anchor_spec_;
    bool anchor_valid_ = false;
    double n_total_ = 0.0;
};

SubproblemResult solve_subproblem(std::span<const double> r, const SortedCovariate& cov,
                                  const ShapeSpec& spec, const InnerOptions& opts = {},
                                  InnerState* state = nullptr);

/// Penalty of one component given its level values (excluding lambda_s).
double shape_penalty(std::span<const double> level_values, std::span<const double> gaps,
                     const ShapeSpec& spec);

/// Largest violation of the mode's hard constraint (0 when feasible).
double shape_violation(std::span<const double> level_values, std::span<const double> gaps,
                       ShapeMode mode);

}  // namespace shapefit
