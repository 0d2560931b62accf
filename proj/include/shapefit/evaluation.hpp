#pragma once

// Support-recovery metrics, validation-set grid search, K-fold
// cross-validation and the replicated simulation study.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "shapefit/backfit.hpp"
#include "shapefit/datagen.hpp"

namespace shapefit {

struct MetricsReport {
    std::optional<double> precision;  // missing when the estimated support is empty
    double recall = 0.0;
    double model_size = 0.0;
    double test_mse = 0.0;
};

/// {j : ||Z_j||_2 > eps}.
std::vector<std::size_t> support_of(const AdditiveFit& fit, double eps = 1e-8);

/// Precision, recall and size of an estimated support against the truth.
/// Precision is 1 when both are empty and missing when only the estimate is.
MetricsReport support_metrics(std::span<const std::size_t> estimated,
                              std::span<const std::size_t> truth);

double mean_squared_error(std::span<const double> y, std::span<const double> yhat);

/// Cartesian grid of lambda_s values and shape-penalty values (lambda_d for
/// dc/approx_convex, lambda_t for tv/isotonic). Both sorted descending.
struct LambdaGrid {
    std::vector<double> lambda_s;
    std::vector<double> shape;

    std::size_t size() const noexcept { return lambda_s.size() * shape.size(); }
    /// Throws unless both lists are nonempty, nonnegative and descending.
    void validate() const;
};

struct GridOptions {
    std::size_t n_lambda_s = 30;
    std::size_t n_shape = 5;
    double lambda_s_ratio = 1e-3;  // smallest lambda_s / lambda_s_max
    double shape_hi = 1.0;         // largest shape penalty / shape_lambda_max
    double shape_lo = 1e-3;        // smallest shape penalty / shape_lambda_max
};

/// log-spaced values from hi down to lo (inclusive).
std::vector<double> log_spaced(double hi, double lo, std::size_t count);

/// Data-driven grid: shape penalties relative to Backfitter::shape_lambda_max,
/// lambda_s from the largest lambda_s_max over the shape values down to
/// lambda_s_ratio times it. Modes without a shape penalty get shape = {0}.
LambdaGrid default_grid(const Dataset& train, ShapeMode mode, const GridOptions& opts = {},
                        TieHandling ties = TieHandling::group);

/// Early exit along each descending lambda_s path: once validation MSE has
/// stayed above (1 + rise) times the path's best for `patience` consecutive
/// points, the rest of that path is skipped and recorded as +infinity.
/// patience = 0 fits every grid point.
struct PathStopping {
    std::size_t patience = 3;
    double rise = 0.1;
};

struct GridSelection {
    ShapeSpec best;
    AdditiveFit best_fit;
    double best_mse = 0.0;
    std::vector<double> validation_mse;  // shape-major: [shape index * |lambda_s| + s index]
    bool all_converged = true;  // over the points actually fitted
    std::size_t fitted_points = 0;
};

/// Fits the grid on `train` (warm-started down each lambda_s path) and keeps
/// the point with the smallest validation MSE; ties go to the larger lambda_s.
GridSelection grid_select(const Dataset& train, const Dataset& validation, const LambdaGrid& grid,
                          ShapeMode mode, const FitConfig& base = {},
                          const PathStopping& stop = {});

struct CvResult {
    ShapeSpec best;
    std::vector<double> cv_curve;  // mean validation MSE per grid point, shape-major;
                                   // +infinity where some fold stopped early
    AdditiveFit final_fit;         // refit on all samples at `best`
    std::vector<std::size_t> fold_of;
    bool all_converged = true;
};

/// Fold label per sample: a seeded shuffle dealt round-robin, so fold sizes
/// differ by at most one.
std::vector<std::size_t> kfold_assignment(std::size_t n, std::size_t k, std::uint64_t seed);

CvResult kfold_cv(const Dataset& data, std::size_t k, const LambdaGrid& grid, ShapeMode mode,
                  std::uint64_t seed, const FitConfig& base = {}, const PathStopping& stop = {});

struct EliminationRun {
    std::vector<std::size_t> support;
    std::vector<std::size_t> spurious;
};

/// Fraction of runs whose support contains no spurious index.
double spurious_elimination_rate(std::span<const EliminationRun> runs);

struct SummaryStat {
    double mean = 0.0;
    double se = 0.0;  // standard error of the mean
    std::size_t count = 0;
};

SummaryStat summarize(std::span<const double> values);

struct MethodSummary {
    ShapeMode mode = ShapeMode::dc;
    std::vector<MetricsReport> runs;
    SummaryStat precision, recall, model_size, test_mse;
};

struct StudyConfig {
    int scenario = 2;
    SimConfig sim;  // seed is the study seed; replicate r uses derive_seed(seed, r)
    std::size_t replicates = 20;
    std::vector<ShapeMode> methods{ShapeMode::dc, ShapeMode::tv};
    GridOptions grid;
    FitConfig base;
    PathStopping stop;
};

/// Simulated train/validation/test triplets per replicate, grid selection on
/// validation MSE, metrics on the test set.
std::vector<MethodSummary> run_study(const StudyConfig& cfg);

/// Worker count for evaluation fan-out: SHAPEFIT_THREADS if set, else the
/// hardware concurrency (at least 1).
std::size_t evaluation_threads();

}  // namespace shapefit
