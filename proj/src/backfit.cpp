#include "shapefit/backfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace shapefit {

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
    Matrix out(idx.size(), cols_);
    for (std::size_t j = 0; j < cols_; ++j)
        for (std::size_t i = 0; i < idx.size(); ++i)
            out(i, j) = (*this)(idx[i], j);
    return out;
}

void Dataset::validate() const {
    if (X.rows() != y.size())
        throw std::invalid_argument("dataset: X has " + std::to_string(X.rows()) +
                                    " rows but y has " + std::to_string(y.size()) + " entries");
    if (y.size() < 2)
        throw std::invalid_argument("dataset: at least two samples are required");
    if (!names.empty() && names.size() != X.cols())
        throw std::invalid_argument("dataset: column name count does not match X");
    for (double v : X.data())
        if (!std::isfinite(v))
            throw std::invalid_argument("dataset: non-finite value in X");
    for (double v : y)
        if (!std::isfinite(v))
            throw std::invalid_argument("dataset: non-finite value in y");
}

Dataset Dataset::select_rows(std::span<const std::size_t> idx) const {
    Dataset out;
    out.X = X.select_rows(idx);
    out.y.reserve(idx.size());
    for (std::size_t i : idx)
        out.y.push_back(y[i]);
    out.names = names;
    return out;
}

void FitConfig::validate(std::size_t p) const {
    shape.validate();
    if (!per_component.empty()) {
        if (per_component.size() != p)
            throw std::invalid_argument("FitConfig: per-component shapes must cover every column");
        for (const auto& s : per_component)
            s.validate();
    }
    if (!(outer_tol > 0.0) || !(inner.tol > 0.0))
        throw std::invalid_argument("FitConfig: tolerances must be positive");
    if (max_sweeps < 1 || inner.max_iter < 1)
        throw std::invalid_argument("FitConfig: iteration caps must be at least 1");
    if (warmup_sweeps < 0 || active_sweeps < 0)
        throw std::invalid_argument("FitConfig: active-set schedule must be nonnegative");
}

std::vector<double> AdditiveFit::fitted_values() const {
    std::vector<double> out(Z.rows(), intercept);
    for (std::size_t j = 0; j < Z.cols(); ++j) {
        const auto col = Z.col(j);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += col[i];
    }
    return out;
}

Backfitter::Backfitter(const Dataset& data, TieHandling ties) : data_(&data) {
    data.validate();
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    mean_y_ = std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(n);
    covs_.reserve(p);
    for (std::size_t j = 0; j < p; ++j)
        covs_.push_back(SortedCovariate::from_column(data.X.col(j), ties));
    solvers_.reserve(p);
    for (std::size_t j = 0; j < p; ++j)
        solvers_.emplace_back(covs_[j]);
    Z_ = Matrix(n, p);
    r_.resize(n);
    z_new_.resize(n);
    penalty_.assign(p, 0.0);
    norm_.assign(p, 0.0);
    reset();
}

void Backfitter::reset(bool keep_warm_start) {
    Z_ = Matrix(data_->n(), data_->p());
    for (std::size_t i = 0; i < r_.size(); ++i)
        r_[i] = data_->y[i] - mean_y_;
    std::fill(penalty_.begin(), penalty_.end(), 0.0);
    std::fill(norm_.begin(), norm_.end(), 0.0);
    if (!keep_warm_start)
        for (auto& s : solvers_)
            s.state().reset();
}

double Backfitter::component_objective(std::size_t j, const ShapeSpec& spec) const {
    return penalty_[j] + spec.lambda_s * norm_[j];
}

void Backfitter::update_component(std::size_t j, const ShapeSpec& spec, const InnerOptions& opts,
                                  bool& inner_ok) {
    auto zj = Z_.col(j);
    const std::size_t n = r_.size();
    for (std::size_t i = 0; i < n; ++i)
        r_[i] += zj[i];
    const auto status = solvers_[j].solve(r_, spec, opts, z_new_);
    inner_ok = inner_ok && status.converged;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        zj[i] = z_new_[i];
        r_[i] -= zj[i];
        sq += zj[i] * zj[i];
    }
    norm_[j] = std::sqrt(sq);
    penalty_[j] = norm_[j] > 0.0 ? shape_penalty(solvers_[j].level_fit(), covs_[j].gaps(), spec)
                                 : 0.0;
}

AdditiveFit Backfitter::run(const FitConfig& config) {
    const std::size_t n = data_->n();
    const std::size_t p = data_->p();
    config.validate(p);

    // Recompute residual and penalties for the current Z under this config.
    for (std::size_t i = 0; i < n; ++i)
        r_[i] = data_->y[i] - mean_y_;
    for (std::size_t j = 0; j < p; ++j) {
        const auto zj = Z_.col(j);
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            r_[i] -= zj[i];
            sq += zj[i] * zj[i];
        }
        norm_[j] = std::sqrt(sq);
        if (norm_[j] > 0.0) {
            std::vector<double> levels(covs_[j].num_levels());
            covs_[j].level_means(zj, levels);
            penalty_[j] = shape_penalty(levels, covs_[j].gaps(), config.spec_for(j));
        } else {
            penalty_[j] = 0.0;
        }
    }

    auto current_objective = [&] {
        double rss = 0.0;
        for (double v : r_)
            rss += v * v;
        double total = 0.5 * rss;
        for (std::size_t j = 0; j < p; ++j)
            total += component_objective(j, config.spec_for(j));
        return total;
    };

    AdditiveFit result;
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order;
    order.reserve(p);

    double obj_prev = current_objective();
    int since_full = 0;
    bool force_full = false;
    bool inner_ok = true;
    double last_rel = 1.0;
    InnerOptions inner = config.inner;
    for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
        const bool full = !config.active_set || sweep < config.warmup_sweeps || force_full ||
                          since_full >= config.active_sweeps;
        // Inexact block solves while the outer objective is still moving fast;
        // convergence is only declared after a sweep at the requested tolerance.
        inner.tol = config.adaptive_inner
                        ? std::max(config.inner.tol, std::min(1e-4, 1e-2 * last_rel))
                        : config.inner.tol;
        const bool tight = inner.tol <= config.inner.tol;
        order.clear();
        for (std::size_t j = 0; j < p; ++j)
            if (full || norm_[j] > 0.0)
                order.push_back(j);
        if (config.sweep_order == SweepOrder::randomized)
            std::shuffle(order.begin(), order.end(), rng);

        inner_ok = true;
        for (std::size_t j : order)
            update_component(j, config.spec_for(j), inner, inner_ok);

        const double obj = current_objective();
        result.objective_trace.push_back(obj);
        result.sweeps = sweep + 1;
        const double rel = (obj_prev - obj) / std::max(std::abs(obj), std::numeric_limits<double>::min());
        obj_prev = obj;
        last_rel = std::max(rel, 0.0);
        if (full) {
            since_full = 0;
            force_full = false;
            if (rel < config.outer_tol) {
                if (tight) {
                    result.converged = true;
                    break;
                }
                force_full = true;
            }
        } else {
            ++since_full;
            if (rel < config.outer_tol)
                force_full = true;
        }
    }

    result.intercept = mean_y_;
    result.Z = Z_;
    result.objective = obj_prev;
    result.inner_converged = inner_ok;
    result.components.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        auto& comp = result.components[j];
        comp.spec = config.spec_for(j);
        comp.knots_x = covs_[j].levels();
        comp.knots_f.resize(covs_[j].num_levels());
        covs_[j].level_means(Z_.col(j), comp.knots_f);
        comp.group_norm = norm_[j];
        if (norm_[j] > 0.0)
            result.active_set.push_back(j);
    }
    return result;
}

double Backfitter::lambda_s_max(const ShapeSpec& spec) {
    ShapeSpec probe = spec;
    probe.lambda_s = 0.0;
    probe.validate();
    const std::size_t n = data_->n();
    std::vector<double> r0(n), z(n);
    for (std::size_t i = 0; i < n; ++i)
        r0[i] = data_->y[i] - mean_y_;
    InnerOptions opts;
    double best = 0.0;
    for (auto& solver : solvers_) {
        solver.solve(r0, probe, opts, z);
        best = std::max(best, solver.last_inner_norm());
    }
    return best;
}

double Backfitter::shape_lambda_max(ShapeMode mode) const {
    const std::size_t n = data_->n();
    std::vector<double> r0(n);
    for (std::size_t i = 0; i < n; ++i)
        r0[i] = data_->y[i] - mean_y_;
    double best = 0.0;
    for (const auto& cov : covs_) {
        const std::size_t m = cov.num_levels();
        if (m < 2)
            continue;
        const auto& c = cov.counts();
        const auto& g = cov.gaps();
        std::vector<double> rbar(m);
        cov.level_means(r0, rbar);
        double total = 0.0, mean = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            total += c[k];
            mean += c[k] * rbar[k];
        }
        mean /= total;

        switch (mode) {
        case ShapeMode::tv: {
            double s = 0.0;
            for (std::size_t k = 0; k + 1 < m; ++k) {
                s += c[k] * (rbar[k] - mean);
                best = std::max(best, std::abs(s));
            }
            break;
        }
        case ShapeMode::isotonic: {
            double s = 0.0;
            for (std::size_t k = 0; k + 1 < m; ++k) {
                s += c[k] * (rbar[k] - mean);
                best = std::max(best, -s);
            }
            break;
        }
        case ShapeMode::dc:
        case ShapeMode::approx_convex: {
            if (m < 3)
                break;
            // Weighted least-squares line through the levels, then the
            // prefix sums of the slope gradient at that line.
            const auto& x = cov.levels();
            double xm = 0.0;
            for (std::size_t k = 0; k < m; ++k)
                xm += c[k] * x[k];
            xm /= total;
            double sxy = 0.0, sxx = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                sxy += c[k] * (x[k] - xm) * (rbar[k] - mean);
                sxx += c[k] * (x[k] - xm) * (x[k] - xm);
            }
            const double slope = sxy / sxx;
            std::vector<double> e(m);
            for (std::size_t k = 0; k < m; ++k)
                e[k] = c[k] * (mean + slope * (x[k] - xm) - rbar[k]);
            // grad_k = gaps[k] * sum_{i>k} e_i ; prefix sums over k < m-2.
            double suffix = 0.0;
            std::vector<double> grad(m - 1);
            for (std::size_t i = m; i-- > 1;) {
                suffix += e[i];
                grad[i - 1] = g[i - 1] * suffix;
            }
            double s = 0.0;
            for (std::size_t k = 0; k + 2 < m; ++k) {
                s += grad[k];
                best = std::max(best, std::abs(s));
            }
            break;
        }
        default:
            break;
        }
    }
    return best;
}

AdditiveFit fit(const Dataset& data, const FitConfig& config) {
    config.validate(data.p());
    Backfitter engine(data, config.ties);
    return engine.run(config);
}

double objective(const Dataset& data, const Matrix& Z, const FitConfig& config) {
    data.validate();
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    if (Z.rows() != n || Z.cols() != p)
        throw std::invalid_argument("objective: Z shape does not match data");
    const double mean = std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(n);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = data.y[i] - mean;
        for (std::size_t j = 0; j < p; ++j)
            e -= Z(i, j);
        rss += e * e;
    }
    double total = 0.5 * rss;
    for (std::size_t j = 0; j < p; ++j) {
        const auto& spec = config.spec_for(j);
        const auto cov = SortedCovariate::from_column(data.X.col(j), config.ties);
        std::vector<double> levels(cov.num_levels());
        cov.level_means(Z.col(j), levels);
        double sq = 0.0;
        for (double v : Z.col(j))
            sq += v * v;
        total += shape_penalty(levels, cov.gaps(), spec) + spec.lambda_s * std::sqrt(sq);
    }
    return total;
}

double constraint_violation(const Dataset& data, const Matrix& Z, const FitConfig& config) {
    double worst = 0.0;
    for (std::size_t j = 0; j < data.p(); ++j) {
        const auto cov = SortedCovariate::from_column(data.X.col(j), config.ties);
        std::vector<double> levels(cov.num_levels());
        cov.level_means(Z.col(j), levels);
        worst = std::max(worst, shape_violation(levels, cov.gaps(), config.spec_for(j).mode));
    }
    return worst;
}

double interpolate(const ComponentFit& comp, double x, bool* clamped) {
    const auto& kx = comp.knots_x;
    const auto& kf = comp.knots_f;
    if (clamped)
        *clamped = false;
    if (kx.empty())
        return 0.0;
    if (x <= kx.front() || x >= kx.back()) {
        const bool below = x <= kx.front();
        if (clamped && (x < kx.front() || x > kx.back()))
            *clamped = true;
        return below ? kf.front() : kf.back();
    }
    const auto it = std::upper_bound(kx.begin(), kx.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - kx.begin());
    const std::size_t lo = hi - 1;
    if (x == kx[lo])
        return kf[lo];
    const double t = (x - kx[lo]) / (kx[hi] - kx[lo]);
    return kf[lo] + t * (kf[hi] - kf[lo]);
}

Prediction predict(const AdditiveFit& fit, const Matrix& Xnew) {
    const std::size_t p = fit.components.size();
    if (Xnew.cols() != p)
        throw std::invalid_argument("predict: expected " + std::to_string(p) + " columns, got " +
                                    std::to_string(Xnew.cols()));
    Prediction out;
    out.values.assign(Xnew.rows(), fit.intercept);
    out.out_of_range.assign(p, 0);
    for (std::size_t j = 0; j < p; ++j) {
        const auto& comp = fit.components[j];
        const auto col = Xnew.col(j);
        for (std::size_t i = 0; i < Xnew.rows(); ++i) {
            bool clamped = false;
            out.values[i] += interpolate(comp, col[i], &clamped);
            if (clamped)
                ++out.out_of_range[j];
        }
    }
    return out;
}

}  // namespace shapefit
