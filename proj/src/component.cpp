#include "shapefit/component.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace shapefit {

namespace {

void check_gaps(std::span<const double> z, std::span<const double> gaps) {
    if (z.size() != gaps.size() + 1)
        throw std::invalid_argument("length mismatch between values and gaps");
    for (double g : gaps)
        if (!(g > 0.0))
            throw std::invalid_argument("gaps must be strictly positive");
}

inline double weight_at(std::span<const double> weights, std::size_t i) {
    return weights.empty() ? 1.0 : weights[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

// u = B w: prefix sums of w_k * gaps[k], starting at 0.
void cumulate(std::span<const double> w, std::span<const double> gaps, std::span<double> u) {
    double acc = 0.0;
    u[0] = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        acc += w[k] * gaps[k];
        u[k + 1] = acc;
    }
}

// out_k = gaps[k] * sum_{i>k} v_i, returns sum_i v_i.
double suffix_cumulate(std::span<const double> v, std::span<const double> gaps,
                       std::span<double> out) {
    double acc = 0.0;
    for (std::size_t i = v.size(); i-- > 1;) {
        acc += v[i];
        out[i - 1] = gaps[i - 1] * acc;
    }
    return acc + v[0];
}

template <class Apply>
double power_iteration(std::size_t dim, Apply&& apply) {
    if (dim == 0)
        return 0.0;
    std::vector<double> v(dim), next(dim);
    // Deterministic, non-symmetric start so no eigenvector is missed by construction.
    for (std::size_t i = 0; i < dim; ++i)
        v[i] = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i));
    double norm = std::sqrt(dot(v, v));
    for (double& x : v)
        x /= norm;
    double estimate = 0.0;
    for (int it = 0; it < 5000; ++it) {
        apply(v, next);
        const double rayleigh = dot(v, next);
        norm = std::sqrt(dot(next, next));
        if (norm == 0.0)
            return 0.0;
        for (std::size_t i = 0; i < dim; ++i)
            v[i] = next[i] / norm;
        if (it > 3 && std::abs(rayleigh - estimate) <= 1e-9 * rayleigh) {
            estimate = rayleigh;
            break;
        }
        estimate = rayleigh;
    }
    return estimate;
}

}  // namespace

std::vector<double> slopes_of(std::span<const double> z_sorted, std::span<const double> gaps) {
    check_gaps(z_sorted, gaps);
    std::vector<double> w(gaps.size());
    for (std::size_t k = 0; k < gaps.size(); ++k)
        w[k] = (z_sorted[k + 1] - z_sorted[k]) / gaps[k];
    return w;
}

double dc_seminorm(std::span<const double> z_sorted, std::span<const double> gaps) {
    const auto w = slopes_of(z_sorted, gaps);
    return tv_seminorm(w);
}

double ac_seminorm(std::span<const double> z_sorted, std::span<const double> gaps) {
    const auto w = slopes_of(z_sorted, gaps);
    return oneside_tv_seminorm(w);
}

SlopeParam slope_param_of(std::span<const double> z_sorted, std::span<const double> gaps) {
    SlopeParam p;
    p.slopes = slopes_of(z_sorted, gaps);
    p.intercept = z_sorted[0];
    return p;
}

std::vector<double> apply_A(const SlopeParam& param, std::span<const double> gaps) {
    if (param.slopes.size() != gaps.size())
        throw std::invalid_argument("apply_A: slopes and gaps differ in length");
    std::vector<double> z(gaps.size() + 1);
    cumulate(param.slopes, gaps, z);
    for (double& v : z)
        v += param.intercept;
    return z;
}

SlopeParam apply_A_transpose(std::span<const double> v, std::span<const double> gaps) {
    if (v.size() != gaps.size() + 1)
        throw std::invalid_argument("apply_A_transpose: vector and gaps lengths disagree");
    SlopeParam p;
    p.slopes.resize(gaps.size());
    p.intercept = suffix_cumulate(v, gaps, p.slopes);
    return p;
}

double operator_norm_sq(std::span<const double> gaps, std::span<const double> weights) {
    const std::size_t m = gaps.size() + 1;
    std::vector<double> z(m);
    return power_iteration(m, [&](std::span<const double> p, std::span<double> out) {
        cumulate(p.subspan(1), gaps, z);
        for (std::size_t i = 0; i < m; ++i)
            z[i] = (z[i] + p[0]) * weight_at(weights, i);
        out[0] = suffix_cumulate(z, gaps, out.subspan(1));
    });
}

double profiled_operator_norm_sq(std::span<const double> gaps, std::span<const double> weights) {
    const std::size_t m = gaps.size() + 1;
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        total += weight_at(weights, i);
    std::vector<double> z(m);
    return power_iteration(m - 1, [&](std::span<const double> w, std::span<double> out) {
        cumulate(w, gaps, z);
        double mean = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            mean += weight_at(weights, i) * z[i];
        mean /= total;
        for (std::size_t i = 0; i < m; ++i)
            z[i] = (z[i] - mean) * weight_at(weights, i);
        suffix_cumulate(z, gaps, out);
    });
}

namespace {

// Smooth part of the profiled slope problem:
//   f(w) = (1/2) sum_i c_i e_i^2,  e = (B w - r) - weighted_mean(B w - r).
// Leaves e in `resid`.
class ProfiledLoss {
public:
    ProfiledLoss(std::span<const double> r, std::span<const double> gaps,
                 std::span<const double> weights, std::span<double> resid)
        : r_(r), gaps_(gaps), weights_(weights), resid_(resid) {
        total_ = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i)
            total_ += weight_at(weights, i);
    }

    double value(std::span<const double> w) { return residual(w, resid_); }

    // e = center(B w - r) written to `e`; returns (1/2) sum_i c_i e_i^2.
    double residual(std::span<const double> w, std::span<double> e) const {
        cumulate(w, gaps_, e);
        double mean = 0.0;
        for (std::size_t i = 0; i < r_.size(); ++i) {
            e[i] -= r_[i];
            mean += weight_at(weights_, i) * e[i];
        }
        mean /= total_;
        double f = 0.0;
        for (std::size_t i = 0; i < r_.size(); ++i) {
            e[i] -= mean;
            f += weight_at(weights_, i) * e[i] * e[i];
        }
        return 0.5 * f;
    }

    double value_of_residual(std::span<const double> e) const {
        double f = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i)
            f += weight_at(weights_, i) * e[i] * e[i];
        return 0.5 * f;
    }

    // Gradient B^T C e for a residual e; `scratch` has the residual's length.
    void gradient(std::span<const double> e, std::span<double> scratch,
                  std::span<double> grad) const {
        if (weights_.empty()) {
            suffix_cumulate(e, gaps_, grad);
            return;
        }
        for (std::size_t i = 0; i < e.size(); ++i)
            scratch[i] = weights_[i] * e[i];
        suffix_cumulate(scratch, gaps_, grad);
    }

    // Level values of the fit at w: B w + optimal intercept.
    void fitted(std::span<const double> w, std::span<double> out) {
        cumulate(w, gaps_, out);
        double mean = 0.0;
        for (std::size_t i = 0; i < r_.size(); ++i)
            mean += weight_at(weights_, i) * (r_[i] - out[i]);
        mean /= total_;
        for (double& v : out)
            v += mean;
    }

    // Scale of the problem, used as an absolute floor in the stopping rule.
    double scale() const {
        double mean = 0.0;
        for (std::size_t i = 0; i < r_.size(); ++i)
            mean += weight_at(weights_, i) * r_[i];
        mean /= total_;
        double s = 0.0;
        for (std::size_t i = 0; i < r_.size(); ++i)
            s += weight_at(weights_, i) * (r_[i] - mean) * (r_[i] - mean);
        return 0.5 * s;
    }

private:
    std::span<const double> r_, gaps_, weights_;
    std::span<double> resid_;
    double total_;
};

// Penalty on slopes and its prox in the metric sum_k m_k (x_k - v_k)^2.
class SlopeRegularizer {
public:
    SlopeRegularizer(const ShapeSpec& spec, std::span<const double> metric, InnerWorkspace& ws)
        : spec_(spec), metric_(metric), ws_(ws) {}

    double value(std::span<const double> w) const {
        switch (spec_.mode) {
        case ShapeMode::dc: return spec_.lambda_d * tv_seminorm(w);
        case ShapeMode::approx_convex: return spec_.lambda_d * oneside_tv_seminorm(w);
        default: return 0.0;
        }
    }

    void prox(std::span<double> w, double step) const {
        switch (spec_.mode) {
        case ShapeMode::dc: {
            const double t = step * spec_.lambda_d;
            chain_prox(w, metric_, t, t, w, ws_.chain);
            break;
        }
        case ShapeMode::approx_convex:
            chain_prox(w, metric_, step * spec_.lambda_d, 0.0, w, ws_.chain);
            break;
        case ShapeMode::convex:
            pav_inplace(w, metric_, ws_.pav);
            break;
        case ShapeMode::convex_increasing:
            pav_inplace(w, metric_, ws_.pav);
            for (double& v : w)
                v = std::max(v, 0.0);
            break;
        default:
            break;
        }
    }

private:
    const ShapeSpec& spec_;
    std::span<const double> metric_;
    InnerWorkspace& ws_;
};

bool slopes_nondecreasing(std::span<const double> r, std::span<const double> gaps,
                          bool nonneg) {
    double prev = nonneg ? 0.0 : -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < gaps.size(); ++k) {
        const double w = (r[k + 1] - r[k]) / gaps[k];
        if (w < prev)
            return false;
        prev = w;
    }
    return true;
}

// Accelerated proximal gradient on the slope problem with the intercept
// minimized out in closed form. Gradient and prox steps use the metric
// diag(gaps^2): in that metric the smooth part no longer depends on how
// uneven the gaps are, and the prox is still an exact weighted chain/PAV
// solve. Monotone through function-value restarts; the step shrinks if the
// sufficient-decrease test fails.
InnerStatus solve_slopes(std::span<const double> r, std::span<const double> gaps,
                         std::span<const double> weights, const ShapeSpec& spec,
                         const InnerOptions& opts, InnerState& state, InnerWorkspace& ws,
                         std::span<double> out) {
    const std::size_t d = gaps.size();
    ws.x.resize(d);
    ws.y.resize(d);
    ws.grad.resize(d);
    ws.trial.resize(d);
    ws.resid.resize(d + 1);
    ws.metric.resize(d);
    for (std::size_t k = 0; k < d; ++k)
        ws.metric[k] = gaps[k] * gaps[k];

    ProfiledLoss loss(r, gaps, weights, ws.resid);
    SlopeRegularizer reg(spec, ws.metric, ws);

    if (!(state.step > 0.0)) {
        ws.levels.assign(d, 1.0);
        const double lip = profiled_operator_norm_sq(ws.levels, weights);
        state.step = lip > 0.0 ? 1.0 / (1.01 * lip) : 1.0;
    }
    double step = state.step;

    // Start from the better of the warm start and the least-squares line
    // (which carries no curvature penalty and satisfies every slope constraint
    // except possibly nonnegativity).
    double best_line = 0.0;
    {
        double total = 0.0, mx = 0.0, mr = 0.0, x = 0.0;
        for (std::size_t i = 0; i <= d; ++i) {
            if (i > 0)
                x += gaps[i - 1];
            const double c = weight_at(weights, i);
            total += c;
            mx += c * x;
            mr += c * r[i];
        }
        mx /= total;
        mr /= total;
        double sxx = 0.0, sxr = 0.0;
        x = 0.0;
        for (std::size_t i = 0; i <= d; ++i) {
            if (i > 0)
                x += gaps[i - 1];
            const double c = weight_at(weights, i);
            sxx += c * (x - mx) * (x - mx);
            sxr += c * (x - mx) * (r[i] - mr);
        }
        best_line = sxx > 0.0 ? sxr / sxx : 0.0;
        if (spec.mode == ShapeMode::convex_increasing)
            best_line = std::max(best_line, 0.0);
    }
    std::fill(ws.x.begin(), ws.x.end(), best_line);
    double obj_x = loss.value(ws.x) + reg.value(ws.x);
    if (state.slopes.size() == d) {
        std::copy(state.slopes.begin(), state.slopes.end(), ws.trial.begin());
        if (spec.mode == ShapeMode::convex || spec.mode == ShapeMode::convex_increasing)
            reg.prox(ws.trial, step);  // projection; makes the warm start feasible
        const double obj_warm = loss.value(ws.trial) + reg.value(ws.trial);
        if (obj_warm < obj_x) {
            std::copy(ws.trial.begin(), ws.trial.end(), ws.x.begin());
            obj_x = obj_warm;
        }
    }

    const double floor = 1e-12 * loss.scale() + std::numeric_limits<double>::min();
    // Residuals are affine in the slopes, so the residual at the momentum
    // point is a combination of the last two and needs no extra pass.
    ws.e_x.resize(d + 1);
    ws.e_y.resize(d + 1);
    ws.e_t.resize(d + 1);
    loss.residual(ws.x, ws.e_x);
    std::copy(ws.x.begin(), ws.x.end(), ws.y.begin());
    std::copy(ws.e_x.begin(), ws.e_x.end(), ws.e_y.begin());
    double t = 1.0;
    bool fresh = true;  // y == x, no momentum

    InnerStatus status;
    status.converged = false;
    for (int it = 0; it < opts.max_iter; ++it) {
        status.iterations = it + 1;
        const double f_y = loss.value_of_residual(ws.e_y);
        loss.gradient(ws.e_y, ws.resid, ws.grad);

        double f_trial = 0.0;
        for (int backtrack = 0; backtrack < 60; ++backtrack) {
            for (std::size_t k = 0; k < d; ++k)
                ws.trial[k] = ws.y[k] - step * ws.grad[k] / ws.metric[k];
            reg.prox(ws.trial, step);
            f_trial = loss.residual(ws.trial, ws.e_t);
            double lin = 0.0, quad = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = ws.trial[k] - ws.y[k];
                lin += ws.grad[k] * diff;
                quad += ws.metric[k] * diff * diff;
            }
            if (f_trial <= f_y + lin + quad / (2.0 * step) + 1e-12 * std::abs(f_y))
                break;
            step *= 0.5;
            state.step = step;
        }
        const double obj_trial = f_trial + reg.value(ws.trial);

        if (obj_trial > obj_x) {
            if (fresh) {
                // A plain proximal-gradient step from x made no progress.
                status.converged = true;
                break;
            }
            std::copy(ws.x.begin(), ws.x.end(), ws.y.begin());
            std::copy(ws.e_x.begin(), ws.e_x.end(), ws.e_y.begin());
            t = 1.0;
            fresh = true;
            continue;
        }

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double beta = (t - 1.0) / t_next;
        for (std::size_t k = 0; k < d; ++k) {
            const double xn = ws.trial[k];
            ws.y[k] = xn + beta * (xn - ws.x[k]);
            ws.x[k] = xn;
        }
        for (std::size_t i = 0; i <= d; ++i) {
            const double en = ws.e_t[i];
            ws.e_y[i] = en + beta * (en - ws.e_x[i]);
            ws.e_x[i] = en;
        }
        t = t_next;
        fresh = false;
        const double decrease = obj_x - obj_trial;
        obj_x = obj_trial;
        if (decrease <= opts.tol * (std::abs(obj_x) + floor)) {
            status.converged = true;
            break;
        }
    }

    state.slopes.assign(ws.x.begin(), ws.x.end());
    loss.fitted(ws.x, out);
    return status;
}

}  // namespace

InnerStatus inner_prox_solve_into(std::span<const double> r, std::span<const double> gaps,
                                  std::span<const double> weights, const ShapeSpec& spec,
                                  const InnerOptions& opts, InnerState& state, InnerWorkspace& ws,
                                  std::span<double> out) {
    const std::size_t m = r.size();
    if (m == 0 || gaps.size() + 1 != m || out.size() != m)
        throw std::invalid_argument("inner_prox_solve: inconsistent lengths");
    if (!weights.empty() && weights.size() != m)
        throw std::invalid_argument("inner_prox_solve: weights length mismatch");

    auto copy_through = [&] {
        if (out.data() != r.data())
            std::copy(r.begin(), r.end(), out.begin());
        return InnerStatus{};
    };
    if (m == 1)
        return copy_through();

    switch (spec.mode) {
    case ShapeMode::unconstrained:
        return copy_through();
    case ShapeMode::tv:
        chain_prox(r, weights, spec.lambda_t, spec.lambda_t, out, ws.chain);
        return {};
    case ShapeMode::isotonic: {
        // On the isotonic cone the total variation is z_m - z_1, a linear
        // term that shifts the two end targets.
        copy_through();
        if (spec.lambda_t > 0.0) {
            out[0] += spec.lambda_t / weight_at(weights, 0);
            out[m - 1] -= spec.lambda_t / weight_at(weights, m - 1);
        }
        pav_inplace(out, weights, ws.pav);
        return {};
    }
    case ShapeMode::dc:
    case ShapeMode::approx_convex:
        if (spec.lambda_d == 0.0 || m == 2)
            return copy_through();
        break;
    case ShapeMode::convex:
        if (m == 2 || slopes_nondecreasing(r, gaps, false))
            return copy_through();
        break;
    case ShapeMode::convex_increasing:
        if (slopes_nondecreasing(r, gaps, true))
            return copy_through();
        break;
    }
    return solve_slopes(r, gaps, weights, spec, opts, state, ws, out);
}

InnerResult inner_prox_solve(std::span<const double> r_sorted, std::span<const double> gaps,
                             const ShapeSpec& spec, const InnerOptions& opts,
                             std::span<const double> weights, InnerState* state) {
    spec.validate();
    check_gaps(r_sorted, gaps);
    InnerState local;
    InnerWorkspace ws;
    InnerResult result;
    result.fit.resize(r_sorted.size());
    const auto status = inner_prox_solve_into(r_sorted, gaps, weights, spec, opts,
                                              state ? *state : local, ws, result.fit);
    result.iterations = status.iterations;
    result.converged = status.converged;
    return result;
}

ComponentSolver::ComponentSolver(const SortedCovariate& cov)
    : cov_(&cov),
      level_r_(cov.num_levels()),
      level_fit_(cov.num_levels(), 0.0),
      n_total_(static_cast<double>(cov.size())) {}

InnerStatus ComponentSolver::solve(std::span<const double> r, const ShapeSpec& spec,
                                   const InnerOptions& opts, std::span<double> z) {
    const std::size_t n = cov_->size();
    if (r.size() != n || z.size() != n)
        throw std::invalid_argument("ComponentSolver: residual length mismatch");

    // The inner prox fixes constants and commutes with constant shifts, so
    // ||center(inner(r))|| <= ||center(r)||; nothing survives when the
    // latter is already below lambda_s.
    if (spec.lambda_s > 0.0) {
        double mean = 0.0;
        for (double v : r)
            mean += v;
        mean /= n_total_;
        double sq = 0.0;
        for (double v : r)
            sq += (v - mean) * (v - mean);
        if (std::sqrt(sq) <= spec.lambda_s) {
            std::fill(level_fit_.begin(), level_fit_.end(), 0.0);
            std::fill(z.begin(), z.end(), 0.0);
            inner_norm_ = 0.0;
            return {};
        }
    }

    cov_->level_means(r, level_r_);
    const auto& counts = cov_->counts();
    if (spec.lambda_s > 0.0 && anchor_valid_ && anchor_spec_.mode == spec.mode &&
        anchor_spec_.lambda_d == spec.lambda_d && anchor_spec_.lambda_t == spec.lambda_t) {
        double shift = 0.0;
        for (std::size_t k = 0; k < level_r_.size(); ++k)
            shift += counts[k] * (level_r_[k] - anchor_r_[k]);
        shift /= n_total_;
        double sq = 0.0;
        for (std::size_t k = 0; k < level_r_.size(); ++k) {
            const double d = level_r_[k] - anchor_r_[k] - shift;
            sq += counts[k] * d * d;
        }
        if (anchor_norm_ + std::sqrt(sq) <= spec.lambda_s) {
            std::fill(level_fit_.begin(), level_fit_.end(), 0.0);
            std::fill(z.begin(), z.end(), 0.0);
            inner_norm_ = 0.0;
            return {};
        }
    }

    const auto weights = cov_->weights();
    const auto status = inner_prox_solve_into(level_r_, cov_->gaps(), weights, spec, opts, state_,
                                              ws_, level_fit_);

    double mean = 0.0;
    for (std::size_t k = 0; k < level_fit_.size(); ++k)
        mean += counts[k] * level_fit_[k];
    mean /= n_total_;
    double sq = 0.0;
    for (double& v : level_fit_) {
        v -= mean;
    }
    for (std::size_t k = 0; k < level_fit_.size(); ++k)
        sq += counts[k] * level_fit_[k] * level_fit_[k];
    inner_norm_ = std::sqrt(sq);
    anchor_r_ = level_r_;
    anchor_norm_ = inner_norm_;
    anchor_spec_ = spec;
    anchor_valid_ = true;
    const double factor = inner_norm_ > spec.lambda_s ? 1.0 - spec.lambda_s / inner_norm_ : 0.0;
    for (double& v : level_fit_)
        v *= factor;
    cov_->scatter(level_fit_, z);
    return status;
}

SubproblemResult solve_subproblem(std::span<const double> r, const SortedCovariate& cov,
                                  const ShapeSpec& spec, const InnerOptions& opts,
                                  InnerState* state) {
    spec.validate();
    ComponentSolver solver(cov);
    if (state)
        solver.state() = *state;
    SubproblemResult result;
    result.z.resize(cov.size());
    const auto status = solver.solve(r, spec, opts, result.z);
    if (state)
        *state = solver.state();
    result.inner_norm = solver.last_inner_norm();
    result.iterations = status.iterations;
    result.converged = status.converged;
    return result;
}

double shape_penalty(std::span<const double> level_values, std::span<const double> gaps,
                     const ShapeSpec& spec) {
    switch (spec.mode) {
    case ShapeMode::dc:
        return spec.lambda_d == 0.0 ? 0.0 : spec.lambda_d * dc_seminorm(level_values, gaps);
    case ShapeMode::approx_convex:
        return spec.lambda_d == 0.0 ? 0.0 : spec.lambda_d * ac_seminorm(level_values, gaps);
    case ShapeMode::tv:
    case ShapeMode::isotonic:
        return spec.lambda_t * tv_seminorm(level_values);
    default:
        return 0.0;
    }
}

double shape_violation(std::span<const double> level_values, std::span<const double> gaps,
                       ShapeMode mode) {
    double worst = 0.0;
    switch (mode) {
    case ShapeMode::isotonic:
        for (std::size_t i = 1; i < level_values.size(); ++i)
            worst = std::max(worst, level_values[i - 1] - level_values[i]);
        break;
    case ShapeMode::convex:
    case ShapeMode::convex_increasing: {
        const auto w = slopes_of(level_values, gaps);
        for (std::size_t i = 1; i < w.size(); ++i)
            worst = std::max(worst, w[i - 1] - w[i]);
        if (mode == ShapeMode::convex_increasing && !w.empty())
            worst = std::max(worst, -w[0]);
        break;
    }
    default:
        break;
    }
    return worst;
}

}  // namespace shapefit
