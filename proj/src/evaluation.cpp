#include "shapefit/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace shapefit {

namespace {

// Runs body(i) for i in [0, count) on up to `threads` workers. Results must
// be written to per-index slots so aggregation stays order independent.
template <class Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = next++; i < count; i = next++)
                    body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

struct PathOutcome {
    std::vector<double> mse;  // shape-major
    bool all_converged = true;
    std::size_t best = 0;
    std::size_t fitted = 0;
    AdditiveFit best_fit;
};

// Index comparison implementing "smallest MSE, ties to the larger lambda_s".
bool better(double mse, std::size_t s_idx, double best_mse, std::size_t best_s_idx) {
    if (mse < best_mse)
        return true;
    return mse == best_mse && s_idx < best_s_idx;
}

PathOutcome run_grid(const Dataset& train, const Dataset& validation, const LambdaGrid& grid,
                     ShapeMode mode, const FitConfig& base, const PathStopping& stop,
                     bool keep_best_fit) {
    grid.validate();
    if (validation.p() != train.p())
        throw std::invalid_argument("grid search: train and validation column counts differ");
    Backfitter engine(train, base.ties);
    FitConfig cfg = base;
    cfg.per_component.clear();
    cfg.shape.mode = mode;

    PathOutcome out;
    out.mse.assign(grid.size(), std::numeric_limits<double>::infinity());
    double best_mse = std::numeric_limits<double>::infinity();
    std::size_t best_s = 0;
    const std::size_t ns = grid.lambda_s.size();
    for (std::size_t a = 0; a < grid.shape.size(); ++a) {
        engine.reset(/*keep_warm_start=*/true);
        cfg.shape.set_shape_lambda(grid.shape[a]);
        double path_best = std::numeric_limits<double>::infinity();
        std::size_t worse = 0;
        for (std::size_t b = 0; b < ns; ++b) {
            if (stop.patience > 0 && worse >= stop.patience)
                break;
            cfg.shape.lambda_s = grid.lambda_s[b];
            AdditiveFit fit = engine.run(cfg);
            ++out.fitted;
            out.all_converged = out.all_converged && fit.converged;
            const auto pred = predict(fit, validation.X);
            const double mse = mean_squared_error(validation.y, pred.values);
            const std::size_t idx = a * ns + b;
            out.mse[idx] = mse;
            path_best = std::min(path_best, mse);
            worse = mse > (1.0 + stop.rise) * path_best ? worse + 1 : 0;
            if (better(mse, b, best_mse, best_s)) {
                best_mse = mse;
                best_s = b;
                out.best = idx;
                if (keep_best_fit)
                    out.best_fit = std::move(fit);
            }
        }
    }
    return out;
}

ShapeSpec spec_at(const LambdaGrid& grid, std::size_t idx, ShapeMode mode) {
    const std::size_t ns = grid.lambda_s.size();
    ShapeSpec spec;
    spec.mode = mode;
    spec.set_shape_lambda(grid.shape[idx / ns]);
    spec.lambda_s = grid.lambda_s[idx % ns];
    return spec;
}

}  // namespace

std::vector<std::size_t> support_of(const AdditiveFit& fit, double eps) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < fit.Z.cols(); ++j) {
        double sq = 0.0;
        for (double v : fit.Z.col(j))
            sq += v * v;
        if (std::sqrt(sq) > eps)
            out.push_back(j);
    }
    if (fit.Z.cols() == 0)
        for (std::size_t j = 0; j < fit.components.size(); ++j)
            if (fit.components[j].group_norm > eps)
                out.push_back(j);
    return out;
}

MetricsReport support_metrics(std::span<const std::size_t> estimated,
                              std::span<const std::size_t> truth) {
    std::size_t hits = 0;
    for (std::size_t j : estimated)
        if (std::find(truth.begin(), truth.end(), j) != truth.end())
            ++hits;
    MetricsReport m;
    m.model_size = static_cast<double>(estimated.size());
    if (!estimated.empty())
        m.precision = static_cast<double>(hits) / static_cast<double>(estimated.size());
    else if (truth.empty())
        m.precision = 1.0;
    m.recall = truth.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(truth.size());
    return m;
}

double mean_squared_error(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size())
        throw std::invalid_argument("mean_squared_error: length mismatch");
    if (y.empty())
        return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return s / static_cast<double>(y.size());
}

void LambdaGrid::validate() const {
    auto check = [](const std::vector<double>& v, const char* name) {
        if (v.empty())
            throw std::invalid_argument(std::string("lambda grid: ") + name + " list is empty");
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!(v[i] >= 0.0) || !std::isfinite(v[i]))
                throw std::invalid_argument(std::string("lambda grid: ") + name +
                                            " values must be finite and nonnegative");
            if (i > 0 && v[i] > v[i - 1])
                throw std::invalid_argument(std::string("lambda grid: ") + name +
                                            " values must be sorted descending");
        }
    };
    check(lambda_s, "lambda_s");
    check(shape, "shape");
}

std::vector<double> log_spaced(double hi, double lo, std::size_t count) {
    if (count == 0)
        return {};
    if (count == 1 || !(hi > 0.0) || !(lo > 0.0))
        return std::vector<double>(count == 1 ? 1 : count, hi);
    std::vector<double> out(count);
    const double a = std::log(hi), b = std::log(lo);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    out.front() = hi;
    out.back() = lo;
    return out;
}

LambdaGrid default_grid(const Dataset& train, ShapeMode mode, const GridOptions& opts,
                        TieHandling ties) {
    if (opts.n_lambda_s == 0 || opts.n_shape == 0)
        throw std::invalid_argument("default_grid: grid sizes must be positive");
    Backfitter engine(train, ties);
    LambdaGrid grid;
    const double shape_max = engine.shape_lambda_max(mode);
    if (shape_max > 0.0)
        grid.shape = log_spaced(opts.shape_hi * shape_max, opts.shape_lo * shape_max, opts.n_shape);
    else
        grid.shape = {0.0};

    double s_max = 0.0;
    ShapeSpec probe;
    probe.mode = mode;
    for (double v : grid.shape) {
        probe.set_shape_lambda(v);
        s_max = std::max(s_max, engine.lambda_s_max(probe));
    }
    if (!(s_max > 0.0))
        s_max = 1.0;
    grid.lambda_s = log_spaced(s_max, opts.lambda_s_ratio * s_max, opts.n_lambda_s);
    return grid;
}

GridSelection grid_select(const Dataset& train, const Dataset& validation, const LambdaGrid& grid,
                          ShapeMode mode, const FitConfig& base, const PathStopping& stop) {
    auto outcome = run_grid(train, validation, grid, mode, base, stop, true);
    GridSelection sel;
    sel.best = spec_at(grid, outcome.best, mode);
    sel.best_fit = std::move(outcome.best_fit);
    sel.best_mse = outcome.mse[outcome.best];
    sel.validation_mse = std::move(outcome.mse);
    sel.all_converged = outcome.all_converged;
    sel.fitted_points = outcome.fitted;
    return sel;
}

std::vector<std::size_t> kfold_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2 || n < k)
        throw std::invalid_argument("kfold: need 2 <= K <= n (K=" + std::to_string(k) +
                                    ", n=" + std::to_string(n) + ")");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::size_t> fold(n);
    for (std::size_t pos = 0; pos < n; ++pos)
        fold[idx[pos]] = pos % k;
    return fold;
}

CvResult kfold_cv(const Dataset& data, std::size_t k, const LambdaGrid& grid, ShapeMode mode,
                  std::uint64_t seed, const FitConfig& base, const PathStopping& stop) {
    data.validate();
    grid.validate();
    CvResult result;
    result.fold_of = kfold_assignment(data.n(), k, seed);

    std::vector<std::vector<double>> per_fold(k);
    std::vector<char> converged(k, 1);
    parallel_for(k, evaluation_threads(), [&](std::size_t f) {
        std::vector<std::size_t> tr, va;
        for (std::size_t i = 0; i < data.n(); ++i)
            (result.fold_of[i] == f ? va : tr).push_back(i);
        const Dataset train = data.select_rows(tr);
        const Dataset valid = data.select_rows(va);
        auto outcome = run_grid(train, valid, grid, mode, base, stop, false);
        per_fold[f] = std::move(outcome.mse);
        converged[f] = outcome.all_converged;
    });

    result.cv_curve.assign(grid.size(), 0.0);
    for (std::size_t f = 0; f < k; ++f)
        for (std::size_t i = 0; i < grid.size(); ++i)
            result.cv_curve[i] += per_fold[f][i] / static_cast<double>(k);
    result.all_converged = std::all_of(converged.begin(), converged.end(), [](char c) { return c; });

    const std::size_t ns = grid.lambda_s.size();
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (better(result.cv_curve[i], i % ns, result.cv_curve[best], best % ns))
            best = i;
    result.best = spec_at(grid, best, mode);

    FitConfig cfg = base;
    cfg.per_component.clear();
    cfg.shape = result.best;
    result.final_fit = fit(data, cfg);
    result.all_converged = result.all_converged && result.final_fit.converged;
    return result;
}

double spurious_elimination_rate(std::span<const EliminationRun> runs) {
    if (runs.empty())
        throw std::invalid_argument("spurious_elimination_rate: no runs");
    std::size_t clean = 0;
    for (const auto& run : runs) {
        const bool hit = std::any_of(run.support.begin(), run.support.end(), [&](std::size_t j) {
            return std::find(run.spurious.begin(), run.spurious.end(), j) != run.spurious.end();
        });
        if (!hit)
            ++clean;
    }
    return static_cast<double>(clean) / static_cast<double>(runs.size());
}

SummaryStat summarize(std::span<const double> values) {
    SummaryStat s;
    s.count = values.size();
    if (values.empty())
        return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.count);
    if (s.count > 1) {
        double ss = 0.0;
        for (double v : values)
            ss += (v - s.mean) * (v - s.mean);
        s.se = std::sqrt(ss / static_cast<double>(s.count - 1)) /
               std::sqrt(static_cast<double>(s.count));
    }
    return s;
}

std::vector<MethodSummary> run_study(const StudyConfig& cfg) {
    if (cfg.replicates == 0)
        throw std::invalid_argument("study: at least one replicate is required");
    if (cfg.methods.empty())
        throw std::invalid_argument("study: no methods given");
    const Scenario scenario = Scenario::make(cfg.scenario);
    const std::size_t nm = cfg.methods.size();
    std::vector<std::vector<MetricsReport>> reports(cfg.replicates,
                                                    std::vector<MetricsReport>(nm));

    parallel_for(cfg.replicates, evaluation_threads(), [&](std::size_t r) {
        SimConfig sim = cfg.sim;
        sim.seed = derive_seed(cfg.sim.seed, r);
        const auto splits = generate_splits(scenario, sim);
        for (std::size_t m = 0; m < nm; ++m) {
            const auto grid = default_grid(splits.train.data, cfg.methods[m], cfg.grid, cfg.base.ties);
            const auto sel = grid_select(splits.train.data, splits.validation.data, grid,
                                         cfg.methods[m], cfg.base, cfg.stop);
            const auto est = support_of(sel.best_fit);
            MetricsReport rep = support_metrics(est, splits.train.support);
            const auto pred = predict(sel.best_fit, splits.test.data.X);
            rep.test_mse = mean_squared_error(splits.test.data.y, pred.values);
            reports[r][m] = rep;
        }
    });

    std::vector<MethodSummary> out(nm);
    for (std::size_t m = 0; m < nm; ++m) {
        auto& s = out[m];
        s.mode = cfg.methods[m];
        std::vector<double> prec, rec, size, mse;
        for (std::size_t r = 0; r < cfg.replicates; ++r) {
            const auto& rep = reports[r][m];
            s.runs.push_back(rep);
            if (rep.precision)
                prec.push_back(*rep.precision);
            rec.push_back(rep.recall);
            size.push_back(rep.model_size);
            mse.push_back(rep.test_mse);
        }
        s.precision = summarize(prec);
        s.recall = summarize(rec);
        s.model_size = summarize(size);
        s.test_mse = summarize(mse);
    }
    return out;
}

std::size_t evaluation_threads() {
    if (const char* env = std::getenv("SHAPEFIT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1)
            return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace shapefit
