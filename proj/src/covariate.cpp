#include "shapefit/covariate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace shapefit {

SortedCovariate SortedCovariate::from_column(std::span<const double> x, TieHandling ties) {
    const std::size_t n = x.size();
    if (n == 0)
        throw std::invalid_argument("SortedCovariate: empty column");
    for (double v : x)
        if (!std::isfinite(v))
            throw std::invalid_argument("SortedCovariate: non-finite covariate value");

    SortedCovariate cov;
    cov.perm_.resize(n);
    std::iota(cov.perm_.begin(), cov.perm_.end(), std::size_t{0});
    std::stable_sort(cov.perm_.begin(), cov.perm_.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    cov.sorted_x_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        cov.sorted_x_[i] = x[cov.perm_[i]];

    if (ties == TieHandling::jitter) {
        const double range = cov.sorted_x_.back() - cov.sorted_x_.front();
        const double eps = 1e-9 * (range > 0.0 ? range : 1.0);
        // Offsets accumulate within a run of equal values, so order is preserved.
        for (std::size_t i = 1; i < n; ++i) {
            const double prev = cov.sorted_x_[i - 1];
            if (x[cov.perm_[i]] == x[cov.perm_[i - 1]])
                cov.sorted_x_[i] = std::max(prev + eps, std::nextafter(prev, INFINITY));
            else
                cov.sorted_x_[i] = std::max(cov.sorted_x_[i], std::nextafter(prev, INFINITY));
        }
    }

    cov.level_of_row_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = cov.sorted_x_[i];
        if (cov.levels_.empty() || v != cov.levels_.back()) {
            cov.levels_.push_back(v);
            cov.counts_.push_back(1.0);
        } else {
            cov.counts_.back() += 1.0;
            cov.has_ties_ = true;
        }
        cov.level_of_row_[cov.perm_[i]] = cov.levels_.size() - 1;
    }
    cov.gaps_.resize(cov.levels_.size() - 1);
    for (std::size_t k = 0; k + 1 < cov.levels_.size(); ++k)
        cov.gaps_[k] = cov.levels_[k + 1] - cov.levels_[k];
    return cov;
}

std::span<const double> SortedCovariate::weights() const noexcept {
    if (!has_ties_)
        return {};
    return counts_;
}

void SortedCovariate::level_means(std::span<const double> r, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < r.size(); ++i)
        out[level_of_row_[i]] += r[i];
    if (has_ties_)
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k] /= counts_[k];
}

void SortedCovariate::scatter(std::span<const double> level_values, std::span<double> out) const {
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = level_values[level_of_row_[i]];
}

}  // namespace shapefit
