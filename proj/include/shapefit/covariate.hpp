#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace shapefit {

enum class TieHandling {
    group,   // tied values share one fitted level, weighted by multiplicity
    jitter,  // duplicates are offset by k * 1e-9 * range to make values distinct
};

/// A covariate column together with its sorting permutation.
///
/// Sorted observations are partitioned into levels of equal covariate value.
/// Fits are constant within a level, slopes and gaps are defined between
/// consecutive levels, and each level carries its multiplicity as a weight.
/// Without ties there is one level per observation and all weights are 1.
class SortedCovariate {
public:
    SortedCovariate() = default;

    /// Sorts `x` (stable) and builds the level structure. Throws on
    /// empty input or non-finite values.
    static SortedCovariate from_column(std::span<const double> x,
                                       TieHandling ties = TieHandling::group);

    std::size_t size() const noexcept { return perm_.size(); }
    std::size_t num_levels() const noexcept { return levels_.size(); }

    /// perm()[i] is the original row of the i-th smallest value.
    const std::vector<std::size_t>& perm() const noexcept { return perm_; }
    const std::vector<double>& sorted_x() const noexcept { return sorted_x_; }

    /// Distinct covariate values, strictly increasing.
    const std::vector<double>& levels() const noexcept { return levels_; }
    /// levels()[k+1] - levels()[k]; all strictly positive.
    const std::vector<double>& gaps() const noexcept { return gaps_; }
    /// Multiplicity of each level.
    const std::vector<double>& counts() const noexcept { return counts_; }
    /// Empty when every level has multiplicity one.
    std::span<const double> weights() const noexcept;
    bool has_ties() const noexcept { return has_ties_; }

    /// Level index of each original row.
    const std::vector<std::size_t>& level_of_row() const noexcept { return level_of_row_; }

    /// Weighted level means of a vector given in original row order.
    void level_means(std::span<const double> r, std::span<double> out) const;

    /// Broadcast level values back to original row order.
    void scatter(std::span<const double> level_values, std::span<double> out) const;

private:
    std::vector<std::size_t> perm_;
    std::vector<double> sorted_x_;
    std::vector<double> levels_;
    std::vector<double> gaps_;
    std::vector<double> counts_;
    std::vector<std::size_t> level_of_row_;
    bool has_ties_ = false;
};

}  // namespace shapefit
