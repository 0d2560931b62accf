#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace shapefit {

/// Shape imposed on one additive component.
enum class ShapeMode {
    unconstrained,
    isotonic,           // nondecreasing; lambda_t > 0 gives the LISO-style variant
    convex,             // nondecreasing slopes
    convex_increasing,  // nonnegative, nondecreasing slopes
    dc,                 // difference of convex, penalized by lambda_d * ||.||_DC
    approx_convex,      // lambda_d * one-sided slope decrease
    tv,                 // lambda_t * total variation (fused lasso)
};

struct ShapeSpec {
    ShapeMode mode = ShapeMode::dc;
    double lambda_d = 0.0;  // curvature penalty (dc, approx_convex)
    double lambda_t = 0.0;  // total-variation penalty (tv, isotonic)
    double lambda_s = 0.0;  // group sparsity penalty (all modes)

    /// Throws std::invalid_argument on negative or non-finite penalties.
    void validate() const;

    /// True when the mode works on slopes through the change of variables.
    bool uses_slopes() const noexcept;

    /// The curvature or total-variation weight the mode actually reads (0 otherwise).
    double shape_lambda() const noexcept;
    void set_shape_lambda(double value) noexcept;

    friend bool operator==(const ShapeSpec&, const ShapeSpec&) = default;
};

/// Canonical command-line name ("dc", "convex", "convex-inc", "isotonic",
/// "ac", "tv", "none").
std::string_view to_string(ShapeMode mode) noexcept;

/// Accepts the canonical names plus "liso" (alias of isotonic).
std::optional<ShapeMode> parse_shape_mode(std::string_view name) noexcept;

}  // namespace shapefit
