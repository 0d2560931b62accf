#include "shapefit/shape.hpp"

#include <cmath>
#include <stdexcept>

namespace shapefit {

void ShapeSpec::validate() const {
    auto ok = [](double x) { return x >= 0.0 && std::isfinite(x); };
    if (!ok(lambda_d) || !ok(lambda_t) || !ok(lambda_s))
        throw std::invalid_argument("ShapeSpec: penalties must be finite and nonnegative");
}

bool ShapeSpec::uses_slopes() const noexcept {
    switch (mode) {
    case ShapeMode::convex:
    case ShapeMode::convex_increasing:
    case ShapeMode::dc:
    case ShapeMode::approx_convex:
        return true;
    default:
        return false;
    }
}

double ShapeSpec::shape_lambda() const noexcept {
    switch (mode) {
    case ShapeMode::dc:
    case ShapeMode::approx_convex:
        return lambda_d;
    case ShapeMode::tv:
    case ShapeMode::isotonic:
        return lambda_t;
    default:
        return 0.0;
    }
}

void ShapeSpec::set_shape_lambda(double value) noexcept {
    switch (mode) {
    case ShapeMode::dc:
    case ShapeMode::approx_convex:
        lambda_d = value;
        break;
    case ShapeMode::tv:
    case ShapeMode::isotonic:
        lambda_t = value;
        break;
    default:
        break;
    }
}

std::string_view to_string(ShapeMode mode) noexcept {
    switch (mode) {
    case ShapeMode::unconstrained: return "none";
    case ShapeMode::isotonic: return "isotonic";
    case ShapeMode::convex: return "convex";
    case ShapeMode::convex_increasing: return "convex-inc";
    case ShapeMode::dc: return "dc";
    case ShapeMode::approx_convex: return "ac";
    case ShapeMode::tv: return "tv";
    }
    return "none";
}

std::optional<ShapeMode> parse_shape_mode(std::string_view name) noexcept {
    if (name == "none") return ShapeMode::unconstrained;
    if (name == "isotonic" || name == "liso") return ShapeMode::isotonic;
    if (name == "convex") return ShapeMode::convex;
    if (name == "convex-inc") return ShapeMode::convex_increasing;
    if (name == "dc") return ShapeMode::dc;
    if (name == "ac") return ShapeMode::approx_convex;
    if (name == "tv") return ShapeMode::tv;
    return std::nullopt;
}

}  // namespace shapefit
