#pragma once

// Versioned JSON model files and run configurations.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shapefit/backfit.hpp"

namespace shapefit {

inline constexpr int kModelFormatVersion = 1;

struct ModelComponent {
    std::string name;
    ComponentFit fit;
};

struct ModelFile {
    int version = kModelFormatVersion;
    double intercept = 0.0;
    std::vector<ModelComponent> components;
    // Fit metadata.
    ShapeSpec shape;
    int sweeps = 0;
    bool converged = false;
    double objective = 0.0;
    double outer_tol = 0.0;
    int max_sweeps = 0;

    /// Prediction-ready view (Z is left empty).
    AdditiveFit to_fit() const;
};

/// Inactive components keep only their training range as two zero knots.
ModelFile make_model(const AdditiveFit& fit, const std::vector<std::string>& names,
                     const FitConfig& config);

/// Canonical text; load followed by dump reproduces the input bytes.
std::string dump_model(const ModelFile& model);
/// Throws std::invalid_argument on malformed content or version mismatch.
ModelFile parse_model(const std::string& text);

void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

/// Settings a fit/cv/eval run reads from a JSON config file. Every field is
/// optional in the file; command-line flags override file values.
struct RunConfig {
    std::optional<std::string> mode;
    std::optional<double> lambda_d, lambda_t, lambda_s;
    std::optional<std::size_t> grid_lambda_s, grid_shape;  // grid sizes
    std::optional<double> tol;
    std::optional<int> max_sweeps;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> response;
    std::optional<std::string> input, output;
    std::optional<std::size_t> folds;
};

/// Validates the document against the schema before returning: unknown keys,
/// wrong types, negative penalties and unknown modes are all rejected.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string dump_run_config(const RunConfig& cfg);

}  // namespace shapefit
