#include "shapefit/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace shapefit {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("model file: " + msg); }

const json& field(const json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key))
        fail(std::string("missing field '") + key + "'");
    return obj.at(key);
}

double number(const json& obj, const char* key) {
    const auto& v = field(obj, key);
    if (!v.is_number())
        fail(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json spec_json(const ShapeSpec& s) {
    json j;
    j["mode"] = std::string(to_string(s.mode));
    j["lambda_d"] = s.lambda_d;
    j["lambda_t"] = s.lambda_t;
    j["lambda_s"] = s.lambda_s;
    return j;
}

ShapeSpec spec_from(const json& j) {
    const auto& m = field(j, "mode");
    if (!m.is_string())
        fail("'mode' must be a string");
    const auto mode = parse_shape_mode(m.get<std::string>());
    if (!mode)
        fail("unknown mode '" + m.get<std::string>() + "'");
    ShapeSpec s;
    s.mode = *mode;
    s.lambda_d = number(j, "lambda_d");
    s.lambda_t = number(j, "lambda_t");
    s.lambda_s = number(j, "lambda_s");
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    return s;
}

}  // namespace

AdditiveFit ModelFile::to_fit() const {
    AdditiveFit f;
    f.intercept = intercept;
    f.objective = objective;
    f.sweeps = sweeps;
    f.converged = converged;
    for (std::size_t j = 0; j < components.size(); ++j) {
        f.components.push_back(components[j].fit);
        if (components[j].fit.group_norm > 0.0)
            f.active_set.push_back(j);
    }
    return f;
}

ModelFile make_model(const AdditiveFit& fit, const std::vector<std::string>& names,
                     const FitConfig& config) {
    ModelFile m;
    m.intercept = fit.intercept;
    m.shape = config.shape;
    m.sweeps = fit.sweeps;
    m.converged = fit.converged;
    m.objective = fit.objective;
    m.outer_tol = config.outer_tol;
    m.max_sweeps = config.max_sweeps;
    for (std::size_t j = 0; j < fit.components.size(); ++j) {
        ModelComponent c;
        c.name = j < names.size() ? names[j] : "x" + std::to_string(j + 1);
        c.fit = fit.components[j];
        if (!(c.fit.group_norm > 0.0) && !c.fit.knots_x.empty()) {
            // Only the training range is worth keeping for a zero component.
            const double lo = c.fit.knots_x.front(), hi = c.fit.knots_x.back();
            c.fit.knots_x = lo < hi ? std::vector<double>{lo, hi} : std::vector<double>{lo};
            c.fit.knots_f.assign(c.fit.knots_x.size(), 0.0);
            c.fit.group_norm = 0.0;
        }
        m.components.push_back(std::move(c));
    }
    return m;
}

std::string dump_model(const ModelFile& model) {
    json root;
    root["format"] = "shapefit-model";
    root["version"] = model.version;
    root["intercept"] = model.intercept;
    json meta;
    meta["penalty"] = spec_json(model.shape);
    meta["sweeps"] = model.sweeps;
    meta["converged"] = model.converged;
    meta["objective"] = model.objective;
    meta["outer_tol"] = model.outer_tol;
    meta["max_sweeps"] = model.max_sweeps;
    root["metadata"] = meta;
    json comps = json::array();
    for (const auto& c : model.components) {
        json jc;
        jc["name"] = c.name;
        jc["penalty"] = spec_json(c.fit.spec);
        jc["group_norm"] = c.fit.group_norm;
        json knots = json::array();
        for (std::size_t k = 0; k < c.fit.knots_x.size(); ++k)
            knots.push_back(json::array({c.fit.knots_x[k], c.fit.knots_f[k]}));
        jc["knots"] = std::move(knots);
        comps.push_back(std::move(jc));
    }
    root["components"] = std::move(comps);
    return root.dump(1) + "\n";
}

ModelFile parse_model(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("not valid JSON (") + e.what() + ")");
    }
    if (!root.is_object() || root.value("format", std::string()) != "shapefit-model")
        fail("not a shapefit model");
    ModelFile m;
    const auto& ver = field(root, "version");
    if (!ver.is_number_integer() || ver.get<int>() != kModelFormatVersion)
        fail("unsupported version (expected " + std::to_string(kModelFormatVersion) + ")");
    m.version = ver.get<int>();
    m.intercept = number(root, "intercept");
    const auto& meta = field(root, "metadata");
    m.shape = spec_from(field(meta, "penalty"));
    m.sweeps = static_cast<int>(number(meta, "sweeps"));
    const auto& conv = field(meta, "converged");
    if (!conv.is_boolean())
        fail("'converged' must be a boolean");
    m.converged = conv.get<bool>();
    m.objective = number(meta, "objective");
    m.outer_tol = number(meta, "outer_tol");
    m.max_sweeps = static_cast<int>(number(meta, "max_sweeps"));

    const auto& comps = field(root, "components");
    if (!comps.is_array())
        fail("'components' must be an array");
    for (const auto& jc : comps) {
        ModelComponent c;
        const auto& name = field(jc, "name");
        if (!name.is_string())
            fail("component 'name' must be a string");
        c.name = name.get<std::string>();
        c.fit.spec = spec_from(field(jc, "penalty"));
        c.fit.group_norm = number(jc, "group_norm");
        const auto& knots = field(jc, "knots");
        if (!knots.is_array())
            fail("component '" + c.name + "': 'knots' must be an array");
        for (const auto& kv : knots) {
            if (!kv.is_array() || kv.size() != 2 || !kv[0].is_number() || !kv[1].is_number())
                fail("component '" + c.name + "': each knot must be an [x, f] pair");
            const double x = kv[0].get<double>();
            if (!c.fit.knots_x.empty() && !(x > c.fit.knots_x.back()))
                fail("component '" + c.name + "': knots must be strictly increasing in x");
            c.fit.knots_x.push_back(x);
            c.fit.knots_f.push_back(kv[1].get<double>());
        }
        m.components.push_back(std::move(c));
    }
    return m;
}

void save_model(const std::string& path, const ModelFile& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    out << dump_model(model);
    if (!out)
        throw std::runtime_error("write to '" + path + "' failed");
}

ModelFile load_model(const std::string& path) { return parse_model(read_all(path)); }

namespace {

[[noreturn]] void config_fail(const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
}

double nonneg(const json& v, const std::string& key) {
    if (!v.is_number())
        config_fail("'" + key + "' must be a number");
    const double d = v.get<double>();
    if (!(d >= 0.0) || !std::isfinite(d))
        config_fail("'" + key + "' must be finite and nonnegative");
    return d;
}

std::size_t positive_count(const json& v, const std::string& key) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0)
        config_fail("'" + key + "' must be a positive integer");
    return static_cast<std::size_t>(v.get<std::uint64_t>());
}

std::string text(const json& v, const std::string& key) {
    if (!v.is_string())
        config_fail("'" + key + "' must be a string");
    return v.get<std::string>();
}

}  // namespace

RunConfig parse_run_config(const std::string& src) {
    json root;
    try {
        root = json::parse(src);
    } catch (const json::parse_error& e) {
        config_fail(std::string("not valid JSON (") + e.what() + ")");
    }
    if (!root.is_object())
        config_fail("top level must be an object");
    RunConfig cfg;
    for (const auto& [key, v] : root.items()) {
        if (key == "mode") {
            cfg.mode = text(v, key);
            if (!parse_shape_mode(*cfg.mode))
                config_fail("unknown mode '" + *cfg.mode + "'");
        } else if (key == "lambda_d") {
            cfg.lambda_d = nonneg(v, key);
        } else if (key == "lambda_t") {
            cfg.lambda_t = nonneg(v, key);
        } else if (key == "lambda_s") {
            cfg.lambda_s = nonneg(v, key);
        } else if (key == "grid") {
            if (!v.is_object())
                config_fail("'grid' must be an object");
            for (const auto& [gk, gv] : v.items()) {
                if (gk == "lambda_s")
                    cfg.grid_lambda_s = positive_count(gv, "grid.lambda_s");
                else if (gk == "shape")
                    cfg.grid_shape = positive_count(gv, "grid.shape");
                else
                    config_fail("unknown key 'grid." + gk + "'");
            }
        } else if (key == "tol") {
            cfg.tol = nonneg(v, key);
            if (!(*cfg.tol > 0.0))
                config_fail("'tol' must be positive");
        } else if (key == "max_sweeps") {
            cfg.max_sweeps = static_cast<int>(positive_count(v, key));
        } else if (key == "seed") {
            if (!v.is_number_unsigned())
                config_fail("'seed' must be a nonnegative integer");
            cfg.seed = v.get<std::uint64_t>();
        } else if (key == "response") {
            cfg.response = text(v, key);
        } else if (key == "input") {
            cfg.input = text(v, key);
        } else if (key == "output") {
            cfg.output = text(v, key);
        } else if (key == "folds") {
            cfg.folds = positive_count(v, key);
            if (*cfg.folds < 2)
                config_fail("'folds' must be at least 2");
        } else {
            config_fail("unknown key '" + key + "'");
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_all(path)); }

std::string dump_run_config(const RunConfig& cfg) {
    json root = json::object();
    if (cfg.mode) root["mode"] = *cfg.mode;
    if (cfg.lambda_d) root["lambda_d"] = *cfg.lambda_d;
    if (cfg.lambda_t) root["lambda_t"] = *cfg.lambda_t;
    if (cfg.lambda_s) root["lambda_s"] = *cfg.lambda_s;
    if (cfg.grid_lambda_s || cfg.grid_shape) {
        json g = json::object();
        if (cfg.grid_lambda_s) g["lambda_s"] = *cfg.grid_lambda_s;
        if (cfg.grid_shape) g["shape"] = *cfg.grid_shape;
        root["grid"] = g;
    }
    if (cfg.tol) root["tol"] = *cfg.tol;
    if (cfg.max_sweeps) root["max_sweeps"] = *cfg.max_sweeps;
    if (cfg.seed) root["seed"] = *cfg.seed;
    if (cfg.response) root["response"] = *cfg.response;
    if (cfg.input) root["input"] = *cfg.input;
    if (cfg.output) root["output"] = *cfg.output;
    if (cfg.folds) root["folds"] = *cfg.folds;
    return root.dump(1) + "\n";
}

}  // namespace shapefit
