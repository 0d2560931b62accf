// shapefit command-line tool: fit, predict, simulate, eval, cv, export-components.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shapefit/backfit.hpp"
#include "shapefit/csv.hpp"
#include "shapefit/datagen.hpp"
#include "shapefit/evaluation.hpp"
#include "shapefit/model_io.hpp"

namespace {

using namespace shapefit;
using ojson = nlohmann::ordered_json;

// Failures reported as "shapefit: error: <kind>: <message>".
struct CliError : std::runtime_error {
    CliError(std::string kind, const std::string& msg) : std::runtime_error(msg), kind(std::move(kind)) {}
    std::string kind;
};

[[noreturn]] void usage_error(const std::string& msg) { throw CliError("usage", msg); }

struct ModeChoice {
    ShapeMode mode = ShapeMode::dc;
    bool search_shape = true;  // false for plain isotonic and none
};

ModeChoice parse_mode(const std::string& name) {
    const auto mode = parse_shape_mode(name);
    if (!mode)
        usage_error("unknown mode '" + name +
                    "' (expected dc, convex, convex-inc, isotonic, liso, tv, none or ac)");
    ModeChoice c;
    c.mode = *mode;
    c.search_shape = !(name == "isotonic" || *mode == ShapeMode::unconstrained ||
                       *mode == ShapeMode::convex || *mode == ShapeMode::convex_increasing);
    return c;
}

// Flags shared by the commands that fit models. Values from --config fill
// whatever was not given on the command line.
struct FitFlags {
    std::string mode = "dc";
    double lambda_d = 0.0, lambda_t = 0.0, lambda_s = 0.0;
    std::string grid = "30x5";
    double tol = 1e-6;
    int max_sweeps = 200;
    std::uint64_t seed = 0;
    std::string response;
    std::string config;

    CLI::Option *o_mode, *o_ld, *o_lt, *o_ls, *o_grid, *o_tol, *o_sweeps, *o_seed, *o_resp;

    void attach(CLI::App* app) {
        o_mode = app->add_option("--mode", mode, "Shape mode: dc|convex|convex-inc|isotonic|liso|tv|none|ac");
        o_ld = app->add_option("--lambda-d", lambda_d, "Curvature penalty (dc, ac)");
        o_lt = app->add_option("--lambda-t", lambda_t, "Total-variation penalty (tv, liso)");
        o_ls = app->add_option("--lambda-s", lambda_s, "Group sparsity penalty");
        o_grid = app->add_option("--grid", grid, "Grid size as <n_lambda_s>x<n_shape>, e.g. 30x5");
        o_tol = app->add_option("--tol", tol, "Relative objective tolerance for backfitting");
        o_sweeps = app->add_option("--max-sweeps", max_sweeps, "Backfitting sweep cap");
        o_seed = app->add_option("--seed", seed, "Random seed");
        o_resp = app->add_option("--response", response, "Response column name (default: y, else last column)");
        app->add_option("--config", config, "JSON run configuration; flags override it");
    }

    // Applies --config and returns the input/output paths it may carry.
    RunConfig merge_config() {
        RunConfig rc;
        if (config.empty())
            return rc;
        rc = load_run_config(config);
        if (rc.mode && !o_mode->count()) mode = *rc.mode;
        if (rc.lambda_d && !o_ld->count()) lambda_d = *rc.lambda_d;
        if (rc.lambda_t && !o_lt->count()) lambda_t = *rc.lambda_t;
        if (rc.lambda_s && !o_ls->count()) lambda_s = *rc.lambda_s;
        if ((rc.grid_lambda_s || rc.grid_shape) && !o_grid->count())
            grid = std::to_string(rc.grid_lambda_s.value_or(30)) + "x" +
                   std::to_string(rc.grid_shape.value_or(5));
        if (rc.tol && !o_tol->count()) tol = *rc.tol;
        if (rc.max_sweeps && !o_sweeps->count()) max_sweeps = *rc.max_sweeps;
        if (rc.seed && !o_seed->count()) seed = *rc.seed;
        if (rc.response && !o_resp->count()) response = *rc.response;
        return rc;
    }

    FitConfig fit_config() const {
        if (!(tol > 0.0))
            usage_error("--tol must be positive");
        if (max_sweeps < 1)
            usage_error("--max-sweeps must be at least 1");
        FitConfig cfg;
        cfg.shape.mode = parse_mode(mode).mode;
        cfg.shape.lambda_d = lambda_d;
        cfg.shape.lambda_t = lambda_t;
        cfg.shape.lambda_s = lambda_s;
        cfg.outer_tol = tol;
        cfg.max_sweeps = max_sweeps;
        cfg.seed = seed;
        try {
            cfg.shape.validate();
        } catch (const std::invalid_argument& e) {
            usage_error(e.what());
        }
        return cfg;
    }

    GridOptions grid_options() const {
        GridOptions g;
        const auto x = grid.find('x');
        try {
            std::size_t used = 0;
            const auto ns = std::stoul(grid.substr(0, x), &used);
            if (used != grid.substr(0, x).size())
                throw std::invalid_argument(grid);
            g.n_lambda_s = ns;
            if (x != std::string::npos) {
                const std::string rest = grid.substr(x + 1);
                g.n_shape = std::stoul(rest, &used);
                if (used != rest.size())
                    throw std::invalid_argument(grid);
            }
        } catch (const std::exception&) {
            usage_error("--grid expects <n_lambda_s>x<n_shape>, got '" + grid + "'");
        }
        if (g.n_lambda_s == 0 || g.n_shape == 0)
            usage_error("--grid sizes must be positive");
        return g;
    }

    LambdaGrid make_grid(const Dataset& train) const {
        const auto choice = parse_mode(mode);
        LambdaGrid grid_values = default_grid(train, choice.mode, grid_options());
        if (!choice.search_shape)
            grid_values.shape = {0.0};
        return grid_values;
    }
};

std::string fmt(double v) { return format_double(v); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw CliError("io", "cannot open '" + path + "' for writing");
    out << text;
    if (!out)
        throw CliError("io", "write to '" + path + "' failed");
}

// Writes to `path`, or to stdout when it is empty or "-".
void emit_csv(const std::string& path, const CsvTable& table) {
    if (path.empty() || path == "-")
        write_csv(std::cout, table);
    else
        write_csv_file(path, table);
}

Dataset load_dataset(const std::string& path, const std::string& response) {
    if (path.empty())
        usage_error("--data is required");
    return to_dataset(read_csv_file(path), response);
}

std::string summary_line(const AdditiveFit& f, std::size_t p) {
    return "active " + std::to_string(f.active_set.size()) + "/" + std::to_string(p) +
           ", objective " + fmt(f.objective) + ", sweeps " + std::to_string(f.sweeps) + ", " +
           (f.converged ? "converged" : "not converged");
}

std::string describe(const ShapeSpec& s) {
    return "mode " + std::string(to_string(s.mode)) + ", lambda_d " + fmt(s.lambda_d) +
           ", lambda_t " + fmt(s.lambda_t) + ", lambda_s " + fmt(s.lambda_s);
}

// ---------------------------------------------------------------- fit

struct FitCmd {
    FitFlags flags;
    std::string data, validation, out;

    void attach(CLI::App* app) {
        flags.attach(app);
        app->add_option("--data", data, "Training CSV with a header row");
        app->add_option("--validation", validation,
                        "Validation CSV; when given, lambdas are chosen over --grid");
        app->add_option("--out", out, "Model file to write");
    }

    int run() {
        const auto rc = flags.merge_config();
        if (data.empty() && rc.input) data = *rc.input;
        if (out.empty() && rc.output) out = *rc.output;
        if (out.empty())
            usage_error("--out is required");
        const Dataset train = load_dataset(data, flags.response);
        FitConfig cfg = flags.fit_config();
        AdditiveFit fitted;
        if (!validation.empty()) {
            const Dataset valid = load_dataset(validation, flags.response);
            if (valid.names != train.names)
                throw CliError("invalid-input", "validation columns differ from training columns");
            const auto grid = flags.make_grid(train);
            auto sel = grid_select(train, valid, grid, cfg.shape.mode, cfg);
            cfg.shape = sel.best;
            fitted = std::move(sel.best_fit);
            std::cout << "selected " << describe(cfg.shape) << ", validation mse "
                      << fmt(sel.best_mse) << "\n";
        } else {
            fitted = fit(train, cfg);
        }
        save_model(out, make_model(fitted, train.names, cfg));
        std::cout << "fit: " << summary_line(fitted, train.p()) << "\n";
        return 0;
    }
};

// ---------------------------------------------------------------- predict

struct PredictCmd {
    std::string model, data, out;

    void attach(CLI::App* app) {
        app->add_option("--model", model, "Model file")->required();
        app->add_option("--data", data, "CSV with the model's covariate columns")->required();
        app->add_option("--out", out, "Output CSV (default: stdout)");
    }

    int run() {
        const ModelFile m = load_model(model);
        const CsvTable table = read_csv_file(data);
        const std::size_t rows = table.rows();
        Matrix X(rows, m.components.size());
        for (std::size_t j = 0; j < m.components.size(); ++j) {
            const auto it = std::find(table.header.begin(), table.header.end(), m.components[j].name);
            if (it == table.header.end())
                throw CliError("invalid-input",
                               "column '" + m.components[j].name + "' required by the model is missing");
            const auto& col = table.columns[static_cast<std::size_t>(it - table.header.begin())];
            std::copy(col.begin(), col.end(), X.col(j).begin());
        }
        const Prediction pred = predict(m.to_fit(), X);
        CsvTable result;
        result.header = {"prediction"};
        result.columns = {pred.values};
        emit_csv(out, result);
        for (std::size_t j = 0; j < pred.out_of_range.size(); ++j)
            if (pred.out_of_range[j] > 0)
                std::cerr << "shapefit: warning: column '" << m.components[j].name << "': "
                          << pred.out_of_range[j]
                          << " value(s) outside the training range were clamped\n";
        return 0;
    }
};

// ---------------------------------------------------------------- simulate

ojson scenario_json(const Scenario& s) {
    ojson fs = ojson::array();
    for (std::size_t j = 0; j < s.functions.size(); ++j) {
        const auto& f = s.functions[j];
        ojson jf;
        jf["column"] = "x" + std::to_string(j + 1);
        jf["kind"] = to_string(f.kind);
        jf["params"] = f.params;
        jf["offset"] = f.offset;
        fs.push_back(jf);
    }
    ojson js;
    js["id"] = s.id;
    js["signal_sd"] = s.signal_sd();
    js["functions"] = fs;
    return js;
}

struct SimulateCmd {
    int scenario = 1;
    std::size_t n = 100, p = 200;
    double snr = 5.0;
    std::uint64_t seed = 0;
    std::string out;

    void attach(CLI::App* app) {
        app->add_option("--scenario", scenario, "Scenario id (1, 2 or 3)");
        app->add_option("--n", n, "Samples per split");
        app->add_option("--p", p, "Covariates");
        app->add_option("--snr", snr, "sd(signal) / sigma");
        app->add_option("--seed", seed, "Random seed");
        app->add_option("--out", out, "Output prefix; writes <prefix>_{train,validation,test}.csv and <prefix>_meta.json")
            ->required();
    }

    int run() {
        SimConfig cfg{n, p, snr, seed};
        const Scenario sc = Scenario::make(scenario);
        const auto splits = generate_splits(sc, cfg);
        write_csv_file(out + "_train.csv", from_dataset(splits.train.data));
        write_csv_file(out + "_validation.csv", from_dataset(splits.validation.data));
        write_csv_file(out + "_test.csv", from_dataset(splits.test.data));

        ojson meta;
        meta["format"] = "shapefit-simulation";
        meta["scenario"] = scenario_json(sc);
        meta["n"] = n;
        meta["p"] = p;
        meta["snr"] = snr;
        meta["seed"] = seed;
        meta["sigma"] = splits.train.sigma;
        meta["response"] = "y";
        ojson support = ojson::array();
        for (std::size_t j : splits.train.support)
            support.push_back("x" + std::to_string(j + 1));
        meta["support"] = support;
        write_text(out + "_meta.json", meta.dump(1) + "\n");
        std::cout << "simulate: scenario " << scenario << ", n " << n << ", p " << p << ", sigma "
                  << fmt(splits.train.sigma) << "\n";
        return 0;
    }
};

// ---------------------------------------------------------------- eval

std::vector<ShapeMode> parse_methods(const std::string& list) {
    std::vector<ShapeMode> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(parse_mode(item).mode);
    if (out.empty())
        usage_error("--methods must name at least one mode");
    return out;
}

struct EvalCmd {
    FitFlags flags;
    int scenario = 2;
    std::size_t replicates = 20, n = 100, p = 200;
    double snr = 5.0;
    std::string methods = "dc,tv";
    std::string data_prefix, out;

    void attach(CLI::App* app) {
        flags.attach(app);
        app->add_option("--scenario", scenario, "Scenario id for simulated replicates");
        app->add_option("--replicates", replicates, "Number of simulated replicates");
        app->add_option("--n", n, "Samples per split");
        app->add_option("--p", p, "Covariates");
        app->add_option("--snr", snr, "sd(signal) / sigma");
        app->add_option("--methods", methods, "Comma-separated modes to compare");
        app->add_option("--data-prefix", data_prefix,
                        "Evaluate <prefix>_{train,validation,test}.csv instead of simulating");
        app->add_option("--out", out, "Metrics CSV (default: stdout)");
    }

    static void add_row(CsvTable& t, std::vector<std::string>& names, const std::string& method,
                        const std::vector<std::optional<double>>& cells) {
        names.push_back(method);
        for (std::size_t c = 0; c < cells.size(); ++c)
            t.columns[c].push_back(cells[c] ? *cells[c] : std::numeric_limits<double>::quiet_NaN());
    }

    int run() {
        flags.merge_config();
        const auto mlist = parse_methods(methods);
        FitConfig base = flags.fit_config();
        const GridOptions gopts = flags.grid_options();

        const std::vector<std::string> header = {
            "replicates",     "precision_mean", "precision_se", "recall_mean", "recall_se",
            "model_size_mean", "model_size_se", "test_mse_mean", "test_mse_se"};
        CsvTable t;
        t.header = header;
        t.columns.resize(header.size());
        std::vector<std::string> names;

        if (data_prefix.empty()) {
            StudyConfig sc;
            sc.scenario = scenario;
            sc.sim = SimConfig{n, p, snr, flags.seed};
            sc.replicates = replicates;
            sc.methods = mlist;
            sc.grid = gopts;
            sc.base = base;
            const auto summaries = run_study(sc);
            for (const auto& s : summaries)
                add_row(t, names, std::string(to_string(s.mode)),
                        {double(s.test_mse.count), s.precision.count ? std::optional(s.precision.mean) : std::nullopt,
                         s.precision.count ? std::optional(s.precision.se) : std::nullopt, s.recall.mean,
                         s.recall.se, s.model_size.mean, s.model_size.se, s.test_mse.mean, s.test_mse.se});
        } else {
            const Dataset train = load_dataset(data_prefix + "_train.csv", flags.response);
            const Dataset valid = load_dataset(data_prefix + "_validation.csv", flags.response);
            const Dataset test = load_dataset(data_prefix + "_test.csv", flags.response);
            std::optional<std::vector<std::size_t>> truth;
            const std::string meta_path = data_prefix + "_meta.json";
            if (std::filesystem::exists(meta_path)) {
                std::ifstream in(meta_path, std::ios::binary);
                ojson meta;
                try {
                    meta = ojson::parse(in);
                } catch (const ojson::exception& e) {
                    throw CliError("invalid-input", meta_path + ": " + e.what());
                }
                if (meta.contains("support")) {
                    truth.emplace();
                    for (const auto& name : meta["support"]) {
                        const auto it = std::find(train.names.begin(), train.names.end(),
                                                  name.get<std::string>());
                        if (it != train.names.end())
                            truth->push_back(static_cast<std::size_t>(it - train.names.begin()));
                    }
                }
            }
            for (ShapeMode mode : mlist) {
                auto grid = default_grid(train, mode, gopts);
                if (mode == ShapeMode::isotonic || mode == ShapeMode::unconstrained ||
                    mode == ShapeMode::convex || mode == ShapeMode::convex_increasing)
                    grid.shape = {0.0};
                const auto sel = grid_select(train, valid, grid, mode, base);
                const auto est = support_of(sel.best_fit);
                const double mse =
                    mean_squared_error(test.y, predict(sel.best_fit, test.X).values);
                std::optional<double> prec, rec;
                if (truth) {
                    const auto m = support_metrics(est, *truth);
                    prec = m.precision;
                    rec = m.recall;
                }
                add_row(t, names, std::string(to_string(mode)),
                        {1.0, prec, prec ? std::optional(0.0) : std::nullopt, rec,
                         rec ? std::optional(0.0) : std::nullopt, double(est.size()), 0.0, mse, 0.0});
            }
        }

        // Method names are text, so the table is assembled by hand.
        std::ostringstream os;
        os << "method";
        for (const auto& h : t.header)
            os << ',' << h;
        os << '\n';
        for (std::size_t r = 0; r < names.size(); ++r) {
            os << names[r];
            for (const auto& col : t.columns)
                os << ',' << (std::isnan(col[r]) ? std::string() : fmt(col[r]));
            os << '\n';
        }
        if (out.empty() || out == "-")
            std::cout << os.str();
        else
            write_text(out, os.str());
        return 0;
    }
};

// ---------------------------------------------------------------- cv

struct CvCmd {
    FitFlags flags;
    std::string data, out, curve, report;
    std::size_t folds = 10, augment_to = 0, repeats = 1;

    void attach(CLI::App* app) {
        flags.attach(app);
        app->add_option("--data", data, "CSV with a header row");
        app->add_option("--folds", folds, "Number of folds");
        app->add_option("--augment-to", augment_to,
                        "Rescale covariates to [0,1] and append Uniform(0,1) spurious columns up to this count");
        app->add_option("--repeats", repeats, "Independent partitions (and spurious draws)");
        app->add_option("--out", out, "Model file from the first repeat");
        app->add_option("--curve", curve, "CV curve CSV from the first repeat");
        app->add_option("--report", report, "Per-repeat CSV: model size and spurious selections");
    }

    int run() {
        const auto rc = flags.merge_config();
        if (data.empty() && rc.input) data = *rc.input;
        if (out.empty() && rc.output) out = *rc.output;
        if (rc.folds && folds == 10) folds = *rc.folds;
        if (repeats < 1)
            usage_error("--repeats must be at least 1");
        const Dataset original = load_dataset(data, flags.response);
        const FitConfig base = flags.fit_config();
        const ModeChoice choice = parse_mode(flags.mode);

        std::vector<EliminationRun> runs;
        CsvTable rep;
        rep.header = {"repeat", "model_size", "spurious_selected"};
        rep.columns.resize(3);
        for (std::size_t r = 0; r < repeats; ++r) {
            const std::uint64_t seed_r = repeats == 1 ? flags.seed : derive_seed(flags.seed, r);
            Dataset d = augment_to > 0 ? augment_spurious(original, augment_to, seed_r) : original;
            auto grid = flags.make_grid(d);
            auto res = kfold_cv(d, folds, grid, choice.mode, seed_r, base);
            EliminationRun run;
            run.support = support_of(res.final_fit);
            for (std::size_t j = original.p(); j < d.p(); ++j)
                run.spurious.push_back(j);
            std::size_t hits = 0;
            for (std::size_t j : run.support)
                hits += j >= original.p();
            rep.columns[0].push_back(double(r));
            rep.columns[1].push_back(double(run.support.size()));
            rep.columns[2].push_back(double(hits));
            runs.push_back(std::move(run));

            if (r == 0) {
                if (!out.empty()) {
                    FitConfig chosen = base;
                    chosen.shape = res.best;
                    save_model(out, make_model(res.final_fit, d.names, chosen));
                }
                if (!curve.empty()) {
                    CsvTable c;
                    c.header = {"shape_lambda", "lambda_s", "cv_mse"};
                    c.columns.resize(3);
                    const std::size_t ns = grid.lambda_s.size();
                    for (std::size_t i = 0; i < grid.size(); ++i) {
                        c.columns[0].push_back(grid.shape[i / ns]);
                        c.columns[1].push_back(grid.lambda_s[i % ns]);
                        c.columns[2].push_back(res.cv_curve[i]);
                    }
                    write_csv_file(curve, c);
                }
                std::cout << "cv: selected " << describe(res.best) << "; "
                          << summary_line(res.final_fit, d.p()) << "\n";
            }
        }
        if (!report.empty())
            write_csv_file(report, rep);
        if (augment_to > original.p())
            std::cout << "cv: spurious elimination rate " << fmt(spurious_elimination_rate(runs))
                      << " over " << repeats << " repeat(s)\n";
        return 0;
    }
};

// ---------------------------------------------------------------- export-components

struct ExportCmd {
    std::string model, out;
    std::size_t points = 100;
    bool at_knots = false;

    void attach(CLI::App* app) {
        app->add_option("--model", model, "Model file")->required();
        app->add_option("--points", points, "Evenly spaced points per component over its training range");
        app->add_flag("--at-knots", at_knots, "Evaluate at the stored knots instead");
        app->add_option("--out", out, "Output CSV (default: stdout)");
    }

    int run() {
        if (points < 1)
            usage_error("--points must be at least 1");
        const ModelFile m = load_model(model);
        std::ostringstream os;
        os << "component,x,f\n";
        for (const auto& c : m.components) {
            const auto& kx = c.fit.knots_x;
            if (kx.empty())
                continue;
            std::vector<double> xs;
            if (at_knots || kx.size() == 1) {
                xs = kx;
            } else {
                const double lo = kx.front(), hi = kx.back();
                for (std::size_t i = 0; i < points; ++i)
                    xs.push_back(points == 1 ? lo
                                             : lo + (hi - lo) * static_cast<double>(i) /
                                                        static_cast<double>(points - 1));
                xs.back() = hi;
            }
            for (double x : xs)
                os << c.name << ',' << fmt(x) << ',' << fmt(interpolate(c.fit, x)) << '\n';
        }
        if (out.empty() || out == "-")
            std::cout << os.str();
        else
            write_text(out, os.str());
        return 0;
    }
};

std::string one_line(std::string s) {
    for (char& ch : s)
        if (ch == '\n' || ch == '\r')
            ch = ' ';
    return s;
}

int fail(const std::string& kind, const std::string& msg, int code) {
    std::cerr << "shapefit: error: " << kind << ": " << one_line(msg) << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse shape-constrained additive models"};
    app.require_subcommand(1);

    FitCmd fit_cmd;
    PredictCmd predict_cmd;
    SimulateCmd simulate_cmd;
    EvalCmd eval_cmd;
    CvCmd cv_cmd;
    ExportCmd export_cmd;
    auto* s_fit = app.add_subcommand("fit", "Fit a model at fixed penalties, or select them on a validation set");
    auto* s_predict = app.add_subcommand("predict", "Predict with a saved model");
    auto* s_sim = app.add_subcommand("simulate", "Write simulated train/validation/test CSVs");
    auto* s_eval = app.add_subcommand("eval", "Compare modes on simulated replicates or a data triplet");
    auto* s_cv = app.add_subcommand("cv", "K-fold cross-validation with optional spurious augmentation");
    auto* s_export = app.add_subcommand("export-components", "Tabulate fitted component functions");
    fit_cmd.attach(s_fit);
    predict_cmd.attach(s_predict);
    simulate_cmd.attach(s_sim);
    eval_cmd.attach(s_eval);
    cv_cmd.attach(s_cv);
    export_cmd.attach(s_export);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    try {
        if (*s_fit) return fit_cmd.run();
        if (*s_predict) return predict_cmd.run();
        if (*s_sim) return simulate_cmd.run();
        if (*s_eval) return eval_cmd.run();
        if (*s_cv) return cv_cmd.run();
        if (*s_export) return export_cmd.run();
    } catch (const CliError& e) {
        return fail(e.kind, e.what(), e.kind == "usage" ? 2 : 1);
    } catch (const CsvError& e) {
        return fail("csv", e.what(), 1);
    } catch (const std::invalid_argument& e) {
        return fail("invalid-input", e.what(), 1);
    } catch (const std::exception& e) {
        return fail("io", e.what(), 1);
    }
    return 0;
}
