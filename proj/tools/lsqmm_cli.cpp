// Command-line surface for the LSQMM classifier: train, predict, cv, sweep,
// noise-sweep, synth, trace. Standard output carries one JSON line per
// invocation; diagnostics go to standard error. Exit codes: 0 ok, 2 I/O,
// 3 validation, 4 numeric.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lsqmm/lsqmm.hpp"

namespace {

using nlohmann::json;

constexpr int kExitIo = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumeric = 4;

std::pair<Eigen::Index, Eigen::Index> parse_size(const std::string &s) {
    const auto x = s.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= s.size())
        throw lsqmm::ValidationError("--target-size expects MxN, got '" + s + "'");
    long rows = 0, cols = 0;
    try {
        std::size_t done = 0;
        rows = std::stol(s.substr(0, x), &done);
        if (done != x)
            throw std::invalid_argument(s);
        const std::string tail = s.substr(x + 1);
        cols = std::stol(tail, &done);
        if (done != tail.size())
            throw std::invalid_argument(s);
    } catch (const std::exception &) {
        throw lsqmm::ValidationError("--target-size expects MxN, got '" + s + "'");
    }
    if (rows < 1 || cols < 1)
        throw lsqmm::ValidationError("--target-size must be positive, got '" + s + "'");
    return {rows, cols};
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

struct ConfigFlags {
    double soft_margin_c = 1.0;
    double lambda = 1e-3;
    double rho = 1.0;
    double tau = 1.0;
    double tol = 1e-3;
    int max_iter = 1000;

    lsqmm::TrainConfig to_config() const {
        lsqmm::TrainConfig cfg;
        cfg.C = soft_margin_c;
        cfg.lambda = lambda;
        cfg.rho = rho;
        cfg.tau = tau;
        cfg.tol = tol;
        cfg.max_iter = max_iter;
        return cfg;
    }

    void attach(CLI::App *cmd) {
        cmd->add_option("--soft-margin-c", soft_margin_c, "Soft-margin penalty C");
        cmd->add_option("--lambda", lambda, "Nuclear-norm weight");
        cmd->add_option("--rho", rho, "Augmented-Lagrangian penalty");
        cmd->add_option("--tau", tau, "Dual stepsize in (0, 1.618]");
        cmd->add_option("--tol", tol, "Relative-residual stopping tolerance");
        cmd->add_option("--max-iter", max_iter, "Outer iteration cap");
    }
};

struct DataFlags {
    std::string manifest;
    bool synth = false;
    int n_per_class = 20;
    int rank = 2;
    double sigma = 0.05;
    std::string target_size = "16x16";

    void attach(CLI::App *cmd, bool with_synth = true) {
        cmd->add_option("--manifest", manifest, "Dataset manifest CSV (path,label)");
        cmd->add_option("--target-size", target_size, "Image size MxN (rows x cols)");
        if (with_synth) {
            cmd->add_flag("--synth", synth, "Generate a synthetic low-rank dataset instead of reading a manifest");
            cmd->add_option("--n-per-class", n_per_class, "Synthetic samples per class");
            cmd->add_option("--rank", rank, "Synthetic class-mean rank");
            cmd->add_option("--sigma", sigma, "Synthetic per-entry noise scale");
        }
    }

    /// Samples + labels + a short source description for the config echo.
    std::tuple<std::vector<lsqmm::QMatrix>, std::vector<int>, std::string> load(std::uint64_t seed) const {
        const auto [rows, cols] = parse_size(target_size);
        if (synth != manifest.empty())
            throw lsqmm::ValidationError("exactly one of --manifest or --synth is required");
        std::vector<lsqmm::QMatrix> x;
        std::vector<int> y;
        std::string source;
        if (synth) {
            auto samples = lsqmm::synth_lowrank(n_per_class, rows, cols, rank, sigma, seed);
            for (auto &s : samples) {
                x.push_back(std::move(s.X));
                y.push_back(s.y);
            }
            source = "synth(n_per_class=" + std::to_string(n_per_class) + ",rank=" + std::to_string(rank) +
                     ",sigma=" + fmt(sigma) + ")";
        } else {
            auto [mf, samples] = lsqmm::load_manifest(manifest, rows, cols);
            for (auto &s : samples) {
                x.push_back(std::move(s.X));
                y.push_back(s.y);
            }
            source = manifest;
        }
        return {std::move(x), std::move(y), std::move(source)};
    }
};

json decisions_echo() {
    return json{{"pixel_scale", "divide by 255 to [0,1]"},
                {"resize_filter", "bilinear"},
                {"noise_model", "X + R*sigma_X*N(0,1) on the imaginary planes, clipped to [0,1]"},
                {"noise_applied_to", "train and test copies"},
                {"f1_positive_class", 1},
                {"fold_pairing", "same folds across sweep cells"},
                {"units", "fractions"}};
}

json config_echo_json(const lsqmm::EvalConfigEcho &echo, const std::string &source, const std::string &target_size) {
    return json{{"C", echo.train.C},
                {"lambda", echo.train.lambda},
                {"rho", echo.train.rho},
                {"tau", echo.train.tau},
                {"tol", echo.train.tol},
                {"max_iter", echo.train.max_iter},
                {"qp_tol", echo.train.qp_tol},
                {"folds", echo.folds},
                {"repeats", echo.repeats},
                {"seed", echo.seed},
                {"classifier", echo.classifier},
                {"source", source},
                {"target_size", target_size}};
}

json summary_json(const lsqmm::EvalReport &report) {
    return json{{"accuracy_mean", report.accuracy_mean},
                {"accuracy_std", report.accuracy_std},
                {"f1_mean", report.f1_mean},
                {"f1_std", report.f1_std}};
}

json per_fold_json(const lsqmm::EvalReport &report) {
    json rows = json::array();
    for (const auto &f : report.per_fold)
        rows.push_back(json{{"repeat", f.repeat},
                            {"fold", f.fold},
                            {"accuracy", f.accuracy},
                            {"f1", f.f1},
                            {"train_seconds", f.train_seconds}});
    return rows;
}

void write_text_file(const std::string &path, const std::string &content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw lsqmm::IoError("cannot open output file: " + path);
    out << content;
    out.flush();
    if (!out)
        throw lsqmm::IoError("failed writing output file: " + path);
}

void write_report_files(const std::string &prefix, const std::string &kind, const json &body,
                        const std::string &csv_header, const std::vector<std::string> &csv_rows) {
    json doc = body;
    doc["artifact_version"] = lsqmm::kVersion;
    doc["kind"] = kind;
    doc["decisions"] = decisions_echo();
    write_text_file(prefix + ".json", doc.dump(2) + "\n");
    std::string csv = csv_header + "\n";
    for (const std::string &row : csv_rows)
        csv += row + "\n";
    write_text_file(prefix + ".csv", csv);
}

std::vector<std::string> fold_csv_rows(const lsqmm::EvalReport &report, const std::string &key_prefix) {
    std::vector<std::string> rows;
    for (const auto &f : report.per_fold)
        rows.push_back(key_prefix + std::to_string(f.repeat) + "," + std::to_string(f.fold) + "," + fmt(f.accuracy) +
                       "," + fmt(f.f1) + "," + fmt(f.train_seconds));
    return rows;
}

int run_cli(int argc, char **argv) {
    CLI::App app{"Low-rank support quaternion matrix machine"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    auto add_seed = [&seed](CLI::App *cmd) { cmd->add_option("--seed", seed, "Base RNG seed"); };

    // ---- train
    auto *train_cmd = app.add_subcommand("train", "Train a model from a manifest");
    add_seed(train_cmd);
    ConfigFlags train_cfg;
    DataFlags train_data;
    std::string train_out;
    train_cfg.attach(train_cmd);
    train_data.attach(train_cmd);
    train_cmd->add_option("--out", train_out, "Output model file")->required();
    train_cmd->callback([&] {
        auto [x, y, source] = train_data.load(seed);
        const auto t0 = std::chrono::steady_clock::now();
        lsqmm::TrainedModel model = lsqmm::train(x, y, train_cfg.to_config());
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        lsqmm::save_model(train_out, model);
        std::cout << json{{"command", "train"},
                          {"source", source},
                          {"n_samples", x.size()},
                          {"iterations", model.iterations},
                          {"converged", model.converged},
                          {"final_residual", model.trace.back().residual},
                          {"wall_seconds", seconds},
                          {"model", train_out}}
                         .dump()
                  << "\n";
    });

    // ---- predict
    auto *predict_cmd = app.add_subcommand("predict", "Predict labels for a manifest with a trained model");
    std::string predict_model, predict_manifest, predict_out, predict_size;
    predict_cmd->add_option("--model", predict_model, "Model file")->required();
    predict_cmd->add_option("--manifest", predict_manifest, "Manifest CSV")->required();
    predict_cmd->add_option("--out", predict_out, "Output predictions CSV")->required();
    predict_cmd->add_option("--target-size", predict_size, "Image size MxN; must match the model when given");
    predict_cmd->callback([&] {
        lsqmm::TrainedModel model = lsqmm::load_model(predict_model);
        const Eigen::Index m = model.W.rows(), n = model.W.cols();
        if (!predict_size.empty()) {
            const auto [rows, cols] = parse_size(predict_size);
            if (rows != m || cols != n)
                throw lsqmm::ValidationError("size mismatch: model is " + std::to_string(m) + "x" + std::to_string(n) +
                                             ", requested " + std::to_string(rows) + "x" + std::to_string(cols));
        }
        auto [mf, samples] = lsqmm::load_manifest(predict_manifest, m, n);
        std::string csv = "path,decision_value,predicted_label\n";
        for (const auto &s : samples) {
            const double f = lsqmm::decision_value(model, s.X);
            csv += s.source_id + "," + fmt(f) + "," + std::to_string(f >= 0.0 ? 1 : -1) + "\n";
        }
        write_text_file(predict_out, csv);
        std::cout << json{{"command", "predict"}, {"n_samples", samples.size()}, {"out", predict_out}}.dump() << "\n";
    });

    // ---- cv
    auto *cv_cmd = app.add_subcommand("cv", "Repeated stratified k-fold cross-validation");
    add_seed(cv_cmd);
    ConfigFlags cv_cfg;
    DataFlags cv_data;
    int cv_folds = 5, cv_repeats = 10;
    std::string cv_out, cv_classifier = "lsqmm";
    cv_cfg.attach(cv_cmd);
    cv_data.attach(cv_cmd);
    cv_cmd->add_option("--folds", cv_folds, "Number of folds");
    cv_cmd->add_option("--repeats", cv_repeats, "Number of repeats");
    cv_cmd->add_option("--out", cv_out, "Report file prefix (writes PREFIX.csv and PREFIX.json)");
    cv_cmd->add_option("--classifier", cv_classifier, "lsqmm or baseline-svm")
        ->check(CLI::IsMember({"lsqmm", "baseline-svm"}));
    cv_cmd->callback([&] {
        auto [x, y, source] = cv_data.load(seed);
        lsqmm::EvalReport report;
        if (cv_classifier == "baseline-svm") {
            report = lsqmm::cross_validate(x, y, cv_folds, cv_repeats, seed,
                                           lsqmm::baseline_svm_trainer(cv_cfg.soft_margin_c));
            report.config_echo.train = cv_cfg.to_config();
            report.config_echo.classifier = "baseline-svm";
        } else {
            report = lsqmm::cross_validate(x, y, cv_cfg.to_config(), cv_folds, cv_repeats, seed);
        }
        json body{{"config", config_echo_json(report.config_echo, source, cv_data.target_size)},
                  {"summary", summary_json(report)},
                  {"per_fold", per_fold_json(report)}};
        if (!cv_out.empty())
            write_report_files(cv_out, "cv", body, "repeat,fold,accuracy,f1,train_seconds", fold_csv_rows(report, ""));
        std::cout << json{{"command", "cv"},
                          {"classifier", report.config_echo.classifier},
                          {"n_samples", x.size()},
                          {"accuracy_mean", report.accuracy_mean},
                          {"accuracy_std", report.accuracy_std},
                          {"f1_mean", report.f1_mean},
                          {"f1_std", report.f1_std}}
                         .dump()
                  << "\n";
    });

    // ---- sweep
    auto *sweep_cmd = app.add_subcommand("sweep", "Cross-validated sweep over a (C, lambda) grid");
    add_seed(sweep_cmd);
    ConfigFlags sweep_cfg;
    DataFlags sweep_data;
    int sweep_folds = 5, sweep_repeats = 10;
    std::vector<double> c_grid{1.0}, lambda_grid{1e-3};
    std::string sweep_out;
    sweep_cfg.attach(sweep_cmd);
    sweep_data.attach(sweep_cmd);
    sweep_cmd->add_option("--folds", sweep_folds, "Number of folds");
    sweep_cmd->add_option("--repeats", sweep_repeats, "Number of repeats");
    sweep_cmd->add_option("--c-grid", c_grid, "C grid values")->delimiter(',');
    sweep_cmd->add_option("--lambda-grid", lambda_grid, "lambda grid values")->delimiter(',');
    sweep_cmd->add_option("--out", sweep_out, "Report file prefix");
    sweep_cmd->callback([&] {
        auto [x, y, source] = sweep_data.load(seed);
        auto cells = lsqmm::param_sweep(x, y, sweep_cfg.to_config(), c_grid, lambda_grid, sweep_folds, sweep_repeats,
                                        seed);
        json cell_rows = json::array();
        std::vector<std::string> csv_rows;
        for (const auto &cell : cells) {
            cell_rows.push_back(json{{"C", cell.C},
                                     {"lambda", cell.lambda},
                                     {"summary", summary_json(cell.report)},
                                     {"per_fold", per_fold_json(cell.report)}});
            for (const std::string &row : fold_csv_rows(cell.report, fmt(cell.C) + "," + fmt(cell.lambda) + ","))
                csv_rows.push_back(row);
        }
        if (!sweep_out.empty()) {
            json body{{"config", config_echo_json(cells.front().report.config_echo, source, sweep_data.target_size)},
                      {"cells", cell_rows}};
            write_report_files(sweep_out, "sweep", body, "C,lambda,repeat,fold,accuracy,f1,train_seconds", csv_rows);
        }
        json brief = json::array();
        for (const auto &cell : cells)
            brief.push_back(json{{"C", cell.C},
                                 {"lambda", cell.lambda},
                                 {"accuracy_mean", cell.report.accuracy_mean},
                                 {"f1_mean", cell.report.f1_mean}});
        std::cout << json{{"command", "sweep"}, {"n_samples", x.size()}, {"cells", brief}}.dump() << "\n";
    });

    // ---- noise-sweep
    auto *noise_cmd = app.add_subcommand("noise-sweep", "Cross-validated robustness sweep over noise ratios");
    add_seed(noise_cmd);
    ConfigFlags noise_cfg;
    DataFlags noise_data;
    int noise_folds = 5, noise_repeats = 10;
    std::vector<double> r_grid{0.0, 0.5, 1.0};
    std::string noise_out;
    noise_cfg.attach(noise_cmd);
    noise_data.attach(noise_cmd);
    noise_cmd->add_option("--folds", noise_folds, "Number of folds");
    noise_cmd->add_option("--repeats", noise_repeats, "Number of repeats");
    noise_cmd->add_option("--noise-grid", r_grid, "Noise ratio values")->delimiter(',');
    noise_cmd->add_option("--out", noise_out, "Report file prefix");
    noise_cmd->callback([&] {
        auto [x, y, source] = noise_data.load(seed);
        auto points = lsqmm::noise_sweep(x, y, noise_cfg.to_config(), r_grid, noise_folds, noise_repeats, seed);
        json point_rows = json::array();
        std::vector<std::string> csv_rows;
        for (const auto &point : points) {
            point_rows.push_back(
                json{{"R", point.R}, {"summary", summary_json(point.report)}, {"per_fold", per_fold_json(point.report)}});
            for (const std::string &row : fold_csv_rows(point.report, fmt(point.R) + ","))
                csv_rows.push_back(row);
        }
        if (!noise_out.empty()) {
            json body{{"config", config_echo_json(points.front().report.config_echo, source, noise_data.target_size)},
                      {"points", point_rows}};
            write_report_files(noise_out, "noise-sweep", body, "R,repeat,fold,accuracy,f1,train_seconds", csv_rows);
        }
        json brief = json::array();
        for (const auto &point : points)
            brief.push_back(json{{"R", point.R}, {"accuracy_mean", point.report.accuracy_mean}});
        std::cout << json{{"command", "noise-sweep"}, {"n_samples", x.size()}, {"points", brief}}.dump() << "\n";
    });

    // ---- synth
    auto *synth_cmd = app.add_subcommand("synth", "Generate and export a synthetic low-rank dataset");
    add_seed(synth_cmd);
    int synth_n = 20, synth_rank = 2;
    double synth_sigma = 0.05;
    std::string synth_size = "16x16", synth_out;
    synth_cmd->add_option("--n-per-class", synth_n, "Samples per class");
    synth_cmd->add_option("--rank", synth_rank, "Class-mean rank");
    synth_cmd->add_option("--sigma", synth_sigma, "Per-entry noise scale");
    synth_cmd->add_option("--target-size", synth_size, "Image size MxN");
    synth_cmd->add_option("--out", synth_out, "Output dataset directory")->required();
    synth_cmd->callback([&] {
        const auto [rows, cols] = parse_size(synth_size);
        auto samples = lsqmm::synth_lowrank(synth_n, rows, cols, synth_rank, synth_sigma, seed);
        const std::string manifest = lsqmm::export_dataset(samples, synth_out);
        std::cout << json{{"command", "synth"}, {"n_samples", samples.size()}, {"manifest", manifest}}.dump() << "\n";
    });

    // ---- trace
    auto *trace_cmd = app.add_subcommand("trace", "Export the per-iteration objective/residual trace");
    add_seed(trace_cmd);
    ConfigFlags trace_cfg;
    DataFlags trace_data;
    std::string trace_model, trace_out;
    trace_cfg.attach(trace_cmd);
    trace_data.attach(trace_cmd);
    trace_cmd->add_option("--model", trace_model, "Read the trace from a saved model instead of training");
    trace_cmd->add_option("--out", trace_out, "Output trace CSV")->required();
    trace_cmd->callback([&] {
        lsqmm::TrainedModel model;
        if (!trace_model.empty()) {
            model = lsqmm::load_model(trace_model);
            if (model.trace.empty())
                throw lsqmm::ValidationError("model file has no training trace: " + trace_model);
        } else {
            auto [x, y, source] = trace_data.load(seed);
            model = lsqmm::train(x, y, trace_cfg.to_config());
        }
        std::string csv = "iter,objective,residual,seconds\n";
        for (const auto &rec : model.trace)
            csv += std::to_string(rec.iter) + "," + fmt(rec.objective) + "," + fmt(rec.residual) + "," +
                   fmt(rec.seconds) + "\n";
        write_text_file(trace_out, csv);
        std::cout << json{{"command", "trace"},
                          {"iterations", model.iterations},
                          {"converged", model.converged},
                          {"out", trace_out}}
                         .dump()
                  << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    try {
        return run_cli(argc, argv);
    } catch (const lsqmm::IoError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const lsqmm::NumericError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const lsqmm::Error &e) {
        // validation, format, parameter, dimension
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}
