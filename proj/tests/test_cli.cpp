// End-to-end tests for the lsqmm_cli binary. The binary path arrives as
// argv[1] (wired by CTest); each test shells out and inspects exit codes,
// the JSON line on standard output, and any files written.
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "lsqmm/lsqmm.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string g_cli;
fs::path g_dir;

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

RunResult run_cli(const std::string &args) {
    static int counter = 0;
    const fs::path out_f = g_dir / ("stdout_" + std::to_string(counter) + ".txt");
    const fs::path err_f = g_dir / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = g_cli + " " + args + " > " + out_f.string() + " 2> " + err_f.string();
    const int rc = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(out_f);
    r.err = slurp(err_f);
    return r;
}

std::vector<std::vector<std::string>> read_csv(const fs::path &p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

/// Export a small separable synthetic dataset, returning its manifest path.
std::string make_dataset(const std::string &tag, int n_per_class, const std::string &size, double sigma,
                         unsigned seed) {
    const fs::path dir = g_dir / ("data_" + tag);
    const RunResult r = run_cli("synth --n-per-class " + std::to_string(n_per_class) + " --target-size " + size +
                                " --sigma " + std::to_string(sigma) + " --rank 2 --seed " + std::to_string(seed) +
                                " --out " + dir.string());
    EXPECT_EQ(r.code, 0) << r.err;
    return json::parse(r.out).at("manifest").get<std::string>();
}

TEST(Synth, ExportIsDeterministic) {
    const fs::path a = g_dir / "synth_a", b = g_dir / "synth_b";
    const RunResult ra = run_cli("synth --n-per-class 2 --target-size 8x8 --sigma 0.05 --seed 9 --out " + a.string());
    const RunResult rb = run_cli("synth --n-per-class 2 --target-size 8x8 --sigma 0.05 --seed 9 --out " + b.string());
    ASSERT_EQ(ra.code, 0) << ra.err;
    ASSERT_EQ(rb.code, 0) << rb.err;
    const std::string ma = json::parse(ra.out).at("manifest").get<std::string>();
    const std::string mb = json::parse(rb.out).at("manifest").get<std::string>();
    EXPECT_EQ(slurp(ma), slurp(mb));
    EXPECT_FALSE(slurp(ma).empty());
    EXPECT_EQ(slurp(a / "images" / "sample_0000.png"), slurp(b / "images" / "sample_0000.png"));
    EXPECT_EQ(json::parse(ra.out).at("n_samples").get<int>(), 4);
}

TEST(Train, HappyPathAndModelRoundTrip) {
    const std::string manifest = make_dataset("train_happy", 2, "8x8", 0.0, 11);
    const fs::path model_path = g_dir / "happy.model";
    const RunResult r = run_cli("train --manifest " + manifest + " --target-size 8x8 --soft-margin-c 10 --out " +
                                model_path.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const json summary = json::parse(r.out);
    EXPECT_EQ(summary.at("command"), "train");
    EXPECT_EQ(summary.at("n_samples").get<int>(), 4);
    EXPECT_GE(summary.at("iterations").get<int>(), 1);
    EXPECT_TRUE(summary.contains("final_residual"));
    EXPECT_TRUE(summary.contains("wall_seconds"));
    ASSERT_TRUE(fs::exists(model_path));

    const lsqmm::TrainedModel model = lsqmm::load_model(model_path.string());
    const fs::path copy_path = g_dir / "happy_copy.model";
    lsqmm::save_model(copy_path.string(), model);
    EXPECT_EQ(slurp(model_path), slurp(copy_path));
}

TEST(Train, MissingManifestExitsIo) {
    const RunResult r = run_cli("train --manifest " + (g_dir / "no_such_manifest.csv").string() +
                                " --out " + (g_dir / "x.model").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
    EXPECT_TRUE(r.out.empty());
}

TEST(Train, MaxIterOneReportsOneIteration) {
    const RunResult r = run_cli("train --synth --n-per-class 3 --target-size 6x6 --sigma 0.05 --seed 4 --max-iter 1 "
                                "--out " + (g_dir / "one_iter.model").string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out).at("iterations").get<int>(), 1);
}

TEST(Train, UnknownFlagIsUsageError) {
    const RunResult r = run_cli("train --synth --bogus-flag 1 --out " + (g_dir / "y.model").string());
    EXPECT_NE(r.code, 0);
}

TEST(Train, BothOrNeitherDataSourceIsValidationError) {
    EXPECT_EQ(run_cli("train --out " + (g_dir / "z1.model").string()).code, 3);
    const std::string manifest = make_dataset("both_sources", 2, "6x6", 0.0, 12);
    EXPECT_EQ(run_cli("train --synth --manifest " + manifest + " --out " + (g_dir / "z2.model").string()).code, 3);
}

TEST(Predict, RecoversTrainingLabelsAndIsByteStable) {
    const std::string manifest = make_dataset("predict", 3, "8x8", 0.0, 21);
    const fs::path model_path = g_dir / "predict.model";
    ASSERT_EQ(run_cli("train --manifest " + manifest + " --target-size 8x8 --soft-margin-c 10 --out " +
                      model_path.string())
                  .code,
              0);

    const fs::path pred1 = g_dir / "pred1.csv", pred2 = g_dir / "pred2.csv";
    const RunResult r1 = run_cli("predict --model " + model_path.string() + " --manifest " + manifest + " --out " +
                                 pred1.string());
    const RunResult r2 = run_cli("predict --model " + model_path.string() + " --manifest " + manifest + " --out " +
                                 pred2.string());
    ASSERT_EQ(r1.code, 0) << r1.err;
    ASSERT_EQ(r2.code, 0) << r2.err;
    EXPECT_EQ(slurp(pred1), slurp(pred2));

    const auto truth = read_csv(manifest);
    const auto pred = read_csv(pred1);
    ASSERT_EQ(pred.size(), truth.size()); // both have a header row
    ASSERT_GE(pred.size(), 2u);
    EXPECT_EQ(pred[0], (std::vector<std::string>{"path", "decision_value", "predicted_label"}));
    for (std::size_t i = 1; i < pred.size(); ++i)
        EXPECT_EQ(pred[i][2], truth[i][1]) << "row " << i;
}

TEST(Predict, EmptyManifestExitsValidation) {
    const fs::path manifest = g_dir / "empty_manifest.csv";
    std::ofstream(manifest) << "path,label\n";
    const fs::path model_path = g_dir / "empty_pred.model";
    ASSERT_EQ(run_cli("train --synth --n-per-class 2 --target-size 6x6 --seed 5 --out " + model_path.string()).code,
              0);
    const RunResult r = run_cli("predict --model " + model_path.string() + " --manifest " + manifest.string() +
                                " --out " + (g_dir / "empty_pred.csv").string());
    EXPECT_EQ(r.code, 3);
}

TEST(Predict, SizeMismatchPrintsBothShapes) {
    const std::string manifest = make_dataset("mismatch", 2, "8x8", 0.0, 31);
    const fs::path model_path = g_dir / "mismatch.model";
    ASSERT_EQ(run_cli("train --manifest " + manifest + " --target-size 8x8 --out " + model_path.string()).code, 0);
    const RunResult r = run_cli("predict --model " + model_path.string() + " --manifest " + manifest +
                                " --target-size 4x4 --out " + (g_dir / "mm.csv").string());
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("8x8"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("4x4"), std::string::npos) << r.err;
}

TEST(Cv, SynthSigmaZeroIsPerfect) {
    const RunResult r = run_cli("cv --synth --n-per-class 5 --target-size 6x6 --sigma 0 --folds 5 --repeats 2 "
                                "--seed 3 --soft-margin-c 10");
    ASSERT_EQ(r.code, 0) << r.err;
    const json summary = json::parse(r.out);
    EXPECT_EQ(summary.at("accuracy_mean").get<double>(), 1.0);
    EXPECT_EQ(summary.at("f1_mean").get<double>(), 1.0);
    EXPECT_EQ(summary.at("classifier"), "lsqmm");
}

TEST(Cv, WritesReportsAndStdoutIsDeterministic) {
    const fs::path prefix = g_dir / "cv_report";
    const std::string flags = "cv --synth --n-per-class 4 --target-size 6x6 --sigma 0.1 --folds 4 --repeats 2 "
                              "--seed 17 --soft-margin-c 5 --out " + prefix.string();
    const RunResult r1 = run_cli(flags);
    const RunResult r2 = run_cli(flags);
    ASSERT_EQ(r1.code, 0) << r1.err;
    EXPECT_EQ(r1.out, r2.out); // summary line carries no wall-clock fields

    const json doc = json::parse(slurp(prefix.string() + ".json"));
    EXPECT_EQ(doc.at("kind"), "cv");
    EXPECT_EQ(doc.at("config").at("folds").get<int>(), 4);
    EXPECT_EQ(doc.at("config").at("seed").get<int>(), 17);
    EXPECT_EQ(doc.at("per_fold").size(), 8u);
    EXPECT_TRUE(doc.contains("decisions"));
    EXPECT_TRUE(doc.contains("artifact_version"));
    const auto csv = read_csv(prefix.string() + ".csv");
    ASSERT_EQ(csv.size(), 9u); // header + folds*repeats
    EXPECT_EQ(csv[0], (std::vector<std::string>{"repeat", "fold", "accuracy", "f1", "train_seconds"}));
}

TEST(Cv, BaselineClassifierRuns) {
    const RunResult r = run_cli("cv --synth --n-per-class 4 --target-size 6x6 --sigma 0 --folds 4 --repeats 1 "
                                "--seed 7 --soft-margin-c 10 --classifier baseline-svm");
    ASSERT_EQ(r.code, 0) << r.err;
    const json summary = json::parse(r.out);
    EXPECT_EQ(summary.at("classifier"), "baseline-svm");
    EXPECT_EQ(summary.at("accuracy_mean").get<double>(), 1.0);
}

TEST(Sweep, TwoByTwoProducesFourOrderedCells) {
    const fs::path prefix = g_dir / "sweep_report";
    const RunResult r = run_cli("sweep --synth --n-per-class 4 --target-size 6x6 --sigma 0.1 --folds 4 --repeats 1 "
                                "--seed 23 --c-grid 1,10 --lambda-grid 0.001,0.1 --out " + prefix.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const json cells = json::parse(r.out).at("cells");
    ASSERT_EQ(cells.size(), 4u);
    EXPECT_EQ(cells[0].at("C").get<double>(), 1.0);
    EXPECT_EQ(cells[0].at("lambda").get<double>(), 0.001);
    EXPECT_EQ(cells[1].at("C").get<double>(), 1.0);
    EXPECT_EQ(cells[1].at("lambda").get<double>(), 0.1);
    EXPECT_EQ(cells[2].at("C").get<double>(), 10.0);
    EXPECT_EQ(cells[3].at("C").get<double>(), 10.0);
    const json doc = json::parse(slurp(prefix.string() + ".json"));
    EXPECT_EQ(doc.at("kind"), "sweep");
    EXPECT_EQ(doc.at("cells").size(), 4u);
}

TEST(NoiseSweep, PreservesGridOrder) {
    const RunResult r = run_cli("noise-sweep --synth --n-per-class 4 --target-size 6x6 --sigma 0.05 --folds 4 "
                                "--repeats 1 --seed 29 --soft-margin-c 10 --noise-grid 0,0.5,1.0");
    ASSERT_EQ(r.code, 0) << r.err;
    const json points = json::parse(r.out).at("points");
    ASSERT_EQ(points.size(), 3u);
    EXPECT_EQ(points[0].at("R").get<double>(), 0.0);
    EXPECT_EQ(points[1].at("R").get<double>(), 0.5);
    EXPECT_EQ(points[2].at("R").get<double>(), 1.0);
}

TEST(Trace, ContiguousItersFinalResidualAndPlateau) {
    const fs::path out = g_dir / "trace.csv";
    const RunResult r = run_cli("trace --synth --n-per-class 10 --target-size 8x8 --sigma 0.05 --seed 7 "
                                "--soft-margin-c 10 --lambda 0.001 --tol 0.001 --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const json summary = json::parse(r.out);
    ASSERT_TRUE(summary.at("converged").get<bool>());
    const auto csv = read_csv(out);
    ASSERT_GE(csv.size(), 3u); // header + at least two iterations
    EXPECT_EQ(csv[0], (std::vector<std::string>{"iter", "objective", "residual", "seconds"}));
    for (std::size_t i = 1; i < csv.size(); ++i)
        EXPECT_EQ(std::stoi(csv[i][0]), static_cast<int>(i));
    EXPECT_LT(std::stod(csv.back()[2]), 0.001);
    const double obj_last = std::stod(csv.back()[1]);
    const double obj_prev = std::stod(csv[csv.size() - 2][1]);
    EXPECT_LT(std::abs(obj_last - obj_prev) / std::max(1.0, std::abs(obj_last)), 1e-2);
}

TEST(Trace, FromSavedModelMatchesTrainingTrace) {
    const fs::path model_path = g_dir / "trace_model.model";
    ASSERT_EQ(run_cli("train --synth --n-per-class 4 --target-size 6x6 --sigma 0.05 --seed 41 --soft-margin-c 10 "
                      "--out " + model_path.string())
                  .code,
              0);
    const fs::path out = g_dir / "trace_from_model.csv";
    const RunResult r = run_cli("trace --model " + model_path.string() + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const lsqmm::TrainedModel model = lsqmm::load_model(model_path.string());
    const auto csv = read_csv(out);
    ASSERT_EQ(csv.size(), model.trace.size() + 1);
    for (std::size_t i = 0; i < model.trace.size(); ++i) {
        EXPECT_EQ(std::stoi(csv[i + 1][0]), model.trace[i].iter);
        EXPECT_DOUBLE_EQ(std::stod(csv[i + 1][1]), model.trace[i].objective);
        EXPECT_DOUBLE_EQ(std::stod(csv[i + 1][2]), model.trace[i].residual);
        EXPECT_EQ(std::stod(csv[i + 1][3]), 0.0); // timing is not persisted
    }
}

TEST(Trace, ModelWithoutTraceExitsValidation) {
    lsqmm::TrainedModel bare;
    bare.W = lsqmm::QMatrix(2, 2);
    bare.alpha = Eigen::VectorXd::Zero(2);
    const fs::path model_path = g_dir / "bare.model";
    lsqmm::save_model(model_path.string(), bare);
    const RunResult r = run_cli("trace --model " + model_path.string() + " --out " + (g_dir / "bare.csv").string());
    EXPECT_EQ(r.code, 3);
}

} // namespace

int main(int argc, char **argv) {
    ::testing::InitGoogleTest(&argc, argv);
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <path-to-lsqmm_cli>\n");
        return 2;
    }
    g_cli = argv[1];
    g_dir = fs::temp_directory_path() / "lsqmm_cli_test";
    std::error_code ec;
    fs::remove_all(g_dir, ec);
    fs::create_directories(g_dir);
    return RUN_ALL_TESTS();
}
