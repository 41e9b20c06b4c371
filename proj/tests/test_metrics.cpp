#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>
#include <set>

#include "test_util.hpp"

using namespace lsqmm;

namespace {

std::pair<std::vector<QMatrix>, std::vector<int>> as_xy(const std::vector<LabeledSample> &data) {
    std::vector<QMatrix> x;
    std::vector<int> y;
    for (const auto &s : data) {
        x.push_back(s.X);
        y.push_back(s.y);
    }
    return {x, y};
}

/// Samples tagged with a recoverable id so a stub trainer can observe exactly
/// which samples it was trained on.
std::vector<QMatrix> tagged_samples(int n) {
    std::vector<QMatrix> x;
    for (int i = 0; i < n; ++i) {
        QMatrix q(2, 2);
        q.plane(1)(0, 0) = static_cast<double>(i + 1);
        x.push_back(q);
    }
    return x;
}

int tag_of(const QMatrix &q) { return static_cast<int>(q.plane(1)(0, 0)) - 1; }

} // namespace

TEST(Metrics, AccuracyExamples) {
    EXPECT_NEAR(accuracy({1, 1, -1}, {1, -1, -1}), 2.0 / 3.0, 1e-15);
    EXPECT_EQ(accuracy({1, -1, 1}, {1, -1, 1}), 1.0);
    EXPECT_EQ(accuracy({1, -1}, {-1, 1}), 0.0);
    EXPECT_THROW(accuracy({1}, {1, 1}), DimensionError);
    EXPECT_THROW(accuracy({}, {}), DimensionError);
}

TEST(Metrics, F1Examples) {
    EXPECT_EQ(f1_score({1, -1, 1}, {1, -1, 1}), 1.0);
    // Collapsed classifier: no predicted positives, positives present.
    EXPECT_EQ(f1_score({-1, -1, -1}, {1, -1, 1}), 0.0);
    // P = R = 1/2.
    EXPECT_NEAR(f1_score({1, 1, -1}, {1, -1, 1}), 0.5, 1e-15);
    // Positive-class parameter flips the computation.
    EXPECT_NEAR(f1_score({1, 1, -1}, {1, -1, 1}, -1), 0.0, 1e-15);
    EXPECT_THROW(f1_score({1}, {1, -1}), DimensionError);
}

TEST(Metrics, JointPermutationInvariance) {
    std::vector<int> pred{1, -1, 1, 1, -1}, truth{1, 1, -1, 1, -1};
    const double a0 = accuracy(pred, truth), f0 = f1_score(pred, truth);
    std::vector<std::size_t> perm{4, 0, 3, 1, 2};
    std::vector<int> pp, tt;
    for (std::size_t i : perm) {
        pp.push_back(pred[i]);
        tt.push_back(truth[i]);
    }
    EXPECT_EQ(accuracy(pp, tt), a0);
    EXPECT_EQ(f1_score(pp, tt), f0);
}

TEST(CrossValidate, ConstantStubScoresMajorityFraction) {
    const auto x = tagged_samples(20);
    std::vector<int> y(20, -1);
    for (int i = 0; i < 12; ++i)
        y[static_cast<std::size_t>(i)] = 1; // 60% positive
    TrainerFn stub = [](const std::vector<QMatrix> &, const std::vector<int> &) -> PredictFn {
        return [](const QMatrix &) { return 1; };
    };
    const EvalReport rep = cross_validate(x, y, 5, 2, 31, stub);
    EXPECT_NEAR(rep.accuracy_mean, 0.6, 1e-12); // stratified folds keep 60/40 per fold
    EXPECT_EQ(rep.per_fold.size(), 10u);
    EXPECT_GE(rep.accuracy_std, 0.0);
    EXPECT_GE(rep.f1_mean, 0.0);
    EXPECT_LE(rep.f1_mean, 1.0);
}

TEST(CrossValidate, IdenticalFoldsGiveIdenticalRepeats) {
    const auto x = tagged_samples(12);
    std::vector<int> y{1, 1, 1, 1, 1, 1, -1, -1, -1, -1, -1, -1};
    const auto folds = kfold_split(y, 3, 5);
    TrainerFn stub = [](const std::vector<QMatrix> &tx, const std::vector<int> &ty) -> PredictFn {
        // Majority-vote stub: depends on the training data, so fold contents matter.
        int sum = 0;
        for (int l : ty)
            sum += l;
        (void)tx;
        return [sum](const QMatrix &) { return sum >= 0 ? 1 : -1; };
    };
    const EvalReport rep = cross_validate_with_folds(x, y, {folds, folds}, stub);
    ASSERT_EQ(rep.per_fold.size(), 6u);
    for (std::size_t f = 0; f < 3; ++f) {
        EXPECT_EQ(rep.per_fold[f].accuracy, rep.per_fold[f + 3].accuracy);
        EXPECT_EQ(rep.per_fold[f].f1, rep.per_fold[f + 3].f1);
    }
}

TEST(CrossValidate, NeverEvaluatesTrainingSamples) {
    const auto x = tagged_samples(17);
    std::vector<int> y;
    for (int i = 0; i < 17; ++i)
        y.push_back(i % 2 == 0 ? 1 : -1);
    TrainerFn spy = [](const std::vector<QMatrix> &tx, const std::vector<int> &) -> PredictFn {
        auto seen = std::make_shared<std::set<int>>();
        for (const QMatrix &q : tx)
            seen->insert(tag_of(q));
        return [seen](const QMatrix &q) {
            EXPECT_EQ(seen->count(tag_of(q)), 0u) << "evaluated a training sample";
            return 1;
        };
    };
    const EvalReport rep = cross_validate(x, y, 4, 3, 77, spy);
    EXPECT_EQ(rep.per_fold.size(), 12u);
}

TEST(CrossValidate, SeparableSyntheticScoresHigh) {
    auto [x, y] = as_xy(synth_lowrank(10, 8, 8, 2, 0.02, 55));
    TrainConfig cfg;
    cfg.C = 10.0;
    const EvalReport rep = cross_validate(x, y, cfg, 5, 2, 13);
    EXPECT_GE(rep.accuracy_mean, 0.95);
    EXPECT_EQ(rep.per_fold.size(), 10u);
    EXPECT_EQ(rep.config_echo.folds, 5);
    EXPECT_EQ(rep.config_echo.repeats, 2);
    EXPECT_EQ(rep.config_echo.seed, 13u);
    EXPECT_EQ(rep.config_echo.train.C, 10.0);
}

TEST(CrossValidate, DeterministicPerSeed) {
    auto [x, y] = as_xy(synth_lowrank(6, 6, 6, 2, 0.1, 57));
    TrainConfig cfg;
    cfg.C = 5.0;
    const EvalReport a = cross_validate(x, y, cfg, 3, 2, 19);
    const EvalReport b = cross_validate(x, y, cfg, 3, 2, 19);
    ASSERT_EQ(a.per_fold.size(), b.per_fold.size());
    for (std::size_t i = 0; i < a.per_fold.size(); ++i) {
        EXPECT_EQ(a.per_fold[i].accuracy, b.per_fold[i].accuracy);
        EXPECT_EQ(a.per_fold[i].f1, b.per_fold[i].f1);
    }
    EXPECT_EQ(a.accuracy_mean, b.accuracy_mean);
}

TEST(CrossValidate, ErrorsCarryFoldContext) {
    const auto x = tagged_samples(8);
    std::vector<int> y{1, 1, 1, 1, -1, -1, -1, -1};
    TrainerFn broken = [](const std::vector<QMatrix> &, const std::vector<int> &) -> PredictFn {
        throw NumericError("deliberate failure");
    };
    try {
        cross_validate(x, y, 2, 1, 3, broken);
        FAIL() << "expected NumericError";
    } catch (const NumericError &e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("repeat 0"), std::string::npos);
        EXPECT_NE(msg.find("fold 0"), std::string::npos);
        EXPECT_NE(msg.find("deliberate failure"), std::string::npos);
    }
}

TEST(ParamSweep, SingleCellMatchesCrossValidate) {
    auto [x, y] = as_xy(synth_lowrank(6, 6, 6, 2, 0.1, 59));
    TrainConfig base;
    base.C = 7.0;
    base.lambda = 0.02;
    const auto cells = param_sweep(x, y, base, {7.0}, {0.02}, 3, 2, 23);
    ASSERT_EQ(cells.size(), 1u);
    const EvalReport direct = cross_validate(x, y, base, 3, 2, 23);
    EXPECT_EQ(cells[0].report.accuracy_mean, direct.accuracy_mean);
    EXPECT_EQ(cells[0].report.f1_mean, direct.f1_mean);
    ASSERT_EQ(cells[0].report.per_fold.size(), direct.per_fold.size());
    for (std::size_t i = 0; i < direct.per_fold.size(); ++i)
        EXPECT_EQ(cells[0].report.per_fold[i].accuracy, direct.per_fold[i].accuracy);
}

TEST(ParamSweep, DuplicatedLambdaGivesIdenticalCells) {
    auto [x, y] = as_xy(synth_lowrank(5, 6, 6, 2, 0.1, 61));
    TrainConfig base;
    base.C = 5.0;
    const auto cells = param_sweep(x, y, base, {1.0, 5.0}, {1e-3, 1e-3}, 3, 1, 29);
    ASSERT_EQ(cells.size(), 4u);
    // Row-major over C then lambda; duplicated lambda columns are identical.
    EXPECT_EQ(cells[0].C, 1.0);
    EXPECT_EQ(cells[1].C, 1.0);
    EXPECT_EQ(cells[2].C, 5.0);
    EXPECT_EQ(cells[3].C, 5.0);
    EXPECT_EQ(cells[0].report.accuracy_mean, cells[1].report.accuracy_mean);
    EXPECT_EQ(cells[2].report.accuracy_mean, cells[3].report.accuracy_mean);
    EXPECT_EQ(cells[0].report.f1_mean, cells[1].report.f1_mean);
}

TEST(ParamSweep, RejectsEmptyGrids) {
    auto [x, y] = as_xy(synth_lowrank(4, 4, 4, 2, 0.1, 63));
    TrainConfig base;
    EXPECT_THROW(param_sweep(x, y, base, {}, {1e-3}, 2, 1, 1), ParameterError);
    EXPECT_THROW(param_sweep(x, y, base, {1.0}, {}, 2, 1, 1), ParameterError);
    EXPECT_THROW(param_sweep(x, y, base, {-1.0}, {1e-3}, 2, 1, 1), ParameterError);
}

TEST(NoiseSweep, ZeroRatioEqualsCleanRun) {
    auto [x, y] = as_xy(synth_lowrank(6, 6, 6, 2, 0.05, 67));
    TrainConfig cfg;
    cfg.C = 10.0;
    const auto points = noise_sweep(x, y, cfg, {0.0, 0.8}, 3, 1, 71);
    ASSERT_EQ(points.size(), 2u);
    EXPECT_EQ(points[0].R, 0.0);
    EXPECT_EQ(points[1].R, 0.8);
    const EvalReport clean = cross_validate(x, y, cfg, 3, 1, 71);
    EXPECT_EQ(points[0].report.accuracy_mean, clean.accuracy_mean);
    EXPECT_EQ(points[0].report.f1_mean, clean.f1_mean);
    EXPECT_EQ(points[1].report.config_echo.noise_ratio, 0.8);
}

TEST(NoiseSweep, PreservesGridOrder) {
    auto [x, y] = as_xy(synth_lowrank(4, 5, 5, 2, 0.05, 73));
    TrainConfig cfg;
    cfg.C = 5.0;
    const auto points = noise_sweep(x, y, cfg, {1.0, 0.0, 0.5}, 2, 1, 79);
    ASSERT_EQ(points.size(), 3u);
    EXPECT_EQ(points[0].R, 1.0);
    EXPECT_EQ(points[1].R, 0.0);
    EXPECT_EQ(points[2].R, 0.5);
    EXPECT_THROW(noise_sweep(x, y, cfg, {}, 2, 1, 1), ParameterError);
    EXPECT_THROW(noise_sweep(x, y, cfg, {-0.1}, 2, 1, 1), ParameterError);
}

TEST(Baseline, SingleClassYieldsConstantClassifier) {
    auto [x, y] = as_xy(synth_lowrank(4, 5, 5, 2, 0.05, 83));
    std::vector<int> ones(x.size(), 1);
    const TrainedModel model = train_baseline_svm(x, ones, 2.0);
    EXPECT_EQ(model.alpha.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(fro_norm(model.W), 0.0);
    for (const QMatrix &xi : x)
        EXPECT_EQ(predict(model, xi), 1);
}

TEST(Baseline, MatchesFirstAdmmIterationAtTinyRho) {
    auto [x, y] = as_xy(synth_lowrank(5, 6, 6, 2, 0.05, 89));
    const double c = 3.0;
    const TrainedModel base = train_baseline_svm(x, y, c, 1e-8);

    // With U = Z = 0 the linear term collapses to ones and the quadratic scale
    // to 1/(1 + rho), so at tiny rho the first half-step is the plain SVM.
    TrainConfig cfg;
    cfg.C = c;
    cfg.rho = 1e-6;
    AdmmState zero{QMatrix(6, 6), QMatrix(6, 6), QMatrix(6, 6), 0.0, 0};
    const WbUpdate wb = update_wb(zero, x, y, cfg, gram_matrix(x));
    // alpha may wander along flat directions of the Gram, but W is unique.
    EXPECT_LE(fro_norm(wb.W - base.W), 1e-3 * std::max(1.0, fro_norm(base.W)));
    for (const QMatrix &xi : x) {
        const double fb = decision_value(base, xi);
        if (std::abs(fb) > 1e-2)
            EXPECT_EQ(wb.b + real_inner(wb.W, xi) >= 0.0 ? 1 : -1, fb >= 0.0 ? 1 : -1);
    }
}

TEST(Baseline, ValidatesInput) {
    auto [x, y] = as_xy(synth_lowrank(3, 4, 4, 2, 0.05, 97));
    EXPECT_THROW(train_baseline_svm({}, {}, 1.0), DimensionError);
    EXPECT_THROW(train_baseline_svm(x, {1, -1}, 1.0), DimensionError);
    EXPECT_THROW(train_baseline_svm(x, y, 0.0), ParameterError);
}
