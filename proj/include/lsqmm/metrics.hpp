#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "dual_qp.hpp"
#include "errors.hpp"
#include "qmatrix.hpp"
#include "trainer.hpp"

namespace lsqmm {

inline double accuracy(const std::vector<int> &pred, const std::vector<int> &truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw DimensionError("accuracy: prediction and truth lengths must match and be nonzero");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        hits += pred[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

/// F1 for the positive class; 0 when there are no true positives (both the
/// collapsed-classifier and the no-positives cases).
inline double f1_score(const std::vector<int> &pred, const std::vector<int> &truth, int positive = 1) {
    if (pred.size() != truth.size() || pred.empty())
        throw DimensionError("f1_score: prediction and truth lengths must match and be nonzero");
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] == positive, t = truth[i] == positive;
        tp += p && t;
        fp += p && !t;
        fn += !p && t;
    }
    if (tp == 0)
        return 0.0;
    const double precision = tp / (tp + fp);
    const double recall = tp / (tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

struct FoldResult {
    int repeat = 0;
    int fold = 0;
    double accuracy = 0.0;
    double f1 = 0.0;
    double train_seconds = 0.0;
};

/// Provenance echoed into every report.
struct EvalConfigEcho {
    TrainConfig train;
    int folds = 5;
    int repeats = 10;
    std::uint64_t seed = 0;
    std::string classifier = "lsqmm";
    double noise_ratio = 0.0;
};

struct EvalReport {
    double accuracy_mean = 0.0;
    double accuracy_std = 0.0;
    double f1_mean = 0.0;
    double f1_std = 0.0;
    std::vector<FoldResult> per_fold;
    EvalConfigEcho config_echo;
};

/// A trained classifier reduced to its prediction rule.
using PredictFn = std::function<int(const QMatrix &)>;
/// Pluggable trainer: fit on the given samples/labels, return the rule.
using TrainerFn = std::function<PredictFn(const std::vector<QMatrix> &, const std::vector<int> &)>;

namespace detail {

template <typename F> auto with_context(const std::string &ctx, F &&f) {
    try {
        return f();
    } catch (const DimensionError &e) {
        throw DimensionError(ctx + ": " + e.what());
    } catch (const ParameterError &e) {
        throw ParameterError(ctx + ": " + e.what());
    } catch (const ValidationError &e) {
        throw ValidationError(ctx + ": " + e.what());
    } catch (const IoError &e) {
        throw IoError(ctx + ": " + e.what());
    } catch (const FormatError &e) {
        throw FormatError(ctx + ": " + e.what());
    } catch (const NumericError &e) {
        throw NumericError(ctx + ": " + e.what());
    }
}

inline void finalize_report(EvalReport &report) {
    const double n = static_cast<double>(report.per_fold.size());
    double am = 0, fm = 0;
    for (const FoldResult &r : report.per_fold) {
        am += r.accuracy;
        fm += r.f1;
    }
    am /= n;
    fm /= n;
    double av = 0, fv = 0;
    for (const FoldResult &r : report.per_fold) {
        av += (r.accuracy - am) * (r.accuracy - am);
        fv += (r.f1 - fm) * (r.f1 - fm);
    }
    report.accuracy_mean = am;
    report.f1_mean = fm;
    report.accuracy_std = std::sqrt(av / n);
    report.f1_std = std::sqrt(fv / n);
}

} // namespace detail

/// Stratified folds for every repeat: repeat r resplits with seed + r.
inline std::vector<std::vector<std::vector<int>>> make_folds(const std::vector<int> &y, int k, int repeats,
                                                             std::uint64_t seed) {
    std::vector<std::vector<std::vector<int>>> folds;
    folds.reserve(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r)
        folds.push_back(kfold_split(y, k, seed + static_cast<std::uint64_t>(r)));
    return folds;
}

/// Core CV loop over precomputed folds (shared by sweeps for paired splits).
inline EvalReport cross_validate_with_folds(const std::vector<QMatrix> &samples, const std::vector<int> &y,
                                            const std::vector<std::vector<std::vector<int>>> &folds_per_repeat,
                                            const TrainerFn &trainer) {
    if (samples.size() != y.size())
        throw DimensionError("cross_validate: samples and labels differ in length");
    EvalReport report;
    for (std::size_t r = 0; r < folds_per_repeat.size(); ++r) {
        const auto &folds = folds_per_repeat[r];
        for (std::size_t f = 0; f < folds.size(); ++f) {
            std::vector<QMatrix> train_x;
            std::vector<int> train_y;
            for (std::size_t g = 0; g < folds.size(); ++g) {
                if (g == f)
                    continue;
                for (int i : folds[g]) {
                    train_x.push_back(samples[static_cast<std::size_t>(i)]);
                    train_y.push_back(y[static_cast<std::size_t>(i)]);
                }
            }
            const std::string ctx = "repeat " + std::to_string(r) + ", fold " + std::to_string(f);
            const auto t0 = std::chrono::steady_clock::now();
            PredictFn rule = detail::with_context(ctx, [&] { return trainer(train_x, train_y); });
            const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::vector<int> pred, truth;
            for (int i : folds[f]) {
                pred.push_back(detail::with_context(ctx, [&] { return rule(samples[static_cast<std::size_t>(i)]); }));
                truth.push_back(y[static_cast<std::size_t>(i)]);
            }
            report.per_fold.push_back(
                {static_cast<int>(r), static_cast<int>(f), accuracy(pred, truth), f1_score(pred, truth), seconds});
        }
    }
    detail::finalize_report(report);
    return report;
}

inline TrainerFn lsqmm_trainer(const TrainConfig &cfg) {
    return [cfg](const std::vector<QMatrix> &x, const std::vector<int> &labels) -> PredictFn {
        TrainedModel model = train(x, labels, cfg);
        return [model = std::move(model)](const QMatrix &q) { return predict(model, q); };
    };
}

/// Repeated stratified k-fold cross-validation with a pluggable trainer.
inline EvalReport cross_validate(const std::vector<QMatrix> &samples, const std::vector<int> &y, int k, int repeats,
                                 std::uint64_t seed, const TrainerFn &trainer) {
    if (repeats < 1)
        throw ParameterError("cross_validate: repeats must be at least 1");
    EvalReport report = cross_validate_with_folds(samples, y, make_folds(y, k, repeats, seed), trainer);
    report.config_echo.folds = k;
    report.config_echo.repeats = repeats;
    report.config_echo.seed = seed;
    return report;
}

inline EvalReport cross_validate(const std::vector<QMatrix> &samples, const std::vector<int> &y,
                                 const TrainConfig &cfg, int k, int repeats, std::uint64_t seed) {
    validate_config(cfg);
    EvalReport report = cross_validate(samples, y, k, repeats, seed, lsqmm_trainer(cfg));
    report.config_echo.train = cfg;
    return report;
}

struct SweepCell {
    double C = 0.0;
    double lambda = 0.0;
    EvalReport report;
};

/// Grid sweep over (C, lambda) with the same folds in every cell, so cells are
/// comparable without split noise. Row-major over C (outer) then lambda.
inline std::vector<SweepCell> param_sweep(const std::vector<QMatrix> &samples, const std::vector<int> &y,
                                          const TrainConfig &base, const std::vector<double> &c_grid,
                                          const std::vector<double> &lambda_grid, int k, int repeats,
                                          std::uint64_t seed) {
    if (c_grid.empty() || lambda_grid.empty())
        throw ParameterError("param_sweep: grids must be non-empty");
    if (repeats < 1)
        throw ParameterError("param_sweep: repeats must be at least 1");
    const auto folds = make_folds(y, k, repeats, seed);
    std::vector<SweepCell> cells;
    cells.reserve(c_grid.size() * lambda_grid.size());
    for (double c : c_grid) {
        for (double lambda : lambda_grid) {
            TrainConfig cfg = base;
            cfg.C = c;
            cfg.lambda = lambda;
            validate_config(cfg);
            SweepCell cell{c, lambda, cross_validate_with_folds(samples, y, folds, lsqmm_trainer(cfg))};
            cell.report.config_echo.train = cfg;
            cell.report.config_echo.folds = k;
            cell.report.config_echo.repeats = repeats;
            cell.report.config_echo.seed = seed;
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

struct NoisePoint {
    double R = 0.0;
    EvalReport report;
};

/// Noise-robustness sweep: each ratio noises the whole dataset (train and test
/// copies alike, fresh per-sample seeds), then cross-validates. Input order of
/// the R grid is preserved.
inline std::vector<NoisePoint> noise_sweep(const std::vector<QMatrix> &samples, const std::vector<int> &y,
                                           const TrainConfig &cfg, const std::vector<double> &r_grid, int k,
                                           int repeats, std::uint64_t seed) {
    if (r_grid.empty())
        throw ParameterError("noise_sweep: R grid must be non-empty");
    for (double r : r_grid)
        if (!(r >= 0.0))
            throw ParameterError("noise_sweep: R values must be nonnegative");
    validate_config(cfg);
    const auto folds = make_folds(y, k, repeats, seed);
    std::vector<NoisePoint> points;
    points.reserve(r_grid.size());
    for (double r : r_grid) {
        std::vector<QMatrix> noised;
        noised.reserve(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i)
            noised.push_back(add_noise(samples[i], {r, detail::mix_seed(seed, 0xA11CE000 + i)}));
        NoisePoint point{r, cross_validate_with_folds(noised, y, folds, lsqmm_trainer(cfg))};
        point.report.config_echo.train = cfg;
        point.report.config_echo.folds = k;
        point.report.config_echo.repeats = repeats;
        point.report.config_echo.seed = seed;
        point.report.config_echo.noise_ratio = r;
        points.push_back(std::move(point));
    }
    return points;
}

/// Linear soft-margin SVM on the samples as flat real vectors. The Gram matrix
/// of the stacked planes is exactly the quaternion real_inner Gram, so the
/// dual solver is reused with rho = 0, q = 1; the weight vector folds back
/// into a quaternion matrix W = sum_i alpha_i y_i X_i with the same decision
/// contract as the main trainer.
inline TrainedModel train_baseline_svm(const std::vector<QMatrix> &samples, const std::vector<int> &y, double c,
                                       double qp_solver_tol = detail::kQpSolverTol) {
    if (samples.size() != y.size())
        throw DimensionError("baseline svm: samples and labels differ in length");
    if (samples.empty())
        throw DimensionError("baseline svm: no samples");
    if (!(c > 0.0))
        throw ParameterError("baseline svm: C must be positive");

    DualQpProblem p;
    p.K = gram_matrix(samples);
    p.y = y;
    p.q = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(samples.size()));
    p.C = c;
    p.rho = 0.0;
    DualSolution qp = solve_dual_qp(p, qp_solver_tol);

    TrainedModel model;
    model.config.C = c;
    model.config.lambda = 0.0;
    model.W = QMatrix(samples[0].rows(), samples[0].cols());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double w = qp.alpha(static_cast<Eigen::Index>(i)) * y[i];
        if (w != 0.0)
            model.W = model.W + w * samples[i];
    }
    model.alpha = qp.alpha;
    model.converged = qp.converged;
    model.iterations = 1;

    const double margin = model.config.qp_tol * c;
    const Eigen::VectorXd f = detail::margins(model.W, samples);
    double bsum = 0.0;
    for (Eigen::Index i = 0; i < model.alpha.size(); ++i) {
        if (model.alpha(i) > margin && model.alpha(i) < c - margin) {
            model.support_indices.push_back(static_cast<int>(i));
            bsum += y[static_cast<std::size_t>(i)] - f(i);
        }
    }
    if (!model.support_indices.empty())
        model.b = bsum / static_cast<double>(model.support_indices.size());
    else
        model.b = detail::fallback_bias(model.alpha, y, f, c, margin, 0.0);
    return model;
}

inline TrainerFn baseline_svm_trainer(double c) {
    return [c](const std::vector<QMatrix> &x, const std::vector<int> &labels) -> PredictFn {
        TrainedModel model = train_baseline_svm(x, labels, c);
        return [model = std::move(model)](const QMatrix &q) { return predict(model, q); };
    };
}

} // namespace lsqmm
