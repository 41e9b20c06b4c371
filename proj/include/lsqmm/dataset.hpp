#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "errors.hpp"
#include "qmatrix.hpp"

namespace lsqmm {

struct LabeledSample {
    QMatrix X;
    int y = 1;
    std::string source_id;
};

struct ManifestEntry {
    std::string path;
    int label = 1;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    Eigen::Index target_rows = 0;
    Eigen::Index target_cols = 0;
    std::string name;
};

struct NoiseSpec {
    double ratio = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive an independent per-stream seed from a base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

inline Eigen::MatrixXd cv_to_eigen(const cv::Mat &plane) {
    Eigen::MatrixXd out(plane.rows, plane.cols);
    for (int i = 0; i < plane.rows; ++i)
        for (int j = 0; j < plane.cols; ++j)
            out(i, j) = plane.at<double>(i, j);
    return out;
}

} // namespace detail

/// Decode an 8-bit raster, drop alpha, resize bilinearly, scale to [0,1], and
/// embed as a pure quaternion matrix with R, G, B on the i, j, k planes.
inline QMatrix load_image(const std::string &path, Eigen::Index target_rows, Eigen::Index target_cols) {
    if (target_rows < 1 || target_cols < 1)
        throw ParameterError("load_image: target size must be positive");
    if (!std::filesystem::exists(path))
        throw IoError("image file not found: " + path);
    cv::Mat raw = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (raw.empty())
        throw IoError("cannot decode image: " + path);
    if (raw.depth() != CV_8U)
        throw FormatError("unsupported raster depth (expected 8 bits per channel): " + path);

    cv::Mat bgr;
    switch (raw.channels()) {
    case 1:
        cv::cvtColor(raw, bgr, cv::COLOR_GRAY2BGR);
        break;
    case 3:
        bgr = raw;
        break;
    case 4:
        cv::cvtColor(raw, bgr, cv::COLOR_BGRA2BGR);
        break;
    default:
        throw FormatError("unsupported channel count " + std::to_string(raw.channels()) + ": " + path);
    }

    cv::Mat scaled;
    bgr.convertTo(scaled, CV_64FC3, 1.0 / 255.0);
    if (scaled.rows != target_rows || scaled.cols != target_cols) {
        cv::Mat resized;
        cv::resize(scaled, resized, cv::Size(static_cast<int>(target_cols), static_cast<int>(target_rows)), 0.0, 0.0,
                   cv::INTER_LINEAR);
        scaled = resized;
    }
    std::array<cv::Mat, 3> ch; // BGR order
    cv::split(scaled, ch.data());
    return QMatrix::pure(detail::cv_to_eigen(ch[2]), detail::cv_to_eigen(ch[1]), detail::cv_to_eigen(ch[0]));
}

/// Parse a `path,label` CSV manifest and materialize every entry at the target
/// size. Relative paths resolve against the manifest's directory; the first
/// bad entry aborts the load with its index.
inline std::pair<DatasetManifest, std::vector<LabeledSample>>
load_manifest(const std::string &path, Eigen::Index target_rows, Eigen::Index target_cols) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open manifest: " + path);

    auto trim = [](std::string s) {
        const char *ws = " \t\r\n";
        const auto b = s.find_first_not_of(ws);
        if (b == std::string::npos)
            return std::string();
        const auto e = s.find_last_not_of(ws);
        return s.substr(b, e - b + 1);
    };

    DatasetManifest manifest;
    manifest.target_rows = target_rows;
    manifest.target_cols = target_cols;
    manifest.name = std::filesystem::path(path).stem().string();

    std::string line;
    int lineno = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty())
            continue;
        if (!saw_header) {
            if (t != "path,label")
                throw FormatError(path + ":" + std::to_string(lineno) + ": expected header 'path,label'");
            saw_header = true;
            continue;
        }
        const auto comma = t.rfind(',');
        if (comma == std::string::npos)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected 'path,label'");
        const std::string entry_path = trim(t.substr(0, comma));
        const std::string label_str = trim(t.substr(comma + 1));
        if (entry_path.empty())
            throw FormatError(path + ":" + std::to_string(lineno) + ": empty path");
        int label;
        if (label_str == "1")
            label = 1;
        else if (label_str == "-1")
            label = -1;
        else
            throw ValidationError(path + ":" + std::to_string(lineno) + ": label must be -1 or 1, got '" + label_str +
                                  "'");
        manifest.entries.push_back({entry_path, label});
    }
    if (!saw_header)
        throw FormatError(path + ": missing 'path,label' header");
    if (manifest.entries.empty())
        throw ValidationError(path + ": manifest has no entries");

    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::vector<LabeledSample> samples;
    samples.reserve(manifest.entries.size());
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const ManifestEntry &e = manifest.entries[i];
        std::filesystem::path p(e.path);
        if (p.is_relative())
            p = base / p;
        try {
            samples.push_back({load_image(p.string(), target_rows, target_cols), e.label, e.path});
        } catch (const IoError &err) {
            throw IoError("manifest entry " + std::to_string(i) + ": " + err.what());
        } catch (const FormatError &err) {
            throw FormatError("manifest entry " + std::to_string(i) + ": " + err.what());
        }
    }
    return {std::move(manifest), std::move(samples)};
}

/// Additive Gaussian noise scaled by the per-image pixel standard deviation:
/// X + R * sigma_X * G on the imaginary planes, clipped back to [0,1]. The
/// real plane is never touched, and R = 0 returns X bit-identically.
inline QMatrix add_noise(const QMatrix &x, const NoiseSpec &spec) {
    if (spec.ratio == 0.0)
        return x;
    const Eigen::Index m = x.rows(), n = x.cols();
    double sum = 0.0, sumsq = 0.0;
    for (int p = 1; p < 4; ++p) {
        sum += x.plane(p).sum();
        sumsq += x.plane(p).squaredNorm();
    }
    const double count = static_cast<double>(3 * m * n);
    const double mean = sum / count;
    const double var = std::max(0.0, sumsq / count - mean * mean);
    const double sigma = std::sqrt(var);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    QMatrix out = x;
    for (int p = 1; p < 4; ++p) {
        Eigen::MatrixXd &plane = out.plane(p);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                plane(i, j) += spec.ratio * sigma * normal(rng);
        plane = plane.cwiseMax(0.0).cwiseMin(1.0);
    }
    return out;
}

/// Deterministic k-fold partition of 0..N-1; fold sizes differ by at most one.
inline std::vector<std::vector<int>> kfold_split(int n, int k, std::uint64_t seed) {
    if (k < 2)
        throw ParameterError("kfold_split: k must be at least 2");
    if (k > n)
        throw ParameterError("kfold_split: k exceeds the sample count");
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        idx[static_cast<std::size_t>(i)] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < idx.size(); ++i)
        folds[i % static_cast<std::size_t>(k)].push_back(idx[i]);
    return folds;
}

/// Label-stratified variant: per-label proportions are preserved within one
/// sample per fold. A single fold cursor carried across label groups keeps the
/// global fold sizes within one of each other as well.
inline std::vector<std::vector<int>> kfold_split(const std::vector<int> &labels, int k, std::uint64_t seed) {
    const int n = static_cast<int>(labels.size());
    if (k < 2)
        throw ParameterError("kfold_split: k must be at least 2");
    if (k > n)
        throw ParameterError("kfold_split: k exceeds the sample count");
    std::map<int, std::vector<int>> groups;
    for (int i = 0; i < n; ++i)
        groups[labels[static_cast<std::size_t>(i)]].push_back(i);
    std::mt19937_64 rng(seed);
    std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
    std::size_t cursor = 0;
    for (auto &[label, idx] : groups) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int i : idx)
            folds[cursor++ % static_cast<std::size_t>(k)].push_back(i);
    }
    return folds;
}

/// Rank-r pure class mean: sum of r outer products (nonnegative real column)
/// times (conjugated pure column with nonpositive components), normalized to a
/// fixed Frobenius amplitude. Entries land in [0, amplitude-ish], so noised
/// samples stay in the valid pixel domain at moderate noise.
inline QMatrix synth_class_mean(Eigen::Index m, Eigen::Index n, int rank, std::uint64_t class_seed,
                                double amplitude = 0.2) {
    if (m < 1 || n < 1)
        throw ParameterError("synth_class_mean: dimensions must be positive");
    if (rank < 1 || rank > std::min(m, n))
        throw ParameterError("synth_class_mean: rank must lie in [1, min(m,n)]");
    std::mt19937_64 rng(class_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    QMatrix mean(m, n);
    for (int t = 0; t < rank; ++t) {
        QMatrix u(m, 1);
        for (Eigen::Index i = 0; i < m; ++i)
            u.plane(0)(i, 0) = std::abs(normal(rng));
        QMatrix w(n, 1);
        for (int p = 1; p < 4; ++p)
            for (Eigen::Index j = 0; j < n; ++j)
                w.plane(p)(j, 0) = -std::abs(normal(rng));
        u = (1.0 / fro_norm(u)) * u;
        w = (1.0 / fro_norm(w)) * w;
        mean = mean + u * conj_transpose(w);
    }
    return (amplitude / fro_norm(mean)) * mean;
}

/// Two-class synthetic dataset: rank-r pure class means plus entrywise
/// Gaussian noise of scale sigma on the imaginary planes. Class -1 samples
/// come first, then class +1; everything is derived from the one seed.
inline std::vector<LabeledSample> synth_lowrank(int n_per_class, Eigen::Index m, Eigen::Index n, int rank,
                                                double sigma, std::uint64_t seed) {
    if (n_per_class < 1)
        throw ParameterError("synth_lowrank: n_per_class must be at least 1");
    if (!(sigma >= 0.0))
        throw ParameterError("synth_lowrank: sigma must be nonnegative");
    const QMatrix means[2] = {synth_class_mean(m, n, rank, detail::mix_seed(seed, 0xA)),
                              synth_class_mean(m, n, rank, detail::mix_seed(seed, 0xB))};
    const int labels[2] = {-1, 1};
    std::vector<LabeledSample> out;
    out.reserve(static_cast<std::size_t>(2 * n_per_class));
    std::size_t global = 0;
    for (int c = 0; c < 2; ++c) {
        for (int s = 0; s < n_per_class; ++s, ++global) {
            QMatrix x = means[c];
            if (sigma > 0.0) {
                std::mt19937_64 rng(detail::mix_seed(seed, 0x1000 + global));
                std::normal_distribution<double> normal(0.0, 1.0);
                for (int p = 1; p < 4; ++p)
                    for (Eigen::Index i = 0; i < m; ++i)
                        for (Eigen::Index j = 0; j < n; ++j)
                            x.plane(p)(i, j) += sigma * normal(rng);
            }
            out.push_back({std::move(x), labels[c],
                           "synth:" + std::to_string(labels[c]) + ":" + std::to_string(s)});
        }
    }
    return out;
}

/// Write samples as 8-bit PNGs plus a manifest.csv into dir. Values are scaled
/// by 255 and clamped, so amplitudes below 1/255 quantize away; the layout
/// round-trips through load_manifest.
inline std::string export_dataset(const std::vector<LabeledSample> &samples, const std::string &dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "images", ec);
    if (ec)
        throw IoError("cannot create dataset directory: " + dir);
    const fs::path manifest_path = fs::path(dir) / "manifest.csv";
    std::ofstream manifest(manifest_path);
    if (!manifest)
        throw IoError("cannot write manifest: " + manifest_path.string());
    manifest << "path,label\n";
    char name[64];
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const LabeledSample &s = samples[i];
        const int m = static_cast<int>(s.X.rows()), n = static_cast<int>(s.X.cols());
        cv::Mat img(m, n, CV_8UC3);
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < n; ++c) {
                auto to_u8 = [](double v) {
                    return static_cast<unsigned char>(std::clamp(std::lround(v * 255.0), 0L, 255L));
                };
                // BGR byte order
                img.at<cv::Vec3b>(r, c) = cv::Vec3b(to_u8(s.X.plane(3)(r, c)), to_u8(s.X.plane(2)(r, c)),
                                                    to_u8(s.X.plane(1)(r, c)));
            }
        }
        std::snprintf(name, sizeof(name), "images/sample_%04zu.png", i);
        if (!cv::imwrite((fs::path(dir) / name).string(), img))
            throw IoError("cannot write image: " + (fs::path(dir) / name).string());
        manifest << name << "," << s.y << "\n";
    }
    manifest.flush();
    if (!manifest)
        throw IoError("failed writing manifest: " + manifest_path.string());
    return manifest_path.string();
}

} // namespace lsqmm
