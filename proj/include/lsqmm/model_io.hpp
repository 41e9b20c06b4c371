#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "trainer.hpp"

namespace lsqmm {

/// Binary model file, little-endian, versioned. Layout (documented in the
/// README): magic "LSQM", format version u32, rows u32, cols u32, the four
/// planes of W (real, i, j, k) as row-major f64, b f64, alpha (count u32 +
/// f64s), support indices (count u32 + u32s), config (C, lambda, rho, tau,
/// tol as f64, max_iter u32, qp_tol f64), converged u8, iterations u32, and
/// the trace (count u32, then objective f64 + residual f64 per iteration;
/// wall time is not persisted so identical runs serialize identically).
inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr char kModelMagic[4] = {'L', 'S', 'Q', 'M'};

namespace detail {

struct ByteWriter {
    std::string buf;

    template <typename T> void raw(const T &v) {
        char tmp[sizeof(T)];
        std::memcpy(tmp, &v, sizeof(T));
        buf.append(tmp, sizeof(T));
    }
    void u32(std::uint32_t v) { raw(v); }
    void f64(double v) { raw(v); }
    void u8(std::uint8_t v) { raw(v); }
};

struct ByteReader {
    const std::string &buf;
    std::size_t pos = 0;

    template <typename T> T raw() {
        if (pos + sizeof(T) > buf.size())
            throw FormatError("model file truncated");
        T v;
        std::memcpy(&v, buf.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::uint32_t u32() { return raw<std::uint32_t>(); }
    double f64() { return raw<double>(); }
    std::uint8_t u8() { return raw<std::uint8_t>(); }
};

} // namespace detail

inline std::string serialize_model(const TrainedModel &model) {
    detail::ByteWriter w;
    w.buf.append(kModelMagic, 4);
    w.u32(kModelFormatVersion);
    const Eigen::Index m = model.W.rows(), n = model.W.cols();
    w.u32(static_cast<std::uint32_t>(m));
    w.u32(static_cast<std::uint32_t>(n));
    for (int p = 0; p < 4; ++p)
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                w.f64(model.W.plane(p)(i, j));
    w.f64(model.b);
    w.u32(static_cast<std::uint32_t>(model.alpha.size()));
    for (Eigen::Index i = 0; i < model.alpha.size(); ++i)
        w.f64(model.alpha(i));
    w.u32(static_cast<std::uint32_t>(model.support_indices.size()));
    for (int s : model.support_indices)
        w.u32(static_cast<std::uint32_t>(s));
    w.f64(model.config.C);
    w.f64(model.config.lambda);
    w.f64(model.config.rho);
    w.f64(model.config.tau);
    w.f64(model.config.tol);
    w.u32(static_cast<std::uint32_t>(model.config.max_iter));
    w.f64(model.config.qp_tol);
    w.u8(model.converged ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(model.iterations));
    w.u32(static_cast<std::uint32_t>(model.trace.size()));
    for (const IterationRecord &rec : model.trace) {
        w.f64(rec.objective);
        w.f64(rec.residual);
    }
    return std::move(w.buf);
}

inline TrainedModel deserialize_model(const std::string &bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kModelMagic, 4) != 0)
        throw FormatError("not a model file (bad magic)");
    detail::ByteReader r{bytes, 4};
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion)
        throw FormatError("unsupported model format version " + std::to_string(version));
    const auto m = static_cast<Eigen::Index>(r.u32());
    const auto n = static_cast<Eigen::Index>(r.u32());
    TrainedModel model;
    model.W = QMatrix(m, n);
    for (int p = 0; p < 4; ++p)
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                model.W.plane(p)(i, j) = r.f64();
    model.b = r.f64();
    const std::uint32_t na = r.u32();
    model.alpha.resize(static_cast<Eigen::Index>(na));
    for (std::uint32_t i = 0; i < na; ++i)
        model.alpha(static_cast<Eigen::Index>(i)) = r.f64();
    const std::uint32_t ns = r.u32();
    model.support_indices.resize(ns);
    for (std::uint32_t i = 0; i < ns; ++i)
        model.support_indices[i] = static_cast<int>(r.u32());
    model.config.C = r.f64();
    model.config.lambda = r.f64();
    model.config.rho = r.f64();
    model.config.tau = r.f64();
    model.config.tol = r.f64();
    model.config.max_iter = static_cast<int>(r.u32());
    model.config.qp_tol = r.f64();
    model.converged = r.u8() != 0;
    model.iterations = static_cast<int>(r.u32());
    const std::uint32_t nt = r.u32();
    model.trace.resize(nt);
    for (std::uint32_t i = 0; i < nt; ++i) {
        model.trace[i].iter = static_cast<int>(i) + 1;
        model.trace[i].objective = r.f64();
        model.trace[i].residual = r.f64();
        model.trace[i].seconds = 0.0;
    }
    if (r.pos != bytes.size())
        throw FormatError("model file has trailing bytes");
    return model;
}

inline void save_model(const std::string &path, const TrainedModel &model) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open model file for writing: " + path);
    const std::string bytes = serialize_model(model);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("failed writing model file: " + path);
}

inline TrainedModel load_model(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open model file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoError("failed reading model file: " + path);
    return deserialize_model(bytes);
}

} // namespace lsqmm
