#pragma once

namespace lsqmm {

inline constexpr const char *kVersion = "1.0.0";

} // namespace lsqmm
