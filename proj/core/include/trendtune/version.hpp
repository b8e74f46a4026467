#pragma once

namespace trendtune {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace trendtune
