#pragma once

namespace bfam {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bfam
