#pragma once

namespace snls {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace snls
