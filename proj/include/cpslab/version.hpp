#pragma once

namespace cpslab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cpslab
