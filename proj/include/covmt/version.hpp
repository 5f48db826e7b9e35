#pragma once

namespace covmt {

inline constexpr const char* kVersion = "covmt 0.1.0";

}  // namespace covmt
