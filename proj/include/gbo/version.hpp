#pragma once

namespace gbo {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gbo
