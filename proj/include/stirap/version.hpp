#pragma once

namespace stirap {
inline constexpr const char* kVersion = "0.1.0";
}
