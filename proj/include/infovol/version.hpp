#pragma once

namespace infovol {
inline constexpr const char* kVersion = "0.1.0";
}
