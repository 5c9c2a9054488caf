#pragma once

namespace pollinglab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pollinglab
