#pragma once

namespace sclasso {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sclasso
