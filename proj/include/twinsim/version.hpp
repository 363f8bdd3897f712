#pragma once

namespace twinsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace twinsim
