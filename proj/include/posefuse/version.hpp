#pragma once

namespace posefuse {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace posefuse
