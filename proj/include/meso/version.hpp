#pragma once

namespace meso {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace meso
