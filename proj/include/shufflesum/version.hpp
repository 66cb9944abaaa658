#pragma once

namespace shufflesum {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace shufflesum
