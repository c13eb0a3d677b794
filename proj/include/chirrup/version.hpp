#pragma once

namespace chirrup {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace chirrup
