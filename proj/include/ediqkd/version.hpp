#pragma once

namespace ediqkd {

inline constexpr const char* version = "1.0.0";

} // namespace ediqkd
