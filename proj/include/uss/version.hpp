#pragma once

namespace uss {

inline constexpr const char* version = "0.1.0";

}  // namespace uss
