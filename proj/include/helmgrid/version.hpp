#pragma once

namespace helmgrid {
inline constexpr const char* kVersion = "0.1.0";
}
