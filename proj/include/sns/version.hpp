#pragma once

namespace sns {
inline constexpr const char* kVersion = "0.1.0";
}
