#pragma once

namespace phonobus {
inline constexpr const char* kVersion = "0.1.0";
}
