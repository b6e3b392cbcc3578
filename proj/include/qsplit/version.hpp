#pragma once

namespace qsplit {
inline constexpr const char* kVersion = "0.1.0";
}
