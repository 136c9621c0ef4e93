#pragma once

namespace qillum {
inline constexpr const char* kVersion = "0.1.0";
}
