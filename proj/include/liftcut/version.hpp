#pragma once

namespace liftcut {
inline constexpr const char* kVersion = "0.1.0";
}
