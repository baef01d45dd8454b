#pragma once

namespace proxyhpo {
inline constexpr const char* kVersion = "0.1.0";
}
