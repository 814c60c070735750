#pragma once

namespace ratio_mle {

inline constexpr const char* kVersion = "0.1.0";

} // namespace ratio_mle
