#pragma once

namespace patchsec {

inline constexpr const char* version = "1.0.0";

} // namespace patchsec
