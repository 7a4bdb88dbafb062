#pragma once

namespace roadozone {

inline constexpr const char* kVersion = "0.3.0";

}  // namespace roadozone
