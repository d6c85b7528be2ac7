#pragma once

namespace lockstep {

inline constexpr const char* kToolkitVersion = "0.1.0";

}  // namespace lockstep
