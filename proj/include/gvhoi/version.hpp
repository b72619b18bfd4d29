#pragma once

namespace gvhoi {

inline constexpr const char* kCodeVersion = "gvhoi 0.1.0";

}  // namespace gvhoi
