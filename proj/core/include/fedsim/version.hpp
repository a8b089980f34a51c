#pragma once

namespace fedsim {

inline constexpr const char* kEngineVersion = "0.1.0";

}  // namespace fedsim
