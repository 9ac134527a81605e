#pragma once

namespace spectra1d {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "spectra1d";

}  // namespace spectra1d
