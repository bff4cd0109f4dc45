#pragma once

namespace rmaj::config {

// Container format version.
inline constexpr unsigned kFormatVersion = 1;

// Bits per element per lg(1/tau) spent by the small-array encoder, measured
// as the maximum over the calibration inputs in tests/test_micro.cpp and
// rounded up. Sets the micro-array length in the small-1/tau regime.
inline constexpr double kMicroEncodingConstant = 28;

// The exhaustive answer table is built when one micro encoding fits in this
// many bits.
inline constexpr unsigned kUniversalTableBits = 20;

}  // namespace rmaj::config
