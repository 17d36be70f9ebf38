#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace psdpoly {

/// Storage / accumulation widths understood by the emulated GEMM.
enum class Precision { F64, F32, F16EMU };

inline std::string_view to_string(Precision p) {
  switch (p) {
    case Precision::F64: return "f64";
    case Precision::F32: return "f32";
    case Precision::F16EMU: return "f16emu";
  }
  return "?";
}

inline Precision parse_precision(std::string_view s) {
  if (s == "f64" || s == "F64") return Precision::F64;
  if (s == "f32" || s == "F32") return Precision::F32;
  if (s == "f16emu" || s == "F16EMU" || s == "f16") return Precision::F16EMU;
  throw std::invalid_argument("unknown precision '" + std::string(s) + "'");
}

/// Storage width plus accumulation width. F16EMU always accumulates in F32,
/// which is how tensor-core half GEMMs behave.
struct PrecisionMode {
  Precision tag = Precision::F64;
  Precision accumulate = Precision::F64;

  static constexpr PrecisionMode f64() { return {Precision::F64, Precision::F64}; }
  static constexpr PrecisionMode f32() { return {Precision::F32, Precision::F32}; }
  static constexpr PrecisionMode f16emu() { return {Precision::F16EMU, Precision::F32}; }

  static PrecisionMode from_tag(Precision p) {
    switch (p) {
      case Precision::F64: return f64();
      case Precision::F32: return f32();
      case Precision::F16EMU: return f16emu();
    }
    return f64();
  }

  void validate() const {
    if (tag == Precision::F16EMU && accumulate != Precision::F32)
      throw std::invalid_argument("F16EMU requires F32 accumulation");
    if (accumulate == Precision::F16EMU)
      throw std::invalid_argument("accumulation width must be F32 or F64");
    if (tag == Precision::F64 && accumulate != Precision::F64)
      throw std::invalid_argument("F64 storage requires F64 accumulation");
  }

  friend bool operator==(const PrecisionMode&, const PrecisionMode&) = default;
};

inline constexpr double kHalfMax = 65504.0;

/// Round a double to the nearest binary16 value (ties to even), returned as a
/// double. Values that would round past the largest finite half saturate to
/// +-65504 and set `overflow`.
inline double round_to_half(double v, bool* overflow = nullptr) {
  if (v == 0.0 || std::isnan(v)) return v;
  const double a = std::fabs(v);
  // 65520 is the midpoint between 65504 and the next (nonexistent) step 65536.
  if (a >= 65520.0) {
    if (overflow) *overflow = true;
    return std::copysign(kHalfMax, v);
  }
  double quantum;
  if (a < 0x1p-14) {
    quantum = 0x1p-24;  // subnormal spacing
  } else {
    int e = 0;
    std::frexp(a, &e);  // a = f * 2^e, f in [0.5, 1)
    quantum = std::ldexp(1.0, e - 11);
  }
  // v / quantum is exact (power-of-two scaling); nearbyint rounds half to even.
  return std::nearbyint(v / quantum) * quantum;
}

inline double round_to_single(double v, bool* overflow = nullptr) {
  const float f = static_cast<float>(v);
  if (std::isinf(f) && !std::isinf(v) && overflow) *overflow = true;
  return static_cast<double>(f);
}

inline double round_scalar(double v, Precision p, bool* overflow = nullptr) {
  switch (p) {
    case Precision::F64: return v;
    case Precision::F32: return round_to_single(v, overflow);
    case Precision::F16EMU: return round_to_half(v, overflow);
  }
  return v;
}

}  // namespace psdpoly
