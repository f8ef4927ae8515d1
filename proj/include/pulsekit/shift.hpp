#pragma once

#include <cstdint>
#include <string>

#include "pulsekit/tensor.hpp"

namespace pulsekit::shift {

enum class Variant {
  none,       // identity, for ablations
  tsm_zero,   // vacated end frames are zero-filled
  wtsm_wrap,  // vacated end frames take the fold from the opposite end
  circulant,  // cyclic rotation of both folds
};

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

/// Reduced non-negative fraction.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Fraction make(std::int64_t num, std::int64_t den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Fraction&) const = default;
};

struct ShiftSpec {
  std::size_t n_frames = 3;
  Fraction fold_fraction{1, 3};  // per direction
  Variant variant = Variant::wtsm_wrap;
  // Exchange directions: fold 0 moves backward, fold 1 forward.
  bool swap_folds = false;

  void validate() const;
};

/// Channels per shifted fold: floor(C * fold_fraction).
std::size_t fold_channels(std::size_t channels, const ShiftSpec& spec);

/// Fraction of output elements that are always zero for zero-free input,
/// assuming C * fold_fraction is integral: 2 * fold_fraction / N for tsm_zero,
/// 0 otherwise.
Fraction zeroed_fraction(const ShiftSpec& spec);

/// Same quantity for a concrete channel count (accounts for the floor).
Fraction zeroed_fraction(const ShiftSpec& spec, std::size_t channels);

/// Source frame for output frame t of a fold moving forward (+1) or backward
/// (-1). Returns -1 when the output is zero-filled.
std::int64_t source_frame(std::int64_t t, int direction, std::size_t n_frames, Variant variant);

/// x [N,C,H,W] -> shifted copy. Differentiable; the backward pass applies the
/// inverse permutation.
template <typename T>
nn::BasicVar<T> shift(nn::BasicTape<T>& tape, const nn::BasicVar<T>& x, const ShiftSpec& spec);

template <typename T>
nn::BasicTensor<T> shift(const nn::BasicTensor<T>& x, const ShiftSpec& spec);

}  // namespace pulsekit::shift
