#include "pulsekit/shift.hpp"

#include <algorithm>
#include <numeric>

namespace pulsekit::shift {

Variant parse_variant(const std::string& name) {
  if (name == "none") return Variant::none;
  if (name == "tsm_zero" || name == "tsm") return Variant::tsm_zero;
  if (name == "wtsm_wrap" || name == "wtsm") return Variant::wtsm_wrap;
  if (name == "circulant") return Variant::circulant;
  throw InvalidArgument("unknown shift variant '" + name + "'");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::none: return "none";
    case Variant::tsm_zero: return "tsm_zero";
    case Variant::wtsm_wrap: return "wtsm_wrap";
    case Variant::circulant: return "circulant";
  }
  return "?";
}

Fraction Fraction::make(std::int64_t num, std::int64_t den) {
  if (den <= 0 || num < 0) throw InvalidArgument("fraction must be non-negative with positive denominator");
  const std::int64_t g = std::gcd(num, den);
  if (g == 0) return {0, 1};
  return {num / g, den / g};
}

void ShiftSpec::validate() const {
  if (n_frames == 0) throw InvalidArgument("shift: n_frames must be >= 1");
  if (fold_fraction.den <= 0 || fold_fraction.num < 0) {
    throw InvalidArgument("shift: fold fraction must be non-negative");
  }
  if (2 * fold_fraction.num > fold_fraction.den) {
    throw InvalidArgument("shift: two folds exceed the channel count (2*fold_fraction > 1)");
  }
}

std::size_t fold_channels(std::size_t channels, const ShiftSpec& spec) {
  return channels * static_cast<std::size_t>(spec.fold_fraction.num) /
         static_cast<std::size_t>(spec.fold_fraction.den);
}

Fraction zeroed_fraction(const ShiftSpec& spec) {
  spec.validate();
  if (spec.variant != Variant::tsm_zero) return {0, 1};
  return Fraction::make(2 * spec.fold_fraction.num,
                        spec.fold_fraction.den * static_cast<std::int64_t>(spec.n_frames));
}

Fraction zeroed_fraction(const ShiftSpec& spec, std::size_t channels) {
  spec.validate();
  if (spec.variant != Variant::tsm_zero) return {0, 1};
  const auto fold = static_cast<std::int64_t>(fold_channels(channels, spec));
  return Fraction::make(2 * fold, static_cast<std::int64_t>(spec.n_frames * channels));
}

std::int64_t source_frame(std::int64_t t, int direction, std::size_t n_frames, Variant variant) {
  const auto n = static_cast<std::int64_t>(n_frames);
  if (variant == Variant::none || direction == 0) return t;
  const std::int64_t s = t - direction;
  if (s >= 0 && s < n) return s;
  if (variant == Variant::tsm_zero) return -1;
  return ((s % n) + n) % n;
}

namespace {

int fold_direction(std::size_t c, std::size_t fold, bool swapped) {
  int d = 0;
  if (c < fold) {
    d = 1;
  } else if (c < 2 * fold) {
    d = -1;
  }
  return swapped ? -d : d;
}

void check_input(const nn::Shape& shape, const ShiftSpec& spec) {
  spec.validate();
  if (shape.size() != 4) {
    throw ShapeError("shift: input must be [N,C,H,W], got " + nn::shape_str(shape));
  }
  if (shape[0] != spec.n_frames) {
    throw ShapeError("shift: frame count (dim 0) " + std::to_string(shape[0]) +
                     " != spec n_frames " + std::to_string(spec.n_frames));
  }
}

// Calls fn(dst_offset, src_offset_or_npos) once per [H,W] plane.
template <typename Fn>
void for_each_plane(const nn::Shape& shape, const ShiftSpec& spec, Fn&& fn) {
  const std::size_t n = shape[0], c = shape[1], plane = shape[2] * shape[3];
  const std::size_t fold = fold_channels(c, spec);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const int dir = fold_direction(ch, fold, spec.swap_folds);
      const std::int64_t s = source_frame(static_cast<std::int64_t>(t), dir, n, spec.variant);
      const std::size_t dst = (t * c + ch) * plane;
      if (s < 0) {
        fn(dst, std::string::npos, plane);
      } else {
        fn(dst, (static_cast<std::size_t>(s) * c + ch) * plane, plane);
      }
    }
  }
}

}  // namespace

template <typename T>
nn::BasicTensor<T> shift(const nn::BasicTensor<T>& x, const ShiftSpec& spec) {
  check_input(x.shape(), spec);
  nn::BasicTensor<T> out(x.shape());
  const T* src = x.ptr();
  T* dst = out.ptr();
  for_each_plane(x.shape(), spec, [&](std::size_t d, std::size_t s, std::size_t plane) {
    if (s != std::string::npos) std::copy_n(src + s, plane, dst + d);
  });
  return out;
}

template <typename T>
nn::BasicVar<T> shift(nn::BasicTape<T>& tape, const nn::BasicVar<T>& x, const ShiftSpec& spec) {
  nn::BasicVar<T> result(shift(x.value(), spec), tape.tracks({&x}));
  if (!result.requires_grad()) return result;
  tape.record([xin = x, y = result, spec]() mutable {
    if (!y.has_grad()) return;
    T* dx = xin.grad_buffer().ptr();
    const T* dy = y.grad().ptr();
    for_each_plane(xin.shape(), spec, [&](std::size_t d, std::size_t s, std::size_t plane) {
      if (s == std::string::npos) return;
      for (std::size_t i = 0; i < plane; ++i) dx[s + i] += dy[d + i];
    });
  });
  return result;
}

template nn::BasicTensor<float> shift(const nn::BasicTensor<float>&, const ShiftSpec&);
template nn::BasicTensor<double> shift(const nn::BasicTensor<double>&, const ShiftSpec&);
template nn::BasicVar<float> shift(nn::BasicTape<float>&, const nn::BasicVar<float>&,
                                   const ShiftSpec&);
template nn::BasicVar<double> shift(nn::BasicTape<double>&, const nn::BasicVar<double>&,
                                    const ShiftSpec&);

}  // namespace pulsekit::shift
