#include <algorithm>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "pulsekit/ops.hpp"
#include "pulsekit/shift.hpp"

using namespace pulsekit;
using namespace pulsekit::nn;
using shift::ShiftSpec;
using shift::Variant;

namespace {

// Written from the fold description alone, element by element.
Tensor shift_oracle(const Tensor& x, Variant v) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t f = c / 3;
  Tensor out(x.shape());
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t xx = 0; xx < w; ++xx) {
          float val;
          if (ch < f) {
            if (t == 0) {
              val = v == Variant::tsm_zero ? 0.0f : x.at({n - 1, ch, y, xx});
            } else {
              val = x.at({t - 1, ch, y, xx});
            }
          } else if (ch < 2 * f) {
            if (t == n - 1) {
              val = v == Variant::tsm_zero ? 0.0f : x.at({0, ch, y, xx});
            } else {
              val = x.at({t + 1, ch, y, xx});
            }
          } else {
            val = x.at({t, ch, y, xx});
          }
          out.at({t, ch, y, xx}) = val;
        }
  return out;
}

Tensor frames_123() {
  Tensor x({3, 3, 1, 1});
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t c = 0; c < 3; ++c) x.at({t, c, 0, 0}) = static_cast<float>(t + 1);
  return x;
}

std::vector<float> channel(const Tensor& x, std::size_t c) {
  std::vector<float> v;
  for (std::size_t t = 0; t < x.dim(0); ++t) v.push_back(x.at({t, c, 0, 0}));
  return v;
}

Tensor reverse_frames(const Tensor& x) {
  Tensor out(x.shape());
  const std::size_t n = x.dim(0), inner = x.size() / n;
  for (std::size_t t = 0; t < n; ++t)
    std::copy_n(x.ptr() + (n - 1 - t) * inner, inner, out.ptr() + t * inner);
  return out;
}

}  // namespace

TEST_CASE("shift hand-enumerated fixture") {
  const Tensor x = frames_123();
  const auto z = shift::shift(x, ShiftSpec{3, {1, 3}, Variant::tsm_zero});
  CHECK(channel(z, 0) == std::vector<float>{0, 1, 2});
  CHECK(channel(z, 1) == std::vector<float>{2, 3, 0});
  CHECK(channel(z, 2) == std::vector<float>{1, 2, 3});
  const auto w = shift::shift(x, ShiftSpec{3, {1, 3}, Variant::wtsm_wrap});
  CHECK(channel(w, 0) == std::vector<float>{3, 1, 2});
  CHECK(channel(w, 1) == std::vector<float>{2, 3, 1});
  CHECK(channel(w, 2) == std::vector<float>{1, 2, 3});
}

TEST_CASE("single frame wraps onto itself") {
  std::mt19937_64 rng(2);
  const Tensor x = testutil::random_tensorf({1, 6, 3, 3}, rng);
  for (Variant v : {Variant::wtsm_wrap, Variant::circulant, Variant::none}) {
    CHECK(shift::shift(x, ShiftSpec{1, {1, 3}, v}) == x);
  }
}

TEST_CASE("shift matches the index oracle") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    for (std::size_t c : {6u, 7u, 8u}) {
      const Tensor x = testutil::random_tensorf({4, c, 2, 3}, rng);
      for (Variant v : {Variant::tsm_zero, Variant::wtsm_wrap}) {
        CHECK(shift::shift(x, ShiftSpec{4, {1, 3}, v}) == shift_oracle(x, v));
      }
    }
  }
}

TEST_CASE("remainder channels stay in place") {
  // C=7: folds of 2, channels 4..6 untouched.
  CHECK(shift::fold_channels(7, ShiftSpec{}) == 2);
  std::mt19937_64 rng(8);
  const Tensor x = testutil::random_tensorf({3, 7, 1, 1}, rng);
  const Tensor y = shift::shift(x, ShiftSpec{3, {1, 3}, Variant::wtsm_wrap});
  for (std::size_t c = 4; c < 7; ++c) CHECK(channel(y, c) == channel(x, c));
}

TEST_CASE("zeroed fraction") {
  CHECK(shift::zeroed_fraction(ShiftSpec{3, {1, 3}, Variant::tsm_zero}) == shift::Fraction{2, 9});
  CHECK(shift::zeroed_fraction(ShiftSpec{9, {1, 3}, Variant::tsm_zero}) == shift::Fraction{2, 27});
  for (std::size_t n : {1u, 2u, 5u, 16u}) {
    CHECK(shift::zeroed_fraction(ShiftSpec{n, {1, 3}, Variant::wtsm_wrap}).num == 0);
    CHECK(shift::zeroed_fraction(ShiftSpec{n, {1, 3}, Variant::circulant}).num == 0);
  }
  for (std::size_t n : {2u, 3u, 5u, 9u}) {
    const Tensor ones({n, 6, 3, 3}, 1.0f);
    const Tensor y = shift::shift(ones, ShiftSpec{n, {1, 3}, Variant::tsm_zero});
    const auto zeros = static_cast<std::int64_t>(std::count(y.data().begin(), y.data().end(), 0.0f));
    const auto frac = shift::Fraction::make(zeros, static_cast<std::int64_t>(y.size()));
    CHECK(frac == shift::zeroed_fraction(ShiftSpec{n, {1, 3}, Variant::tsm_zero}));
  }
  // Fold floor with C=7 zeroes 2*2 of 7 channel-frames.
  CHECK(shift::zeroed_fraction(ShiftSpec{3, {1, 3}, Variant::tsm_zero}, 7) ==
        shift::Fraction::make(4, 21));
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(shift::shift(Tensor({3, 3, 1, 1}), ShiftSpec{4, {1, 3}, Variant::tsm_zero}),
                  ShapeError);
  CHECK_THROWS_AS(ShiftSpec({3, {2, 3}, Variant::tsm_zero}).validate(), InvalidArgument);
  CHECK_THROWS_AS(ShiftSpec({0, {1, 3}, Variant::tsm_zero}).validate(), InvalidArgument);
  CHECK(shift::parse_variant("wtsm") == Variant::wtsm_wrap);
  CHECK_THROWS_AS(shift::parse_variant("bogus"), InvalidArgument);
}

TEST_CASE("wtsm is a bijection with an exact inverse") {
  std::mt19937_64 rng(10);
  for (std::size_t n : {2u, 3u, 5u}) {
    const Tensor x = testutil::random_tensorf({n, 9, 2, 2}, rng);
    const Tensor y = shift::shift(x, ShiftSpec{n, {1, 3}, Variant::wtsm_wrap});
    auto a = x.storage();
    auto b = y.storage();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    // The swapped-direction shift undoes it.
    CHECK(shift::shift(y, ShiftSpec{n, {1, 3}, Variant::wtsm_wrap, true}) == x);
  }
}

TEST_CASE("circulant and wtsm produce the same permutation") {
  std::mt19937_64 rng(12);
  for (std::size_t n : {1u, 2u, 3u, 7u}) {
    const Tensor x = testutil::random_tensorf({n, 6, 2, 2}, rng);
    CHECK(shift::shift(x, ShiftSpec{n, {1, 3}, Variant::circulant}) ==
          shift::shift(x, ShiftSpec{n, {1, 3}, Variant::wtsm_wrap}));
  }
}

TEST_CASE("time-reversal symmetry") {
  std::mt19937_64 rng(14);
  for (std::size_t n : {2u, 3u, 6u}) {
    const Tensor x = testutil::random_tensorf({n, 6, 2, 3}, rng);
    const Tensor direct = shift::shift(x, ShiftSpec{n, {1, 3}, Variant::wtsm_wrap});
    const Tensor via = reverse_frames(
        shift::shift(reverse_frames(x), ShiftSpec{n, {1, 3}, Variant::wtsm_wrap, true}));
    CHECK(via == direct);
  }
}

TEST_CASE("shift gradients") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const TensorD tgt = testutil::random_tensor({3, 6, 2, 2}, rng);
    for (Variant v : {Variant::tsm_zero, Variant::wtsm_wrap}) {
      VarD x(testutil::random_tensor({3, 6, 2, 2}, rng), true);
      auto r = testutil::grad_check({x}, [&](TapeD& t, std::vector<VarD>& l) {
        return mse_loss(t, shift::shift(t, l[0], ShiftSpec{3, {1, 3}, v}), tgt);
      });
      CHECK(r.worst_rel_err < 1e-4);
    }
  }
}
