#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "gradcheck.hpp"
#include "pulsekit/pipeline.hpp"

using namespace pulsekit;
using namespace pulsekit::pipeline;
using nn::Tensor;

namespace {

// Each pixel stores its row index, so a crop reveals which rows survived.
Tensor row_index_frames(std::size_t t, std::size_t h, std::size_t w) {
  Tensor x({t, 3, h, w});
  for (std::size_t n = 0; n < t; ++n)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t xx = 0; xx < w; ++xx) x.at({n, c, y, xx}) = static_cast<float>(y);
  return x;
}

std::pair<double, double> moments(const Tensor& x) {
  double s = 0.0;
  for (float v : x.data()) s += v;
  const double m = s / static_cast<double>(x.size());
  double ss = 0.0;
  for (float v : x.data()) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / static_cast<double>(x.size()))};
}

VideoClip toy_clip(std::size_t t, std::size_t size, std::size_t au_count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VideoClip clip;
  clip.frames = testutil::random_tensorf({t, 3, size, size}, rng, 0.2f, 0.8f);
  clip.fps = 30.0;
  for (std::size_t i = 0; i < t; ++i) {
    clip.ppg.push_back(std::sin(0.4 * static_cast<double>(i)));
    clip.resp.push_back(std::cos(0.05 * static_cast<double>(i)));
  }
  clip.au_count = au_count;
  for (std::size_t i = 0; i < t * au_count; ++i) clip.au.push_back(static_cast<std::uint8_t>((i / 7) % 2));
  return clip;
}

}  // namespace

TEST_CASE("center crop keeps the middle rows") {
  const Tensor out = center_crop_square(row_index_frames(1, 100, 80));
  REQUIRE(out.shape() == nn::Shape{1, 3, 80, 80});
  CHECK(out.at({0, 0, 0, 0}) == 10.0f);
  CHECK(out.at({0, 2, 79, 79}) == 89.0f);
}

TEST_CASE("center crop of an odd leftover starts at row 0") {
  const Tensor out = center_crop_square(row_index_frames(2, 5, 4));
  REQUIRE(out.shape() == nn::Shape{2, 3, 4, 4});
  for (std::size_t y = 0; y < 4; ++y) CHECK(out.at({1, 1, y, 3}) == static_cast<float>(y));
}

TEST_CASE("center crop of a wide frame trims columns") {
  Tensor x({1, 3, 4, 8});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(i % 8);
  const Tensor out = center_crop_square(x);
  REQUIRE(out.shape() == nn::Shape{1, 3, 4, 4});
  CHECK(out.at({0, 0, 0, 0}) == 2.0f);
  CHECK(out.at({0, 0, 3, 3}) == 5.0f);
}

TEST_CASE("square frames pass through the crop unchanged") {
  std::mt19937_64 rng(1);
  const Tensor x = testutil::random_tensorf({2, 3, 6, 6}, rng);
  CHECK(center_crop_square(x) == x);
}

TEST_CASE("resize of a constant keeps the constant") {
  const Tensor out = resize(Tensor({1, 3, 18, 18}, 0.5f), 9);
  REQUIRE(out.shape() == nn::Shape{1, 3, 9, 9});
  for (float v : out.data()) CHECK(v == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("resize of a checkerboard gives the block mean") {
  Tensor x({1, 3, 18, 18});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 18; ++y)
      for (std::size_t xx = 0; xx < 18; ++xx) x.at({0, c, y, xx}) = static_cast<float>((y + xx) % 2);
  const Tensor out = resize(x, 9);
  for (float v : out.data()) CHECK(v == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("resize 144 to 9 equals the 16x16 block mean") {
  std::mt19937_64 rng(3);
  const Tensor x = testutil::random_tensorf({2, 3, 144, 144}, rng, 0.0f, 1.0f);
  const Tensor out = resize(x, 9);
  double worst = 0.0;
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 9; ++j) {
          double acc = 0.0;
          for (std::size_t y = 0; y < 16; ++y)
            for (std::size_t xx = 0; xx < 16; ++xx) acc += x.at({n, c, i * 16 + y, j * 16 + xx});
          worst = std::max(worst, std::fabs(acc / 256.0 - out.at({n, c, i, j})));
        }
  CHECK(worst < 1e-6);
}

TEST_CASE("resize rejects upscaling and non-square input") {
  CHECK_THROWS_AS(resize(Tensor({1, 3, 4, 4}), 8), InvalidArgument);
  CHECK_THROWS_AS(resize(Tensor({1, 3, 4, 6}), 2), ShapeError);
}

TEST_CASE("standardize maps {0,2} to {-1,+1}") {
  Tensor x({1, 1, 2, 2}, std::vector<float>{0, 2, 0, 2});
  const Tensor out = standardize(x);
  CHECK(out[0] == doctest::Approx(-1.0));
  CHECK(out[1] == doctest::Approx(1.0));
}

TEST_CASE("standardize yields zero mean and unit deviation") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    const auto [m, sd] = moments(standardize(testutil::random_tensorf({4, 3, 9, 9}, rng, 0.1f, 0.9f)));
    CHECK(std::fabs(m) < 1e-5);
    CHECK(std::fabs(sd - 1.0) < 1e-5);
  }
}

TEST_CASE("standardize of a constant clip is a degenerate clip") {
  CHECK_THROWS_AS(standardize(Tensor({3, 3, 4, 4}, 0.25f)), DegenerateClipError);
}

TEST_CASE("difference ratio fixtures") {
  Tensor x({2, 1, 1, 3}, std::vector<float>{1, 0, 0.5f, 3, 0, 0.5f});
  const Tensor d = diff_ratio(x);
  REQUIRE(d.shape() == nn::Shape{1, 1, 1, 3});
  CHECK(d[0] == doctest::Approx(0.5));
  CHECK(d[1] == 0.0f);  // both pixels black
  CHECK(d[2] == 0.0f);  // constant
}

TEST_CASE("diff_normalize of a constant clip is zero") {
  const Tensor d = diff_normalize(Tensor({5, 3, 3, 3}, 0.4f));
  REQUIRE(d.dim(0) == 4);
  for (float v : d.data()) CHECK(v == 0.0f);
}

TEST_CASE("diff_normalize standardizes the ratio frames") {
  std::mt19937_64 rng(9);
  const auto [m, sd] = moments(diff_normalize(testutil::random_tensorf({6, 3, 9, 9}, rng, 0.2f, 0.8f)));
  CHECK(std::fabs(m) < 1e-5);
  CHECK(std::fabs(sd - 1.0) < 1e-5);
}

TEST_CASE("track diff_ratio matches the frame version") {
  const std::vector<double> x{1.0, 3.0, 3.0, 0.0, 0.0};
  const auto d = diff_ratio(x);
  REQUIRE(d.size() == 4);
  CHECK(d[0] == doctest::Approx(0.5));
  CHECK(d[1] == 0.0);
  CHECK(d[2] == doctest::Approx(-1.0));
  CHECK(d[3] == 0.0);
}

TEST_CASE("chunk count and big frame indices") {
  CHECK(chunk_count(10, 3) == 3);
  CHECK(chunk_count(4, 3) == 1);
  CHECK_THROWS_AS(chunk_count(3, 3), DataError);
  CHECK(big_frame_indices(1, 3, 3) == std::vector<std::size_t>{3});
  CHECK(big_frame_indices(2, 3, 1) == std::vector<std::size_t>{6, 7, 8});
  CHECK(big_frame_indices(0, 4, 2) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("chunks of a 10 frame clip") {
  const VideoClip clip = toy_clip(10, 12, 2, 4);
  PreprocessConfig cfg;
  cfg.ppg_label = PpgLabel::raw;
  cfg.big_size = 12;
  cfg.small_size = 3;
  const auto chunks = preprocess(clip, cfg);
  REQUIRE(chunks.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(chunks[k].start == 3 * k);
    CHECK(chunks[k].big.shape() == nn::Shape{1, 3, 12, 12});
    CHECK(chunks[k].small.shape() == nn::Shape{3, 3, 3, 3});
    CHECK(chunks[k].ppg.size() == 3);
    CHECK(chunks[k].au.size() == 6);
  }
  // Big view of chunk k is standardized frame 3k.
  const Tensor big = standardize(clip.frames);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 3 * 144; ++i) CHECK(chunks[k].big[i] == big[3 * k * 3 * 144 + i]);
  }
  // Small row t of chunk k is the normalized difference of frames 3k+t, 3k+t+1.
  const Tensor small = diff_normalize(resize(clip.frames, 3));
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 3 * 27; ++i) CHECK(chunks[k].small[i] == small[3 * k * 27 + i]);
  }
  CHECK(chunks[2].au[0] == clip.au[6 * 2]);
}

TEST_CASE("M = 1 keeps every frame in the Big view") {
  const VideoClip clip = toy_clip(10, 6, 0, 5);
  PreprocessConfig cfg;
  cfg.ppg_label = PpgLabel::raw;
  cfg.big_size = 6;
  cfg.small_size = 3;
  cfg.m = 1;
  const auto chunks = preprocess(clip, cfg);
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[1].big.dim(0) == 3);
  const Tensor big = standardize(clip.frames);
  const std::size_t inner = 3 * 36;
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t i = 0; i < inner; ++i) CHECK(chunks[1].big[j * inner + i] == big[(3 + j) * inner + i]);
  }
}

TEST_CASE("chunking partitions the small-view frames") {
  for (std::size_t t : {7u, 10u, 31u, 64u}) {
    for (std::size_t n : {1u, 2u, 3u, 5u}) {
      if (t < n + 1) continue;
      const VideoClip clip = toy_clip(t, 3, 0, t * 10 + n);
      PreprocessConfig cfg;
      cfg.ppg_label = PpgLabel::raw;
  cfg.ppg_label = PpgLabel::raw;
      cfg.big_size = 3;
      cfg.small_size = 3;
      cfg.n = n;
      cfg.m = n;
      const auto chunks = preprocess(clip, cfg);
      std::multiset<std::size_t> seen;
      for (const auto& c : chunks)
        for (std::size_t i = 0; i < n; ++i) seen.insert(c.start + i);
      CHECK(chunks.size() == (t - 1) / n);
      for (std::size_t f = 0; f < chunks.size() * n; ++f) CHECK(seen.count(f) == 1);
      CHECK(seen.size() == chunks.size() * n);
    }
  }
}

TEST_CASE("preprocess validates its configuration and clip") {
  VideoClip clip = toy_clip(10, 6, 0, 6);
  PreprocessConfig cfg;
  cfg.ppg_label = PpgLabel::raw;
  cfg.big_size = 6;
  cfg.small_size = 3;
  cfg.m = 4;
  CHECK_THROWS_AS(preprocess(clip, cfg), InvalidArgument);
  cfg.n = 4;
  cfg.m = 3;
  CHECK_THROWS_AS(preprocess(clip, cfg), InvalidArgument);
  cfg = PreprocessConfig{};
  cfg.ppg_label = PpgLabel::raw;
  cfg.big_size = 6;
  cfg.small_size = 3;
  clip.ppg.pop_back();
  CHECK_THROWS_AS(preprocess(clip, cfg), DataError);
  CHECK_THROWS_AS(preprocess(toy_clip(3, 6, 0, 1), cfg), DataError);
}

TEST_CASE("raw labels are standardized first differences") {
  const VideoClip clip = toy_clip(40, 3, 0, 7);
  PreprocessConfig cfg;
  cfg.ppg_label = PpgLabel::raw;
  const auto labels = prepare_labels(clip, cfg);
  REQUIRE(labels.ppg.size() == 39);
  double m = 0.0, ss = 0.0;
  for (double v : labels.ppg) m += v;
  m /= 39.0;
  for (double v : labels.ppg) ss += (v - m) * (v - m);
  CHECK(std::fabs(m) < 1e-12);
  CHECK(std::sqrt(ss / 39.0) == doctest::Approx(1.0));
  std::vector<double> d;
  for (std::size_t i = 0; i < 39; ++i) d.push_back(clip.ppg[i + 1] - clip.ppg[i]);
  const double dm = std::accumulate(d.begin(), d.end(), 0.0) / 39.0;
  double dss = 0.0;
  for (double v : d) dss += (v - dm) * (v - dm);
  const double dsd = std::sqrt(dss / 39.0);
  for (std::size_t i = 0; i < 39; ++i) CHECK(labels.ppg[i] == doctest::Approx((d[i] - dm) / dsd).epsilon(1e-12));
}
