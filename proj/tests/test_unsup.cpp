#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pulsekit/error.hpp"
#include "pulsekit/synthgen.hpp"
#include "pulsekit/unsup.hpp"

using namespace pulsekit;
using namespace pulsekit::unsup;

namespace {

RGBTrace constant_trace(std::size_t n, double r, double g, double b) {
  RGBTrace tr;
  tr.r.assign(n, r);
  tr.g.assign(n, g);
  tr.b.assign(n, b);
  return tr;
}

RGBTrace green_tone(double f, std::size_t n, double fps = 30.0) {
  RGBTrace tr = constant_trace(n, 1.0, 1.0, 1.0);
  tr.fps = fps;
  for (std::size_t i = 0; i < n; ++i) tr.g[i] = 1.0 + 0.01 * std::sin(2.0 * std::numbers::pi * f * i / fps);
  return tr;
}

RGBTrace synth_trace(double hr_bpm) {
  synth::SynthConfig cfg;
  cfg.n_clips = 1;
  cfg.base_size = 72;
  cfg.hr_bpm = {hr_bpm, hr_bpm};
  const auto sc = synth::generate_clip(cfg, 0);
  return spatial_mean(sc.clip.frames, sc.clip.fps);
}

double hr_of(const dsp::Wave& w, double fps) { return dsp::rate_from_waveform(w, fps, dsp::kHeartBand).rate_bpm; }

}  // namespace

TEST_CASE("spatial mean averages each channel plane") {
  nn::Tensor f({2, 3, 2, 2});
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<float>(i);
  const auto tr = spatial_mean(f, 25.0);
  CHECK(tr.fps == 25.0);
  CHECK(tr.r == dsp::Wave{1.5, 13.5});
  CHECK(tr.g == dsp::Wave{5.5, 17.5});
  CHECK(tr.b == dsp::Wave{9.5, 21.5});
  CHECK_THROWS_AS(spatial_mean(nn::Tensor({2, 1, 2, 2}), 30.0), ShapeError);
}

TEST_CASE("window length rounds seconds to frames") {
  CHECK(window_frames(1.6, 30.0) == 48);
  CHECK(window_frames(1.6, 25.0) == 40);
  CHECK_THROWS_AS(window_frames(0.01, 30.0), InvalidArgument);
}

TEST_CASE("constant RGB gives an all-zero output") {
  const auto tr = constant_trace(120, 0.6, 0.4, 0.45);
  for (double v : pos(tr)) CHECK(v == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  for (double v : chrom(tr)) CHECK(v == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
}

TEST_CASE("output length equals the trace length") {
  for (std::size_t n : {48u, 49u, 100u, 301u}) {
    const auto tr = green_tone(1.2, n);
    CHECK(pos(tr).size() == n);
    CHECK(chrom(tr).size() == n);
  }
}

TEST_CASE("traces shorter than a window are rejected") {
  const auto tr = constant_trace(40, 1.0, 1.0, 1.0);
  CHECK_THROWS_AS(pos(tr), DataError);
  CHECK_THROWS_AS(chrom(tr), DataError);
  RGBTrace bad = tr;
  bad.g.pop_back();
  CHECK_THROWS_AS(pos(bad), InvalidArgument);
}

TEST_CASE("windows with a zero channel mean contribute nothing") {
  auto tr = green_tone(1.2, 120);
  tr.r.assign(120, 0.0);
  for (double v : pos(tr)) CHECK(v == 0.0);
  for (double v : chrom(tr)) CHECK(v == 0.0);
}

TEST_CASE("POS on a green-only sinusoid recovers its rate") {
  const double fps = 30.0;
  for (double f : {0.9, 1.3, 2.1}) {
    const auto tr = green_tone(f, 600, fps);
    const auto rep = dsp::rate_from_waveform(pos(tr), fps, dsp::kHeartBand);
    CHECK(std::abs(rep.rate_bpm - 60.0 * f) <= rep.bin_bpm);
  }
}

TEST_CASE("POS combination of a green-only sinusoid is twice the normalized green") {
  // S1 = S2 = g/mean(g) - 1 per window, so alpha = 1 and h = 2 S1.
  const auto tr = green_tone(1.3, 48);
  const auto out = pos(tr);
  double m = 0.0;
  for (double v : tr.g) m += v;
  m /= 48.0;
  double hm = 0.0;
  for (double v : tr.g) hm += 2.0 * (v / m - 1.0);
  hm /= 48.0;
  for (std::size_t i = 0; i < 48; ++i) CHECK(out[i] == doctest::Approx(2.0 * (tr.g[i] / m - 1.0) - hm).epsilon(1e-12));
}

TEST_CASE("periodic Hann windows overlap-add to one at half hop") {
  for (std::size_t w : {4u, 48u, 50u}) {
    const auto win = hann_periodic(w);
    const std::size_t hop = w / 2, n = 10 * w;
    std::vector<double> acc(n, 0.0);
    for (std::size_t m = 0; m + w <= n; m += hop)
      for (std::size_t i = 0; i < w; ++i) acc[m + i] += win[i];
    for (std::size_t i = hop; i + w <= n; ++i) CHECK(acc[i] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("illumination scale leaves both methods unchanged") {
  const auto tr = synth_trace(80.0);
  for (double c : {0.25, 3.0}) {
    RGBTrace s = tr;
    for (auto* ch : {&s.r, &s.g, &s.b})
      for (double& v : *ch) v *= c;
    const auto p0 = pos(tr), p1 = pos(s);
    const auto c0 = chrom(tr), c1 = chrom(s);
    for (std::size_t i = 0; i < p0.size(); ++i) {
      CHECK(p1[i] == doctest::Approx(p0[i]).scale(1e-3).epsilon(1e-9));
      CHECK(c1[i] == doctest::Approx(c0[i]).scale(1e-3).epsilon(1e-9));
    }
    CHECK(hr_of(p1, tr.fps) == hr_of(p0, tr.fps));
    CHECK(hr_of(c1, tr.fps) == hr_of(c0, tr.fps));
  }
}

TEST_CASE("POS recovers a synthetic 90 BPM pulse") {
  const auto tr = synth_trace(90.0);
  CHECK(std::abs(hr_of(pos(tr), tr.fps) - 90.0) <= 1.0);
}

TEST_CASE("CHROM recovers a synthetic 75 BPM pulse") {
  const auto tr = synth_trace(75.0);
  CHECK(std::abs(hr_of(chrom(tr), tr.fps) - 75.0) <= 1.0);
}
