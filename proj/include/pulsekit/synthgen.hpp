#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pulsekit/pipeline.hpp"

namespace pulsekit::synth {

struct SynthConfig {
  std::uint64_t seed = 7;
  std::size_t n_clips = 20;
  double duration_s = 10.0;
  double fps = 30.0;
  std::size_t base_size = 144;
  std::array<double, 2> hr_bpm{45.0, 150.0};
  std::array<double, 2> rr_bpm{8.0, 24.0};
  double pulse_amplitude = 0.01;
  std::array<double, 3> pulse_rgb{0.3, 1.0, 0.6};
  double motion_amplitude_px = 8.0;  // vertical excursion of the breathing band
  double band_brightness = 0.12;
  double band_sigma_px = 6.0;
  std::size_t au_count = 12;
  std::array<double, 2> au_on_s{1.0, 3.0};   // active interval length
  std::array<double, 2> au_off_s{1.0, 4.0};  // inactive interval length
  double au_texture = 0.2;
  std::size_t au_patch_px = 32;
  double noise_std = 0.005;
  double train_fraction = 0.7;

  std::size_t n_frames() const;
  void validate() const;
};

nlohmann::json to_json(const SynthConfig& cfg);
SynthConfig config_from_json(const nlohmann::json& j);

struct Rect {
  std::size_t y = 0, x = 0, h = 0, w = 0;
};

/// Everything drawn for one clip besides the pixel noise.
struct ClipTruth {
  double hr_bpm = 0.0;
  double rr_bpm = 0.0;
  double pulse_phase = 0.0;
  double harmonic_phase = 0.0;
  double resp_phase = 0.0;
  std::array<double, 3> tint{};
  std::vector<Rect> patches;
};

struct SynthClip {
  pipeline::VideoClip clip;
  ClipTruth truth;
};

/// PPG-like pulse: sin(phi) + 0.3 sin(2 phi + harmonic_phase).
double pulse_wave(double t, const ClipTruth& truth);

/// Clip i of the corpus. Depends only on (cfg, i).
SynthClip generate_clip(const SynthConfig& cfg, std::size_t index);

std::vector<SynthClip> generate(const SynthConfig& cfg);

/// Seeded train/test assignment, round(train_fraction * n) clips in train.
std::vector<std::string> assign_splits(const SynthConfig& cfg);

/// Write clip_XXX directories and manifest.json. Clips run on `jobs` threads.
nlohmann::json write_corpus(const SynthConfig& cfg, const std::filesystem::path& dir, std::size_t jobs = 1);

}  // namespace pulsekit::synth
