#include "pulsekit/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "pulsekit/corpus.hpp"
#include "pulsekit/error.hpp"
#include "pulsekit/io.hpp"
#include "pulsekit/random.hpp"

namespace pulsekit::synth {

using nlohmann::json;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t SynthConfig::n_frames() const { return static_cast<std::size_t>(std::lround(duration_s * fps)); }

void SynthConfig::validate() const {
  if (n_clips == 0) throw InvalidArgument("synth: n_clips must be >= 1");
  if (!(fps > 0.0) || !(duration_s > 0.0)) throw InvalidArgument("synth: fps and duration must be positive");
  if (n_frames() < 2) throw InvalidArgument("synth: clip needs at least 2 frames");
  if (base_size < 4) throw InvalidArgument("synth: base_size must be >= 4");
  if (!(hr_bpm[0] > 0.0 && hr_bpm[0] <= hr_bpm[1])) throw InvalidArgument("synth: bad HR range");
  if (!(rr_bpm[0] > 0.0 && rr_bpm[0] <= rr_bpm[1])) throw InvalidArgument("synth: bad RR range");
  if (hr_bpm[0] < 45.0 || hr_bpm[1] > 150.0) throw InvalidArgument("synth: HR range must lie in the heart band");
  if (rr_bpm[0] < 4.8 || rr_bpm[1] > 30.0) throw InvalidArgument("synth: RR range must lie in the respiration band");
  if (hr_bpm[1] / 60.0 >= fps / 2.0) throw InvalidArgument("synth: HR above Nyquist");
  if (!(pulse_amplitude >= 0.0 && pulse_amplitude < 0.1)) throw InvalidArgument("synth: pulse amplitude must be in [0, 0.1)");
  if (noise_std < 0.0 || band_sigma_px <= 0.0) throw InvalidArgument("synth: bad noise or band width");
  if (!(au_on_s[0] > 0.0 && au_on_s[0] <= au_on_s[1] && au_off_s[0] > 0.0 && au_off_s[0] <= au_off_s[1])) {
    throw InvalidArgument("synth: bad AU interval ranges");
  }
  if (au_count > 0 && au_patch_px == 0) throw InvalidArgument("synth: au_patch_px must be >= 1");
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw InvalidArgument("synth: train_fraction in [0,1]");
}

json to_json(const SynthConfig& c) {
  return json{{"seed", c.seed},
              {"n_clips", c.n_clips},
              {"duration_s", c.duration_s},
              {"fps", c.fps},
              {"base_size", c.base_size},
              {"hr_bpm", c.hr_bpm},
              {"rr_bpm", c.rr_bpm},
              {"pulse_amplitude", c.pulse_amplitude},
              {"pulse_rgb", c.pulse_rgb},
              {"motion_amplitude_px", c.motion_amplitude_px},
              {"band_brightness", c.band_brightness},
              {"band_sigma_px", c.band_sigma_px},
              {"au_count", c.au_count},
              {"au_on_s", c.au_on_s},
              {"au_off_s", c.au_off_s},
              {"au_texture", c.au_texture},
              {"au_patch_px", c.au_patch_px},
              {"noise_std", c.noise_std},
              {"train_fraction", c.train_fraction}};
}

SynthConfig config_from_json(const json& j) {
  SynthConfig c;
  const json def = to_json(c);
  for (const auto& [k, v] : j.items()) {
    if (!def.contains(k)) throw InvalidArgument("synth config: unknown key '" + k + "'");
  }
  auto get = [&](const char* k, auto& field) {
    if (j.contains(k)) j.at(k).get_to(field);
  };
  get("seed", c.seed);
  get("n_clips", c.n_clips);
  get("duration_s", c.duration_s);
  get("fps", c.fps);
  get("base_size", c.base_size);
  get("hr_bpm", c.hr_bpm);
  get("rr_bpm", c.rr_bpm);
  get("pulse_amplitude", c.pulse_amplitude);
  get("pulse_rgb", c.pulse_rgb);
  get("motion_amplitude_px", c.motion_amplitude_px);
  get("band_brightness", c.band_brightness);
  get("band_sigma_px", c.band_sigma_px);
  get("au_count", c.au_count);
  get("au_on_s", c.au_on_s);
  get("au_off_s", c.au_off_s);
  get("au_texture", c.au_texture);
  get("au_patch_px", c.au_patch_px);
  get("noise_std", c.noise_std);
  get("train_fraction", c.train_fraction);
  return c;
}

double pulse_wave(double t, const ClipTruth& truth) {
  const double phi = kTwoPi * truth.hr_bpm / 60.0 * t + truth.pulse_phase;
  return std::sin(phi) + 0.3 * std::sin(2.0 * phi + truth.harmonic_phase);
}

namespace {

// Patches sit on a fixed grid (same facial region for every clip) with a
// small per-clip jitter.
std::vector<Rect> layout_patches(const SynthConfig& cfg, std::mt19937_64& g) {
  std::vector<Rect> out;
  if (cfg.au_count == 0) return out;
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(cfg.au_count))));
  const std::size_t rows = (cfg.au_count + cols - 1) / cols;
  const std::size_t cw = cfg.base_size / cols, ch = cfg.base_size / rows;
  const std::size_t p = std::min({cfg.au_patch_px, cw, ch});
  if (p == 0) throw InvalidArgument("synth: frame too small for the AU grid");
  for (std::size_t a = 0; a < cfg.au_count; ++a) {
    const std::size_t r = a / cols, c = a % cols;
    const double slack_y = static_cast<double>(ch - p), slack_x = static_cast<double>(cw - p);
    const double jy = rng::uniform(g, -3.0, 3.0), jx = rng::uniform(g, -3.0, 3.0);
    const double y = std::clamp(slack_y / 2.0 + jy, 0.0, slack_y);
    const double x = std::clamp(slack_x / 2.0 + jx, 0.0, slack_x);
    out.push_back({r * ch + static_cast<std::size_t>(std::lround(y)), c * cw + static_cast<std::size_t>(std::lround(x)),
                   p, p});
  }
  return out;
}

std::vector<std::uint8_t> draw_au_track(const SynthConfig& cfg, std::size_t frames, std::mt19937_64& g) {
  std::vector<std::uint8_t> track(frames, 0);
  bool on = rng::uniform01(g) < 0.5;
  std::size_t t = 0;
  while (t < frames) {
    const auto& range = on ? cfg.au_on_s : cfg.au_off_s;
    const auto len = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(rng::uniform(g, range[0], range[1]) * cfg.fps)));
    const std::size_t end = std::min(frames, t + len);
    std::fill(track.begin() + static_cast<std::ptrdiff_t>(t), track.begin() + static_cast<std::ptrdiff_t>(end),
              on ? 1 : 0);
    t = end;
    on = !on;
  }
  return track;
}

}  // namespace

SynthClip generate_clip(const SynthConfig& cfg, std::size_t index) {
  cfg.validate();
  const std::uint64_t clip_seed = rng::derive(cfg.seed, index);
  std::mt19937_64 g(rng::derive(clip_seed, 1));
  std::mt19937_64 noise(rng::derive(clip_seed, 2));

  SynthClip out;
  ClipTruth& truth = out.truth;
  truth.hr_bpm = rng::uniform(g, cfg.hr_bpm[0], cfg.hr_bpm[1]);
  truth.rr_bpm = rng::uniform(g, cfg.rr_bpm[0], cfg.rr_bpm[1]);
  truth.pulse_phase = rng::uniform(g, 0.0, kTwoPi);
  truth.harmonic_phase = rng::uniform(g, 0.0, kTwoPi);
  truth.resp_phase = rng::uniform(g, 0.0, kTwoPi);
  // With the default channel weights these ranges keep the chrominance
  // coefficients of the pulse at opposite signs (X < 0, Y > 0.45).
  truth.tint = {rng::uniform(g, 0.55, 0.70), rng::uniform(g, 0.38, 0.48), rng::uniform(g, 0.40, 0.48)};

  const std::size_t s = cfg.base_size, t_count = cfg.n_frames(), plane = s * s;

  // Spatially smooth shading shared by the three channels.
  std::vector<double> shade(plane, 1.0);
  for (int k = 0; k < 3; ++k) {
    const double fy = rng::uniform(g, -1.5, 1.5), fx = rng::uniform(g, -1.5, 1.5);
    const double ph = rng::uniform(g, 0.0, kTwoPi);
    for (std::size_t y = 0; y < s; ++y) {
      for (std::size_t x = 0; x < s; ++x) {
        const double u = (fy * static_cast<double>(y) + fx * static_cast<double>(x)) / static_cast<double>(s);
        shade[y * s + x] += 0.04 * std::cos(kTwoPi * u + ph);
      }
    }
  }
  truth.patches = layout_patches(cfg, g);
  std::vector<std::vector<std::uint8_t>> au_tracks;
  for (std::size_t a = 0; a < cfg.au_count; ++a) au_tracks.push_back(draw_au_track(cfg, t_count, g));

  auto& clip = out.clip;
  clip.fps = cfg.fps;
  clip.au_count = cfg.au_count;
  clip.ppg.resize(t_count);
  clip.resp.resize(t_count);
  clip.au.assign(t_count * cfg.au_count, 0);
  clip.frames = nn::Tensor({t_count, 3, s, s});

  std::vector<double> band(s), frame(3 * plane);
  const double centre = static_cast<double>(s - 1) / 2.0;
  for (std::size_t t = 0; t < t_count; ++t) {
    const double sec = static_cast<double>(t) / cfg.fps;
    const double p = pulse_wave(sec, truth);
    const double r = std::sin(kTwoPi * truth.rr_bpm / 60.0 * sec + truth.resp_phase);
    clip.ppg[t] = p;
    clip.resp[t] = r;
    const double yc = centre + cfg.motion_amplitude_px * r;
    for (std::size_t y = 0; y < s; ++y) {
      const double z = (static_cast<double>(y) - yc) / cfg.band_sigma_px;
      band[y] = cfg.band_brightness * std::exp(-0.5 * z * z);
    }
    for (std::size_t c = 0; c < 3; ++c) {
      const double base = truth.tint[c];
      const double pulse = cfg.pulse_amplitude * cfg.pulse_rgb[c] * p;
      double* dst = frame.data() + c * plane;
      for (std::size_t y = 0; y < s; ++y) {
        for (std::size_t x = 0; x < s; ++x) dst[y * s + x] = base * shade[y * s + x] + band[y] + pulse;
      }
    }
    for (std::size_t a = 0; a < cfg.au_count; ++a) {
      const bool on = au_tracks[a][t] != 0;
      clip.au[t * cfg.au_count + a] = on ? 1 : 0;
      if (!on) continue;
      const Rect& rc = truth.patches[a];
      for (std::size_t c = 0; c < 3; ++c) {
        double* dst = frame.data() + c * plane;
        for (std::size_t y = rc.y; y < rc.y + rc.h; ++y) {
          for (std::size_t x = rc.x; x < rc.x + rc.w; ++x) {
            // Vertical stripes, 2 px on / 2 px off.
            dst[y * s + x] += ((x - rc.x) / 2) % 2 == 0 ? cfg.au_texture : -cfg.au_texture;
          }
        }
      }
    }
    float* out_px = clip.frames.ptr() + t * 3 * plane;
    for (std::size_t i = 0; i < 3 * plane; ++i) {
      double v = frame[i];
      if (cfg.noise_std > 0.0) v += cfg.noise_std * rng::normal(noise);
      // Quantize to the 16-bit grid so the stored PNG reads back exactly.
      v = std::round(std::clamp(v, 0.0, 1.0) * 65535.0) / 65535.0;
      out_px[i] = static_cast<float>(v);
    }
  }
  return out;
}

std::vector<SynthClip> generate(const SynthConfig& cfg) {
  std::vector<SynthClip> out;
  for (std::size_t i = 0; i < cfg.n_clips; ++i) out.push_back(generate_clip(cfg, i));
  return out;
}

std::vector<std::string> assign_splits(const SynthConfig& cfg) {
  std::vector<std::size_t> order(cfg.n_clips);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 g(rng::derive(cfg.seed, 0x5911));
  rng::shuffle(order.begin(), order.end(), g);
  const auto n_train = static_cast<std::size_t>(std::lround(cfg.train_fraction * static_cast<double>(cfg.n_clips)));
  std::vector<std::string> split(cfg.n_clips, "test");
  for (std::size_t i = 0; i < n_train; ++i) split[order[i]] = "train";
  return split;
}

namespace {

std::string clip_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "clip_%03zu", i);
  return buf;
}

}  // namespace

json write_corpus(const SynthConfig& cfg, const std::filesystem::path& dir, std::size_t jobs) {
  cfg.validate();
  const auto splits = assign_splits(cfg);
  std::vector<json> entries(cfg.n_clips);
  corpus::parallel_for(cfg.n_clips, jobs, [&](std::size_t i) {
    const SynthClip sc = generate_clip(cfg, i);
    json extra{{"id", clip_id(i)},
               {"hr_bpm", sc.truth.hr_bpm},
               {"rr_bpm", sc.truth.rr_bpm},
               {"split", splits[i]},
               {"tint", sc.truth.tint}};
    corpus::save_clip(dir / clip_id(i), sc.clip, extra);
    entries[i] = json{{"id", clip_id(i)},
                      {"dir", clip_id(i)},
                      {"split", splits[i]},
                      {"hr_bpm", sc.truth.hr_bpm},
                      {"rr_bpm", sc.truth.rr_bpm}};
  });
  json manifest{{"format", "pulsekit-corpus-1"}, {"seed", cfg.seed}, {"config", to_json(cfg)}, {"clips", entries}};
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace pulsekit::synth
