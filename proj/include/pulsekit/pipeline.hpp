#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pulsekit/dsp.hpp"
#include "pulsekit/tensor.hpp"

namespace pulsekit::pipeline {

/// Frames in [0,1] plus optional aligned label tracks.
struct VideoClip {
  nn::Tensor frames;  // [T,3,H,W]
  double fps = 30.0;
  dsp::Wave ppg;                  // empty or T samples
  dsp::Wave resp;                 // empty or T samples
  std::size_t au_count = 0;       // A
  std::vector<std::uint8_t> au;   // empty or T*A, 0/1

  std::size_t length() const { return frames.empty() ? 0 : frames.dim(0); }
  bool has_au() const { return au_count > 0 && !au.empty(); }
  /// Throws DataError when a track disagrees with the frame count.
  void validate() const;
};

/// Crop the longer spatial axis to the shorter one. The crop starts at
/// floor(leftover / 2), so an odd leftover keeps the extra pixel at the end.
nn::Tensor center_crop_square(const nn::Tensor& frames);

/// Box (area-average) downsampling of square frames to size x size.
nn::Tensor resize(const nn::Tensor& frames, std::size_t size);

/// (x - mean) / std over the whole tensor. Throws DegenerateClipError for a
/// constant input.
nn::Tensor standardize(const nn::Tensor& frames);

/// (k[n+1] - k[n]) / (k[n+1] + k[n]) along dim 0, 0 where |k[n+1] + k[n]| <
/// 1e-8. Output has T-1 rows.
nn::Tensor diff_ratio(const nn::Tensor& frames);

/// diff_ratio followed by whole-tensor standardization. A constant clip
/// yields zeros.
nn::Tensor diff_normalize(const nn::Tensor& frames);

/// Ratio-form difference of a 1-D track (no standardization).
dsp::Wave diff_ratio(std::span<const double> x);

/// Ratio-form difference standardized over the track; zeros if constant.
dsp::Wave diff_normalize(std::span<const double> x);

/// Training unit of N Small-branch frames.
struct Chunk {
  nn::Tensor big;    // [N_big,3,S,S] standardized raw frames
  nn::Tensor small;  // [N,3,s,s] normalized differences
  std::vector<float> ppg;         // N
  std::vector<float> resp;        // N
  std::vector<std::uint8_t> au;   // N*A
  std::size_t au_count = 0;
  std::size_t clip = 0;
  std::size_t start = 0;          // first source frame
};

/// Frame indices the Big view uses for chunk k: kN + jM, j < ceil(N/M).
std::vector<std::size_t> big_frame_indices(std::size_t k, std::size_t n, std::size_t m);

/// Number of non-overlapping chunks of a T-frame clip: floor((T-1)/N).
std::size_t chunk_count(std::size_t frames, std::size_t n);

enum class PpgLabel { pseudo, raw };

struct PreprocessConfig {
  std::size_t big_size = 144;
  std::size_t small_size = 9;
  std::size_t n = 3;
  std::size_t m = 3;
  PpgLabel ppg_label = PpgLabel::pseudo;

  void validate() const;
};

/// Per-clip label tracks after differencing (length T-1).
struct PreparedLabels {
  dsp::Wave ppg;
  dsp::Wave resp;
};

/// Difference-mode labels. Zero-mean tracks use x[n+1]-x[n] standardized;
/// the PPG target is the pseudo label when configured.
PreparedLabels prepare_labels(const VideoClip& clip, const PreprocessConfig& cfg);

/// Full clip preprocessing: crop, resize both views, standardize / diff
/// normalize, derive labels, cut into chunks.
std::vector<Chunk> preprocess(const VideoClip& clip, const PreprocessConfig& cfg,
                              std::size_t clip_index = 0);

/// Chunk an already-prepared clip. big: [T,3,S,S], small: [T-1,3,s,s].
std::vector<Chunk> chunk(const nn::Tensor& big, const nn::Tensor& small, const PreparedLabels& labels,
                         const VideoClip& clip, std::size_t n, std::size_t m, std::size_t clip_index = 0);

}  // namespace pulsekit::pipeline
