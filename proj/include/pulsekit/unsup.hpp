#pragma once

#include "pulsekit/dsp.hpp"
#include "pulsekit/tensor.hpp"

namespace pulsekit::unsup {

/// Per-frame spatial means of the three colour channels.
struct RGBTrace {
  dsp::Wave r, g, b;
  double fps = 30.0;

  std::size_t size() const { return r.size(); }
  void validate() const;
};

/// frames [T,3,H,W] -> channel means per frame.
RGBTrace spatial_mean(const nn::Tensor& frames, double fps);

/// Window length in frames, round(window_s * fps).
std::size_t window_frames(double window_s, double fps);

/// Plane-orthogonal-to-skin projection with stride-1 overlap-add.
dsp::Wave pos(const RGBTrace& trace, double window_s = 1.6);

/// Periodic Hann window of even length w (sums to a constant at hop w/2).
std::vector<double> hann_periodic(std::size_t w);

/// Chrominance method: per-window bandpassed X/Y combination, Hann windowed,
/// 50% overlap-add. Odd window lengths are rounded up to even.
dsp::Wave chrom(const RGBTrace& trace, double window_s = 1.6, const dsp::Band& band = dsp::kHeartBand);

}  // namespace pulsekit::unsup
