#include "pulsekit/dsp.hpp"
#include "pulsekit/pipeline.hpp"
#include "pulsekit/unsup.hpp"

namespace pulsekit::dsp {

Wave make_pseudo_ppg(const pipeline::VideoClip& clip, std::span<const double> gt_heart_wave) {
  if (gt_heart_wave.size() != clip.length()) {
    throw DataError("reference heart wave is not aligned with the clip");
  }
  const Wave p = unsup::pos(unsup::spatial_mean(clip.frames, clip.fps));
  const double hr0 = rate_from_waveform(gt_heart_wave, clip.fps, kHeartBand).rate_bpm;
  return pseudo_ppg_from_pos(p, clip.fps, hr0);
}

}  // namespace pulsekit::dsp
