#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

namespace pulsekit::pipeline {
struct VideoClip;
}

namespace pulsekit::dsp {

using Wave = std::vector<double>;

struct Band {
  double lo = 0.0;  // Hz
  double hi = 0.0;  // Hz

  /// Throws InvalidArgument unless 0 < lo < hi < fs/2.
  void validate(double fs) const;
};

inline constexpr Band kHeartBand{0.75, 2.5};
inline constexpr Band kRespBand{0.08, 0.5};

/// Detrend strength for reconstructed heart and breathing waves. lambda = 100
/// removes content below ~0.5 Hz at 30 fps, which would erase breathing.
inline constexpr double kHeartDetrendLambda = 100.0;
inline constexpr double kRespDetrendLambda = 10000.0;

/// One second-order section, a[0] == 1.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 3> a{};
};
using Sos = std::vector<Biquad>;

/// Digital Butterworth bandpass from an analog prototype of the given order
/// (bilinear transform with pre-warped edges). The result has `order`
/// sections, i.e. 2*order poles.
Sos butter_bandpass_sos(double fs, const Band& band, int order = 2);

/// Complex frequency response at f Hz.
std::complex<double> sos_response(const Sos& sos, double f, double fs);

/// Causal cascade filter; zi holds two states per section (updated in place).
Wave sosfilt(const Sos& sos, std::span<const double> x, std::vector<std::array<double, 2>>* zi = nullptr);

/// Step-response steady state per section, scaled by preceding DC gains.
std::vector<std::array<double, 2>> sosfilt_zi(const Sos& sos);

/// Default reflection pad for zero-phase filtering: 30 * order samples.
std::size_t default_padlen(int order);

/// Forward-backward filtering with odd reflection padding; padlen is clamped
/// to len(x) - 1.
Wave filtfilt(const Sos& sos, std::span<const double> x, std::size_t padlen);

/// Zero-phase Butterworth bandpass.
Wave butter_bandpass(std::span<const double> x, double fs, const Band& band, int order = 2);

/// Smoothness-prior detrend: (I - (I + lambda^2 D2'D2)^-1) x.
Wave detrend(std::span<const double> x, double lambda = 100.0);

/// Least-squares straight-line removal.
Wave detrend_linear(std::span<const double> x);

/// Cumulative sum followed by smoothness-prior detrend.
Wave reconstruct_waveform(std::span<const double> diffnorm, double lambda = 100.0);

/// Real FFT of x zero-padded to nfft; returns bins 0..nfft/2.
std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t nfft);

/// FFT length used for rate spectra: the next power of two covering the
/// signal, 60*fs points, and a bin width of at most 0.03 BPM.
std::size_t rate_nfft(std::size_t len, double fs);

struct RateReport {
  double rate_bpm = 0.0;
  std::vector<double> freqs;      // Hz, bins 0..nfft/2
  std::vector<double> magnitude;  // |X(f)|
  Wave filtered;
  double bin_bpm = 0.0;
};

/// Bandpass, Hann taper, zero-pad, magnitude spectrum, in-band argmax.
/// Requires at least 2 s of signal.
RateReport rate_from_waveform(std::span<const double> x, double fs, const Band& band, int order = 2);

/// |analytic signal| via the FFT method at the signal's own length.
Wave hilbert_envelope(std::span<const double> x);

/// Band used for pseudo labels: HR0 +/- 20 BPM, clamped to [0.70, 3] Hz.
Band pseudo_ppg_band(double hr0_bpm, double fs);

/// Bandpass a POS waveform around hr0 and divide by its Hilbert envelope.
/// Samples whose envelope is below 1e-6 are set to 0.
Wave pseudo_ppg_from_pos(std::span<const double> pos_wave, double fs, double hr0_bpm);

/// POS on the clip's RGB means, filtered around the rate of the reference
/// heart wave and envelope-normalized.
Wave make_pseudo_ppg(const pipeline::VideoClip& clip, std::span<const double> gt_heart_wave);

/// x[n+1] - x[n] over the standard deviation of those differences. Used for
/// zero-mean label tracks where the ratio form is singular.
Wave diff_standardize(std::span<const double> x);

double mean(std::span<const double> x);
double stddev(std::span<const double> x);  // population

}  // namespace pulsekit::dsp
