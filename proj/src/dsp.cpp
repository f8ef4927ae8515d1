#include "pulsekit/dsp.hpp"

#include <fftw3.h>

#include <Eigen/Sparse>
#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>

#include "pulsekit/error.hpp"

namespace pulsekit::dsp {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

void Band::validate(double fs) const {
  if (!(fs > 0.0)) throw InvalidArgument("sampling rate must be positive");
  if (!(lo > 0.0 && lo < hi && hi < fs / 2.0)) {
    throw InvalidArgument("band [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          "] Hz must satisfy 0 < lo < hi < fs/2 = " + std::to_string(fs / 2.0));
  }
}

Sos butter_bandpass_sos(double fs, const Band& band, int order) {
  band.validate(fs);
  if (order < 1) throw InvalidArgument("filter order must be >= 1");
  const double fs2 = 2.0 * fs;
  const double wl = fs2 * std::tan(kPi * band.lo / fs);
  const double wh = fs2 * std::tan(kPi * band.hi / fs);
  const double bw = wh - wl;
  const double wo2 = wl * wh;

  // Analog lowpass prototype -> bandpass -> bilinear.
  std::vector<cd> poles;
  for (int k = 0; k < order; ++k) {
    const double m = static_cast<double>(-order + 1 + 2 * k);
    const cd p = -std::exp(cd(0.0, kPi * m / (2.0 * order)));
    const cd plp = p * (bw / 2.0);
    const cd d = std::sqrt(plp * plp - wo2);
    poles.push_back(plp + d);
    poles.push_back(plp - d);
  }
  cd denom(1.0, 0.0);
  std::vector<cd> zpoles;
  for (const cd& p : poles) {
    denom *= (fs2 - p);
    zpoles.push_back((fs2 + p) / (fs2 - p));
  }
  const double gain = (std::pow(bw, order) * std::pow(fs2, order) / denom).real();

  std::vector<cd> upper;
  std::vector<double> reals;
  for (const cd& p : zpoles) {
    if (std::abs(p.imag()) > 1e-12 * std::max(1.0, std::abs(p))) {
      if (p.imag() > 0) upper.push_back(p);
    } else {
      reals.push_back(p.real());
    }
  }
  std::sort(reals.begin(), reals.end());
  Sos sos;
  for (const cd& p : upper) {
    sos.push_back({{1.0, 0.0, -1.0}, {1.0, -2.0 * p.real(), std::norm(p)}});
  }
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    sos.push_back({{1.0, 0.0, -1.0}, {1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]}});
  }
  if (sos.size() != static_cast<std::size_t>(order)) {
    throw NumericError("bandpass design produced unpaired poles");
  }
  for (double& c : sos.front().b) c *= gain;
  return sos;
}

std::complex<double> sos_response(const Sos& sos, double f, double fs) {
  const cd z1 = std::exp(cd(0.0, -2.0 * kPi * f / fs));
  const cd z2 = z1 * z1;
  cd h(1.0, 0.0);
  for (const auto& s : sos) {
    h *= (s.b[0] + s.b[1] * z1 + s.b[2] * z2) / (s.a[0] + s.a[1] * z1 + s.a[2] * z2);
  }
  return h;
}

Wave sosfilt(const Sos& sos, std::span<const double> x, std::vector<std::array<double, 2>>* zi) {
  Wave y(x.begin(), x.end());
  std::vector<std::array<double, 2>> local(sos.size(), {0.0, 0.0});
  auto& state = zi ? *zi : local;
  if (state.size() != sos.size()) throw InvalidArgument("sosfilt: one state pair per section");
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const auto& b = sos[s].b;
    const auto& a = sos[s].a;
    double z0 = state[s][0], z1 = state[s][1];
    for (double& v : y) {
      const double in = v;
      const double out = b[0] * in + z0;
      z0 = b[1] * in - a[1] * out + z1;
      z1 = b[2] * in - a[2] * out;
      v = out;
    }
    state[s] = {z0, z1};
  }
  return y;
}

std::vector<std::array<double, 2>> sosfilt_zi(const Sos& sos) {
  std::vector<std::array<double, 2>> zi;
  double scale = 1.0;
  for (const auto& s : sos) {
    const double h = (s.b[0] + s.b[1] + s.b[2]) / (s.a[0] + s.a[1] + s.a[2]);
    const double z1 = scale * (s.b[2] - s.a[2] * h);
    const double z0 = scale * (s.b[1] - s.a[1] * h) + z1;
    zi.push_back({z0, z1});
    scale *= h;
  }
  return zi;
}

std::size_t default_padlen(int order) { return 30 * static_cast<std::size_t>(order); }

Wave filtfilt(const Sos& sos, std::span<const double> x, std::size_t padlen) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t edge = std::min(padlen, n - 1);
  Wave ext;
  ext.reserve(n + 2 * edge);
  for (std::size_t i = edge; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= edge; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = sosfilt_zi(sos);
  auto state = zi;
  for (auto& z : state) {
    z[0] *= ext.front();
    z[1] *= ext.front();
  }
  Wave y = sosfilt(sos, ext, &state);
  std::reverse(y.begin(), y.end());
  state = zi;
  for (auto& z : state) {
    z[0] *= y.front();
    z[1] *= y.front();
  }
  y = sosfilt(sos, y, &state);
  std::reverse(y.begin(), y.end());
  return Wave(y.begin() + static_cast<std::ptrdiff_t>(edge),
              y.begin() + static_cast<std::ptrdiff_t>(edge + n));
}

Wave butter_bandpass(std::span<const double> x, double fs, const Band& band, int order) {
  return filtfilt(butter_bandpass_sos(fs, band, order), x, default_padlen(order));
}

Wave detrend(std::span<const double> x, double lambda) {
  const std::size_t n = x.size();
  if (n < 3) throw InvalidArgument("detrend needs at least 3 samples");
  const auto in = static_cast<Eigen::Index>(n);
  // A = I + lambda^2 D2'D2, assembled from the second-difference stencil.
  std::vector<Eigen::Triplet<double>> trip;
  const double l2 = lambda * lambda;
  for (Eigen::Index i = 0; i < in; ++i) trip.emplace_back(i, i, 1.0);
  const double st[3] = {1.0, -2.0, 1.0};
  for (Eigen::Index r = 0; r + 2 < in; ++r) {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trip.emplace_back(r + a, r + b, l2 * st[a] * st[b]);
  }
  Eigen::SparseMatrix<double> A(in, in);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::NaturalOrdering<int>> solver(A);
  if (solver.info() != Eigen::Success) throw NumericError("detrend: factorization failed");
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), in);
  const Eigen::VectorXd trend = solver.solve(xv);
  Wave out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - trend[static_cast<Eigen::Index>(i)];
  return out;
}

Wave detrend_linear(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return Wave(n, 0.0);
  const double tm = (static_cast<double>(n) - 1.0) / 2.0;
  const double xm = mean(x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - tm;
    num += dt * (x[i] - xm);
    den += dt * dt;
  }
  const double slope = num / den;
  Wave out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - xm - slope * (static_cast<double>(i) - tm);
  return out;
}

Wave reconstruct_waveform(std::span<const double> diffnorm, double lambda) {
  Wave cum(diffnorm.size());
  std::partial_sum(diffnorm.begin(), diffnorm.end(), cum.begin());
  return detrend(cum, lambda);
}

namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::vector<cd> rfft(std::span<const double> x, std::size_t nfft) {
  if (nfft < x.size()) throw InvalidArgument("rfft: nfft shorter than the signal");
  if (nfft == 0) return {};
  std::vector<double> in(nfft, 0.0);
  std::copy(x.begin(), x.end(), in.begin());
  std::vector<cd> out(nfft / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard lock(plan_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), in.data(),
                                reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(plan_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

std::size_t rate_nfft(std::size_t len, double fs) {
  const auto need = std::max({len, static_cast<std::size_t>(std::ceil(60.0 * fs)),
                              static_cast<std::size_t>(std::ceil(60.0 * fs / 0.03))});
  return std::bit_ceil(need);
}

RateReport rate_from_waveform(std::span<const double> x, double fs, const Band& band, int order) {
  band.validate(fs);
  if (static_cast<double>(x.size()) < 2.0 * fs) {
    throw DataError("rate estimation needs at least 2 s of signal, got " +
                    std::to_string(x.size()) + " samples at " + std::to_string(fs) + " Hz");
  }
  RateReport rep;
  rep.filtered = butter_bandpass(x, fs, band, order);
  const std::size_t nfft = rate_nfft(x.size(), fs);
  // Hann taper keeps the negative-frequency image and harmonics from
  // leaking into the fundamental on short clips.
  Wave tapered = rep.filtered;
  const std::size_t n = tapered.size();
  for (std::size_t i = 0; i < n; ++i) {
    tapered[i] *= 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  const auto spec = rfft(tapered, nfft);
  rep.freqs.resize(spec.size());
  rep.magnitude.resize(spec.size());
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(nfft);
    rep.freqs[k] = f;
    rep.magnitude[k] = std::abs(spec[k]);
    if (f >= band.lo && f <= band.hi && rep.magnitude[k] > best_mag) {
      best_mag = rep.magnitude[k];
      best = k;
    }
  }
  rep.rate_bpm = 60.0 * rep.freqs[best];
  rep.bin_bpm = 60.0 * fs / static_cast<double>(nfft);
  return rep;
}

Wave hilbert_envelope(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const auto half = rfft(x, n);
  std::vector<cd> full(n, cd(0.0, 0.0));
  full[0] = half[0];
  const std::size_t pos_end = (n % 2 == 0) ? n / 2 : (n + 1) / 2;
  for (std::size_t k = 1; k < pos_end; ++k) full[k] = 2.0 * half[k];
  if (n % 2 == 0) full[n / 2] = half[n / 2];
  std::vector<cd> analytic(n);
  fftw_plan plan;
  {
    std::lock_guard lock(plan_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(full.data()),
                            reinterpret_cast<fftw_complex*>(analytic.data()), FFTW_BACKWARD,
                            FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(plan_mutex());
    fftw_destroy_plan(plan);
  }
  Wave env(n);
  for (std::size_t i = 0; i < n; ++i) env[i] = std::abs(analytic[i]) / static_cast<double>(n);
  return env;
}

Band pseudo_ppg_band(double hr0_bpm, double fs) {
  Band b{std::max((hr0_bpm - 20.0) / 60.0, 0.70), std::min((hr0_bpm + 20.0) / 60.0, 3.0)};
  b.validate(fs);
  return b;
}

Wave pseudo_ppg_from_pos(std::span<const double> pos_wave, double fs, double hr0_bpm) {
  const Wave filtered = butter_bandpass(pos_wave, fs, pseudo_ppg_band(hr0_bpm, fs), 2);
  const Wave env = hilbert_envelope(filtered);
  Wave out(filtered.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = env[i] < 1e-6 ? 0.0 : filtered[i] / env[i];
  return out;
}

Wave diff_standardize(std::span<const double> x) {
  if (x.size() < 2) return {};
  Wave d(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  const double m = mean(d);
  const double s = stddev(d);
  for (double& v : d) v = s > 0.0 ? (v - m) / s : 0.0;
  return d;
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace pulsekit::dsp
