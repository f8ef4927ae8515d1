#include "pulsekit/unsup.hpp"

#include <cmath>
#include <numbers>

#include "pulsekit/error.hpp"

namespace pulsekit::unsup {

void RGBTrace::validate() const {
  if (r.size() != g.size() || r.size() != b.size()) {
    throw InvalidArgument("RGB trace channels differ in length");
  }
  if (!(fps > 0.0)) throw InvalidArgument("RGB trace fps must be positive");
}

RGBTrace spatial_mean(const nn::Tensor& frames, double fps) {
  if (frames.rank() != 4 || frames.dim(1) != 3) {
    throw ShapeError("spatial_mean expects [T,3,H,W], got " + nn::shape_str(frames.shape()));
  }
  const std::size_t t_len = frames.dim(0), plane = frames.dim(2) * frames.dim(3);
  RGBTrace tr;
  tr.fps = fps;
  dsp::Wave* ch[3] = {&tr.r, &tr.g, &tr.b};
  for (auto* c : ch) c->resize(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t c = 0; c < 3; ++c) {
      const float* p = frames.ptr() + (t * 3 + c) * plane;
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      (*ch[c])[t] = acc / static_cast<double>(plane);
    }
  }
  return tr;
}

std::size_t window_frames(double window_s, double fps) {
  const auto w = static_cast<std::size_t>(std::lround(window_s * fps));
  if (w < 2) throw InvalidArgument("window shorter than two frames");
  return w;
}

namespace {

double mean_of(const double* p, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += p[i];
  return acc / static_cast<double>(n);
}

double std_of(const std::vector<double>& v) { return dsp::stddev(v); }

}  // namespace

dsp::Wave pos(const RGBTrace& trace, double window_s) {
  trace.validate();
  const std::size_t n = trace.size();
  const std::size_t w = window_frames(window_s, trace.fps);
  if (n < w) throw DataError("POS: trace shorter than one window");
  dsp::Wave out(n, 0.0);
  std::vector<double> s1(w), s2(w), h(w);
  for (std::size_t m = 0; m + w <= n; ++m) {
    const double mr = mean_of(trace.r.data() + m, w);
    const double mg = mean_of(trace.g.data() + m, w);
    const double mb = mean_of(trace.b.data() + m, w);
    if (mr == 0.0 || mg == 0.0 || mb == 0.0) continue;
    for (std::size_t i = 0; i < w; ++i) {
      const double cr = trace.r[m + i] / mr, cg = trace.g[m + i] / mg, cb = trace.b[m + i] / mb;
      s1[i] = cg - cb;
      s2[i] = -2.0 * cr + cg + cb;
    }
    const double sd2 = std_of(s2);
    const double alpha = sd2 > 0.0 ? std_of(s1) / sd2 : 0.0;
    for (std::size_t i = 0; i < w; ++i) h[i] = s1[i] + alpha * s2[i];
    const double hm = mean_of(h.data(), w);
    for (std::size_t i = 0; i < w; ++i) out[m + i] += h[i] - hm;
  }
  return out;
}

std::vector<double> hann_periodic(std::size_t w) {
  std::vector<double> win(w);
  for (std::size_t i = 0; i < w; ++i) {
    win[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(w));
  }
  return win;
}

dsp::Wave chrom(const RGBTrace& trace, double window_s, const dsp::Band& band) {
  trace.validate();
  const std::size_t n = trace.size();
  std::size_t w = window_frames(window_s, trace.fps);
  w += w % 2;
  if (n < w) throw DataError("CHROM: trace shorter than one window");
  const std::size_t hop = w / 2;
  const auto sos = dsp::butter_bandpass_sos(trace.fps, band, 2);
  const auto win = hann_periodic(w);
  dsp::Wave out(n, 0.0);
  std::vector<double> xs(w), ys(w);
  for (std::size_t m = 0; m + w <= n; m += hop) {
    const double mr = mean_of(trace.r.data() + m, w);
    const double mg = mean_of(trace.g.data() + m, w);
    const double mb = mean_of(trace.b.data() + m, w);
    if (mr == 0.0 || mg == 0.0 || mb == 0.0) continue;
    for (std::size_t i = 0; i < w; ++i) {
      const double rn = trace.r[m + i] / mr, gn = trace.g[m + i] / mg, bn = trace.b[m + i] / mb;
      xs[i] = 3.0 * rn - 2.0 * gn;
      ys[i] = 1.5 * rn + gn - 1.5 * bn;
    }
    const auto xf = dsp::filtfilt(sos, xs, dsp::default_padlen(2));
    const auto yf = dsp::filtfilt(sos, ys, dsp::default_padlen(2));
    const double sy = dsp::stddev(yf);
    const double alpha = sy > 0.0 ? dsp::stddev(xf) / sy : 0.0;
    for (std::size_t i = 0; i < w; ++i) out[m + i] += (xf[i] - alpha * yf[i]) * win[i];
  }
  return out;
}

}  // namespace pulsekit::unsup
