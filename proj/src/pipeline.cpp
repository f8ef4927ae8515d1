#include "pulsekit/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "pulsekit/error.hpp"

namespace pulsekit::pipeline {

using nn::Shape;
using nn::Tensor;

void VideoClip::validate() const {
  if (!(fps > 0.0)) throw DataError("clip fps must be positive");
  if (frames.rank() != 4 || frames.dim(1) != 3) {
    throw DataError("clip frames must be [T,3,H,W], got " + nn::shape_str(frames.shape()));
  }
  const std::size_t t = length();
  if (!ppg.empty() && ppg.size() != t) throw DataError("ppg track length differs from frame count");
  if (!resp.empty() && resp.size() != t) throw DataError("resp track length differs from frame count");
  if (!au.empty() && au.size() != t * au_count) throw DataError("AU track length differs from frame count");
}

namespace {

void require_frames(const Tensor& frames, const char* op) {
  if (frames.rank() != 4) {
    throw ShapeError(std::string(op) + ": expected [T,C,H,W], got " + nn::shape_str(frames.shape()));
  }
}

// Row i holds the area weights of source pixels for output pixel i.
std::vector<double> box_weights(std::size_t src, std::size_t dst) {
  std::vector<double> w(dst * src, 0.0);
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (std::size_t i = 0; i < dst; ++i) {
    const double lo = static_cast<double>(i) * scale;
    const double hi = static_cast<double>(i + 1) * scale;
    const auto j0 = static_cast<std::size_t>(std::floor(lo));
    const auto j1 = std::min(src, static_cast<std::size_t>(std::ceil(hi)));
    for (std::size_t j = j0; j < j1; ++j) {
      const double overlap = std::min(hi, static_cast<double>(j + 1)) - std::max(lo, static_cast<double>(j));
      if (overlap > 0.0) w[i * src + j] = overlap / scale;
    }
  }
  return w;
}

}  // namespace

Tensor center_crop_square(const Tensor& frames) {
  require_frames(frames, "center_crop_square");
  const std::size_t t = frames.dim(0), c = frames.dim(1), h = frames.dim(2), w = frames.dim(3);
  if (h == w) return frames;
  const std::size_t s = std::min(h, w);
  const std::size_t y0 = (h - s) / 2, x0 = (w - s) / 2;
  Tensor out({t, c, s, s});
  for (std::size_t p = 0; p < t * c; ++p) {
    const float* src = frames.ptr() + p * h * w;
    float* dst = out.ptr() + p * s * s;
    for (std::size_t y = 0; y < s; ++y) std::copy_n(src + (y0 + y) * w + x0, s, dst + y * s);
  }
  return out;
}

Tensor resize(const Tensor& frames, std::size_t size) {
  require_frames(frames, "resize");
  const std::size_t t = frames.dim(0), c = frames.dim(1), h = frames.dim(2), w = frames.dim(3);
  if (h != w) throw ShapeError("resize: frames must be square, got " + nn::shape_str(frames.shape()));
  if (size == 0 || size > h) {
    throw InvalidArgument("resize: target " + std::to_string(size) + " must be in [1, " + std::to_string(h) + "]");
  }
  if (size == h) return frames;
  const auto wt = box_weights(h, size);
  Tensor out({t, c, size, size});
  std::vector<double> tmp(h * size);
  for (std::size_t p = 0; p < t * c; ++p) {
    const float* src = frames.ptr() + p * h * w;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t i = 0; i < size; ++i) {
        double acc = 0.0;
        const double* wr = wt.data() + i * h;
        for (std::size_t j = 0; j < h; ++j) acc += wr[j] * src[y * w + j];
        tmp[y * size + i] = acc;
      }
    }
    float* dst = out.ptr() + p * size * size;
    for (std::size_t i2 = 0; i2 < size; ++i2) {
      const double* wr = wt.data() + i2 * h;
      for (std::size_t i = 0; i < size; ++i) {
        double acc = 0.0;
        for (std::size_t y = 0; y < h; ++y) acc += wr[y] * tmp[y * size + i];
        dst[i2 * size + i] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

namespace {

std::pair<double, double> moments(const Tensor& x) {
  double s = 0.0;
  for (float v : x.data()) s += v;
  const double m = s / static_cast<double>(x.size());
  double ss = 0.0;
  for (float v : x.data()) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / static_cast<double>(x.size()))};
}

Tensor apply_standardize(const Tensor& x, double m, double sd) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>((x[i] - m) / sd);
  return out;
}

}  // namespace

Tensor standardize(const Tensor& frames) {
  if (frames.empty()) throw DataError("standardize: empty clip");
  const auto [m, sd] = moments(frames);
  if (!(sd > 0.0)) throw DegenerateClipError("clip is constant (std = 0); cannot standardize");
  return apply_standardize(frames, m, sd);
}

Tensor diff_ratio(const Tensor& frames) {
  if (frames.rank() < 1 || frames.dim(0) < 2) throw DataError("diff_normalize needs at least 2 frames");
  const std::size_t t = frames.dim(0), inner = frames.size() / t;
  Shape shape = frames.shape();
  shape[0] = t - 1;
  Tensor out(shape);
  for (std::size_t n = 0; n + 1 < t; ++n) {
    const float* a = frames.ptr() + n * inner;
    const float* b = a + inner;
    float* d = out.ptr() + n * inner;
    for (std::size_t i = 0; i < inner; ++i) {
      const float den = b[i] + a[i];
      d[i] = std::fabs(den) < 1e-8f ? 0.0f : (b[i] - a[i]) / den;
    }
  }
  return out;
}

Tensor diff_normalize(const Tensor& frames) {
  Tensor d = diff_ratio(frames);
  const auto [m, sd] = moments(d);
  if (!(sd > 0.0)) return Tensor(d.shape());
  return apply_standardize(d, m, sd);
}

dsp::Wave diff_ratio(std::span<const double> x) {
  if (x.size() < 2) return {};
  dsp::Wave d(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double den = x[i + 1] + x[i];
    d[i] = std::fabs(den) < 1e-8 ? 0.0 : (x[i + 1] - x[i]) / den;
  }
  return d;
}

dsp::Wave diff_normalize(std::span<const double> x) {
  dsp::Wave d = diff_ratio(x);
  const double m = dsp::mean(d), sd = dsp::stddev(d);
  for (double& v : d) v = sd > 0.0 ? (v - m) / sd : 0.0;
  return d;
}

std::vector<std::size_t> big_frame_indices(std::size_t k, std::size_t n, std::size_t m) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j * m < n; ++j) idx.push_back(k * n + j * m);
  return idx;
}

std::size_t chunk_count(std::size_t frames, std::size_t n) {
  if (n == 0) throw InvalidArgument("chunk length N must be >= 1");
  if (frames < n + 1) {
    throw DataError("clip of " + std::to_string(frames) + " frames is shorter than N+1 = " + std::to_string(n + 1));
  }
  return (frames - 1) / n;
}

void PreprocessConfig::validate() const {
  if (n == 0) throw InvalidArgument("N must be >= 1");
  if (m == 0 || m > n) throw InvalidArgument("M must satisfy 1 <= M <= N");
  if (m < n && n % m != 0) throw InvalidArgument("N must be a multiple of M when M < N");
  if (small_size == 0 || big_size < small_size) throw InvalidArgument("invalid view sizes");
}

PreparedLabels prepare_labels(const VideoClip& clip, const PreprocessConfig& cfg) {
  PreparedLabels out;
  if (!clip.ppg.empty()) {
    if (cfg.ppg_label == PpgLabel::pseudo) {
      out.ppg = dsp::diff_standardize(dsp::make_pseudo_ppg(clip, clip.ppg));
    } else {
      out.ppg = dsp::diff_standardize(clip.ppg);
    }
  }
  if (!clip.resp.empty()) out.resp = dsp::diff_standardize(clip.resp);
  return out;
}

std::vector<Chunk> chunk(const Tensor& big, const Tensor& small, const PreparedLabels& labels,
                         const VideoClip& clip, std::size_t n, std::size_t m, std::size_t clip_index) {
  const std::size_t t = clip.length();
  const std::size_t k_count = chunk_count(t, n);
  if (m == 0 || m > n) throw InvalidArgument("M must satisfy 1 <= M <= N");
  if (big.dim(0) != t || small.dim(0) + 1 != t) throw ShapeError("chunk: views disagree with clip length");
  const std::size_t big_inner = big.size() / big.dim(0);
  const std::size_t small_inner = small.size() / small.dim(0);
  const std::size_t n_big = (n + m - 1) / m;
  std::vector<Chunk> chunks;
  chunks.reserve(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    Chunk c;
    c.clip = clip_index;
    c.start = k * n;
    Shape bs = big.shape();
    bs[0] = n_big;
    c.big = Tensor(bs);
    const auto idx = big_frame_indices(k, n, m);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      std::copy_n(big.ptr() + idx[j] * big_inner, big_inner, c.big.ptr() + j * big_inner);
    }
    Shape ss = small.shape();
    ss[0] = n;
    c.small = Tensor(ss);
    std::copy_n(small.ptr() + c.start * small_inner, n * small_inner, c.small.ptr());
    for (std::size_t i = 0; i < n; ++i) {
      if (!labels.ppg.empty()) c.ppg.push_back(static_cast<float>(labels.ppg[c.start + i]));
      if (!labels.resp.empty()) c.resp.push_back(static_cast<float>(labels.resp[c.start + i]));
    }
    if (clip.has_au()) {
      c.au_count = clip.au_count;
      c.au.assign(clip.au.begin() + static_cast<std::ptrdiff_t>(c.start * clip.au_count),
                  clip.au.begin() + static_cast<std::ptrdiff_t>((c.start + n) * clip.au_count));
    }
    chunks.push_back(std::move(c));
  }
  return chunks;
}

std::vector<Chunk> preprocess(const VideoClip& clip, const PreprocessConfig& cfg, std::size_t clip_index) {
  cfg.validate();
  clip.validate();
  chunk_count(clip.length(), cfg.n);
  const Tensor square = center_crop_square(clip.frames);
  const Tensor big = standardize(resize(square, cfg.big_size));
  const Tensor small = diff_normalize(resize(square, cfg.small_size));
  const PreparedLabels labels = prepare_labels(clip, cfg);
  return chunk(big, small, labels, clip, cfg.n, cfg.m, clip_index);
}

}  // namespace pulsekit::pipeline
