#include "pulsekit/ops.hpp"

#include <cmath>
#include <random>

#include "kernels.hpp"
#include "pulsekit/random.hpp"

namespace pulsekit::nn {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

void require(bool ok, const std::string& op, const std::string& what) {
  if (!ok) throw ShapeError(op + ": " + what);
}

template <typename T>
void require_rank(const BasicVar<T>& v, std::size_t rank, const std::string& op,
                  const std::string& name) {
  require(v.value().rank() == rank, op,
          name + " must have rank " + std::to_string(rank) + ", got " + shape_str(v.shape()));
}

template <typename T>
BasicVar<T> make_output(BasicTape<T>& tape, BasicTensor<T> value,
                        std::initializer_list<const BasicVar<T>*> inputs) {
  return BasicVar<T>(std::move(value), tape.tracks(inputs));
}

template <typename T>
T softplus(T x) {
  // log(1 + e^x) without overflow
  return x > T{0} ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename T>
T logistic(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

}  // namespace

template <typename T>
BasicVar<T> conv2d(BasicTape<T>& tape, const BasicVar<T>& input, const BasicVar<T>& weight,
                   const BasicVar<T>& bias) {
  const std::string op = "conv2d";
  require_rank(input, 4, op, "input");
  require_rank(weight, 4, op, "weight");
  require_rank(bias, 1, op, "bias");
  const std::size_t n = input.shape()[0], cin = input.shape()[1];
  const std::size_t h = input.shape()[2], w = input.shape()[3];
  const std::size_t cout = weight.shape()[0], k = weight.shape()[2];
  require(weight.shape()[1] == cin, op,
          "weight in-channels (dim 1) " + std::to_string(weight.shape()[1]) +
              " != input channels (dim 1) " + std::to_string(cin));
  require(weight.shape()[3] == k, op, "kernel must be square (weight dims 2 and 3)");
  require(k % 2 == 1, op, "kernel size (weight dim 2) must be odd");
  require(bias.shape()[0] == cout, op,
          "bias length (dim 0) " + std::to_string(bias.shape()[0]) + " != out-channels " +
              std::to_string(cout));

  const std::size_t plane = h * w, rows = cin * k * k;
  BasicTensor<T> out({n, cout, h, w});
  T* col = kernels::scratch<T>(0, rows * plane);
  for (std::size_t s = 0; s < n; ++s) {
    kernels::im2col(input.value().ptr() + s * cin * plane, cin, h, w, k, col);
    kernels::gemm_nn(cout, rows, plane, weight.value().ptr(), col,
                     out.ptr() + s * cout * plane, bias.value().ptr());
  }
  auto result = make_output(tape, std::move(out), {&input, &weight, &bias});
  if (!result.requires_grad()) return result;

  tape.record([x = input, wt = weight, b = bias, y = result, n, cin, cout, h, w, k]() mutable {
    if (!y.has_grad()) return;
    const std::size_t plane = h * w, rows = cin * k * k;
    const T* dy = y.grad().ptr();
    T* col = kernels::scratch<T>(0, rows * plane);
    T* dcol = x.requires_grad() ? kernels::scratch<T>(1, rows * plane) : nullptr;
    T* dw = wt.requires_grad() ? wt.grad_buffer().ptr() : nullptr;
    T* dx = x.requires_grad() ? x.grad_buffer().ptr() : nullptr;
    for (std::size_t s = 0; s < n; ++s) {
      const T* dys = dy + s * cout * plane;
      if (dw) {
        kernels::im2col(x.value().ptr() + s * cin * plane, cin, h, w, k, col);
        kernels::gemm_nt_acc(cout, rows, plane, dys, col, dw);
      }
      if (dx) {
        kernels::gemm_tn(cout, rows, plane, wt.value().ptr(), dys, dcol);
        kernels::col2im_acc(dcol, cin, h, w, k, dx + s * cin * plane);
      }
    }
    if (b.requires_grad()) {
      T* db = b.grad_buffer().ptr();
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t c = 0; c < cout; ++c) {
          const T* row = dy + (s * cout + c) * plane;
          T acc = T{0};
          for (std::size_t p = 0; p < plane; ++p) acc += row[p];
          db[c] += acc;
        }
      }
    }
  });
  return result;
}

template <typename T>
BasicVar<T> avgpool2d(BasicTape<T>& tape, const BasicVar<T>& input, std::size_t pool) {
  const std::string op = "avgpool2d";
  require_rank(input, 4, op, "input");
  require(pool >= 1, op, "pool size must be positive");
  const auto& s = input.shape();
  const std::size_t n = s[0], c = s[1], h = s[2], w = s[3];
  require(h % pool == 0, op,
          "height (dim 2) " + std::to_string(h) + " not divisible by pool " + std::to_string(pool));
  require(w % pool == 0, op,
          "width (dim 3) " + std::to_string(w) + " not divisible by pool " + std::to_string(pool));
  const std::size_t oh = h / pool, ow = w / pool;
  const T inv = T{1} / static_cast<T>(pool * pool);
  BasicTensor<T> out({n, c, oh, ow});
  const T* src = input.value().ptr();
  T* dst = out.ptr();
  for (std::size_t pl = 0; pl < n * c; ++pl) {
    const T* sp = src + pl * h * w;
    T* dp = dst + pl * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        T acc = T{0};
        for (std::size_t dy = 0; dy < pool; ++dy) {
          const T* row = sp + (oy * pool + dy) * w + ox * pool;
          for (std::size_t dx = 0; dx < pool; ++dx) acc += row[dx];
        }
        dp[oy * ow + ox] = acc * inv;
      }
    }
  }
  auto result = make_output(tape, std::move(out), {&input});
  if (!result.requires_grad()) return result;
  tape.record([x = input, y = result, n, c, h, w, pool, inv]() mutable {
    if (!y.has_grad()) return;
    const std::size_t oh = h / pool, ow = w / pool;
    T* dx = x.grad_buffer().ptr();
    const T* dy = y.grad().ptr();
    for (std::size_t pl = 0; pl < n * c; ++pl) {
      for (std::size_t yy = 0; yy < h; ++yy) {
        const T* grow = dy + pl * oh * ow + (yy / pool) * ow;
        T* drow = dx + pl * h * w + yy * w;
        for (std::size_t xx = 0; xx < w; ++xx) drow[xx] += grow[xx / pool] * inv;
      }
    }
  });
  return result;
}

template <typename T>
BasicVar<T> dense(BasicTape<T>& tape, const BasicVar<T>& input, const BasicVar<T>& weight,
                  const BasicVar<T>& bias) {
  const std::string op = "dense";
  require_rank(input, 2, op, "input");
  require_rank(weight, 2, op, "weight");
  require_rank(bias, 1, op, "bias");
  const std::size_t n = input.shape()[0], d = input.shape()[1], k = weight.shape()[1];
  require(weight.shape()[0] == d, op,
          "inner dimension mismatch: input dim 1 is " + std::to_string(d) + ", weight dim 0 is " +
              std::to_string(weight.shape()[0]));
  require(bias.shape()[0] == k, op,
          "bias length " + std::to_string(bias.shape()[0]) + " != weight dim 1 " +
              std::to_string(k));

  BasicTensor<T> out({n, k});
  const T* x = input.value().ptr();
  const T* wt = weight.value().ptr();
  const T* b = bias.value().ptr();
  for (std::size_t i = 0; i < n; ++i) {
    T* row = out.ptr() + i * k;
    for (std::size_t j = 0; j < d; ++j) {
      const T xv = x[i * d + j];
      const T* wrow = wt + j * k;
      for (std::size_t o = 0; o < k; ++o) row[o] += xv * wrow[o];
    }
    for (std::size_t o = 0; o < k; ++o) row[o] += b[o];
  }
  auto result = make_output(tape, std::move(out), {&input, &weight, &bias});
  if (!result.requires_grad()) return result;
  tape.record([xin = input, wv = weight, bv = bias, y = result, n, d, k]() mutable {
    if (!y.has_grad()) return;
    const T* dy = y.grad().ptr();
    if (xin.requires_grad()) {
      T* dx = xin.grad_buffer().ptr();
      const T* wt = wv.value().ptr();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          const T* wrow = wt + j * k;
          T acc = T{0};
          for (std::size_t o = 0; o < k; ++o) acc += dy[i * k + o] * wrow[o];
          dx[i * d + j] += acc;
        }
      }
    }
    if (wv.requires_grad()) {
      T* dw = wv.grad_buffer().ptr();
      const T* x = xin.value().ptr();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          const T xv = x[i * d + j];
          T* drow = dw + j * k;
          for (std::size_t o = 0; o < k; ++o) drow[o] += xv * dy[i * k + o];
        }
      }
    }
    if (bv.requires_grad()) {
      T* db = bv.grad_buffer().ptr();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < k; ++o) db[o] += dy[i * k + o];
      }
    }
  });
  return result;
}

template <typename T>
BasicVar<T> tanh(BasicTape<T>& tape, const BasicVar<T>& x) {
  BasicTensor<T> out(x.shape());
  kernels::tanh_inplace(x.value().ptr(), out.ptr(), out.size());
  auto result = make_output(tape, std::move(out), {&x});
  if (!result.requires_grad()) return result;
  tape.record([xin = x, y = result]() mutable {
    if (!y.has_grad()) return;
    T* dx = xin.grad_buffer().ptr();
    const T* dy = y.grad().ptr();
    const T* v = y.value().ptr();
    for (std::size_t i = 0; i < y.value().size(); ++i) dx[i] += dy[i] * (T{1} - v[i] * v[i]);
  });
  return result;
}

template <typename T>
BasicVar<T> sigmoid(BasicTape<T>& tape, const BasicVar<T>& x) {
  BasicTensor<T> out(x.shape());
  const T* src = x.value().ptr();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = logistic(src[i]);
  auto result = make_output(tape, std::move(out), {&x});
  if (!result.requires_grad()) return result;
  tape.record([xin = x, y = result]() mutable {
    if (!y.has_grad()) return;
    T* dx = xin.grad_buffer().ptr();
    const T* dy = y.grad().ptr();
    const T* v = y.value().ptr();
    for (std::size_t i = 0; i < y.value().size(); ++i) dx[i] += dy[i] * v[i] * (T{1} - v[i]);
  });
  return result;
}

template <typename T>
BasicVar<T> dropout(BasicTape<T>& tape, const BasicVar<T>& x, double rate, bool training,
                    std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0) throw InvalidArgument("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  std::mt19937_64 gen(seed);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.value().size());
  for (auto& m : mask) {
    m = rng::uniform01(gen) < rate ? T{0} : keep_scale;
  }
  BasicTensor<T> out(x.shape());
  const T* src = x.value().ptr();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = src[i] * mask[i];
  auto result = make_output(tape, std::move(out), {&x});
  if (!result.requires_grad()) return result;
  tape.record([xin = x, y = result, mask = std::move(mask)]() mutable {
    if (!y.has_grad()) return;
    T* dx = xin.grad_buffer().ptr();
    const T* dy = y.grad().ptr();
    for (std::size_t i = 0; i < mask.size(); ++i) dx[i] += dy[i] * mask[i];
  });
  return result;
}

template <typename T>
BasicVar<T> add(BasicTape<T>& tape, const BasicVar<T>& a, const BasicVar<T>& b) {
  require(a.shape() == b.shape(), "add",
          "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  auto result = make_output(tape, std::move(out), {&a, &b});
  if (!result.requires_grad()) return result;
  tape.record([a = a, b = b, y = result]() mutable {
    if (!y.has_grad()) return;
    const auto& dy = y.grad();
    for (BasicVar<T>* v : {&a, &b}) {
      if (!v->requires_grad()) continue;
      auto& g = v->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i];
    }
  });
  return result;
}

template <typename T>
BasicVar<T> mul(BasicTape<T>& tape, const BasicVar<T>& a, const BasicVar<T>& b) {
  require(a.shape() == b.shape(), "mul",
          "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  auto result = make_output(tape, std::move(out), {&a, &b});
  if (!result.requires_grad()) return result;
  tape.record([a = a, b = b, y = result]() mutable {
    if (!y.has_grad()) return;
    const auto& dy = y.grad();
    if (a.requires_grad()) {
      auto& g = a.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i] * b.value()[i];
    }
    if (b.requires_grad()) {
      auto& g = b.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i] * a.value()[i];
    }
  });
  return result;
}

template <typename T>
BasicVar<T> scale(BasicTape<T>& tape, const BasicVar<T>& x, T factor) {
  BasicTensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * factor;
  auto result = make_output(tape, std::move(out), {&x});
  if (!result.requires_grad()) return result;
  tape.record([xin = x, y = result, factor]() mutable {
    if (!y.has_grad()) return;
    auto& g = xin.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += y.grad()[i] * factor;
  });
  return result;
}

template <typename T>
BasicVar<T> reshape(BasicTape<T>& tape, const BasicVar<T>& x, Shape shape) {
  require(shape_size(shape) == x.value().size(), "reshape",
          "cannot reshape " + shape_str(x.shape()) + " to " + shape_str(shape));
  auto result = make_output(tape, x.value().reshaped(std::move(shape)), {&x});
  if (!result.requires_grad()) return result;
  tape.record([xin = x, y = result]() mutable {
    if (!y.has_grad()) return;
    auto& g = xin.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += y.grad()[i];
  });
  return result;
}

template <typename T>
BasicVar<T> flatten(BasicTape<T>& tape, const BasicVar<T>& x) {
  require(x.value().rank() >= 1, "flatten", "input must have rank >= 1");
  const std::size_t n = x.shape()[0];
  return reshape(tape, x, Shape{n, x.value().size() / n});
}

template <typename T>
BasicVar<T> concat_channels(BasicTape<T>& tape, const BasicVar<T>& a, const BasicVar<T>& b) {
  const std::string op = "concat_channels";
  require(a.value().rank() >= 2 && a.value().rank() == b.value().rank(), op,
          "inputs must share rank >= 2");
  for (std::size_t d = 0; d < a.value().rank(); ++d) {
    if (d == 1) continue;
    require(a.shape()[d] == b.shape()[d], op, "dimension " + std::to_string(d) + " differs");
  }
  const std::size_t n = a.shape()[0];
  const std::size_t inner_a = a.value().size() / n, inner_b = b.value().size() / n;
  Shape shape = a.shape();
  shape[1] += b.shape()[1];
  BasicTensor<T> out(shape);
  for (std::size_t s = 0; s < n; ++s) {
    std::copy_n(a.value().ptr() + s * inner_a, inner_a, out.ptr() + s * (inner_a + inner_b));
    std::copy_n(b.value().ptr() + s * inner_b, inner_b,
                out.ptr() + s * (inner_a + inner_b) + inner_a);
  }
  auto result = make_output(tape, std::move(out), {&a, &b});
  if (!result.requires_grad()) return result;
  tape.record([a = a, b = b, y = result, n, inner_a, inner_b]() mutable {
    if (!y.has_grad()) return;
    const T* dy = y.grad().ptr();
    for (std::size_t s = 0; s < n; ++s) {
      const T* row = dy + s * (inner_a + inner_b);
      if (a.requires_grad()) {
        T* g = a.grad_buffer().ptr() + s * inner_a;
        for (std::size_t i = 0; i < inner_a; ++i) g[i] += row[i];
      }
      if (b.requires_grad()) {
        T* g = b.grad_buffer().ptr() + s * inner_b;
        for (std::size_t i = 0; i < inner_b; ++i) g[i] += row[inner_a + i];
      }
    }
  });
  return result;
}

template <typename T>
BasicVar<T> repeat_frames(BasicTape<T>& tape, const BasicVar<T>& x, std::size_t factor,
                          std::size_t frames) {
  const std::string op = "repeat_frames";
  require(x.value().rank() >= 1, op, "input must have rank >= 1");
  require(factor >= 1, op, "factor must be positive");
  const std::size_t src_frames = x.shape()[0];
  require((frames + factor - 1) / factor == src_frames, op,
          "source frames (dim 0) " + std::to_string(src_frames) + " != ceil(" +
              std::to_string(frames) + "/" + std::to_string(factor) + ")");
  const std::size_t inner = x.value().size() / src_frames;
  Shape shape = x.shape();
  shape[0] = frames;
  BasicTensor<T> out(shape);
  for (std::size_t t = 0; t < frames; ++t) {
    std::copy_n(x.value().ptr() + (t / factor) * inner, inner, out.ptr() + t * inner);
  }
  auto result = make_output(tape, std::move(out), {&x});
  if (!result.requires_grad()) return result;
  tape.record([xin = x, y = result, factor, frames, inner]() mutable {
    if (!y.has_grad()) return;
    T* g = xin.grad_buffer().ptr();
    const T* dy = y.grad().ptr();
    for (std::size_t t = 0; t < frames; ++t) {
      T* dst = g + (t / factor) * inner;
      const T* src = dy + t * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  });
  return result;
}

template <typename T>
BasicVar<T> mse_loss(BasicTape<T>& tape, const BasicVar<T>& pred, const BasicTensor<T>& target) {
  require(pred.shape() == target.shape(), "mse_loss",
          "prediction " + shape_str(pred.shape()) + " vs target " + shape_str(target.shape()));
  const std::size_t n = target.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(pred.value()[i]) - static_cast<double>(target[i]);
    acc += d * d;
  }
  BasicTensor<T> out({1}, static_cast<T>(acc / static_cast<double>(n)));
  auto result = make_output(tape, std::move(out), {&pred});
  if (!result.requires_grad()) return result;
  tape.record([p = pred, target, y = result, n]() mutable {
    if (!y.has_grad()) return;
    const T g = y.grad()[0] * static_cast<T>(2.0 / static_cast<double>(n));
    auto& dp = p.grad_buffer();
    for (std::size_t i = 0; i < n; ++i) dp[i] += g * (p.value()[i] - target[i]);
  });
  return result;
}

template <typename T>
BasicVar<T> weighted_bce_loss(BasicTape<T>& tape, const BasicVar<T>& logits,
                              const BasicTensor<T>& targets, std::span<const double> pos_weights) {
  const std::string op = "weighted_bce_loss";
  require_rank(logits, 2, op, "logits");
  require(logits.shape() == targets.shape(), op,
          "logits " + shape_str(logits.shape()) + " vs targets " + shape_str(targets.shape()));
  const std::size_t n = logits.shape()[0], a = logits.shape()[1];
  if (pos_weights.size() != a) {
    throw InvalidArgument(op + ": " + std::to_string(pos_weights.size()) +
                          " positive weights for " + std::to_string(a) + " labels");
  }
  for (double wv : pos_weights) {
    if (!(wv > 0.0)) throw InvalidArgument(op + ": positive weights must be > 0");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] != T{0} && targets[i] != T{1}) {
      throw InvalidArgument(op + ": targets must be 0 or 1");
    }
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < a; ++j) {
      const double z = static_cast<double>(logits.value()[i * a + j]);
      const double y = static_cast<double>(targets[i * a + j]);
      acc += pos_weights[j] * y * softplus(-z) + (1.0 - y) * softplus(z);
    }
  }
  const double count = static_cast<double>(n * a);
  BasicTensor<T> out({1}, static_cast<T>(acc / count));
  auto result = make_output(tape, std::move(out), {&logits});
  if (!result.requires_grad()) return result;
  std::vector<double> weights(pos_weights.begin(), pos_weights.end());
  tape.record([z = logits, targets, weights, y = result, n, a, count]() mutable {
    if (!y.has_grad()) return;
    const double g = static_cast<double>(y.grad()[0]) / count;
    auto& dz = z.grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < a; ++j) {
        const std::size_t idx = i * a + j;
        const double s = logistic(static_cast<double>(z.value()[idx]));
        const double t = static_cast<double>(targets[idx]);
        dz[idx] += static_cast<T>(g * (-weights[j] * t * (1.0 - s) + (1.0 - t) * s));
      }
    }
  });
  return result;
}

#define PULSEKIT_INSTANTIATE_OPS(T)                                                              \
  template BasicVar<T> conv2d(BasicTape<T>&, const BasicVar<T>&, const BasicVar<T>&,             \
                              const BasicVar<T>&);                                               \
  template BasicVar<T> avgpool2d(BasicTape<T>&, const BasicVar<T>&, std::size_t);                \
  template BasicVar<T> dense(BasicTape<T>&, const BasicVar<T>&, const BasicVar<T>&,              \
                             const BasicVar<T>&);                                                \
  template BasicVar<T> tanh(BasicTape<T>&, const BasicVar<T>&);                                  \
  template BasicVar<T> sigmoid(BasicTape<T>&, const BasicVar<T>&);                               \
  template BasicVar<T> dropout(BasicTape<T>&, const BasicVar<T>&, double, bool, std::uint64_t);  \
  template BasicVar<T> add(BasicTape<T>&, const BasicVar<T>&, const BasicVar<T>&);               \
  template BasicVar<T> mul(BasicTape<T>&, const BasicVar<T>&, const BasicVar<T>&);               \
  template BasicVar<T> scale(BasicTape<T>&, const BasicVar<T>&, T);                              \
  template BasicVar<T> reshape(BasicTape<T>&, const BasicVar<T>&, Shape);                        \
  template BasicVar<T> flatten(BasicTape<T>&, const BasicVar<T>&);                               \
  template BasicVar<T> concat_channels(BasicTape<T>&, const BasicVar<T>&, const BasicVar<T>&);   \
  template BasicVar<T> repeat_frames(BasicTape<T>&, const BasicVar<T>&, std::size_t,             \
                                     std::size_t);                                               \
  template BasicVar<T> mse_loss(BasicTape<T>&, const BasicVar<T>&, const BasicTensor<T>&);       \
  template BasicVar<T> weighted_bce_loss(BasicTape<T>&, const BasicVar<T>&,                      \
                                         const BasicTensor<T>&, std::span<const double>);

PULSEKIT_INSTANTIATE_OPS(float)
PULSEKIT_INSTANTIATE_OPS(double)

#undef PULSEKIT_INSTANTIATE_OPS

}  // namespace pulsekit::nn
