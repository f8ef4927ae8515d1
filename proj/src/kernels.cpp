#include "kernels.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <memory>

#include <Eigen/Core>

namespace pulsekit::nn::kernels {
namespace {

template <typename T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMajor<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMajor<T>>;

}  // namespace

template <typename T>
T* scratch(std::size_t slot, std::size_t count) {
  struct Buf {
    std::unique_ptr<T[]> data;
    std::size_t size = 0;
  };
  thread_local std::array<Buf, 4> bufs;
  Buf& b = bufs.at(slot);
  if (b.size < count) {
    b.data.reset(new T[count]);
    b.size = count;
  }
  return b.data.get();
}

template <typename T>
void tanh_inplace(const T* x, T* y, std::size_t n) {
  const auto in = static_cast<Eigen::Index>(n);
  Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(y, in) = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(x, in).tanh();
}

template <typename T>
void gemm_nn(std::size_t m, std::size_t k, std::size_t p, const T* a, const T* b, T* c,
             const T* row_init) {
  const auto im = static_cast<Eigen::Index>(m);
  const auto ik = static_cast<Eigen::Index>(k);
  const auto ip = static_cast<Eigen::Index>(p);
  MutMap<T> out(c, im, ip);
  out.noalias() = ConstMap<T>(a, im, ik) * ConstMap<T>(b, ik, ip);
  if (row_init) {
    for (Eigen::Index i = 0; i < im; ++i) out.row(i).array() += row_init[i];
  }
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t k, std::size_t p, const T* a, const T* b, T* c) {
  const auto im = static_cast<Eigen::Index>(m);
  const auto ik = static_cast<Eigen::Index>(k);
  const auto ip = static_cast<Eigen::Index>(p);
  MutMap<T>(c, ik, ip).noalias() = ConstMap<T>(a, im, ik).transpose() * ConstMap<T>(b, im, ip);
}

template <typename T>
void gemm_nt_acc(std::size_t m, std::size_t k, std::size_t p, const T* a, const T* b, T* c) {
  const auto im = static_cast<Eigen::Index>(m);
  const auto ik = static_cast<Eigen::Index>(k);
  const auto ip = static_cast<Eigen::Index>(p);
  MutMap<T>(c, im, ik).noalias() += ConstMap<T>(a, im, ip) * ConstMap<T>(b, ik, ip).transpose();
}

template <typename T>
void im2col(const T* img, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
            T* col) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t plane = h * w;
  const auto sh = static_cast<std::ptrdiff_t>(h);
  const auto sw = static_cast<std::ptrdiff_t>(w);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    const T* src = img + ch * plane;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* dst = col + ((ch * k + ky) * k + kx) * plane;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x_hi = std::min<std::ptrdiff_t>(sw, sw - dx);
        for (std::ptrdiff_t y = 0; y < sh; ++y) {
          T* row = dst + y * sw;
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= sh || x_lo >= x_hi) {
            std::fill(row, row + sw, T{0});
            continue;
          }
          std::fill(row, row + x_lo, T{0});
          std::memcpy(row + x_lo, src + sy * sw + x_lo + dx,
                      static_cast<std::size_t>(x_hi - x_lo) * sizeof(T));
          std::fill(row + x_hi, row + sw, T{0});
        }
      }
    }
  }
}

template <typename T>
void col2im_acc(const T* col, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
                T* img) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t plane = h * w;
  const auto sh = static_cast<std::ptrdiff_t>(h);
  const auto sw = static_cast<std::ptrdiff_t>(w);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    T* dst = img + ch * plane;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* src = col + ((ch * k + ky) * k + kx) * plane;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x_hi = std::min<std::ptrdiff_t>(sw, sw - dx);
        for (std::ptrdiff_t y = 0; y < sh; ++y) {
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= sh) continue;
          const T* row = src + y * sw;
          T* out = dst + sy * sw + dx;
          for (std::ptrdiff_t x = x_lo; x < x_hi; ++x) out[x] += row[x];
        }
      }
    }
  }
}

template float* scratch<float>(std::size_t, std::size_t);
template double* scratch<double>(std::size_t, std::size_t);
template void tanh_inplace<float>(const float*, float*, std::size_t);
template void tanh_inplace<double>(const double*, double*, std::size_t);
template void gemm_nn<float>(std::size_t, std::size_t, std::size_t, const float*, const float*,
                             float*, const float*);
template void gemm_nn<double>(std::size_t, std::size_t, std::size_t, const double*, const double*,
                              double*, const double*);
template void gemm_tn<float>(std::size_t, std::size_t, std::size_t, const float*, const float*,
                             float*);
template void gemm_tn<double>(std::size_t, std::size_t, std::size_t, const double*, const double*,
                              double*);
template void gemm_nt_acc<float>(std::size_t, std::size_t, std::size_t, const float*, const float*,
                                 float*);
template void gemm_nt_acc<double>(std::size_t, std::size_t, std::size_t, const double*,
                                  const double*, double*);
template void im2col<float>(const float*, std::size_t, std::size_t, std::size_t, std::size_t,
                            float*);
template void im2col<double>(const double*, std::size_t, std::size_t, std::size_t, std::size_t,
                             double*);
template void col2im_acc<float>(const float*, std::size_t, std::size_t, std::size_t, std::size_t,
                                float*);
template void col2im_acc<double>(const double*, std::size_t, std::size_t, std::size_t,
                                 std::size_t, double*);

}  // namespace pulsekit::nn::kernels
