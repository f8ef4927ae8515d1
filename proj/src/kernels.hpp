#pragma once

#include <cstddef>

// Dense inner kernels for conv2d. Matrix products are row-major and
// single-threaded, so results are reproducible run to run.
namespace pulsekit::nn::kernels {

/// C[M,P] = A[M,K] . B[K,P] (+ row_init[i] on row i when non-null).
template <typename T>
void gemm_nn(std::size_t m, std::size_t k, std::size_t p, const T* a, const T* b, T* c,
             const T* row_init);

/// C[K,P] = A[M,K]^T . B[M,P]
template <typename T>
void gemm_tn(std::size_t m, std::size_t k, std::size_t p, const T* a, const T* b, T* c);

/// C[M,K] += A[M,P] . B[K,P]^T
template <typename T>
void gemm_nt_acc(std::size_t m, std::size_t k, std::size_t p, const T* a, const T* b, T* c);

/// Grow-only per-thread buffer; contents are unspecified on return. Distinct
/// slots never alias.
template <typename T>
T* scratch(std::size_t slot, std::size_t count);

/// y = tanh(x) elementwise (vectorised).
template <typename T>
void tanh_inplace(const T* x, T* y, std::size_t n);

/// Unfold one [C,H,W] image into [C*k*k, H*W] columns with zero padding k/2.
template <typename T>
void im2col(const T* img, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
            T* col);

/// Inverse scatter-add of im2col into a [C,H,W] image.
template <typename T>
void col2im_acc(const T* col, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
                T* img);

}  // namespace pulsekit::nn::kernels
