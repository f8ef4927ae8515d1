#pragma once

#include <cstdint>
#include <span>

#include "pulsekit/tensor.hpp"

// Differentiable primitives. Every op takes the tape first; when the tape is
// not recording (or no input requires a gradient) nothing is saved.
namespace pulsekit::nn {

/// Same-padded cross-correlation. input [N,Cin,H,W], weight [Cout,Cin,k,k]
/// with odd k, bias [Cout] -> [N,Cout,H,W].
template <typename T>
BasicVar<T> conv2d(BasicTape<T>& tape, const BasicVar<T>& input, const BasicVar<T>& weight,
                   const BasicVar<T>& bias);

/// Non-overlapping p x p mean over the last two dims of [N,C,H,W].
template <typename T>
BasicVar<T> avgpool2d(BasicTape<T>& tape, const BasicVar<T>& input, std::size_t pool);

/// input [N,D] . weight [D,K] + bias [K] -> [N,K]
template <typename T>
BasicVar<T> dense(BasicTape<T>& tape, const BasicVar<T>& input, const BasicVar<T>& weight,
                  const BasicVar<T>& bias);

template <typename T>
BasicVar<T> tanh(BasicTape<T>& tape, const BasicVar<T>& x);

template <typename T>
BasicVar<T> sigmoid(BasicTape<T>& tape, const BasicVar<T>& x);

/// Inverted dropout. Survivors are scaled by 1/(1-rate); the mask is a pure
/// function of `seed`. Identity when `training` is false.
template <typename T>
BasicVar<T> dropout(BasicTape<T>& tape, const BasicVar<T>& x, double rate, bool training,
                    std::uint64_t seed);

template <typename T>
BasicVar<T> add(BasicTape<T>& tape, const BasicVar<T>& a, const BasicVar<T>& b);

template <typename T>
BasicVar<T> mul(BasicTape<T>& tape, const BasicVar<T>& a, const BasicVar<T>& b);

template <typename T>
BasicVar<T> scale(BasicTape<T>& tape, const BasicVar<T>& x, T factor);

template <typename T>
BasicVar<T> reshape(BasicTape<T>& tape, const BasicVar<T>& x, Shape shape);

/// [N, ...] -> [N, prod(...)]
template <typename T>
BasicVar<T> flatten(BasicTape<T>& tape, const BasicVar<T>& x);

/// Concatenate two [N,C?,H,W] tensors along the channel axis.
template <typename T>
BasicVar<T> concat_channels(BasicTape<T>& tape, const BasicVar<T>& a, const BasicVar<T>& b);

/// Nearest temporal upsampling along dim 0: out[t] = x[t / factor], t < frames.
template <typename T>
BasicVar<T> repeat_frames(BasicTape<T>& tape, const BasicVar<T>& x, std::size_t factor,
                          std::size_t frames);

/// mean((pred - target)^2), accumulated in 64 bits.
template <typename T>
BasicVar<T> mse_loss(BasicTape<T>& tape, const BasicVar<T>& pred, const BasicTensor<T>& target);

/// Mean over all [N,A] elements of
///   w_a * y * softplus(-z) + (1 - y) * softplus(z)
/// i.e. binary cross entropy on logits with per-label positive weights.
template <typename T>
BasicVar<T> weighted_bce_loss(BasicTape<T>& tape, const BasicVar<T>& logits,
                              const BasicTensor<T>& targets, std::span<const double> pos_weights);

}  // namespace pulsekit::nn
