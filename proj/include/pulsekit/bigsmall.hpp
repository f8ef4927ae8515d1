#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pulsekit/shift.hpp"
#include "pulsekit/tensor.hpp"

namespace pulsekit::model {

struct ModelSpec {
  std::vector<std::size_t> big_depths{32, 32, 32, 64, 64, 64};
  std::vector<std::size_t> big_pools{2, 2, 4};  // after every second Big conv
  std::vector<std::size_t> small_depths{32, 32, 32, 64};
  std::size_t kernel = 3;
  std::size_t in_channels = 3;
  std::size_t big_size = 144;
  std::size_t small_size = 9;
  std::size_t n = 3;  // Small-branch frames per chunk
  std::size_t m = 3;  // Big reduction factor
  std::size_t au_count = 12;
  std::size_t hidden = 128;
  bool use_big = true;
  bool use_small = true;
  bool au_head = true;
  bool ppg_head = true;
  bool resp_head = true;
  shift::Variant shift_variant = shift::Variant::wtsm_wrap;
  shift::Fraction fold_fraction{1, 3};
  double dropout = 0.25;

  /// 8x8 Big / 4x4 Small inputs, depth-2 convs, hidden 4.
  static ModelSpec toy();

  std::size_t n_big() const { return (n + m - 1) / m; }
  std::size_t big_out_size() const;
  std::size_t feature_channels() const;
  std::size_t feature_size() const;  // channels * small_size^2
  shift::ShiftSpec shift_spec() const;
  void validate() const;
};

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

template <typename T>
struct BasicParam {
  std::string name;
  nn::BasicVar<T> var;
};

/// Learnable tensors in a fixed order with stable names.
template <typename T>
struct BasicModelState {
  ModelSpec spec;
  std::vector<BasicParam<T>> params;
  std::uint64_t seed = 0;
  bool training = false;

  nn::BasicVar<T>& get(const std::string& name) {
    for (auto& p : params) {
      if (p.name == name) return p.var;
    }
    throw InvalidArgument("no parameter named " + name);
  }
  const nn::BasicVar<T>& get(const std::string& name) const {
    return const_cast<BasicModelState*>(this)->get(name);
  }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.var.value().size();
    return n;
  }
  void zero_grad() {
    for (auto& p : params) p.var.zero_grad();
  }
  /// Deep copy with converted scalars; the copy owns fresh leaves.
  template <typename U>
  BasicModelState<U> cast() const {
    BasicModelState<U> out;
    out.spec = spec;
    out.seed = seed;
    out.training = training;
    for (const auto& p : params) out.params.push_back({p.name, nn::BasicVar<U>(p.var.value().template cast<U>(), true)});
    return out;
  }
  /// Deep copy (fresh leaves, same values).
  BasicModelState clone() const { return cast<T>(); }
};

using Param = BasicParam<float>;
using ModelState = BasicModelState<float>;
using ModelStateD = BasicModelState<double>;

/// Xavier-uniform weights, zero biases.
ModelState init_model(const ModelSpec& spec, std::uint64_t seed);

template <typename T>
struct BasicOutputs {
  nn::BasicVar<T> au_logits;       // [N,A]
  nn::BasicVar<T> ppg;             // [N]
  nn::BasicVar<T> resp;            // [N]
  nn::BasicVar<T> big_features;    // [N_big,C,s,s] (empty when the Big branch is off)
  nn::BasicVar<T> small_features;  // [N,C,s,s]
};
using Outputs = BasicOutputs<float>;

/// big: [N_big,3,S,S], small: [N,3,s,s]. Dropout masks derive from
/// dropout_seed and are used only when state.training is set.
template <typename T>
BasicOutputs<T> forward(nn::BasicTape<T>& tape, const BasicModelState<T>& state, const nn::BasicTensor<T>& big,
                        const nn::BasicTensor<T>& small, std::uint64_t dropout_seed = 0);

/// Closed-form parameter count.
std::uint64_t count_params(const ModelSpec& spec);

struct FlopReport {
  std::uint64_t big_conv = 0;    // per Big frame
  std::uint64_t small_conv = 0;  // per Small frame
  std::uint64_t heads = 0;       // per Small frame
  std::uint64_t shift = 0;       // always 0
  double per_frame = 0.0;        // big_conv / M + small_conv + heads
};

/// Per-frame multiply-accumulates.
FlopReport count_flops(const ModelSpec& spec);

struct FlopRatio {
  shift::Fraction conv_ratio;     // Big conv MACs / Small conv MACs
  shift::Fraction approximation;  // (H_big W_big) / (H_small W_small)
};
FlopRatio branch_flop_ratio(const ModelSpec& spec);

/// manifest.json (spec, seed, parameter table with hashes) + one PKT1 per
/// parameter.
void save_checkpoint(const ModelState& state, const std::filesystem::path& dir);
ModelState load_checkpoint(const std::filesystem::path& dir);

}  // namespace pulsekit::model
