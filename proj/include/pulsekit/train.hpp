#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"
#include "pulsekit/bigsmall.hpp"
#include "pulsekit/pipeline.hpp"

namespace pulsekit::train {

struct TrainConfig {
  double lr = 0.001;
  std::size_t epochs = 5;
  std::size_t batch_size = 16;  // chunks per optimizer step
  double w_au = 1.0;
  double w_ppg = 1.0;
  double w_resp = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> au_pos_weights;  // empty: derived from the training chunks
  double au_weight_cap = 20.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Unknown keys are rejected.
TrainConfig config_from_json(const nlohmann::json& j);

/// w_a = #neg_a / #pos_a over all chunk frames, capped; cap when #pos_a = 0.
std::vector<double> au_pos_weights(const std::vector<pipeline::Chunk>& chunks, std::size_t au_count, double cap = 20.0);

/// Label tensors of one chunk in the scalar type T.
template <typename T>
struct Targets {
  nn::BasicTensor<T> au;    // [N,A] (empty when the chunk has no AU track)
  nn::BasicTensor<T> ppg;   // [N]
  nn::BasicTensor<T> resp;  // [N]
};
template <typename T>
Targets<T> targets(const pipeline::Chunk& c);

template <typename T>
struct LossParts {
  nn::BasicVar<T> total;
  double au = 0.0, ppg = 0.0, resp = 0.0;  // unweighted components
};

/// w_au WBCE(au) + w_ppg MSE(ppg) + w_resp MSE(resp). Tasks whose head is off
/// or whose label is missing are skipped. Throws NumericError naming the task
/// on a non-finite component.
template <typename T>
LossParts<T> total_loss(nn::BasicTape<T>& tape, const model::BasicOutputs<T>& out, const Targets<T>& tgt,
                        const model::ModelSpec& spec, const TrainConfig& cfg, std::span<const double> pos_weights);

struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::uint64_t t = 0;
};
AdamState make_adam(const model::ModelState& state);

/// One bias-corrected Adam update from the accumulated parameter gradients.
/// Parameters without a gradient are treated as having a zero gradient.
void adam_step(model::ModelState& state, AdamState& adam, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

struct StepLog {
  std::size_t epoch = 0;  // 1-based
  std::size_t step = 0;   // 1-based within the run
  double total = 0.0, au = 0.0, ppg = 0.0, resp = 0.0;  // batch means
};

struct EpochLog {
  std::size_t epoch = 0;
  double total = 0.0, au = 0.0, ppg = 0.0, resp = 0.0;  // chunk means over the epoch
};

struct TrainResult {
  model::ModelState state;
  std::vector<StepLog> steps;
  std::vector<EpochLog> epochs;
};

/// Called after every epoch with the 1-based epoch number.
using EpochHook = std::function<void(std::size_t, const model::ModelState&, const EpochLog&)>;

/// Sequential minibatch training from a seeded initialization. Chunk order is
/// reshuffled each epoch from a seeded stream; dropout masks derive from
/// (seed, epoch, position).
TrainResult train(const std::vector<pipeline::Chunk>& chunks, const model::ModelSpec& spec, const TrainConfig& cfg,
                  const EpochHook& hook = {});

/// Same loop starting from a given state.
TrainResult train_from(model::ModelState state, const std::vector<pipeline::Chunk>& chunks, const TrainConfig& cfg,
                       const EpochHook& hook = {});

/// Eval-mode forward of one chunk.
model::Outputs predict(const model::ModelState& state, const pipeline::Chunk& c);

/// Returned for an angle involving a zero gradient.
constexpr double kUndefinedAngle = -1.0;

/// arccos of the cosine similarity, in degrees.
double angle_degrees(std::span<const double> a, std::span<const double> b);

/// Parameters outside the task heads.
bool is_shared_param(const std::string& name);

enum class Task { au = 0, ppg = 1, resp = 2 };

/// Gradient of one task's loss summed over the chunks, flattened over the
/// shared parameters (eval-mode forward).
std::vector<double> task_gradient(const model::ModelState& state, const std::vector<pipeline::Chunk>& chunks, Task task,
                                  std::span<const double> pos_weights);

/// 3x3 angles in degrees, order (AU, PPG, Resp); diagonal 0.
std::array<std::array<double, 3>, 3> task_gradient_angles(const model::ModelState& state,
                                                          const std::vector<pipeline::Chunk>& chunks,
                                                          std::span<const double> pos_weights);

}  // namespace pulsekit::train
