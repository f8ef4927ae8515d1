#include "pulsekit/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pulsekit/error.hpp"
#include "pulsekit/ops.hpp"
#include "pulsekit/random.hpp"

namespace pulsekit::train {

using nlohmann::json;
using pipeline::Chunk;

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("train: lr must be >= 0");
  if (epochs == 0) throw InvalidArgument("train: epochs must be >= 1");
  if (batch_size == 0) throw InvalidArgument("train: batch_size must be >= 1");
  if (!(w_au > 0.0 && w_ppg > 0.0 && w_resp > 0.0)) throw InvalidArgument("train: loss weights must be > 0");
  for (double w : au_pos_weights) {
    if (!(w > 0.0)) throw InvalidArgument("train: AU positive weights must be > 0");
  }
  if (!(au_weight_cap > 0.0)) throw InvalidArgument("train: au_weight_cap must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && eps > 0.0)) {
    throw InvalidArgument("train: Adam betas must be in [0,1) and eps > 0");
  }
}

json to_json(const TrainConfig& c) {
  return json{{"lr", c.lr},       {"epochs", c.epochs},   {"batch_size", c.batch_size},
              {"w_au", c.w_au},   {"w_ppg", c.w_ppg},     {"w_resp", c.w_resp},
              {"seed", c.seed},   {"au_pos_weights", c.au_pos_weights}, {"au_weight_cap", c.au_weight_cap},
              {"beta1", c.beta1}, {"beta2", c.beta2},     {"eps", c.eps}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  const json def = to_json(c);
  for (const auto& [k, v] : j.items()) {
    if (!def.contains(k)) throw InvalidArgument("train config: unknown key '" + k + "'");
  }
  auto get = [&](const char* k, auto& field) {
    if (j.contains(k)) j.at(k).get_to(field);
  };
  get("lr", c.lr);
  get("epochs", c.epochs);
  get("batch_size", c.batch_size);
  get("w_au", c.w_au);
  get("w_ppg", c.w_ppg);
  get("w_resp", c.w_resp);
  get("seed", c.seed);
  get("au_pos_weights", c.au_pos_weights);
  get("au_weight_cap", c.au_weight_cap);
  get("beta1", c.beta1);
  get("beta2", c.beta2);
  get("eps", c.eps);
  return c;
}

std::vector<double> au_pos_weights(const std::vector<Chunk>& chunks, std::size_t au_count, double cap) {
  std::vector<double> pos(au_count, 0.0), neg(au_count, 0.0);
  for (const auto& c : chunks) {
    if (c.au.empty()) continue;
    if (c.au_count != au_count) throw ShapeError("chunk AU count differs from the model's");
    for (std::size_t i = 0; i < c.au.size(); ++i) (c.au[i] ? pos : neg)[i % au_count] += 1.0;
  }
  std::vector<double> w(au_count);
  for (std::size_t a = 0; a < au_count; ++a) w[a] = pos[a] > 0.0 ? std::min(cap, neg[a] / pos[a]) : cap;
  return w;
}

template <typename T>
Targets<T> targets(const Chunk& c) {
  Targets<T> t;
  const std::size_t n = c.small.empty() ? c.ppg.size() : c.small.dim(0);
  if (!c.au.empty()) {
    t.au = nn::BasicTensor<T>({n, c.au_count});
    for (std::size_t i = 0; i < c.au.size(); ++i) t.au[i] = static_cast<T>(c.au[i]);
  }
  if (!c.ppg.empty()) t.ppg = nn::BasicTensor<T>({c.ppg.size()}, std::vector<T>(c.ppg.begin(), c.ppg.end()));
  if (!c.resp.empty()) t.resp = nn::BasicTensor<T>({c.resp.size()}, std::vector<T>(c.resp.begin(), c.resp.end()));
  return t;
}

template <typename T>
LossParts<T> total_loss(nn::BasicTape<T>& tape, const model::BasicOutputs<T>& out, const Targets<T>& tgt,
                        const model::ModelSpec& spec, const TrainConfig& cfg, std::span<const double> pos_weights) {
  LossParts<T> parts;
  std::vector<nn::BasicVar<T>> terms;
  auto check = [](double v, const char* task) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + task + " loss");
  };
  if (spec.au_head && !tgt.au.empty()) {
    auto l = nn::weighted_bce_loss(tape, out.au_logits, tgt.au, pos_weights);
    parts.au = l.value()[0];
    check(parts.au, "AU");
    terms.push_back(nn::scale(tape, l, static_cast<T>(cfg.w_au)));
  }
  if (spec.ppg_head && !tgt.ppg.empty()) {
    auto l = nn::mse_loss(tape, out.ppg, tgt.ppg);
    parts.ppg = l.value()[0];
    check(parts.ppg, "PPG");
    terms.push_back(nn::scale(tape, l, static_cast<T>(cfg.w_ppg)));
  }
  if (spec.resp_head && !tgt.resp.empty()) {
    auto l = nn::mse_loss(tape, out.resp, tgt.resp);
    parts.resp = l.value()[0];
    check(parts.resp, "respiration");
    terms.push_back(nn::scale(tape, l, static_cast<T>(cfg.w_resp)));
  }
  if (terms.empty()) throw DataError("chunk carries no label for any active head");
  parts.total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) parts.total = nn::add(tape, parts.total, terms[i]);
  return parts;
}

AdamState make_adam(const model::ModelState& state) {
  AdamState a;
  for (const auto& p : state.params) {
    a.m.emplace_back(p.var.value().size(), 0.0);
    a.v.emplace_back(p.var.value().size(), 0.0);
  }
  return a;
}

void adam_step(model::ModelState& state, AdamState& adam, double lr, double beta1, double beta2, double eps) {
  if (adam.m.size() != state.params.size()) throw InvalidArgument("adam state does not match the model");
  ++adam.t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam.t));
  for (std::size_t k = 0; k < state.params.size(); ++k) {
    auto& var = state.params[k].var;
    const float* g = var.has_grad() ? var.grad().ptr() : nullptr;
    float* w = var.value().ptr();
    auto& m = adam.m[k];
    auto& v = adam.v[k];
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double gi = g ? g[i] : 0.0;
      m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
      v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
      const double mh = m[i] / bc1, vh = v[i] / bc2;
      w[i] = static_cast<float>(static_cast<double>(w[i]) - lr * mh / (std::sqrt(vh) + eps));
    }
  }
}

TrainResult train(const std::vector<Chunk>& chunks, const model::ModelSpec& spec, const TrainConfig& cfg,
                  const EpochHook& hook) {
  return train_from(model::init_model(spec, cfg.seed), chunks, cfg, hook);
}

TrainResult train_from(model::ModelState state, const std::vector<Chunk>& chunks, const TrainConfig& cfg,
                       const EpochHook& hook) {
  cfg.validate();
  if (chunks.empty()) throw DataError("train: empty corpus");
  const auto& spec = state.spec;
  const std::vector<double> pos_w = !cfg.au_pos_weights.empty()
                                        ? cfg.au_pos_weights
                                        : au_pos_weights(chunks, spec.au_count, cfg.au_weight_cap);
  if (spec.au_head && pos_w.size() != spec.au_count) throw InvalidArgument("train: au_pos_weights needs one weight per AU");

  TrainResult res;
  AdamState adam = make_adam(state);
  std::vector<std::size_t> order(chunks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 shuffler(rng::derive(cfg.seed, 0x5a0f));
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng::shuffle(order.begin(), order.end(), shuffler);
    const std::uint64_t epoch_seed = rng::derive(cfg.seed, 0x10000 + epoch);
    EpochLog elog{epoch};
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
      const auto inv = static_cast<float>(1.0 / static_cast<double>(b1 - b0));
      state.zero_grad();
      state.training = true;
      StepLog slog{epoch, ++step};
      for (std::size_t pos = b0; pos < b1; ++pos) {
        const Chunk& c = chunks[order[pos]];
        nn::Tape tape;
        const auto out = model::forward(tape, state, c.big, c.small, rng::derive(epoch_seed, pos));
        auto parts = total_loss(tape, out, targets<float>(c), spec, cfg, pos_w);
        auto loss = nn::scale(tape, parts.total, inv);
        tape.backward(loss);
        slog.total += parts.total.value()[0];
        slog.au += parts.au;
        slog.ppg += parts.ppg;
        slog.resp += parts.resp;
      }
      state.training = false;
      adam_step(state, adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
      elog.total += slog.total;
      elog.au += slog.au;
      elog.ppg += slog.ppg;
      elog.resp += slog.resp;
      const double k = static_cast<double>(b1 - b0);
      slog.total /= k;
      slog.au /= k;
      slog.ppg /= k;
      slog.resp /= k;
      res.steps.push_back(slog);
    }
    const double n = static_cast<double>(order.size());
    elog.total /= n;
    elog.au /= n;
    elog.ppg /= n;
    elog.resp /= n;
    res.epochs.push_back(elog);
    state.zero_grad();
    if (hook) hook(epoch, state, elog);
  }
  res.state = std::move(state);
  return res;
}

model::Outputs predict(const model::ModelState& state, const Chunk& c) {
  nn::Tape tape(false);
  if (state.training) {
    model::ModelState eval = state;
    eval.training = false;
    return model::forward(tape, eval, c.big, c.small);
  }
  return model::forward(tape, state, c.big, c.small);
}

double angle_degrees(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("angle_degrees: vectors differ in length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return kUndefinedAngle;
  const double cosv = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return std::acos(cosv) * 180.0 / std::numbers::pi;
}

bool is_shared_param(const std::string& name) { return name.rfind("head.", 0) != 0; }

std::vector<double> task_gradient(const model::ModelState& state, const std::vector<Chunk>& chunks, Task task,
                                  std::span<const double> pos_weights) {
  model::ModelState st = state.clone();
  st.training = false;
  const auto& spec = st.spec;
  for (const auto& c : chunks) {
    nn::Tape tape;
    const auto out = model::forward(tape, st, c.big, c.small);
    const auto tgt = targets<float>(c);
    nn::Var loss;
    switch (task) {
      case Task::au:
        if (!spec.au_head || tgt.au.empty()) throw DataError("gradient angles: batch lacks AU labels");
        loss = nn::weighted_bce_loss(tape, out.au_logits, tgt.au, pos_weights);
        break;
      case Task::ppg:
        if (!spec.ppg_head || tgt.ppg.empty()) throw DataError("gradient angles: batch lacks PPG labels");
        loss = nn::mse_loss(tape, out.ppg, tgt.ppg);
        break;
      case Task::resp:
        if (!spec.resp_head || tgt.resp.empty()) throw DataError("gradient angles: batch lacks respiration labels");
        loss = nn::mse_loss(tape, out.resp, tgt.resp);
        break;
    }
    tape.backward(loss);
  }
  std::vector<double> flat;
  for (const auto& p : st.params) {
    if (!is_shared_param(p.name)) continue;
    if (p.var.has_grad()) {
      for (float g : p.var.grad().data()) flat.push_back(g);
    } else {
      flat.insert(flat.end(), p.var.value().size(), 0.0);
    }
  }
  return flat;
}

std::array<std::array<double, 3>, 3> task_gradient_angles(const model::ModelState& state,
                                                          const std::vector<Chunk>& chunks,
                                                          std::span<const double> pos_weights) {
  if (chunks.empty()) throw DataError("gradient angles: empty batch");
  std::array<std::vector<double>, 3> g;
  for (int k = 0; k < 3; ++k) g[k] = task_gradient(state, chunks, static_cast<Task>(k), pos_weights);
  std::array<std::array<double, 3>, 3> ang{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) ang[i][j] = i == j ? 0.0 : angle_degrees(g[i], g[j]);
  }
  return ang;
}

template Targets<float> targets(const Chunk&);
template Targets<double> targets(const Chunk&);
template LossParts<float> total_loss(nn::Tape&, const model::BasicOutputs<float>&, const Targets<float>&,
                                     const model::ModelSpec&, const TrainConfig&, std::span<const double>);
template LossParts<double> total_loss(nn::TapeD&, const model::BasicOutputs<double>&, const Targets<double>&,
                                      const model::ModelSpec&, const TrainConfig&, std::span<const double>);

}  // namespace pulsekit::train
