#include "pulsekit/eval.hpp"

#include <cmath>
#include <string>

#include "pulsekit/error.hpp"

namespace pulsekit::eval {

namespace {

void require_pairs(std::span<const RatePair> pairs, const char* what) {
  if (pairs.empty()) throw InvalidArgument(std::string(what) + ": no rate pairs");
}

}  // namespace

double mae(std::span<const RatePair> pairs) {
  require_pairs(pairs, "mae");
  double s = 0.0;
  for (const auto& p : pairs) s += std::fabs(p.gt - p.pred);
  return s / static_cast<double>(pairs.size());
}

double rmse(std::span<const RatePair> pairs) {
  require_pairs(pairs, "rmse");
  double s = 0.0;
  for (const auto& p : pairs) s += (p.gt - p.pred) * (p.gt - p.pred);
  return std::sqrt(s / static_cast<double>(pairs.size()));
}

double mape(std::span<const RatePair> pairs) {
  require_pairs(pairs, "mape");
  double s = 0.0;
  for (const auto& p : pairs) {
    if (p.gt == 0.0) throw NumericError("mape: R_gt = 0 makes the percentage undefined");
    s += std::fabs((p.gt - p.pred) / p.gt);
  }
  return 100.0 * s / static_cast<double>(pairs.size());
}

double pearson(std::span<const RatePair> pairs) {
  if (pairs.size() < 2) throw NumericError("pearson: needs at least 2 pairs");
  const double n = static_cast<double>(pairs.size());
  double mg = 0.0, mp = 0.0;
  for (const auto& p : pairs) {
    mg += p.gt;
    mp += p.pred;
  }
  mg /= n;
  mp /= n;
  double sgp = 0.0, sgg = 0.0, spp = 0.0;
  for (const auto& p : pairs) {
    sgp += (p.gt - mg) * (p.pred - mp);
    sgg += (p.gt - mg) * (p.gt - mg);
    spp += (p.pred - mp) * (p.pred - mp);
  }
  if (sgg == 0.0 || spp == 0.0) throw NumericError("pearson: zero variance");
  return sgp / std::sqrt(sgg * spp);
}

RateMetrics rate_metrics(std::span<const RatePair> pairs) {
  RateMetrics m;
  m.mae = mae(pairs);
  m.rmse = rmse(pairs);
  m.mape = mape(pairs);
  try {
    m.pearson = pearson(pairs);
    m.pearson_defined = true;
  } catch (const NumericError&) {
    m.pearson_defined = false;
  }
  return m;
}

std::vector<std::uint8_t> au_binarize(std::span<const float> logits) {
  std::vector<std::uint8_t> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] >= 0.0f ? 1 : 0;
  return out;
}

Confusion confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> label) {
  if (pred.size() != label.size()) throw ShapeError("confusion: prediction and label lengths differ");
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, l = label[i] != 0;
    if (p && l) ++c.tp;
    else if (p) ++c.fp;
    else if (l) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1(const Confusion& c) {
  const double den = 2.0 * static_cast<double>(c.tp) + static_cast<double>(c.fp + c.fn);
  return den == 0.0 ? 0.0 : 100.0 * 2.0 * static_cast<double>(c.tp) / den;
}

double accuracy(const Confusion& c) {
  const std::size_t total = c.tp + c.fp + c.fn + c.tn;
  if (total == 0) throw InvalidArgument("accuracy: no samples");
  return 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
}

AuMetrics au_metrics(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> label, std::size_t au_count) {
  if (au_count == 0) throw InvalidArgument("au_metrics: au_count must be >= 1");
  if (pred.size() != label.size() || pred.size() % au_count != 0) {
    throw ShapeError("au_metrics: expected equal [frames, " + std::to_string(au_count) + "] arrays");
  }
  const std::size_t frames = pred.size() / au_count;
  AuMetrics m;
  for (std::size_t a = 0; a < au_count; ++a) {
    std::vector<std::uint8_t> p(frames), l(frames);
    for (std::size_t t = 0; t < frames; ++t) {
      p[t] = pred[t * au_count + a];
      l[t] = label[t * au_count + a];
    }
    const Confusion c = confusion(p, l);
    m.f1.push_back(f1(c));
    m.acc.push_back(accuracy(c));
  }
  for (std::size_t a = 0; a < au_count; ++a) {
    m.f1_mean += m.f1[a];
    m.acc_mean += m.acc[a];
  }
  m.f1_mean /= static_cast<double>(au_count);
  m.acc_mean /= static_cast<double>(au_count);
  return m;
}

}  // namespace pulsekit::eval
