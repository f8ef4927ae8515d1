#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace pulsekit::eval {

/// (R_gt, R_pred) in BPM, one per clip.
struct RatePair {
  double gt = 0.0;
  double pred = 0.0;
};
using RatePairs = std::vector<RatePair>;

double mae(std::span<const RatePair> pairs);
double rmse(std::span<const RatePair> pairs);
/// Percent. Throws NumericError when some R_gt is 0.
double mape(std::span<const RatePair> pairs);
/// Throws NumericError for T < 2 or zero variance on either side.
double pearson(std::span<const RatePair> pairs);

struct RateMetrics {
  double mae = 0.0, rmse = 0.0, mape = 0.0, pearson = 0.0;
  bool pearson_defined = false;
};
/// All four metrics; pearson_defined is false where the correlation is not.
RateMetrics rate_metrics(std::span<const RatePair> pairs);

/// sigmoid(z) >= 0.5, i.e. z >= 0.
std::vector<std::uint8_t> au_binarize(std::span<const float> logits);

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};
Confusion confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> label);
/// 100 * 2TP / (2TP + FP + FN); 0 when the denominator is 0.
double f1(const Confusion& c);
/// 100 * (TP + TN) / total.
double accuracy(const Confusion& c);

struct AuMetrics {
  std::vector<double> f1;   // per AU
  std::vector<double> acc;  // per AU
  double f1_mean = 0.0;
  double acc_mean = 0.0;
};
/// pred and label are row-major [frames, au_count].
AuMetrics au_metrics(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> label, std::size_t au_count);

}  // namespace pulsekit::eval
