#include <cmath>
#include <random>

#include "doctest.h"
#include "pulsekit/error.hpp"
#include "pulsekit/eval.hpp"

using namespace pulsekit;
using namespace pulsekit::eval;

namespace {

RatePairs random_pairs(std::mt19937_64& g, std::size_t n) {
  std::uniform_real_distribution<double> u(50.0, 120.0), e(-10.0, 10.0);
  RatePairs p;
  for (std::size_t i = 0; i < n; ++i) {
    const double gt = u(g);
    p.push_back({gt, gt + e(g)});
  }
  return p;
}

}  // namespace

TEST_CASE("hand-computed rate fixture") {
  const RatePairs p{{70.0, 72.0}, {60.0, 57.0}};
  CHECK(std::abs(mae(p) - 2.5) < 1e-9);
  CHECK(std::abs(rmse(p) - std::sqrt(6.5)) < 1e-9);
  CHECK(std::abs(mape(p) - 100.0 * (2.0 / 70.0 + 3.0 / 60.0) / 2.0) < 1e-9);
  CHECK(std::abs(mape(p) - 3.9285714285714) < 1e-9);
}

TEST_CASE("perfect predictions") {
  const RatePairs p{{70.0, 70.0}, {60.0, 60.0}, {88.0, 88.0}};
  CHECK(mae(p) == 0.0);
  CHECK(rmse(p) == 0.0);
  CHECK(mape(p) == 0.0);
  CHECK(std::abs(pearson(p) - 1.0) < 1e-12);
}

TEST_CASE("anti-correlated predictions give rho -1") {
  const RatePairs p{{60.0, 140.0}, {75.0, 125.0}, {90.0, 110.0}, {72.0, 128.0}};
  CHECK(std::abs(pearson(p) + 1.0) < 1e-12);
}

TEST_CASE("pearson against a direct two-pass formula") {
  const RatePairs p{{61.0, 64.0}, {73.0, 70.5}, {95.0, 99.0}, {80.0, 77.0}, {55.0, 60.0}};
  double mg = 0.0, mp = 0.0;
  for (const auto& x : p) mg += x.gt, mp += x.pred;
  mg /= 5.0, mp /= 5.0;
  double sgp = 0.0, sgg = 0.0, spp = 0.0;
  for (const auto& x : p) {
    sgp += (x.gt - mg) * (x.pred - mp);
    sgg += (x.gt - mg) * (x.gt - mg);
    spp += (x.pred - mp) * (x.pred - mp);
  }
  CHECK(std::abs(pearson(p) - sgp / std::sqrt(sgg * spp)) < 1e-12);
}

TEST_CASE("undefined metrics are errors") {
  CHECK_THROWS_AS(pearson(RatePairs{{70.0, 71.0}}), NumericError);
  CHECK_THROWS_AS(pearson(RatePairs{{70.0, 71.0}, {70.0, 75.0}}), NumericError);
  CHECK_THROWS_AS(pearson(RatePairs{{70.0, 71.0}, {60.0, 71.0}}), NumericError);
  CHECK_THROWS_AS(mape(RatePairs{{0.0, 71.0}, {60.0, 61.0}}), NumericError);
}

TEST_CASE("rate_metrics flags an undefined correlation") {
  const auto m = rate_metrics(RatePairs{{70.0, 72.0}});
  CHECK_FALSE(m.pearson_defined);
  CHECK(m.mae == 2.0);
  const auto m2 = rate_metrics(RatePairs{{70.0, 72.0}, {60.0, 57.0}});
  CHECK(m2.pearson_defined);
  CHECK(std::abs(m2.pearson - 1.0) < 1e-12);
}

TEST_CASE("RMSE is never below MAE") {
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_pairs(g, 1 + trial % 17);
    CHECK(rmse(p) >= mae(p) - 1e-12);
  }
}

TEST_CASE("pearson is invariant under positive affine maps") {
  std::mt19937_64 g(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_pairs(g, 8);
    RatePairs q = p;
    for (auto& x : q) {
      x.gt = 2.5 * x.gt - 30.0;
      x.pred = 0.7 * x.pred + 4.0;
    }
    CHECK(std::abs(pearson(p) - pearson(q)) < 1e-9);
  }
}

TEST_CASE("metrics weight every pair equally") {
  const RatePairs p{{70.0, 72.0}, {60.0, 57.0}};
  const RatePairs twice{{70.0, 72.0}, {60.0, 57.0}, {70.0, 72.0}, {60.0, 57.0}};
  CHECK(std::abs(mae(p) - mae(twice)) < 1e-12);
  CHECK(std::abs(rmse(p) - rmse(twice)) < 1e-12);
}

TEST_CASE("AU binarization threshold") {
  const std::vector<float> z{0.0f, -3.0f, 3.0f, -1e-6f, 1e-6f};
  CHECK(au_binarize(z) == std::vector<std::uint8_t>{1, 0, 1, 0, 1});
}

TEST_CASE("F1 and accuracy fixture") {
  const Confusion c{2, 1, 1, 6};
  CHECK(std::abs(f1(c) - 100.0 * 4.0 / 6.0) < 1e-9);
  CHECK(std::abs(accuracy(c) - 80.0) < 1e-9);

  const std::vector<std::uint8_t> pred{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  const std::vector<std::uint8_t> label{1, 1, 0, 1, 0, 0, 0, 0, 0, 0};
  const auto k = confusion(pred, label);
  CHECK(k.tp == 2);
  CHECK(k.fp == 1);
  CHECK(k.fn == 1);
  CHECK(k.tn == 6);
}

TEST_CASE("all-correct and degenerate AU cases") {
  const std::vector<std::uint8_t> y{1, 0, 1, 1, 0};
  CHECK(f1(confusion(y, y)) == 100.0);
  CHECK(accuracy(confusion(y, y)) == 100.0);
  const std::vector<std::uint8_t> neg(7, 0);
  CHECK(f1(confusion(neg, neg)) == 0.0);
  CHECK(accuracy(confusion(neg, neg)) == 100.0);
  CHECK_THROWS(confusion(y, neg));
}

TEST_CASE("per-AU metrics and their unweighted means") {
  // Two AUs over five frames, row-major [frame, au].
  const std::vector<std::uint8_t> pred{1, 0, 1, 0, 0, 0, 1, 0, 0, 0};
  const std::vector<std::uint8_t> label{1, 0, 0, 0, 0, 0, 1, 0, 0, 0};
  const auto m = au_metrics(pred, label, 2);
  REQUIRE(m.f1.size() == 2);
  CHECK(std::abs(m.f1[0] - 100.0 * 4.0 / 5.0) < 1e-9);
  CHECK(m.f1[1] == 0.0);
  CHECK(std::abs(m.acc[0] - 80.0) < 1e-9);
  CHECK(m.acc[1] == 100.0);
  CHECK(std::abs(m.f1_mean - 40.0) < 1e-9);
  CHECK(std::abs(m.acc_mean - 90.0) < 1e-9);
  CHECK_THROWS(au_metrics(pred, label, 3));
}
