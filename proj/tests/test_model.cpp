#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "pulsekit/bigsmall.hpp"
#include "pulsekit/ops.hpp"
#include "pulsekit/random.hpp"

using namespace pulsekit;
using namespace pulsekit::model;
using nn::Shape;
using nn::Tensor;
using nn::TensorD;
namespace fs = std::filesystem;

namespace {

std::size_t scalars_with_prefix(const ModelState& st, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& p : st.params)
    if (p.name.rfind(prefix, 0) == 0) n += p.var.value().size();
  return n;
}

ModelSpec small_only() {
  ModelSpec s;
  s.use_big = false;
  s.au_head = false;
  s.resp_head = false;
  return s;
}

ModelSpec big_only() {
  ModelSpec s;
  s.use_small = false;
  s.n = 1;
  s.m = 1;
  s.ppg_head = false;
  s.resp_head = false;
  return s;
}

bool within(double got, double target, double rel) { return std::abs(got - target) <= rel * target; }

template <typename T>
nn::BasicTensor<T> rand_input(Shape shape, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  nn::BasicTensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(u(g));
  return t;
}

// Forward written out layer by layer from the tensor primitives.
Outputs reference_forward(nn::Tape& tape, const ModelState& st, const Tensor& big, const Tensor& small) {
  const ModelSpec& s = st.spec;
  nn::Var b(big);
  for (std::size_t i = 0; i < 6; ++i) {
    const std::string n = "big.conv" + std::to_string(i + 1);
    b = nn::tanh(tape, nn::conv2d(tape, b, st.get(n + ".weight"), st.get(n + ".bias")));
    if (i % 2 == 1) b = nn::avgpool2d(tape, b, s.big_pools[i / 2]);
  }
  nn::Var x(small);
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string n = "small.conv" + std::to_string(i + 1);
    x = shift::shift(tape, x, s.shift_spec());
    x = nn::tanh(tape, nn::conv2d(tape, x, st.get(n + ".weight"), st.get(n + ".bias")));
  }
  const nn::Var flat = nn::flatten(tape, nn::add(tape, nn::repeat_frames(tape, b, s.m, s.n), x));
  auto head = [&](const std::string& h) {
    const std::string p = "head." + h;
    const nn::Var hid = nn::tanh(tape, nn::dense(tape, flat, st.get(p + ".fc1.weight"), st.get(p + ".fc1.bias")));
    return nn::dense(tape, hid, st.get(p + ".fc2.weight"), st.get(p + ".fc2.bias"));
  };
  Outputs o;
  o.au_logits = head("au");
  o.ppg = nn::reshape(tape, head("ppg"), Shape{s.n});
  o.resp = nn::reshape(tape, head("resp"), Shape{s.n});
  return o;
}

}  // namespace

TEST_CASE("parameter counts follow the closed form") {
  const ModelSpec full;
  const ModelState st = init_model(full, 0);
  CHECK(scalars_with_prefix(st, "big.") == 111744);
  CHECK(scalars_with_prefix(st, "small.") == 37888);
  CHECK(count_params(full) == 2142478);
  CHECK(st.scalar_count() == 2142478);
  CHECK(count_params(small_only()) == 701697);
  CHECK(count_params(big_only()) == 776972);

  for (const ModelSpec& s : {small_only(), big_only(), ModelSpec::toy()}) {
    CHECK(count_params(s) == init_model(s, 1).scalar_count());
  }
}

TEST_CASE("closed form by hand for the conv stacks") {
  auto conv = [](std::uint64_t cin, std::uint64_t cout) { return (cin * 9 + 1) * cout; };
  CHECK(conv(3, 32) + 2 * conv(32, 32) + conv(32, 64) + 2 * conv(64, 64) == 111744);
  CHECK(conv(3, 32) + 2 * conv(32, 32) + conv(32, 64) == 37888);
  const std::uint64_t head = (5184 + 1) * 128;
  CHECK(111744 + 37888 + 3 * head + (128 + 1) * (12 + 1 + 1) == 2142478);
}

TEST_CASE("per-frame FLOPs reconcile with the published table within 2%") {
  CHECK(within(count_flops(small_only()).per_frame, 3.73e6, 0.02));
  CHECK(within(count_flops(big_only()).per_frame, 451.63e6, 0.02));
  ModelSpec s;
  s.m = 1;
  CHECK(within(count_flops(s).per_frame, 456.03e6, 0.02));
  s.m = 3;
  CHECK(within(count_flops(s).per_frame, 154.01e6, 0.02));
  CHECK(count_flops(s).shift == 0);
}

TEST_CASE("FLOP terms by hand") {
  const auto r = count_flops(ModelSpec{});
  const std::uint64_t big = 144ull * 144 * 9 * (3 * 32 + 32 * 32) + 72ull * 72 * 9 * (32 * 32 + 32 * 64) +
                            36ull * 36 * 9 * (64 * 64 + 64 * 64);
  const std::uint64_t small = 81ull * 9 * (3 * 32 + 32 * 32 + 32 * 32 + 32 * 64);
  CHECK(r.big_conv == big);
  CHECK(r.small_conv == small);
  CHECK(r.heads == 3ull * 5184 * 128 + 128ull * 14);
}

TEST_CASE("Big contribution scales exactly with 1/M") {
  ModelSpec s;
  s.n = 9;
  double prev = 1e300;
  for (std::size_t m : {1u, 3u, 9u}) {
    s.m = m;
    const auto r = count_flops(s);
    CHECK(r.per_frame - static_cast<double>(r.small_conv + r.heads) ==
          doctest::Approx(static_cast<double>(r.big_conv) / static_cast<double>(m)).epsilon(1e-15));
    CHECK(r.per_frame < prev);
    prev = r.per_frame;
  }
}

TEST_CASE("branch FLOP ratio") {
  const auto r = branch_flop_ratio(ModelSpec{});
  CHECK(r.approximation == shift::Fraction{256, 1});
  CHECK(r.conv_ratio.value() == doctest::Approx(146.6).epsilon(0.002));

  ModelSpec eq;
  eq.big_size = 9;
  eq.big_pools = {1, 1, 1};
  CHECK(branch_flop_ratio(eq).approximation == shift::Fraction{1, 1});
}

TEST_CASE("zero parameters give zero outputs") {
  ModelState st = init_model(ModelSpec::toy(), 3);
  for (auto& p : st.params) p.var.value().fill(0.0f);
  const auto& s = st.spec;
  std::mt19937_64 g(1);
  nn::Tape tape(false);
  const auto o = forward(tape, st, rand_input<float>({s.n_big(), 3, 8, 8}, g), rand_input<float>({s.n, 3, 4, 4}, g));
  for (float v : o.au_logits.value().data()) CHECK(v == 0.0f);
  for (float v : o.ppg.value().data()) CHECK(v == 0.0f);
  for (float v : o.resp.value().data()) CHECK(v == 0.0f);
  const auto sig = nn::sigmoid(tape, o.au_logits);
  for (float v : sig.value().data()) CHECK(v == 0.5f);
}

TEST_CASE("with a zeroed Small input every frame gets the same output") {
  ModelSpec s = ModelSpec::toy();
  s.n = 3;
  s.m = 3;
  const ModelState st = init_model(s, 8);
  std::mt19937_64 g(2);
  nn::Tape tape(false);
  const auto o = forward(tape, st, rand_input<float>({1, 3, 8, 8}, g), Tensor({3, 3, 4, 4}));
  const auto& au = o.au_logits.value();
  for (std::size_t t = 1; t < 3; ++t) {
    CHECK(o.ppg.value()[t] == o.ppg.value()[0]);
    CHECK(o.resp.value()[t] == o.resp.value()[0]);
    for (std::size_t a = 0; a < s.au_count; ++a) CHECK(au.at({t, a}) == au.at({0, a}));
  }
}

TEST_CASE("forward equals the straight-line composition bit for bit") {
  for (std::uint64_t seed : {1u, 2u}) {
    const ModelState st = init_model(ModelSpec{}, seed);
    std::mt19937_64 g(seed);
    const Tensor big = rand_input<float>({1, 3, 144, 144}, g);
    const Tensor small = rand_input<float>({3, 3, 9, 9}, g);
    nn::Tape t1(false), t2(false);
    const auto a = forward(t1, st, big, small);
    const auto b = reference_forward(t2, st, big, small);
    CHECK(a.au_logits.value() == b.au_logits.value());
    CHECK(a.ppg.value() == b.ppg.value());
    CHECK(a.resp.value() == b.resp.value());
  }
}

TEST_CASE("shape mismatches name the input") {
  const ModelState st = init_model(ModelSpec::toy(), 0);
  nn::Tape tape(false);
  CHECK_THROWS_WITH_AS(forward(tape, st, Tensor({1, 3, 8, 8}), Tensor({3, 3, 5, 5})),
                       doctest::Contains("Small"), ShapeError);
  CHECK_THROWS_WITH_AS(forward(tape, st, Tensor({2, 3, 8, 8}), Tensor({3, 3, 4, 4})),
                       doctest::Contains("Big"), ShapeError);
}

TEST_CASE("spec validation") {
  ModelSpec s;
  CHECK_NOTHROW(s.validate());
  s.n = 4;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = ModelSpec{};
  s.small_size = 8;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = ModelSpec{};
  s.au_head = s.ppg_head = s.resp_head = false;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  CHECK(spec_from_json(to_json(ModelSpec::toy())).small_size == 4);
}

TEST_CASE("toy model gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ModelSpec s = ModelSpec::toy();
    s.shift_variant = seed % 3 == 0 ? shift::Variant::tsm_zero : shift::Variant::wtsm_wrap;
    ModelStateD st = init_model(s, seed).cast<double>();
    st.training = seed % 2 == 1;
    std::mt19937_64 g(100 + seed);
    const TensorD big = rand_input<double>({s.n_big(), 3, 8, 8}, g);
    const TensorD small = rand_input<double>({s.n, 3, 4, 4}, g);
    const TensorD ppg_t = rand_input<double>({s.n}, g), resp_t = rand_input<double>({s.n}, g);
    TensorD au_t({s.n, s.au_count});
    for (auto& v : au_t.data()) v = rng::uniform01(g) < 0.5 ? 0.0 : 1.0;
    const std::vector<double> w{1.5, 0.7, 2.0};

    std::vector<nn::VarD> leaves;
    for (auto& p : st.params) leaves.push_back(p.var);
    const auto fn = [&](nn::TapeD& tape, std::vector<nn::VarD>&) {
      const auto o = forward(tape, st, big, small, seed);
      auto l = nn::add(tape, nn::mse_loss(tape, o.ppg, ppg_t), nn::mse_loss(tape, o.resp, resp_t));
      return nn::add(tape, l, nn::weighted_bce_loss(tape, o.au_logits, au_t, w));
    };
    const auto res = testutil::grad_check(leaves, fn);
    CHECK_MESSAGE(res.worst_rel_err < 1e-4, "seed " << seed << " param " << st.params[res.worst_input].name);
  }
}

TEST_CASE("WTSM couples frames, no shift keeps them independent") {
  for (auto v : {shift::Variant::none, shift::Variant::wtsm_wrap}) {
    ModelSpec s = ModelSpec::toy();
    s.n = 3;
    s.m = 3;
    s.shift_variant = v;
    const ModelState st = init_model(s, 4);
    std::mt19937_64 g(9);
    const Tensor big = rand_input<float>({1, 3, 8, 8}, g);
    const Tensor small = rand_input<float>({3, 3, 4, 4}, g);
    // A transposition; wrap-around shifting commutes with rotations.
    Tensor perm(small.shape());
    const std::size_t frame = 3 * 4 * 4;
    const std::size_t order[3] = {1, 0, 2};
    for (std::size_t t = 0; t < 3; ++t)
      std::copy_n(small.ptr() + order[t] * frame, frame, perm.ptr() + t * frame);
    nn::Tape tape(false);
    const auto a = forward(tape, st, big, small);
    const auto b = forward(tape, st, big, perm);
    bool permuted = true;
    for (std::size_t t = 0; t < 3; ++t) {
      permuted = permuted && b.ppg.value()[t] == a.ppg.value()[order[t]] &&
                 b.resp.value()[t] == a.resp.value()[order[t]];
    }
    if (v == shift::Variant::none) {
      CHECK(permuted);
    } else {
      CHECK_FALSE(permuted);
    }
  }
}

TEST_CASE("eval-mode forward is deterministic and ignores the dropout seed") {
  ModelState st = init_model(ModelSpec::toy(), 5);
  std::mt19937_64 g(3);
  const Tensor big = rand_input<float>({1, 3, 8, 8}, g);
  const Tensor small = rand_input<float>({3, 3, 4, 4}, g);
  nn::Tape tape(false);
  const auto a = forward(tape, st, big, small, 1);
  const auto b = forward(tape, st, big, small, 2);
  CHECK(a.ppg.value() == b.ppg.value());
  st.training = true;
  st.spec.dropout = 0.5;
  const auto c = forward(tape, st, big, small, 1);
  const auto d = forward(tape, st, big, small, 1);
  const auto e = forward(tape, st, big, small, 2);
  CHECK(c.ppg.value() == d.ppg.value());
  CHECK_FALSE(c.ppg.value() == e.ppg.value());
}

TEST_CASE("initialization is seeded, biases start at zero") {
  const auto a = init_model(ModelSpec::toy(), 11), b = init_model(ModelSpec::toy(), 11);
  const auto c = init_model(ModelSpec::toy(), 12);
  bool differ = false;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    CHECK(a.params[i].name == b.params[i].name);
    CHECK(a.params[i].var.value() == b.params[i].var.value());
    differ = differ || !(a.params[i].var.value() == c.params[i].var.value());
    if (a.params[i].name.ends_with(".bias"))
      for (float v : a.params[i].var.value().data()) CHECK(v == 0.0f);
  }
  CHECK(differ);
}

TEST_CASE("checkpoint round trip and corruption detection") {
  const auto dir = fs::temp_directory_path() / "pulsekit_test_ckpt";
  fs::remove_all(dir);
  ModelSpec s = ModelSpec::toy();
  s.shift_variant = shift::Variant::tsm_zero;
  const ModelState st = init_model(s, 21);
  save_checkpoint(st, dir);
  const ModelState back = load_checkpoint(dir);
  CHECK(back.seed == 21);
  CHECK(to_json(back.spec) == to_json(st.spec));
  REQUIRE(back.params.size() == st.params.size());
  for (std::size_t i = 0; i < st.params.size(); ++i) {
    CHECK(back.params[i].name == st.params[i].name);
    CHECK(back.params[i].var.value() == st.params[i].var.value());
  }
  fs::path victim;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".pkt") victim = e.path();
  REQUIRE_FALSE(victim.empty());
  {
    std::fstream f(victim, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-1, std::ios::end);
    f.put('\x7f');
  }
  CHECK_THROWS_AS(load_checkpoint(dir), DataError);
  fs::remove_all(dir);
}
