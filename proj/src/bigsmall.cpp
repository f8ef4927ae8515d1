#include "pulsekit/bigsmall.hpp"

#include <cmath>
#include <random>

#include "pulsekit/io.hpp"
#include "pulsekit/ops.hpp"
#include "pulsekit/random.hpp"

namespace pulsekit::model {

using nn::Shape;
using nn::Tensor;
using nn::Var;

ModelSpec ModelSpec::toy() {
  ModelSpec s;
  s.big_depths = {2, 2, 2, 2, 2, 2};
  s.big_pools = {2, 1, 1};
  s.small_depths = {2, 2, 2, 2};
  s.big_size = 8;
  s.small_size = 4;
  s.au_count = 3;
  s.hidden = 4;
  return s;
}

std::size_t ModelSpec::big_out_size() const {
  std::size_t s = big_size;
  for (std::size_t p : big_pools) s /= p;
  return s;
}

std::size_t ModelSpec::feature_channels() const {
  return use_small ? small_depths.back() : big_depths.back();
}

std::size_t ModelSpec::feature_size() const {
  const std::size_t side = use_small ? small_size : big_out_size();
  return feature_channels() * side * side;
}

shift::ShiftSpec ModelSpec::shift_spec() const {
  return shift::ShiftSpec{n, fold_fraction, shift_variant, false};
}

void ModelSpec::validate() const {
  auto fail = [](const std::string& msg) { throw InvalidArgument("model spec: " + msg); };
  if (!use_big && !use_small) fail("at least one branch must be enabled");
  if (!au_head && !ppg_head && !resp_head) fail("at least one head must be enabled");
  if (kernel % 2 == 0) fail("kernel size must be odd");
  if (n == 0 || m == 0 || m > n) fail("need 1 <= M <= N");
  if (m < n && n % m != 0) fail("N must be a multiple of M");
  if (hidden == 0 || (au_head && au_count == 0)) fail("head sizes must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (use_big) {
    if (big_depths.size() != 2 * big_pools.size() || big_depths.empty()) {
      fail("Big branch needs two convs per pool stage");
    }
    std::size_t s = big_size;
    for (std::size_t p : big_pools) {
      if (p == 0 || s % p != 0) fail("Big size is not divisible by the pool sizes");
      s /= p;
    }
  }
  if (use_small && small_depths.empty()) fail("Small branch needs at least one conv");
  if (use_big && use_small) {
    if (big_out_size() != small_size) {
      fail("Big output size " + std::to_string(big_out_size()) + " != Small size " + std::to_string(small_size));
    }
    if (big_depths.back() != small_depths.back()) fail("branch output depths differ");
  }
  shift_spec().validate();
}

nlohmann::json to_json(const ModelSpec& s) {
  return {
      {"big_depths", s.big_depths},
      {"big_pools", s.big_pools},
      {"small_depths", s.small_depths},
      {"kernel", s.kernel},
      {"in_channels", s.in_channels},
      {"big_size", s.big_size},
      {"small_size", s.small_size},
      {"n", s.n},
      {"m", s.m},
      {"au_count", s.au_count},
      {"hidden", s.hidden},
      {"use_big", s.use_big},
      {"use_small", s.use_small},
      {"au_head", s.au_head},
      {"ppg_head", s.ppg_head},
      {"resp_head", s.resp_head},
      {"shift_variant", shift::variant_name(s.shift_variant)},
      {"fold_fraction", {s.fold_fraction.num, s.fold_fraction.den}},
      {"dropout", s.dropout},
  };
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("big_depths", s.big_depths);
  get("big_pools", s.big_pools);
  get("small_depths", s.small_depths);
  get("kernel", s.kernel);
  get("in_channels", s.in_channels);
  get("big_size", s.big_size);
  get("small_size", s.small_size);
  get("n", s.n);
  get("m", s.m);
  get("au_count", s.au_count);
  get("hidden", s.hidden);
  get("use_big", s.use_big);
  get("use_small", s.use_small);
  get("au_head", s.au_head);
  get("ppg_head", s.ppg_head);
  get("resp_head", s.resp_head);
  get("dropout", s.dropout);
  if (j.contains("shift_variant")) s.shift_variant = shift::parse_variant(j.at("shift_variant").get<std::string>());
  if (j.contains("fold_fraction")) {
    const auto f = j.at("fold_fraction").get<std::vector<std::int64_t>>();
    if (f.size() != 2) throw InvalidArgument("fold_fraction must be [num, den]");
    s.fold_fraction = shift::Fraction::make(f[0], f[1]);
  }
  s.validate();
  return s;
}

namespace {

struct Layer {
  std::string name;
  Shape weight;
  std::size_t bias;
  std::size_t fan_in;
  std::size_t fan_out;
};

struct HeadDef {
  const char* name;
  std::size_t out;
};

std::vector<HeadDef> active_heads(const ModelSpec& s) {
  std::vector<HeadDef> h;
  if (s.au_head) h.push_back({"au", s.au_count});
  if (s.ppg_head) h.push_back({"ppg", 1});
  if (s.resp_head) h.push_back({"resp", 1});
  return h;
}

std::vector<Layer> layer_table(const ModelSpec& s) {
  std::vector<Layer> layers;
  const std::size_t k2 = s.kernel * s.kernel;
  auto add_convs = [&](const std::string& prefix, const std::vector<std::size_t>& depths) {
    std::size_t cin = s.in_channels;
    for (std::size_t i = 0; i < depths.size(); ++i) {
      layers.push_back({prefix + ".conv" + std::to_string(i + 1), {depths[i], cin, s.kernel, s.kernel}, depths[i],
                        cin * k2, depths[i] * k2});
      cin = depths[i];
    }
  };
  if (s.use_big) add_convs("big", s.big_depths);
  if (s.use_small) add_convs("small", s.small_depths);
  const std::size_t feat = s.feature_size();
  for (const auto& h : active_heads(s)) {
    const std::string p = std::string("head.") + h.name;
    layers.push_back({p + ".fc1", {feat, s.hidden}, s.hidden, feat, s.hidden});
    layers.push_back({p + ".fc2", {s.hidden, h.out}, h.out, s.hidden, h.out});
  }
  return layers;
}

}  // namespace

ModelState init_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ModelState st;
  st.spec = spec;
  st.seed = seed;
  std::mt19937_64 gen(seed);
  for (const auto& l : layer_table(spec)) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.fan_in + l.fan_out));
    Tensor w(l.weight);
    for (auto& v : w.data()) {
      v = static_cast<float>((2.0 * rng::uniform01(gen) - 1.0) * limit);
    }
    st.params.push_back({l.name + ".weight", Var(std::move(w), true)});
    st.params.push_back({l.name + ".bias", Var(Tensor({l.bias}), true)});
  }
  return st;
}

template <typename T>
BasicOutputs<T> forward(nn::BasicTape<T>& tape, const BasicModelState<T>& state, const nn::BasicTensor<T>& big,
                        const nn::BasicTensor<T>& small, std::uint64_t dropout_seed) {
  using V = nn::BasicVar<T>;
  const ModelSpec& s = state.spec;
  auto expect = [](const nn::BasicTensor<T>& t, const Shape& shape, const char* what) {
    if (t.shape() != shape) {
      throw ShapeError(std::string(what) + " input has shape " + nn::shape_str(t.shape()) + ", expected " +
                       nn::shape_str(shape));
    }
  };
  auto layer = [&](const std::string& name, auto&& fn) {
    try {
      return fn();
    } catch (const ShapeError& e) {
      throw ShapeError(name + ": " + e.what());
    }
  };
  BasicOutputs<T> out;
  V fused;
  if (s.use_big) {
    expect(big, {s.n_big(), s.in_channels, s.big_size, s.big_size}, "Big");
    V x(big);
    for (std::size_t i = 0; i < s.big_depths.size(); ++i) {
      const std::string name = "big.conv" + std::to_string(i + 1);
      x = layer(name, [&] {
        return nn::tanh(tape, nn::conv2d(tape, x, state.get(name + ".weight"), state.get(name + ".bias")));
      });
      if (i % 2 == 1) {
        const std::size_t stage = i / 2;
        x = nn::avgpool2d(tape, x, s.big_pools[stage]);
        x = nn::dropout(tape, x, s.dropout, state.training, rng::derive(dropout_seed, stage));
      }
    }
    out.big_features = x;
    fused = s.use_small ? nn::repeat_frames(tape, x, s.m, s.n) : x;
  }
  if (s.use_small) {
    expect(small, {s.n, s.in_channels, s.small_size, s.small_size}, "Small");
    V x(small);
    const auto sh = s.shift_spec();
    for (std::size_t i = 0; i < s.small_depths.size(); ++i) {
      const std::string name = "small.conv" + std::to_string(i + 1);
      x = layer(name, [&] {
        V shifted = shift::shift(tape, x, sh);
        return nn::tanh(tape, nn::conv2d(tape, shifted, state.get(name + ".weight"), state.get(name + ".bias")));
      });
    }
    out.small_features = x;
    fused = s.use_big ? nn::add(tape, fused, x) : x;
  }
  const V flat = nn::flatten(tape, fused);
  const std::size_t rows = flat.shape()[0];
  auto head = [&](const std::string& h) {
    const std::string p = "head." + h;
    V hid = nn::tanh(tape, nn::dense(tape, flat, state.get(p + ".fc1.weight"), state.get(p + ".fc1.bias")));
    return nn::dense(tape, hid, state.get(p + ".fc2.weight"), state.get(p + ".fc2.bias"));
  };
  if (s.au_head) out.au_logits = head("au");
  if (s.ppg_head) out.ppg = nn::reshape(tape, head("ppg"), Shape{rows});
  if (s.resp_head) out.resp = nn::reshape(tape, head("resp"), Shape{rows});
  return out;
}

template BasicOutputs<float> forward(nn::BasicTape<float>&, const BasicModelState<float>&, const nn::BasicTensor<float>&,
                                     const nn::BasicTensor<float>&, std::uint64_t);
template BasicOutputs<double> forward(nn::BasicTape<double>&, const BasicModelState<double>&,
                                      const nn::BasicTensor<double>&, const nn::BasicTensor<double>&, std::uint64_t);

std::uint64_t count_params(const ModelSpec& spec) {
  spec.validate();
  std::uint64_t total = 0;
  for (const auto& l : layer_table(spec)) total += nn::shape_size(l.weight) + l.bias;
  return total;
}

FlopReport count_flops(const ModelSpec& spec) {
  spec.validate();
  FlopReport r;
  const std::uint64_t k2 = spec.kernel * spec.kernel;
  if (spec.use_big) {
    std::uint64_t res = spec.big_size;
    std::uint64_t cin = spec.in_channels;
    for (std::size_t i = 0; i < spec.big_depths.size(); ++i) {
      r.big_conv += res * res * k2 * cin * spec.big_depths[i];
      cin = spec.big_depths[i];
      if (i % 2 == 1) res /= spec.big_pools[i / 2];
    }
  }
  if (spec.use_small) {
    const std::uint64_t area = spec.small_size * spec.small_size;
    std::uint64_t cin = spec.in_channels;
    for (std::size_t d : spec.small_depths) {
      r.small_conv += area * k2 * cin * d;
      cin = d;
    }
  }
  const std::uint64_t feat = spec.feature_size();
  for (const auto& h : active_heads(spec)) r.heads += feat * spec.hidden + spec.hidden * h.out;
  const double big_share = spec.use_small ? static_cast<double>(spec.n_big()) / static_cast<double>(spec.n) : 1.0;
  r.per_frame = static_cast<double>(r.big_conv) * big_share + static_cast<double>(r.small_conv) +
                static_cast<double>(r.heads);
  return r;
}

FlopRatio branch_flop_ratio(const ModelSpec& spec) {
  ModelSpec both = spec;
  both.use_big = true;
  both.use_small = true;
  const FlopReport r = count_flops(both);
  FlopRatio out;
  out.conv_ratio = shift::Fraction::make(static_cast<std::int64_t>(r.big_conv), static_cast<std::int64_t>(r.small_conv));
  out.approximation = shift::Fraction::make(static_cast<std::int64_t>(spec.big_size * spec.big_size),
                                            static_cast<std::int64_t>(spec.small_size * spec.small_size));
  return out;
}

void save_checkpoint(const ModelState& state, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : state.params) {
    const std::string file = p.name + ".pkt";
    const std::string bytes = io::encode_pkt1(p.var.value());
    io::write_text(dir / file, bytes);
    params.push_back({{"name", p.name}, {"shape", p.var.shape()}, {"file", file}, {"sha256", io::sha256_hex(bytes)}});
  }
  nlohmann::json manifest = {
      {"format", "pulsekit-checkpoint-1"},
      {"spec", to_json(state.spec)},
      {"seed", state.seed},
      {"params", params},
  };
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

ModelState load_checkpoint(const std::filesystem::path& dir) {
  const auto manifest = nlohmann::json::parse(io::read_text(dir / "manifest.json"));
  if (manifest.value("format", "") != "pulsekit-checkpoint-1") {
    throw DataError(dir.string() + ": not a checkpoint directory");
  }
  ModelState st = init_model(spec_from_json(manifest.at("spec")), manifest.at("seed").get<std::uint64_t>());
  const auto& params = manifest.at("params");
  if (params.size() != st.params.size()) throw DataError("checkpoint parameter count does not match its spec");
  for (const auto& entry : params) {
    Var& v = st.get(entry.at("name").get<std::string>());
    const std::string bytes = io::read_text(dir / entry.at("file").get<std::string>());
    if (io::sha256_hex(bytes) != entry.at("sha256").get<std::string>()) {
      throw DataError("checksum mismatch for " + entry.at("name").get<std::string>());
    }
    Tensor t = io::decode_pkt1(bytes, entry.at("file").get<std::string>());
    if (t.shape() != v.shape()) throw DataError("shape mismatch for " + entry.at("name").get<std::string>());
    v.value() = std::move(t);
  }
  return st;
}

}  // namespace pulsekit::model
