// pulsekit command-line front end.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "pulsekit/bigsmall.hpp"
#include "pulsekit/corpus.hpp"
#include "pulsekit/dataset.hpp"
#include "pulsekit/dsp.hpp"
#include "pulsekit/error.hpp"
#include "pulsekit/eval.hpp"
#include "pulsekit/io.hpp"
#include "pulsekit/pipeline.hpp"
#include "pulsekit/random.hpp"
#include "pulsekit/synthgen.hpp"
#include "pulsekit/train.hpp"
#include "pulsekit/unsup.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pulsekit;

namespace {

enum Exit { kOk = 0, kFailure = 1, kBadArgs = 2, kDataError = 3, kNumericError = 4 };

// ---------------------------------------------------------------------------
// Options that can come from a flag or from a --config JSON overlay. Flags
// win over the file; the file wins over defaults.

struct Binding {
  std::string key;
  CLI::Option* opt = nullptr;
  bool required = false;
  std::function<json()> get;
  std::function<void(const json&)> set;
};

struct Command {
  CLI::App* app = nullptr;
  std::string name;
  std::vector<Binding> bindings;
  std::string config_path;
  std::function<int(Command&)> run;

  template <typename T>
  void add(const std::string& key, T& var, const std::string& help, bool required = false) {
    auto* o = app->add_option("--" + key, var, help);
    if constexpr (!std::is_same_v<T, std::string>) o->capture_default_str();
    bindings.push_back({key, o, required, [&var] { return json(var); }, [&var](const json& j) { j.get_to(var); }});
  }

  void add_flag(const std::string& key, bool& var, const std::string& help) {
    auto* o = app->add_flag("--" + key, var, help);
    bindings.push_back({key, o, false, [&var] { return json(var); }, [&var](const json& j) { j.get_to(var); }});
  }

  // Applies the overlay file and checks required keys.
  void resolve() {
    std::map<std::string, bool> from_file;
    if (!config_path.empty()) {
      json j;
      try {
        j = json::parse(io::read_text(config_path));
      } catch (const json::parse_error& e) {
        throw InvalidArgument("cannot parse --config " + config_path + ": " + e.what());
      }
      if (j.contains("subcommand") && j.contains("config")) {
        if (j.at("subcommand") != name) {
          throw InvalidArgument("--config holds a '" + j.at("subcommand").get<std::string>() + "' run, not '" + name + "'");
        }
        j = j.at("config");
      }
      if (!j.is_object()) throw InvalidArgument("--config must hold a JSON object");
      for (const auto& [k, v] : j.items()) {
        auto it = std::find_if(bindings.begin(), bindings.end(), [&](const Binding& b) { return b.key == k; });
        if (it == bindings.end()) throw InvalidArgument("unknown key '" + k + "' in --config for " + name);
        if (it->opt->count() == 0) {
          try {
            it->set(v);
          } catch (const json::exception& e) {
            throw InvalidArgument("bad value for '" + k + "' in --config: " + e.what());
          }
        }
        from_file[k] = true;
      }
    }
    for (const auto& b : bindings) {
      if (b.required && b.opt->count() == 0 && !from_file.count(b.key)) {
        throw InvalidArgument("--" + b.key + " is required");
      }
    }
  }

  json resolved() const {
    json j = json::object();
    for (const auto& b : bindings) j[b.key] = b.get();
    return j;
  }
};

std::shared_ptr<spdlog::logger> logger() {
  static auto log = [] {
    auto l = spdlog::stderr_color_mt("pulsekit");
    l->set_pattern("[%H:%M:%S] [%^%l%$] %v");
    l->set_level(spdlog::level::info);
    if (const char* env = std::getenv("PULSEKIT_LOG")) {
      const auto lvl = spdlog::level::from_str(env);
      if (lvl != spdlog::level::off || std::string(env) == "off") l->set_level(lvl);
    }
    return l;
  }();
  return log;
}

// ---------------------------------------------------------------------------
// Hashing and run records.

/// Files under root (recursively) except run.json, with their SHA-256, plus a
/// digest over the sorted list.
json tree_hashes(const fs::path& root, std::size_t list_limit = 64) {
  if (fs::is_regular_file(root)) return json{{"sha256", io::sha256_file(root)}};
  if (!fs::is_directory(root)) throw DataError("missing path " + root.string());
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "run.json") continue;
    files.push_back(fs::relative(e.path(), root).generic_string());
  }
  std::sort(files.begin(), files.end());
  std::string listing;
  json per_file = json::object();
  for (const auto& f : files) {
    const std::string h = io::sha256_file(root / f);
    listing += f + "\t" + h + "\n";
    if (files.size() <= list_limit) per_file[f] = h;
  }
  json out{{"tree_sha256", io::sha256_hex(listing)}, {"count", files.size()}};
  if (files.size() <= list_limit) out["files"] = per_file;
  return out;
}

struct RunRecord {
  std::string subcommand;
  json config;
  std::uint64_t seed = 0;
  std::map<std::string, fs::path> inputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::time_t started = std::time(nullptr);
};

void write_run(const fs::path& out, const RunRecord& rec) {
  json inputs = json::object();
  for (const auto& [k, p] : rec.inputs) inputs[k] = json{{"path", p.string()}, {"hash", tree_hashes(p)}};
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - rec.start).count();
  char when[32];
  std::strftime(when, sizeof when, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&rec.started));
  json j{{"tool", "pulsekit"},
         {"subcommand", rec.subcommand},
         {"config", rec.config},
         {"seed", rec.seed},
         {"inputs", inputs},
         {"outputs", tree_hashes(out)},
         {"wall_clock", {{"started_utc", when}, {"seconds", wall}}}};
  io::write_text(out / "run.json", j.dump(2) + "\n");
  logger()->info("wrote {}", (out / "run.json").string());
}

// ---------------------------------------------------------------------------
// Small helpers.

void write_text_table(const fs::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  io::write_text(path, os.str());
}

json rate_json(const eval::RateMetrics& m) {
  return json{{"MAE", m.mae}, {"RMSE", m.rmse}, {"MAPE", m.mape}, {"rho", m.pearson_defined ? json(m.pearson) : json()}};
}

void write_spectrum(const fs::path& path, const dsp::RateReport& rep, double max_hz) {
  io::Csv csv;
  csv.header = {"hz", "magnitude"};
  for (std::size_t i = 0; i < rep.freqs.size() && rep.freqs[i] <= max_hz; ++i) csv.rows.push_back({rep.freqs[i], rep.magnitude[i]});
  io::write_csv(path, csv);
}

struct GroundTruth {
  double fps = 30.0;
  dsp::Wave ppg, resp;
  std::size_t au_count = 0;
  std::vector<std::uint8_t> au;  // [T, A]
};

/// Label tracks of a corpus clip without decoding its frames.
GroundTruth read_truth(const fs::path& clip_dir) {
  GroundTruth gt;
  const json meta = json::parse(io::read_text(clip_dir / "clip.json"));
  gt.fps = meta.at("fps");
  const io::Csv csv = io::read_csv(clip_dir / meta.value("labels", std::string("labels.csv")));
  gt.ppg = csv.column_values("ppg");
  gt.resp = csv.column_values("resp");
  gt.au_count = meta.value("au_count", std::size_t{0});
  gt.au.assign(csv.rows.size() * gt.au_count, 0);
  for (std::size_t a = 0; a < gt.au_count; ++a) {
    const auto col = csv.column_values("au_" + std::to_string(a));
    for (std::size_t t = 0; t < col.size(); ++t) gt.au[t * gt.au_count + a] = col[t] > 0.0 ? 1 : 0;
  }
  return gt;
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::uint64_t seed = synth::SynthConfig{}.seed;
  std::size_t clips = 20;
  double duration = 10.0;
  double fps = 30.0;
  std::size_t size = 144;
  double noise = 0.005;
  double pulse_amplitude = 0.01;
  double motion_px = 8.0;
  std::size_t au_count = 12;
  std::size_t au_patch_px = synth::SynthConfig{}.au_patch_px;
  double au_texture = synth::SynthConfig{}.au_texture;
  std::size_t jobs = 1;
  std::string out;
} synth_args;

int run_synth(Command& cmd) {
  auto& a = synth_args;
  synth::SynthConfig cfg;
  cfg.seed = a.seed;
  cfg.n_clips = a.clips;
  cfg.duration_s = a.duration;
  cfg.fps = a.fps;
  cfg.base_size = a.size;
  cfg.noise_std = a.noise;
  cfg.pulse_amplitude = a.pulse_amplitude;
  cfg.motion_amplitude_px = a.motion_px;
  cfg.au_count = a.au_count;
  cfg.au_patch_px = a.au_patch_px;
  cfg.au_texture = a.au_texture;
  RunRecord rec{cmd.name, cmd.resolved(), a.seed, {}};
  logger()->info("generating {} clips into {}", cfg.n_clips, a.out);
  synth::write_corpus(cfg, a.out, a.jobs);
  write_run(a.out, rec);
  return kOk;
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessArgs {
  std::string corpus, out;
  std::size_t n = 3, m = 3, big_size = 144, small_size = 9, jobs = 1;
  std::string label = "pseudo";
  std::string split = "all";
} prep_args;

int run_preprocess(Command& cmd) {
  auto& a = prep_args;
  pipeline::PreprocessConfig cfg;
  cfg.n = a.n;
  cfg.m = a.m;
  cfg.big_size = a.big_size;
  cfg.small_size = a.small_size;
  if (a.label == "pseudo") cfg.ppg_label = pipeline::PpgLabel::pseudo;
  else if (a.label == "raw") cfg.ppg_label = pipeline::PpgLabel::raw;
  else throw InvalidArgument("--label must be pseudo or raw");
  cfg.validate();
  RunRecord rec{cmd.name, cmd.resolved(), 0, {{"corpus", a.corpus}}};
  const auto manifest = corpus::read_manifest(a.corpus);
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < manifest.clips.size(); ++i) {
    if (a.split == "all" || manifest.clips[i].split == a.split) chosen.push_back(i);
  }
  if (chosen.empty()) throw DataError("no clips in split '" + a.split + "'");
  dataset::Index idx;
  idx.n = cfg.n;
  idx.m = cfg.m;
  idx.big_size = cfg.big_size;
  idx.small_size = cfg.small_size;
  idx.label = a.label;
  idx.corpus = fs::absolute(a.corpus).lexically_normal().string();
  idx.clips.resize(chosen.size());
  fs::create_directories(a.out);
  corpus::parallel_for(chosen.size(), a.jobs, [&](std::size_t k) {
    const auto& e = manifest.clips[chosen[k]];
    const auto clip = corpus::load_clip(fs::path(a.corpus) / e.dir);
    const auto chunks = pipeline::preprocess(clip, cfg, k);
    idx.clips[k] = dataset::write_clip(a.out, {e.id, e.split, e.id, clip.fps}, chunks, cfg.n, cfg.m);
    logger()->debug("{}: {} chunks", e.id, chunks.size());
  });
  dataset::write_index(a.out, idx);
  logger()->info("preprocessed {} clips into {}", idx.clips.size(), a.out);
  write_run(a.out, rec);
  return kOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data, out;
  std::uint64_t seed = 0;
  std::size_t epochs = 5, batch = 16, hidden = 128;
  double lr = 0.001, dropout = 0.25, w_au = 1.0, w_ppg = 1.0, w_resp = 1.0;
  std::string shift = "wtsm", model = "bigsmall", split = "train";
} train_args;

model::ModelSpec spec_for(const std::string& kind, const dataset::Index& idx, std::size_t au_count) {
  model::ModelSpec s;
  s.n = idx.n;
  s.m = idx.m;
  s.big_size = idx.big_size;
  s.small_size = idx.small_size;
  s.au_count = au_count;
  if (kind == "big") s.use_small = false;
  else if (kind == "small") s.use_big = false;
  else if (kind != "bigsmall") throw InvalidArgument("--model must be bigsmall, big or small");
  return s;
}

int run_train(Command& cmd) {
  auto& a = train_args;
  const auto idx = dataset::read_index(a.data);
  if (idx.clips.empty()) throw DataError("dataset has no clips");
  auto spec = spec_for(a.model, idx, idx.clips[0].au_count);
  spec.hidden = a.hidden;
  spec.dropout = a.dropout;
  spec.shift_variant = shift::parse_variant(a.shift);
  spec.validate();
  train::TrainConfig cfg;
  cfg.lr = a.lr;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.seed = a.seed;
  cfg.w_au = a.w_au;
  cfg.w_ppg = a.w_ppg;
  cfg.w_resp = a.w_resp;
  cfg.validate();
  RunRecord rec{cmd.name, cmd.resolved(), a.seed, {{"data", a.data}}};
  const auto chunks = dataset::read_split(a.data, idx, a.split);
  if (chunks.empty()) throw DataError("no chunks in split '" + a.split + "'");
  cfg.au_pos_weights = train::au_pos_weights(chunks, spec.au_count, cfg.au_weight_cap);
  logger()->info("training {} ({} shift) on {} chunks, {} epochs, seed {}", a.model, a.shift, chunks.size(), cfg.epochs,
                 cfg.seed);
  const fs::path out(a.out);
  fs::create_directories(out);
  io::Csv epochs;
  epochs.header = {"epoch", "L_total", "L_au", "L_ppg", "L_resp"};
  auto hook = [&](std::size_t e, const model::ModelState& st, const train::EpochLog& log) {
    model::save_checkpoint(st, out / ("epoch_" + std::to_string(e)));
    epochs.rows.push_back({static_cast<double>(e), log.total, log.au, log.ppg, log.resp});
    io::write_csv(out / "epochs.csv", epochs);
    logger()->info("epoch {}: L_total {:.5f} (au {:.5f}, ppg {:.5f}, resp {:.5f})", e, log.total, log.au, log.ppg,
                   log.resp);
  };
  const auto res = train::train(chunks, spec, cfg, hook);
  io::Csv loss;
  loss.header = {"epoch", "step", "L_total", "L_au", "L_ppg", "L_resp"};
  for (const auto& s : res.steps) {
    loss.rows.push_back({static_cast<double>(s.epoch), static_cast<double>(s.step), s.total, s.au, s.ppg, s.resp});
  }
  io::write_csv(out / "loss.csv", loss);
  model::save_checkpoint(res.state, out / "final");
  json tc = train::to_json(cfg);
  io::write_text(out / "train_config.json", tc.dump(2) + "\n");
  write_run(out, rec);
  return kOk;
}

// ---------------------------------------------------------------------------
// infer

struct InferArgs {
  std::string checkpoint, data, out, split = "test";
  std::size_t jobs = 1;
  double hr_lambda = dsp::kHeartDetrendLambda, rr_lambda = dsp::kRespDetrendLambda;
} infer_args;

int run_infer(Command& cmd) {
  auto& a = infer_args;
  const auto state = model::load_checkpoint(a.checkpoint);
  const auto idx = dataset::read_index(a.data);
  RunRecord rec{cmd.name, cmd.resolved(), state.seed, {{"checkpoint", a.checkpoint}, {"data", a.data}}};
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < idx.clips.size(); ++i) {
    if (a.split == "all" || idx.clips[i].split == a.split) chosen.push_back(i);
  }
  if (chosen.empty()) throw DataError("no clips in split '" + a.split + "'");
  const fs::path out(a.out);
  fs::create_directories(out);
  std::vector<json> entries(chosen.size());
  corpus::parallel_for(chosen.size(), a.jobs, [&](std::size_t k) {
    const auto& info = idx.clips[chosen[k]];
    const auto chunks = dataset::read_clip(a.data, info, idx, chosen[k]);
    dsp::Wave ppg, resp;
    std::vector<double> frames;
    std::vector<float> logits;
    const std::size_t au = state.spec.au_head ? state.spec.au_count : 0;
    for (const auto& c : chunks) {
      const auto o = train::predict(state, c);
      for (std::size_t i = 0; i < idx.n; ++i) {
        frames.push_back(static_cast<double>(c.start + i));
        ppg.push_back(state.spec.ppg_head ? o.ppg.value()[i] : 0.0);
        resp.push_back(state.spec.resp_head ? o.resp.value()[i] : 0.0);
        for (std::size_t j = 0; j < au; ++j) logits.push_back(o.au_logits.value()[i * au + j]);
      }
    }
    const auto ppg_wave = dsp::reconstruct_waveform(ppg, a.hr_lambda);
    const auto resp_wave = dsp::reconstruct_waveform(resp, a.rr_lambda);
    const auto hr = dsp::rate_from_waveform(ppg_wave, info.fps, dsp::kHeartBand);
    const auto rr = dsp::rate_from_waveform(resp_wave, info.fps, dsp::kRespBand);
    io::Csv w;
    w.header = {"frame", "ppg_pred", "resp_pred", "ppg_wave", "resp_wave"};
    for (std::size_t i = 0; i < frames.size(); ++i) w.rows.push_back({frames[i], ppg[i], resp[i], ppg_wave[i], resp_wave[i]});
    io::write_csv(out / (info.id + "_waveforms.csv"), w);
    if (au > 0) {
      io::Csv c;
      c.header = {"frame"};
      for (std::size_t j = 0; j < au; ++j) c.header.push_back("logit_" + std::to_string(j));
      for (std::size_t j = 0; j < au; ++j) c.header.push_back("pred_" + std::to_string(j));
      const auto bin = eval::au_binarize(logits);
      for (std::size_t i = 0; i < frames.size(); ++i) {
        std::vector<double> row{frames[i]};
        for (std::size_t j = 0; j < au; ++j) row.push_back(logits[i * au + j]);
        for (std::size_t j = 0; j < au; ++j) row.push_back(bin[i * au + j]);
        c.rows.push_back(std::move(row));
      }
      io::write_csv(out / (info.id + "_au.csv"), c);
    }
    write_spectrum(out / (info.id + "_hr_spectrum.csv"), hr, 4.0);
    write_spectrum(out / (info.id + "_rr_spectrum.csv"), rr, 1.0);
    entries[k] = json{{"id", info.id},       {"fps", info.fps},        {"hr_pred", hr.rate_bpm}, {"rr_pred", rr.rate_bpm},
                      {"first_frame", frames.front()}, {"frames", frames.size()}, {"au_count", au}};
  });
  json pred{{"format", "pulsekit-predictions-1"}, {"corpus", idx.corpus}, {"split", a.split}, {"clips", entries}};
  io::write_text(out / "predictions.json", pred.dump(2) + "\n");
  logger()->info("wrote predictions for {} clips to {}", entries.size(), a.out);
  write_run(out, rec);
  return kOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string pred, corpus, out;
} eval_args;

int run_evaluate(Command& cmd) {
  auto& a = eval_args;
  const json pred = json::parse(io::read_text(fs::path(a.pred) / "predictions.json"));
  const fs::path corpus_root = a.corpus.empty() ? fs::path(pred.at("corpus").get<std::string>()) : fs::path(a.corpus);
  RunRecord rec{cmd.name, cmd.resolved(), 0, {{"pred", a.pred}}};
  const auto manifest = corpus::read_manifest(corpus_root);
  eval::RatePairs hr, rr;
  std::vector<std::uint8_t> au_pred, au_label;
  std::size_t au_count = 0;
  io::Csv per_clip;
  per_clip.header = {"clip", "hr_gt", "hr_pred", "rr_gt", "rr_pred"};
  std::vector<std::string> ids;
  for (const auto& c : pred.at("clips")) {
    const std::string id = c.at("id");
    auto it = std::find_if(manifest.clips.begin(), manifest.clips.end(), [&](const auto& e) { return e.id == id; });
    if (it == manifest.clips.end()) throw DataError("clip " + id + " not in corpus " + corpus_root.string());
    const auto gt = read_truth(corpus_root / it->dir);
    const double hr_gt = dsp::rate_from_waveform(gt.ppg, gt.fps, dsp::kHeartBand).rate_bpm;
    const double rr_gt = dsp::rate_from_waveform(gt.resp, gt.fps, dsp::kRespBand).rate_bpm;
    hr.push_back({hr_gt, c.at("hr_pred")});
    rr.push_back({rr_gt, c.at("rr_pred")});
    per_clip.rows.push_back({static_cast<double>(ids.size()), hr_gt, c.at("hr_pred"), rr_gt, c.at("rr_pred")});
    ids.push_back(id);
    const std::size_t au = c.value("au_count", std::size_t{0});
    if (au > 0) {
      if (au != gt.au_count) throw DataError("clip " + id + ": AU count differs between predictions and labels");
      au_count = au;
      const io::Csv csv = io::read_csv(fs::path(a.pred) / (id + "_au.csv"));
      const auto frames = csv.column_values("frame");
      std::vector<std::vector<double>> cols;
      for (std::size_t j = 0; j < au; ++j) cols.push_back(csv.column_values("pred_" + std::to_string(j)));
      for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto t = static_cast<std::size_t>(frames[i]);
        for (std::size_t j = 0; j < au; ++j) {
          au_pred.push_back(cols[j][i] > 0.5 ? 1 : 0);
          au_label.push_back(gt.au.at(t * au + j));
        }
      }
    }
  }
  const auto hm = eval::rate_metrics(hr);
  const auto rm = eval::rate_metrics(rr);
  json metrics{{"clips", ids}, {"hr", rate_json(hm)}, {"rr", rate_json(rm)}};
  std::vector<std::vector<std::string>> rows{
      {"HR", fmt(hm.mae), fmt(hm.rmse), fmt(hm.mape), hm.pearson_defined ? fmt(hm.pearson) : "", "", ""},
      {"RR", fmt(rm.mae), fmt(rm.rmse), fmt(rm.mape), rm.pearson_defined ? fmt(rm.pearson) : "", "", ""}};
  if (au_count > 0) {
    const auto am = eval::au_metrics(au_pred, au_label, au_count);
    metrics["au"] = json{{"F1", am.f1}, {"Acc", am.acc}, {"F1_avg", am.f1_mean}, {"Acc_avg", am.acc_mean}};
    rows.push_back({"AU", "", "", "", "", fmt(am.f1_mean), fmt(am.acc_mean)});
  }
  const fs::path out(a.out);
  fs::create_directories(out);
  io::write_text(out / "metrics.json", metrics.dump(2) + "\n");
  write_text_table(out / "metrics.csv", {"task", "MAE", "RMSE", "MAPE", "rho", "F1", "Acc"}, rows);
  io::write_csv(out / "per_clip.csv", per_clip);
  std::printf("%-4s %8s %8s %8s %8s %8s %8s\n", "task", "MAE", "RMSE", "MAPE", "rho", "F1", "Acc");
  for (const auto& r : rows) {
    std::printf("%-4s %8s %8s %8s %8s %8s %8s\n", r[0].c_str(), r[1].c_str(), r[2].c_str(), r[3].c_str(), r[4].c_str(),
                r[5].c_str(), r[6].c_str());
  }
  write_run(out, rec);
  return kOk;
}

// ---------------------------------------------------------------------------
// unsup

struct UnsupArgs {
  std::string corpus, out, method = "both", split = "all";
  double window = 1.6;
  std::size_t jobs = 1;
} unsup_args;

int run_unsup(Command& cmd) {
  auto& a = unsup_args;
  const bool do_pos = a.method == "pos" || a.method == "both";
  const bool do_chrom = a.method == "chrom" || a.method == "both";
  if (!do_pos && !do_chrom) throw InvalidArgument("--method must be pos, chrom or both");
  RunRecord rec{cmd.name, cmd.resolved(), 0, {{"corpus", a.corpus}}};
  const auto manifest = corpus::read_manifest(a.corpus);
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < manifest.clips.size(); ++i) {
    if (a.split == "all" || manifest.clips[i].split == a.split) chosen.push_back(i);
  }
  if (chosen.empty()) throw DataError("no clips in split '" + a.split + "'");
  const fs::path out(a.out);
  fs::create_directories(out);
  struct Row {
    double gt = 0, pos = 0, chrom = 0;
  };
  std::vector<Row> rows(chosen.size());
  corpus::parallel_for(chosen.size(), a.jobs, [&](std::size_t k) {
    const auto& e = manifest.clips[chosen[k]];
    const auto clip = corpus::load_clip(fs::path(a.corpus) / e.dir);
    const auto trace = unsup::spatial_mean(clip.frames, clip.fps);
    rows[k].gt = dsp::rate_from_waveform(clip.ppg, clip.fps, dsp::kHeartBand).rate_bpm;
    io::Csv w;
    w.header = {"frame"};
    std::vector<dsp::Wave> waves;
    if (do_pos) {
      waves.push_back(unsup::pos(trace, a.window));
      rows[k].pos = dsp::rate_from_waveform(waves.back(), clip.fps, dsp::kHeartBand).rate_bpm;
      w.header.push_back("pos");
    }
    if (do_chrom) {
      waves.push_back(unsup::chrom(trace, a.window));
      rows[k].chrom = dsp::rate_from_waveform(waves.back(), clip.fps, dsp::kHeartBand).rate_bpm;
      w.header.push_back("chrom");
    }
    for (std::size_t t = 0; t < clip.length(); ++t) {
      std::vector<double> r{static_cast<double>(t)};
      for (const auto& wv : waves) r.push_back(wv[t]);
      w.rows.push_back(std::move(r));
    }
    io::write_csv(out / (e.id + "_waveforms.csv"), w);
  });
  json metrics = json::object();
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"clip", "hr_gt"};
  if (do_pos) header.push_back("pos");
  if (do_chrom) header.push_back("chrom");
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    std::vector<std::string> r{manifest.clips[chosen[k]].id, io::format_double(rows[k].gt)};
    if (do_pos) r.push_back(io::format_double(rows[k].pos));
    if (do_chrom) r.push_back(io::format_double(rows[k].chrom));
    table.push_back(std::move(r));
  }
  auto summarize = [&](const char* name, double Row::*field) {
    eval::RatePairs p;
    for (const auto& r : rows) p.push_back({r.gt, r.*field});
    const auto m = eval::rate_metrics(p);
    metrics[name] = rate_json(m);
    logger()->info("{}: HR MAE {:.4f} BPM, RMSE {:.4f}", name, m.mae, m.rmse);
  };
  if (do_pos) summarize("pos", &Row::pos);
  if (do_chrom) summarize("chrom", &Row::chrom);
  io::write_text(out / "metrics.json", metrics.dump(2) + "\n");
  write_text_table(out / "rates.csv", header, table);
  write_run(out, rec);
  return kOk;
}

// ---------------------------------------------------------------------------
// flops

struct FlopsArgs {
  std::string model = "all", out;
  std::size_t n = 3, m = 3, au_count = 12, hidden = 128;
} flops_args;

struct FlopRow {
  std::string name;
  model::ModelSpec spec;
};

int run_flops(Command& cmd) {
  auto& a = flops_args;
  model::ModelSpec base;
  base.n = a.n;
  base.m = a.m;
  base.au_count = a.au_count;
  base.hidden = a.hidden;
  // Single-task rows carry the head of the task each branch is known for.
  model::ModelSpec small = base;
  small.use_big = false;
  small.au_head = small.resp_head = false;
  model::ModelSpec big = base;
  big.use_small = false;
  big.ppg_head = big.resp_head = false;
  big.n = big.m = 1;
  model::ModelSpec bs1 = base;
  bs1.m = 1;
  std::vector<FlopRow> all{{"Small", small}, {"Big", big}, {"BigSmall (M=1)", bs1},
                           {"BigSmall (M=" + std::to_string(a.m) + ")", base}};
  std::vector<FlopRow> rows;
  if (a.model == "all") rows = all;
  else if (a.model == "small") rows = {all[0]};
  else if (a.model == "big") rows = {all[1]};
  else if (a.model == "bigsmall") rows = {all[3]};
  else throw InvalidArgument("--model must be all, bigsmall, big or small");
  RunRecord rec{cmd.name, cmd.resolved(), 0, {}};
  std::vector<std::vector<std::string>> table;
  json j = json::array();
  std::printf("%-16s %12s %11s %14s\n", "Model", "FLOPs (M)", "Params (M)", "Params");
  for (const auto& r : rows) {
    r.spec.validate();
    const auto f = model::count_flops(r.spec);
    const auto p = model::count_params(r.spec);
    std::printf("%-16s %12.2f %11.2f %14llu\n", r.name.c_str(), f.per_frame / 1e6, static_cast<double>(p) / 1e6,
                static_cast<unsigned long long>(p));
    table.push_back({r.name, fmt(f.per_frame / 1e6, 4), fmt(static_cast<double>(p) / 1e6, 4), std::to_string(p)});
    j.push_back(json{{"model", r.name},         {"flops_per_frame", f.per_frame}, {"big_conv", f.big_conv},
                     {"small_conv", f.small_conv}, {"heads", f.heads},              {"params", p}});
  }
  if (!a.out.empty()) {
    const fs::path out(a.out);
    fs::create_directories(out);
    write_text_table(out / "flops.csv", {"model", "flops_M", "params_M", "params"}, table);
    const auto ratio = model::branch_flop_ratio(base);
    json doc{{"rows", j},
             {"branch_ratio",
              {{"conv", static_cast<double>(ratio.conv_ratio.num) / static_cast<double>(ratio.conv_ratio.den)},
               {"approximation", static_cast<double>(ratio.approximation.num) / static_cast<double>(ratio.approximation.den)}}}};
    io::write_text(out / "flops.json", doc.dump(2) + "\n");
    write_run(out, rec);
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// gradangles

struct AngleArgs {
  std::string checkpoint, data, out, split = "train";
  std::size_t chunks = 64;
  std::uint64_t seed = 0;
} angle_args;

int run_gradangles(Command& cmd) {
  auto& a = angle_args;
  const auto state = model::load_checkpoint(a.checkpoint);
  const auto idx = dataset::read_index(a.data);
  RunRecord rec{cmd.name, cmd.resolved(), a.seed, {{"checkpoint", a.checkpoint}, {"data", a.data}}};
  const auto all = dataset::read_split(a.data, idx, a.split);
  if (all.empty()) throw DataError("no chunks in split '" + a.split + "'");
  const auto pos_w = train::au_pos_weights(all, state.spec.au_count);
  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 g(rng::derive(a.seed, 0xa96));
  rng::shuffle(order.begin(), order.end(), g);
  order.resize(std::min(a.chunks, order.size()));
  std::sort(order.begin(), order.end());
  std::vector<pipeline::Chunk> batch;
  for (auto i : order) batch.push_back(all[i]);
  logger()->info("gradient angles over {} chunks", batch.size());
  const auto ang = train::task_gradient_angles(state, batch, pos_w);
  const char* names[3] = {"AU", "PPG", "Resp"};
  std::vector<std::vector<std::string>> table;
  for (int i = 0; i < 3; ++i) {
    std::vector<std::string> r{names[i]};
    for (int j = 0; j < 3; ++j) r.push_back(fmt(ang[i][j], 3));
    table.push_back(r);
  }
  const fs::path out(a.out);
  fs::create_directories(out);
  write_text_table(out / "angles.csv", {"task", "AU", "PPG", "Resp"}, table);
  json doc{{"tasks", {"AU", "PPG", "Resp"}},
           {"degrees", ang},
           {"au_ppg", ang[0][1]},
           {"au_resp", ang[0][2]},
           {"ppg_resp", ang[1][2]},
           {"undefined_sentinel", train::kUndefinedAngle},
           {"chunks", batch.size()}};
  io::write_text(out / "angles.json", doc.dump(2) + "\n");
  std::printf("angle(AU,PPG) %.3f  angle(AU,Resp) %.3f  angle(PPG,Resp) %.3f\n", ang[0][1], ang[0][2], ang[1][2]);
  write_run(out, rec);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pulsekit: multi-task camera physiology toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pulsekit 1.0");
  std::vector<std::unique_ptr<Command>> commands;
  auto make = [&](const std::string& name, const std::string& help, std::function<int(Command&)> run) -> Command& {
    auto c = std::make_unique<Command>();
    c->name = name;
    c->app = app.add_subcommand(name, help);
    c->run = std::move(run);
    c->app->add_option("--config", c->config_path, "JSON overlay (a run.json replays that run)");
    commands.push_back(std::move(c));
    return *commands.back();
  };

  {
    auto& c = make("synth", "Generate the synthetic video corpus", run_synth);
    auto& a = synth_args;
    c.add("out", a.out, "Output corpus directory", true);
    c.add("seed", a.seed, "Corpus seed");
    c.add("clips", a.clips, "Number of clips");
    c.add("duration", a.duration, "Clip length in seconds");
    c.add("fps", a.fps, "Frame rate");
    c.add("size", a.size, "Frame size in pixels");
    c.add("noise", a.noise, "Pixel noise standard deviation");
    c.add("pulse_amplitude", a.pulse_amplitude, "Pulse amplitude (pixel range fraction)");
    c.add("motion_px", a.motion_px, "Breathing band excursion in pixels");
    c.add("au_count", a.au_count, "Number of AU patches");
    c.add("au_patch_px", a.au_patch_px, "AU patch side in pixels");
    c.add("au_texture", a.au_texture, "AU stripe amplitude");
    c.add("jobs", a.jobs, "Worker threads");
  }
  {
    auto& c = make("preprocess", "Crop, resize, normalize and chunk a corpus", run_preprocess);
    auto& a = prep_args;
    c.add("corpus", a.corpus, "Corpus directory", true);
    c.add("out", a.out, "Output dataset directory", true);
    c.add("N", a.n, "Small-branch frames per chunk");
    c.add("M", a.m, "Big-branch reduction factor");
    c.add("big_size", a.big_size, "Big view size");
    c.add("small_size", a.small_size, "Small view size");
    c.add("label", a.label, "PPG target: pseudo or raw");
    c.add("split", a.split, "train, test or all");
    c.add("jobs", a.jobs, "Worker threads");
  }
  {
    auto& c = make("train", "Train the model on a preprocessed dataset", run_train);
    auto& a = train_args;
    c.add("data", a.data, "Preprocessed dataset directory", true);
    c.add("out", a.out, "Output run directory", true);
    c.add("seed", a.seed, "Initialization, shuffle and dropout seed");
    c.add("epochs", a.epochs, "Epochs");
    c.add("batch", a.batch, "Chunks per optimizer step");
    c.add("lr", a.lr, "Adam learning rate");
    c.add("shift", a.shift, "Small-branch shift: wtsm, tsm, circulant or none");
    c.add("model", a.model, "bigsmall, big or small");
    c.add("hidden", a.hidden, "Head hidden width");
    c.add("dropout", a.dropout, "Big-branch dropout rate");
    c.add("w_au", a.w_au, "AU loss weight");
    c.add("w_ppg", a.w_ppg, "PPG loss weight");
    c.add("w_resp", a.w_resp, "Respiration loss weight");
    c.add("split", a.split, "Training split");
  }
  {
    auto& c = make("infer", "Predict waveforms, rates and AUs", run_infer);
    auto& a = infer_args;
    c.add("checkpoint", a.checkpoint, "Checkpoint directory", true);
    c.add("data", a.data, "Preprocessed dataset directory", true);
    c.add("out", a.out, "Output directory", true);
    c.add("split", a.split, "train, test or all");
    c.add("hr_lambda", a.hr_lambda, "Detrend lambda for the heart wave");
    c.add("rr_lambda", a.rr_lambda, "Detrend lambda for the breathing wave");
    c.add("jobs", a.jobs, "Worker threads");
  }
  {
    auto& c = make("evaluate", "Score predictions against corpus ground truth", run_evaluate);
    auto& a = eval_args;
    c.add("pred", a.pred, "infer output directory", true);
    c.add("corpus", a.corpus, "Corpus directory (default: the one recorded by infer)");
    c.add("out", a.out, "Output directory", true);
  }
  {
    auto& c = make("unsup", "POS / CHROM heart rate on a corpus", run_unsup);
    auto& a = unsup_args;
    c.add("corpus", a.corpus, "Corpus directory", true);
    c.add("out", a.out, "Output directory", true);
    c.add("method", a.method, "pos, chrom or both");
    c.add("window", a.window, "Window length in seconds");
    c.add("split", a.split, "train, test or all");
    c.add("jobs", a.jobs, "Worker threads");
  }
  {
    auto& c = make("flops", "Per-frame MACs and parameter counts", run_flops);
    auto& a = flops_args;
    c.add("model", a.model, "all, bigsmall, big or small");
    c.add("N", a.n, "Small-branch frames per chunk");
    c.add("M", a.m, "Big-branch reduction factor");
    c.add("au_count", a.au_count, "AU outputs");
    c.add("hidden", a.hidden, "Head hidden width");
    c.add("out", a.out, "Optional output directory");
  }
  {
    auto& c = make("gradangles", "Angles between per-task gradients on shared weights", run_gradangles);
    auto& a = angle_args;
    c.add("checkpoint", a.checkpoint, "Checkpoint directory", true);
    c.add("data", a.data, "Preprocessed dataset directory", true);
    c.add("out", a.out, "Output directory", true);
    c.add("split", a.split, "Split to sample chunks from");
    c.add("chunks", a.chunks, "Chunks in the batch");
    c.add("seed", a.seed, "Sampling seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadArgs;
  }
  for (auto& c : commands) {
    if (!c->app->parsed()) continue;
    try {
      c->resolve();
      return c->run(*c);
    } catch (const InvalidArgument& e) {
      logger()->error("{}", e.what());
      return kBadArgs;
    } catch (const DataError& e) {
      logger()->error("data error: {}", e.what());
      return kDataError;
    } catch (const NumericError& e) {
      logger()->error("numeric failure: {}", e.what());
      return kNumericError;
    } catch (const ShapeError& e) {
      logger()->error("shape error: {}", e.what());
      return kDataError;
    } catch (const std::exception& e) {
      logger()->error("{}", e.what());
      return kFailure;
    }
  }
  return kBadArgs;
}
