#include "pulsekit/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "pulsekit/error.hpp"
#include "pulsekit/io.hpp"

namespace pulsekit::corpus {

using nlohmann::json;

void save_clip(const fs::path& dir, const pipeline::VideoClip& clip, const json& extra) {
  clip.validate();
  const std::size_t t = clip.length(), h = clip.frames.dim(2), w = clip.frames.dim(3);
  fs::create_directories(dir / "frames");
  const std::size_t inner = 3 * h * w;
  for (std::size_t i = 0; i < t; ++i) {
    nn::Tensor f({3, h, w});
    std::copy_n(clip.frames.ptr() + i * inner, inner, f.ptr());
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.png", i);
    io::write_png16(dir / "frames" / name, f);
  }
  io::Csv csv;
  csv.header = {"frame"};
  if (!clip.ppg.empty()) csv.header.push_back("ppg");
  if (!clip.resp.empty()) csv.header.push_back("resp");
  for (std::size_t a = 0; a < clip.au_count && clip.has_au(); ++a) csv.header.push_back("au_" + std::to_string(a));
  for (std::size_t i = 0; i < t; ++i) {
    std::vector<double> row{static_cast<double>(i)};
    if (!clip.ppg.empty()) row.push_back(clip.ppg[i]);
    if (!clip.resp.empty()) row.push_back(clip.resp[i]);
    for (std::size_t a = 0; a < clip.au_count && clip.has_au(); ++a) row.push_back(clip.au[i * clip.au_count + a]);
    csv.rows.push_back(std::move(row));
  }
  io::write_csv(dir / "labels.csv", csv);
  json meta = extra.is_object() ? extra : json::object();
  meta["fps"] = clip.fps;
  meta["n_frames"] = t;
  meta["height"] = h;
  meta["width"] = w;
  meta["frames"] = "frames";
  meta["labels"] = "labels.csv";
  meta["au_count"] = clip.has_au() ? clip.au_count : 0;
  io::write_text(dir / "clip.json", meta.dump(2) + "\n");
}

pipeline::VideoClip load_clip(const fs::path& dir) {
  json meta;
  try {
    meta = json::parse(io::read_text(dir / "clip.json"));
  } catch (const json::exception& e) {
    throw DataError("bad clip.json in " + dir.string() + ": " + e.what());
  }
  pipeline::VideoClip clip;
  clip.fps = meta.value("fps", 0.0);
  const fs::path frame_dir = dir / meta.value("frames", std::string("frames"));
  if (!fs::is_directory(frame_dir)) throw DataError("missing frame directory " + frame_dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(frame_dir)) {
    const auto ext = e.path().extension().string();
    if (ext == ".png" || ext == ".ppm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (meta.contains("n_frames") && meta.at("n_frames").get<std::size_t>() != files.size()) {
    throw DataError(dir.string() + ": clip.json lists " + meta.at("n_frames").dump() + " frames, found " +
                    std::to_string(files.size()));
  }
  if (files.empty()) throw DataError("no frames in " + frame_dir.string());
  for (std::size_t i = 0; i < files.size(); ++i) {
    const nn::Tensor f = io::read_frame(files[i]);
    if (i == 0) clip.frames = nn::Tensor({files.size(), 3, f.dim(1), f.dim(2)});
    if (f.shape() != nn::Shape{3, clip.frames.dim(2), clip.frames.dim(3)}) {
      throw DataError("frame " + files[i].string() + " has a different size");
    }
    std::copy_n(f.ptr(), f.size(), clip.frames.ptr() + i * f.size());
  }
  const std::string labels = meta.value("labels", std::string());
  if (!labels.empty()) {
    const io::Csv csv = io::read_csv(dir / labels);
    if (csv.rows.size() != files.size()) throw DataError(dir.string() + ": label rows differ from frame count");
    auto has = [&](const std::string& n) { return std::find(csv.header.begin(), csv.header.end(), n) != csv.header.end(); };
    if (has("ppg")) clip.ppg = csv.column_values("ppg");
    if (has("resp")) clip.resp = csv.column_values("resp");
    clip.au_count = meta.value("au_count", std::size_t{0});
    if (clip.au_count > 0) {
      clip.au.assign(files.size() * clip.au_count, 0);
      for (std::size_t a = 0; a < clip.au_count; ++a) {
        const auto col = csv.column_values("au_" + std::to_string(a));
        for (std::size_t i = 0; i < col.size(); ++i) clip.au[i * clip.au_count + a] = col[i] > 0.0 ? 1 : 0;
      }
    }
  }
  clip.validate();
  return clip;
}

Manifest read_manifest(const fs::path& root) {
  Manifest m;
  try {
    m.raw = json::parse(io::read_text(root / "manifest.json"));
    for (const auto& c : m.raw.at("clips")) {
      m.clips.push_back({c.at("id").get<std::string>(), c.at("dir").get<std::string>(), c.value("split", std::string("test")),
                         c.value("hr_bpm", 0.0), c.value("rr_bpm", 0.0)});
    }
  } catch (const json::exception& e) {
    throw DataError("bad manifest in " + root.string() + ": " + e.what());
  }
  return m;
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace pulsekit::corpus
