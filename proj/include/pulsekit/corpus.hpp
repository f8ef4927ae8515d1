#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pulsekit/pipeline.hpp"

namespace pulsekit::corpus {

namespace fs = std::filesystem;

/// Clip directory layout: clip.json, labels.csv, frames/NNNNNN.png.
/// clip.json carries fps, frame count, frame directory and label file.
void save_clip(const fs::path& dir, const pipeline::VideoClip& clip, const nlohmann::json& extra = {});
pipeline::VideoClip load_clip(const fs::path& dir);

struct ClipEntry {
  std::string id;
  std::string dir;  // relative to the corpus root
  std::string split;
  double hr_bpm = 0.0;
  double rr_bpm = 0.0;
};

struct Manifest {
  nlohmann::json raw;
  std::vector<ClipEntry> clips;
};

Manifest read_manifest(const fs::path& root);

/// Calls fn(i) for i in [0, count) on up to `jobs` threads. The first
/// exception is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace pulsekit::corpus
