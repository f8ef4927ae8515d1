#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pulsekit/pipeline.hpp"

namespace pulsekit::dataset {

namespace fs = std::filesystem;

/// One preprocessed clip: big.pkt1 [K*N_big,3,S,S], small.pkt1 [K*N,3,s,s]
/// and labels.csv with K*N rows (frame, ppg, resp, au_*).
struct ClipInfo {
  std::string id;
  std::string split;
  std::string dir;  // relative to the dataset root
  double fps = 30.0;
  std::size_t chunks = 0;
  std::size_t au_count = 0;
};

struct Index {
  std::size_t n = 3;
  std::size_t m = 3;
  std::size_t big_size = 144;
  std::size_t small_size = 9;
  std::string label = "pseudo";
  std::string corpus;  // source corpus root
  std::vector<ClipInfo> clips;
};

nlohmann::json to_json(const Index& idx);
Index index_from_json(const nlohmann::json& j);

Index read_index(const fs::path& root);
void write_index(const fs::path& root, const Index& idx);

/// Writes the clip files and returns its index entry.
ClipInfo write_clip(const fs::path& root, const ClipInfo& info, const std::vector<pipeline::Chunk>& chunks,
                    std::size_t n, std::size_t m);

std::vector<pipeline::Chunk> read_clip(const fs::path& root, const ClipInfo& info, const Index& idx,
                                       std::size_t clip_index = 0);

/// All chunks of the clips in `split` ("all" selects every clip), in index
/// order. clip_index of each chunk is its position in idx.clips.
std::vector<pipeline::Chunk> read_split(const fs::path& root, const Index& idx, const std::string& split);

}  // namespace pulsekit::dataset
