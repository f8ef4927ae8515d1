#include "pulsekit/dataset.hpp"

#include <algorithm>

#include "pulsekit/error.hpp"
#include "pulsekit/io.hpp"

namespace pulsekit::dataset {

using nlohmann::json;

json to_json(const Index& idx) {
  json clips = json::array();
  for (const auto& c : idx.clips) {
    clips.push_back(json{{"id", c.id}, {"split", c.split}, {"dir", c.dir}, {"fps", c.fps}, {"chunks", c.chunks},
                         {"au_count", c.au_count}});
  }
  return json{{"format", "pulsekit-chunks-1"}, {"n", idx.n},         {"m", idx.m},
              {"big_size", idx.big_size},      {"small_size", idx.small_size}, {"label", idx.label},
              {"corpus", idx.corpus},          {"clips", clips}};
}

Index index_from_json(const json& j) {
  Index idx;
  try {
    idx.n = j.at("n");
    idx.m = j.at("m");
    idx.big_size = j.at("big_size");
    idx.small_size = j.at("small_size");
    idx.label = j.value("label", std::string("pseudo"));
    idx.corpus = j.value("corpus", std::string());
    for (const auto& c : j.at("clips")) {
      idx.clips.push_back({c.at("id"), c.at("split"), c.at("dir"), c.at("fps"), c.at("chunks"), c.value("au_count", std::size_t{0})});
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bad chunks.json: ") + e.what());
  }
  return idx;
}

Index read_index(const fs::path& root) {
  const fs::path p = root / "chunks.json";
  if (!fs::exists(p)) throw DataError("no chunks.json in " + root.string());
  try {
    return index_from_json(json::parse(io::read_text(p)));
  } catch (const json::parse_error& e) {
    throw DataError("cannot parse " + p.string() + ": " + e.what());
  }
}

void write_index(const fs::path& root, const Index& idx) { io::write_text(root / "chunks.json", to_json(idx).dump(2) + "\n"); }

ClipInfo write_clip(const fs::path& root, const ClipInfo& info, const std::vector<pipeline::Chunk>& chunks,
                    std::size_t n, std::size_t m) {
  if (chunks.empty()) throw DataError("clip " + info.id + " produced no chunks");
  ClipInfo out = info;
  out.chunks = chunks.size();
  out.au_count = chunks[0].au_count;
  const std::size_t n_big = (n + m - 1) / m;
  const auto& b0 = chunks[0].big;
  const auto& s0 = chunks[0].small;
  nn::Tensor big({chunks.size() * n_big, b0.dim(1), b0.dim(2), b0.dim(3)});
  nn::Tensor small({chunks.size() * n, s0.dim(1), s0.dim(2), s0.dim(3)});
  io::Csv csv;
  csv.header = {"frame", "ppg", "resp"};
  for (std::size_t a = 0; a < out.au_count; ++a) csv.header.push_back("au_" + std::to_string(a));
  for (std::size_t k = 0; k < chunks.size(); ++k) {
    const auto& c = chunks[k];
    std::copy_n(c.big.ptr(), c.big.size(), big.ptr() + k * b0.size());
    std::copy_n(c.small.ptr(), c.small.size(), small.ptr() + k * s0.size());
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row{static_cast<double>(c.start + i), c.ppg.empty() ? 0.0 : c.ppg[i],
                              c.resp.empty() ? 0.0 : c.resp[i]};
      for (std::size_t a = 0; a < out.au_count; ++a) row.push_back(c.au[i * out.au_count + a]);
      csv.rows.push_back(std::move(row));
    }
  }
  const fs::path dir = root / out.dir;
  fs::create_directories(dir);
  io::write_pkt1(dir / "big.pkt1", big);
  io::write_pkt1(dir / "small.pkt1", small);
  io::write_csv(dir / "labels.csv", csv);
  return out;
}

std::vector<pipeline::Chunk> read_clip(const fs::path& root, const ClipInfo& info, const Index& idx,
                                       std::size_t clip_index) {
  const fs::path dir = root / info.dir;
  const nn::Tensor big = io::read_pkt1(dir / "big.pkt1");
  const nn::Tensor small = io::read_pkt1(dir / "small.pkt1");
  const io::Csv csv = io::read_csv(dir / "labels.csv");
  const std::size_t n = idx.n, n_big = (idx.n + idx.m - 1) / idx.m, k_count = info.chunks;
  if (big.rank() != 4 || big.dim(0) != k_count * n_big || small.rank() != 4 || small.dim(0) != k_count * n ||
      csv.rows.size() != k_count * n) {
    throw DataError("clip " + info.id + ": tensor sizes disagree with chunks.json");
  }
  const auto frame = csv.column_values("frame");
  const auto ppg = csv.column_values("ppg");
  const auto resp = csv.column_values("resp");
  std::vector<std::vector<double>> au;
  for (std::size_t a = 0; a < info.au_count; ++a) au.push_back(csv.column_values("au_" + std::to_string(a)));
  const std::size_t big_inner = big.size() / big.dim(0), small_inner = small.size() / small.dim(0);
  std::vector<pipeline::Chunk> out;
  for (std::size_t k = 0; k < k_count; ++k) {
    pipeline::Chunk c;
    c.clip = clip_index;
    c.start = static_cast<std::size_t>(frame[k * n]);
    c.big = nn::Tensor({n_big, big.dim(1), big.dim(2), big.dim(3)});
    std::copy_n(big.ptr() + k * n_big * big_inner, n_big * big_inner, c.big.ptr());
    c.small = nn::Tensor({n, small.dim(1), small.dim(2), small.dim(3)});
    std::copy_n(small.ptr() + k * n * small_inner, n * small_inner, c.small.ptr());
    c.au_count = info.au_count;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = k * n + i;
      c.ppg.push_back(static_cast<float>(ppg[r]));
      c.resp.push_back(static_cast<float>(resp[r]));
      for (std::size_t a = 0; a < info.au_count; ++a) c.au.push_back(au[a][r] > 0.0 ? 1 : 0);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<pipeline::Chunk> read_split(const fs::path& root, const Index& idx, const std::string& split) {
  std::vector<pipeline::Chunk> out;
  for (std::size_t i = 0; i < idx.clips.size(); ++i) {
    if (split != "all" && idx.clips[i].split != split) continue;
    auto c = read_clip(root, idx.clips[i], idx, i);
    std::move(c.begin(), c.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace pulsekit::dataset
