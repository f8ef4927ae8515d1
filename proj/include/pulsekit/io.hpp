#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pulsekit/tensor.hpp"

namespace pulsekit::io {

namespace fs = std::filesystem;

/// "PKT1" | u32 rank | u32 dims[rank] | f32 data, all little-endian.
void write_pkt1(const fs::path& path, const nn::Tensor& t);
nn::Tensor read_pkt1(const fs::path& path);
std::string encode_pkt1(const nn::Tensor& t);
nn::Tensor decode_pkt1(const std::string& bytes, const std::string& origin = "<memory>");

/// Frame [3,H,W] in [0,1] -> 16-bit RGB PNG (values rounded, clamped).
void write_png16(const fs::path& path, const nn::Tensor& frame);
/// 8- or 16-bit RGB/RGBA/gray PNG -> [3,H,W] in [0,1].
nn::Tensor read_png(const fs::path& path);
/// Binary P6 with maxval up to 65535 -> [3,H,W] in [0,1].
nn::Tensor read_ppm(const fs::path& path);
void write_ppm16(const fs::path& path, const nn::Tensor& frame);
/// Dispatch on extension (.png / .ppm).
nn::Tensor read_frame(const fs::path& path);

/// Hex SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const fs::path& path);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// Header row plus numeric columns of equal length. Values use %.17g.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
  std::vector<double> column_values(const std::string& name) const;
};
void write_csv(const fs::path& path, const Csv& csv);
Csv read_csv(const fs::path& path);

/// Shortest round-trip representation of a double.
std::string format_double(double v);

}  // namespace pulsekit::io
