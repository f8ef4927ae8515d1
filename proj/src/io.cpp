#include "pulsekit/io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "pulsekit/error.hpp"

namespace pulsekit::io {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + i])) << (8 * i);
  return v;
}

std::uint16_t to_u16(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint16_t>(std::lround(c * 65535.0f));
}

void check_frame(const nn::Tensor& frame, const char* what) {
  if (frame.rank() != 3 || frame.dim(0) != 3) {
    throw ShapeError(std::string(what) + ": frame must be [3,H,W], got " + nn::shape_str(frame.shape()));
  }
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw DataError("cannot open " + path.string());
  return f;
}

}  // namespace

std::string encode_pkt1(const nn::Tensor& t) {
  std::string out = "PKT1";
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  out.reserve(out.size() + 4 * t.size());
  for (float v : t.data()) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
  }
  return out;
}

nn::Tensor decode_pkt1(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < 8 || bytes.compare(0, 4, "PKT1") != 0) throw DataError(origin + ": not a PKT1 tensor");
  const std::uint32_t rank = get_u32(bytes, 4);
  if (bytes.size() < 8 + 4 * static_cast<std::size_t>(rank)) throw DataError(origin + ": truncated header");
  nn::Shape shape(rank);
  for (std::uint32_t i = 0; i < rank; ++i) shape[i] = get_u32(bytes, 8 + 4 * i);
  const std::size_t off = 8 + 4 * static_cast<std::size_t>(rank);
  const std::size_t count = nn::shape_size(shape);
  if (bytes.size() != off + 4 * count) throw DataError(origin + ": payload length does not match shape");
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = get_u32(bytes, off + 4 * i);
    std::memcpy(&data[i], &bits, 4);
  }
  return nn::Tensor(std::move(shape), std::move(data));
}

void write_pkt1(const fs::path& path, const nn::Tensor& t) { write_text(path, encode_pkt1(t)); }

nn::Tensor read_pkt1(const fs::path& path) { return decode_pkt1(read_text(path), path.string()); }

void write_png16(const fs::path& path, const nn::Tensor& frame) {
  check_frame(frame, "write_png16");
  const std::size_t h = frame.dim(1), w = frame.dim(2);
  auto f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng initialisation failed");
  }
  std::vector<unsigned char> row(w * 6);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("failed writing " + path.string());
  }
  png_init_io(png, f.get());
  png_set_compression_level(png, 1);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 16, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t plane = h * w;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const std::uint16_t v = to_u16(frame[c * plane + y * w + x]);
        row[x * 6 + c * 2] = static_cast<unsigned char>(v >> 8);  // PNG is big-endian
        row[x * 6 + c * 2 + 1] = static_cast<unsigned char>(v & 0xff);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

nn::Tensor read_png(const fs::path& path) {
  auto f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng initialisation failed");
  }
  nn::Tensor out;
  std::vector<unsigned char> buf;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("failed reading PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_expand(png);
  png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buf.resize(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = buf.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  out = nn::Tensor({3, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        float v;
        if (depth == 16) {
          const unsigned char* p = rows[y] + (x * 3 + c) * 2;
          v = static_cast<float>((p[0] << 8) | p[1]) / 65535.0f;
        } else {
          v = static_cast<float>(rows[y][x * 3 + c]) / 255.0f;
        }
        out[c * plane + y * w + x] = v;
      }
    }
  }
  return out;
}

nn::Tensor read_ppm(const fs::path& path) {
  const std::string bytes = read_text(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (next_token() != "P6") throw DataError(path.string() + ": only binary P6 PPM is supported");
  const std::size_t w = std::stoul(next_token());
  const std::size_t h = std::stoul(next_token());
  const std::size_t maxval = std::stoul(next_token());
  ++pos;  // single whitespace before raster
  if (maxval == 0 || maxval > 65535) throw DataError(path.string() + ": bad maxval");
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  if (bytes.size() < pos + w * h * 3 * bpp) throw DataError(path.string() + ": truncated raster");
  nn::Tensor out({3, h, w});
  const std::size_t plane = h * w;
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t k = (i * 3 + c) * bpp;
      const std::size_t v = bpp == 2 ? (static_cast<std::size_t>(p[k]) << 8) | p[k + 1] : p[k];
      out[c * plane + i] = static_cast<float>(v) / static_cast<float>(maxval);
    }
  }
  return out;
}

void write_ppm16(const fs::path& path, const nn::Tensor& frame) {
  check_frame(frame, "write_ppm16");
  const std::size_t h = frame.dim(1), w = frame.dim(2), plane = h * w;
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n65535\n";
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::uint16_t v = to_u16(frame[c * plane + i]);
      out.push_back(static_cast<char>(v >> 8));
      out.push_back(static_cast<char>(v & 0xff));
    }
  }
  write_text(path, out);
}

nn::Tensor read_frame(const fs::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm") return read_ppm(path);
  throw DataError("unsupported frame format: " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw DataError("SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::size_t Csv::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> Csv::column_values(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(c));
  return out;
}

void write_csv(const fs::path& path, const Csv& csv) {
  std::string out;
  for (std::size_t i = 0; i < csv.header.size(); ++i) {
    if (i) out += ',';
    out += csv.header[i];
  }
  out += '\n';
  for (const auto& r : csv.rows) {
    if (r.size() != csv.header.size()) throw InvalidArgument("CSV row width differs from header");
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += format_double(r[i]);
    }
    out += '\n';
  }
  write_text(path, out);
}

Csv read_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  Csv csv;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty CSV");
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      csv.header.push_back(cell);
    }
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream rs(line);
    std::string cell;
    while (std::getline(rs, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc()) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != csv.header.size()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(csv.header.size()) + " columns");
    }
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

}  // namespace pulsekit::io
