#include "segprior/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace segprior {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw IoError(path.string() + ": " + what);
}

// Skips PGM whitespace and '#' comment lines, then parses one decimal token.
int read_pnm_int(std::istream& in, const std::filesystem::path& path) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (!std::isspace(ch)) {
      break;
    }
    ch = in.get();
  }
  if (ch == EOF || !std::isdigit(ch)) fail(path, "malformed PGM header");
  long value = 0;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    if (value > 1 << 30) fail(path, "PGM header value out of range");
    ch = in.get();
  }
  return static_cast<int>(value);
}

void put_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(std::istream& in, const std::filesystem::path& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) fail(path, "truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::vector<ScalarGrid> read_psg1_planes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "PSG1", 4) != 0) fail(path, "bad PSG1 magic");
  const std::uint32_t h = get_u32_le(in, path);
  const std::uint32_t w = get_u32_le(in, path);
  const std::uint32_t channels = get_u32_le(in, path);
  if (h < 1 || w < 1 || channels < 1) fail(path, "invalid PSG1 dimensions");
  if (h > (1u << 20) || w > (1u << 20) || channels > (1u << 16)) fail(path, "implausible PSG1 dimensions");

  const GridDomain dom(static_cast<int>(h), static_cast<int>(w));
  std::vector<ScalarGrid> planes;
  std::vector<unsigned char> raw(dom.size() * 4);
  for (std::uint32_t c = 0; c < channels; ++c) {
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
      fail(path, "truncated pixel data");
    ScalarGrid g(dom);
    for (std::size_t i = 0; i < dom.size(); ++i) {
      std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                           (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                           (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                           (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
      const float f = std::bit_cast<float>(bits);
      if (!std::isfinite(f)) fail(path, "non-finite value at pixel " + std::to_string(i));
      g[i] = static_cast<double>(f);
    }
    planes.push_back(std::move(g));
  }
  if (in.get() != EOF) fail(path, "trailing bytes after pixel data");
  return planes;
}

void write_psg1_planes(const std::filesystem::path& path, const std::vector<const ScalarGrid*>& planes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  const GridDomain& dom = planes[0]->domain();
  out.write("PSG1", 4);
  put_u32_le(out, static_cast<std::uint32_t>(dom.height));
  put_u32_le(out, static_cast<std::uint32_t>(dom.width));
  put_u32_le(out, static_cast<std::uint32_t>(planes.size()));
  std::vector<unsigned char> raw(dom.size() * 4);
  for (const ScalarGrid* g : planes) {
    for (std::size_t i = 0; i < dom.size(); ++i) {
      const float f = static_cast<float>((*g)[i]);
      if (!std::isfinite(f)) fail(path, "refusing to write non-finite value at pixel " + std::to_string(i));
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
      raw[4 * i] = static_cast<unsigned char>(bits & 0xff);
      raw[4 * i + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
      raw[4 * i + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
      raw[4 * i + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  }
  if (!out) fail(path, "write failure");
}

}  // namespace

BinaryMask read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  char magic[2];
  if (!in.read(magic, 2) || magic[0] != 'P' || magic[1] != '5') fail(path, "not a P5 PGM file");
  const int w = read_pnm_int(in, path);
  const int h = read_pnm_int(in, path);
  const int maxval = read_pnm_int(in, path);
  if (w < 1 || h < 1) fail(path, "invalid PGM dimensions");
  if (maxval != 1 && maxval != 255) fail(path, "mask PGM maxval must be 1 or 255");

  const GridDomain dom(h, w);
  std::vector<std::uint8_t> raw(dom.size());
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    fail(path, "truncated pixel data");
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == 0) continue;
    if (raw[i] == maxval)
      raw[i] = 1;
    else
      fail(path, "pixel " + std::to_string(i) + " is neither 0 nor maxval");
  }
  return BinaryMask(dom, std::move(raw));
}

void write_pgm(const std::filesystem::path& path, const BinaryMask& mask) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out << "P5\n" << mask.width() << " " << mask.height() << "\n255\n";
  std::vector<std::uint8_t> raw(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) raw[i] = mask[i] ? 255 : 0;
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(path, "write failure");
}

ScalarGrid read_psg1(const std::filesystem::path& path) {
  auto planes = read_psg1_planes(path);
  if (planes.size() != 1)
    fail(path, "expected a single channel, found " + std::to_string(planes.size()));
  return std::move(planes[0]);
}

MultiClassStack read_psg1_stack(const std::filesystem::path& path) {
  return MultiClassStack(read_psg1_planes(path));
}

void write_psg1(const std::filesystem::path& path, const ScalarGrid& grid) {
  write_psg1_planes(path, {&grid});
}

void write_psg1(const std::filesystem::path& path, const MultiClassStack& stack) {
  std::vector<const ScalarGrid*> planes;
  for (int c = 0; c < stack.classes(); ++c) planes.push_back(&stack.layer(c));
  write_psg1_planes(path, planes);
}

}  // namespace segprior
