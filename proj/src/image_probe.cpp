#include "gvt/image_probe.hpp"

#include <fstream>
#include <iterator>
#include <vector>

namespace gvt {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::SchemaError, msg); }

struct Reader {
  std::span<const std::uint8_t> b;
  bool little = false;

  void need(std::size_t off, std::size_t n) const {
    if (off + n > b.size()) bad("truncated image header");
  }
  std::uint32_t u16(std::size_t off) const {
    need(off, 2);
    return little ? b[off] | (b[off + 1] << 8) : (b[off] << 8) | b[off + 1];
  }
  std::uint32_t u32(std::size_t off) const {
    need(off, 4);
    const std::uint32_t lo = u16(off), hi = u16(off + 2);
    return little ? lo | (hi << 16) : (lo << 16) | hi;
  }
};

ImageGeometry png(const Reader& r) {
  // signature, IHDR length, "IHDR", width, height
  if (r.u32(12) != 0x49484452u) bad("PNG without IHDR");
  return make_geometry(r.u32(20), r.u32(16));
}

ImageGeometry jpeg(const Reader& r) {
  std::size_t pos = 2;
  while (true) {
    r.need(pos, 4);
    if (r.b[pos] != 0xFF) bad("corrupt JPEG marker stream");
    const std::uint8_t m = r.b[pos + 1];
    if (m == 0xFF) {
      ++pos;
      continue;
    }
    if (m == 0xD8 || m == 0x01 || (m >= 0xD0 && m <= 0xD7)) {
      pos += 2;
      continue;
    }
    if (m == 0xD9 || m == 0xDA) bad("JPEG without a frame header");
    const std::uint32_t len = r.u16(pos + 2);
    const bool sof = m >= 0xC0 && m <= 0xCF && m != 0xC4 && m != 0xC8 && m != 0xCC;
    if (sof) return make_geometry(r.u16(pos + 5), r.u16(pos + 7));
    pos += 2 + len;
  }
}

ImageGeometry tiff(Reader r) {
  r.little = r.b[0] == 'I';
  if (r.u16(2) != 42) bad("unsupported TIFF variant");
  const std::size_t ifd = r.u32(4);
  const std::uint32_t n = r.u16(ifd);
  std::int64_t w = 0, h = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t e = ifd + 2 + 12 * i;
    const std::uint32_t tag = r.u16(e), type = r.u16(e + 2);
    if (tag != 256 && tag != 257) continue;
    const std::int64_t v = type == 3 ? r.u16(e + 8) : type == 4 ? r.u32(e + 8) : -1;
    if (v < 0) bad("unsupported TIFF dimension type");
    (tag == 256 ? w : h) = v;
  }
  if (w <= 0 || h <= 0) bad("TIFF without dimensions");
  return make_geometry(h, w);
}

}  // namespace

ImageGeometry probe_image(std::span<const std::uint8_t> bytes) {
  const Reader r{bytes};
  static constexpr std::uint8_t kPng[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::equal(kPng, kPng + 8, bytes.begin())) return png(r);
  if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8) return jpeg(r);
  if (bytes.size() >= 4 && ((bytes[0] == 'I' && bytes[1] == 'I') || (bytes[0] == 'M' && bytes[1] == 'M'))) return tiff(r);
  bad("unrecognized image format");
}

ImageGeometry probe_image_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return probe_image(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace gvt
