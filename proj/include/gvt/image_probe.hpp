#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "gvt/resolution.hpp"

// Reads image dimensions from PNG, JPEG and TIFF headers without decoding pixels.
namespace gvt {

// Throws SchemaError for unknown or truncated headers, IoError when unreadable.
ImageGeometry probe_image(std::span<const std::uint8_t> bytes);
ImageGeometry probe_image_file(const std::filesystem::path& path);

}  // namespace gvt
