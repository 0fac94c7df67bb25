#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pico/core/image.hpp"

namespace pico {

using Bytes = std::vector<std::uint8_t>;

std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_file(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(const std::string& text);

// Lossless 8-bit PNG (gray or RGB). Encoding quantizes [0,1] intensities to
// 0..255; decoding maps back by /255.
Bytes encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> data);
Image read_png(const std::filesystem::path& path);

Bytes read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data);

}  // namespace pico
