#pragma once

#include "eyeseg/raster.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace eyeseg::io {

using Bytes = std::vector<std::uint8_t>;
using Rgb = std::array<std::uint8_t, 3>;

/// Receives non-fatal diagnostics (e.g. colour input collapsed to grey).
using WarningSink = std::function<void(const std::string&)>;

Bytes read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const Bytes& bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

/// Decodes a PNG or binary PGM (P5). Colour inputs are averaged across
/// channels; alpha is dropped. `warn` is called once when that happens.
GrayImage decode_image(const Bytes& bytes, const WarningSink& warn = {});
GrayImage read_image(const std::filesystem::path& path, const WarningSink& warn = {});

/// 8-bit greyscale PNG. Values are rounded and clamped to [0, 255].
Bytes encode_gray_png(const GrayImage& image);
Bytes encode_gray_png(const Raster<std::uint8_t>& image);
void write_gray_png(const std::filesystem::path& path, const GrayImage& image);

/// 8-bit palette PNG holding raw palette indices.
Bytes encode_indexed_png(const Raster<std::uint8_t>& indices, const std::vector<Rgb>& palette);
/// Returns the palette indices of an indexed PNG; throws if the PNG is not palette-based.
Raster<std::uint8_t> decode_indexed_png(const Bytes& bytes);

Bytes encode_rgb_png(int width, int height, const std::vector<Rgb>& pixels);

GrayImage decode_pgm(const Bytes& bytes);

std::string base64_encode(const Bytes& bytes);
Bytes base64_decode(std::string_view text);

} // namespace eyeseg::io
