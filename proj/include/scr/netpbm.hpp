#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "scr/image.hpp"

namespace scr::netpbm {

/// Binary P5 with maxval 255; each sample is round(255 * clamp(v, 0, 1)).
std::string encode_pgm(const GrayImage& img);
/// Binary P6 with maxval 255.
std::string encode_ppm(const RgbImage& img);

/// Decodes P2/P3/P5/P6 (maxval up to 65535) into [0,1] samples.
/// Gray files come back as GrayImage, colour files as RgbImage.
std::variant<GrayImage, RgbImage> decode(const std::string& bytes);

void write_pgm(const std::filesystem::path& path, const GrayImage& img);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);
std::variant<GrayImage, RgbImage> read(const std::filesystem::path& path);

/// Reads any Netpbm file as RGB (gray is replicated).
RgbImage read_rgb(const std::filesystem::path& path);

}  // namespace scr::netpbm
