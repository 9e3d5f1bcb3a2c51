#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "printmatch/image.hpp"

namespace printmatch {

ImageBuffer read_png(const std::filesystem::path& path);
/// Decodes PNG bytes held in memory; throws ParseError on anything undecodable.
ImageBuffer decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);
void write_png(const std::filesystem::path& path, const ImageBuffer& img);

/// Binary PGM (P5, maxval 255).
ImageBuffer read_pgm(const std::filesystem::path& path);
ImageBuffer parse_pgm(std::span<const std::uint8_t> bytes);
void write_pgm(const std::filesystem::path& path, const ImageBuffer& gray);

/// Masks travel as 0/255 PGM.
void write_mask_pgm(const std::filesystem::path& path, const BinaryMask& mask);
ImageBuffer mask_to_image(const BinaryMask& mask);
/// Any nonzero sample is foreground.
BinaryMask image_to_mask(const ImageBuffer& gray);

/// Dispatches on the file magic (PNG or PGM).
ImageBuffer read_image(const std::filesystem::path& path);
/// PGM (P5) or PNG, chosen by the leading bytes.
ImageBuffer decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace printmatch
