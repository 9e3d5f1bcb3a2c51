#include "printmatch/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "printmatch/error.hpp"

namespace printmatch {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw ParseError(std::string("PNG decode failed: ") + image.message);

    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int channels = color ? 3 : 1;
    if (image.width == 0 || image.height == 0) {
        png_image_free(&image);
        throw ParseError("PNG has zero dimensions");
    }
    std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, data.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw ParseError("PNG decode failed: " + msg);
    }
    return ImageBuffer(static_cast<int>(image.width), static_cast<int>(image.height), channels,
                       std::move(data));
}

ImageBuffer read_png(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_png(bytes);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data().data(), 0, nullptr))
        throw IoError(std::string("PNG encode failed: ") + image.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.data().data(), 0, nullptr))
        throw IoError(std::string("PNG encode failed: ") + image.message);
    out.resize(size);
    return out;
}

void write_png(const fs::path& path, const ImageBuffer& img) { write_file_bytes(path, encode_png(img)); }

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(bytes[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
    return tok;
}

}  // namespace

ImageBuffer parse_pgm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    if (pgm_token(bytes, pos) != "P5") throw ParseError("PGM: expected P5 magic");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(pgm_token(bytes, pos));
        h = std::stoi(pgm_token(bytes, pos));
        maxval = std::stoi(pgm_token(bytes, pos));
    } catch (const std::exception&) {
        throw ParseError("PGM: malformed header");
    }
    if (w < 1 || h < 1) throw ParseError("PGM: bad dimensions");
    if (maxval != 255) throw ParseError("PGM: only maxval 255 is supported, got " + std::to_string(maxval));
    ++pos;  // single whitespace after maxval
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (pos + n > bytes.size()) throw ParseError("PGM: truncated pixel data");
    return ImageBuffer(w, h, 1, std::vector<std::uint8_t>(bytes.begin() + pos, bytes.begin() + pos + n));
}

ImageBuffer read_pgm(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return parse_pgm(bytes);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_pgm(const fs::path& path, const ImageBuffer& gray) {
    if (gray.channels() != 1) throw InvalidArgument("PGM output requires a single-channel image");
    const std::string header =
        "P5\n" + std::to_string(gray.width()) + " " + std::to_string(gray.height()) + "\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), gray.data().begin(), gray.data().end());
    write_file_bytes(path, bytes);
}

ImageBuffer mask_to_image(const BinaryMask& mask) {
    std::vector<std::uint8_t> data(mask.bits().size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = mask.bits()[i] ? 255 : 0;
    return ImageBuffer(mask.width(), mask.height(), 1, std::move(data));
}

BinaryMask image_to_mask(const ImageBuffer& gray) {
    BinaryMask mask(gray.width(), gray.height());
    for (int y = 0; y < gray.height(); ++y)
        for (int x = 0; x < gray.width(); ++x) mask.set(x, y, gray.at(x, y) != 0);
    return mask;
}

void write_mask_pgm(const fs::path& path, const BinaryMask& mask) { write_pgm(path, mask_to_image(mask)); }

ImageBuffer decode_image(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return parse_pgm(bytes);
    return decode_png(bytes);
}

ImageBuffer read_image(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_image(bytes);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace printmatch
