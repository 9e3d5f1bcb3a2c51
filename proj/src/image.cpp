#include "printmatch/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "printmatch/error.hpp"

namespace printmatch {

namespace {

void check_dims(int width, int height, int channels) {
    if (width < 1 || height < 1)
        throw InvalidArgument("image dimensions must be >= 1, got " + std::to_string(width) + "x" +
                              std::to_string(height));
    if (channels != 1 && channels != 3)
        throw InvalidArgument("image must have 1 or 3 channels, got " + std::to_string(channels));
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
    check_dims(width, height, channels);
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

ImageBuffer::ImageBuffer(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    check_dims(width, height, channels);
    if (data_.size() != static_cast<std::size_t>(width) * height * channels)
        throw DimensionError("image data length " + std::to_string(data_.size()) + " != " +
                             std::to_string(width) + "*" + std::to_string(height) + "*" +
                             std::to_string(channels));
}

BinaryMask::BinaryMask(int width, int height, bool value) : width_(width), height_(height) {
    if (width < 1 || height < 1) throw InvalidArgument("mask dimensions must be >= 1");
    bits_.assign(static_cast<std::size_t>(width) * height, value ? 1 : 0);
}

std::size_t BinaryMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

float FloatImage::clamped(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return at(x, y);
}

float FloatImage::bilinear(double x, double y) const {
    x = std::clamp(x, 0.0, static_cast<double>(width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(height - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, width - 1);
    const int y1 = std::min(y0 + 1, height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
    const double bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
    return static_cast<float>(top * (1.0 - fy) + bottom * fy);
}

FloatImage to_gray(const ImageBuffer& img) {
    FloatImage out(img.width(), img.height());
    const auto data = img.data();
    const std::size_t n = static_cast<std::size_t>(img.width()) * img.height();
    if (img.channels() == 1) {
        for (std::size_t i = 0; i < n; ++i) out.pixels[i] = data[i] / 255.0f;
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const float r = data[3 * i], g = data[3 * i + 1], b = data[3 * i + 2];
            out.pixels[i] = (0.299f * r + 0.587f * g + 0.114f * b) / 255.0f;
        }
    }
    return out;
}

ImageBuffer to_u8(const FloatImage& img) {
    std::vector<std::uint8_t> data(img.pixels.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.pixels[i], 0.0f, 1.0f) * 255.0f));
    return ImageBuffer(img.width, img.height, 1, std::move(data));
}

ImageBuffer to_gray_u8(const ImageBuffer& img) {
    if (img.channels() == 1) return img;
    return to_u8(to_gray(img));
}

FloatImage resize_bilinear(const FloatImage& src, int width, int height) {
    FloatImage out(width, height);
    const double sx = static_cast<double>(src.width) / width;
    const double sy = static_cast<double>(src.height) / height;
    for (int y = 0; y < height; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < width; ++x) out.at(x, y) = src.bilinear((x + 0.5) * sx - 0.5, fy);
    }
    return out;
}

FloatImage resize_area(const FloatImage& src, int width, int height) {
    if (width >= src.width || height >= src.height) return resize_bilinear(src, width, height);
    FloatImage out(width, height);
    const double sx = static_cast<double>(src.width) / width;
    const double sy = static_cast<double>(src.height) / height;
    for (int y = 0; y < height; ++y) {
        const double y0 = y * sy, y1 = (y + 1) * sy;
        for (int x = 0; x < width; ++x) {
            const double x0 = x * sx, x1 = (x + 1) * sx;
            double acc = 0.0, area = 0.0;
            for (int yy = static_cast<int>(y0); yy < std::min<int>(static_cast<int>(std::ceil(y1)), src.height); ++yy) {
                const double wy = std::min<double>(yy + 1, y1) - std::max<double>(yy, y0);
                if (wy <= 0) continue;
                for (int xx = static_cast<int>(x0); xx < std::min<int>(static_cast<int>(std::ceil(x1)), src.width); ++xx) {
                    const double wx = std::min<double>(xx + 1, x1) - std::max<double>(xx, x0);
                    if (wx <= 0) continue;
                    acc += wx * wy * src.at(xx, yy);
                    area += wx * wy;
                }
            }
            out.at(x, y) = static_cast<float>(acc / area);
        }
    }
    return out;
}

BinaryMask resize_nearest(const BinaryMask& src, int width, int height) {
    BinaryMask out(width, height);
    for (int y = 0; y < height; ++y) {
        const int sy = std::min(src.height() - 1, static_cast<int>((y + 0.5) * src.height() / height));
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(src.width() - 1, static_cast<int>((x + 0.5) * src.width() / width));
            out.set(x, y, src.at(sx, sy));
        }
    }
    return out;
}

}  // namespace printmatch
