#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace printmatch {

/// Row-major 8-bit image with 1 (gray) or 3 (RGB) interleaved channels.
class ImageBuffer {
public:
    ImageBuffer() = default;
    ImageBuffer(int width, int height, int channels, std::uint8_t fill = 0);
    ImageBuffer(int width, int height, int channels, std::vector<std::uint8_t> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    bool empty() const noexcept { return data_.empty(); }

    std::uint8_t& at(int x, int y, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    std::span<const std::uint8_t> data() const noexcept { return data_; }
    std::span<std::uint8_t> data() noexcept { return data_; }

    bool operator==(const ImageBuffer&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Per-pixel product (1) / background (0) labeling.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool value = false);

    static BinaryMask full(int width, int height) { return BinaryMask(width, height, true); }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

    std::size_t count() const noexcept;
    bool all() const noexcept { return count() == bits_.size(); }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    bool operator==(const BinaryMask&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Single-channel real-valued image, used for all filtering work.
struct FloatImage {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    FloatImage() = default;
    FloatImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    float& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    /// Edge-clamped read.
    float clamped(int x, int y) const;
    /// Bilinear sample with edge clamping; pixel centers sit on integers.
    float bilinear(double x, double y) const;
};

/// Luma in [0, 1] (Rec. 601 weights for RGB).
FloatImage to_gray(const ImageBuffer& img);
ImageBuffer to_gray_u8(const ImageBuffer& img);
/// Quantizes a [0, 1] image back to 8 bits.
ImageBuffer to_u8(const FloatImage& img);

/// Bilinear resize, pixel-center aligned.
FloatImage resize_bilinear(const FloatImage& src, int width, int height);
/// Box-filter downsample (area average); falls back to bilinear when enlarging.
FloatImage resize_area(const FloatImage& src, int width, int height);

BinaryMask resize_nearest(const BinaryMask& src, int width, int height);

}  // namespace printmatch
