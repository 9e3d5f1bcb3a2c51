#pragma once

#include <string>

#include "printmatch/image.hpp"

namespace printmatch {

/// Axis-aligned rectangle in pixel coordinates.
struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool fits(int width, int height) const {
        return x >= 0 && y >= 0 && w >= 1 && h >= 1 && x + w <= width && y + h <= height;
    }
    bool operator==(const Rect&) const = default;
};

struct AnnotationRecord {
    std::string photo_id;
    Rect rect;
};

BinaryMask rect_to_mask(const AnnotationRecord& ann, int width, int height);
BinaryMask rect_to_mask(const Rect& rect, int width, int height);

/// Tight bounding rectangle of the set bits; nullopt-free: an empty mask yields w = h = 0.
Rect bounding_rect(const BinaryMask& mask);

/// Bilinear upsample of a small gray map (e.g. a 30x30 network output) to
/// photo resolution followed by a >= 128 threshold.
BinaryMask upsample_binarize(const ImageBuffer& mask_small, int target_w, int target_h);

}  // namespace printmatch
