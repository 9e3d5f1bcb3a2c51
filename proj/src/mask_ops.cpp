#include "printmatch/mask_ops.hpp"

#include <algorithm>

#include "printmatch/error.hpp"

namespace printmatch {

BinaryMask rect_to_mask(const Rect& r, int width, int height) {
    if (!r.fits(width, height))
        throw InvalidArgument("rectangle (" + std::to_string(r.x) + "," + std::to_string(r.y) + "," +
                              std::to_string(r.w) + "," + std::to_string(r.h) + ") outside " +
                              std::to_string(width) + "x" + std::to_string(height));
    BinaryMask mask(width, height);
    for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x) mask.set(x, y, true);
    return mask;
}

BinaryMask rect_to_mask(const AnnotationRecord& ann, int width, int height) {
    try {
        return rect_to_mask(ann.rect, width, height);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument("annotation of " + ann.photo_id + ": " + e.what());
    }
}

Rect bounding_rect(const BinaryMask& mask) {
    int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(x, y)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) return Rect{};
    return Rect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

BinaryMask upsample_binarize(const ImageBuffer& mask_small, int target_w, int target_h) {
    if (mask_small.empty()) throw InvalidArgument("upsample_binarize: empty input mask");
    if (target_w < 1 || target_h < 1) throw InvalidArgument("upsample_binarize: bad target size");
    const ImageBuffer gray = to_gray_u8(mask_small);
    FloatImage src(gray.width(), gray.height());
    for (int y = 0; y < gray.height(); ++y)
        for (int x = 0; x < gray.width(); ++x) src.at(x, y) = gray.at(x, y);

    BinaryMask out(target_w, target_h);
    const double sx = static_cast<double>(src.width) / target_w;
    const double sy = static_cast<double>(src.height) / target_h;
    for (int y = 0; y < target_h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < target_w; ++x) out.set(x, y, src.bilinear((x + 0.5) * sx - 0.5, fy) >= 128.0f);
    }
    return out;
}

}  // namespace printmatch
