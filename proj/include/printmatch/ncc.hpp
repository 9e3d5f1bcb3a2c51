#pragma once

#include <vector>

#include "printmatch/image.hpp"

namespace printmatch {

/// Real-valued grid; binary masks and raw regression maps both convert to it.
struct RealGrid {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    static RealGrid from_mask(const BinaryMask& mask);
    /// Samples scaled to [0, 1].
    static RealGrid from_gray(const ImageBuffer& gray);
};

/// Normalized cross-correlation sum((a-ma)(b-mb)) / (n sa sb), population sigma.
/// If either grid is constant: 1 when both are constant and equal, else 0.
double ncc(const RealGrid& a, const RealGrid& b);
double ncc(const BinaryMask& a, const BinaryMask& b);

}  // namespace printmatch
