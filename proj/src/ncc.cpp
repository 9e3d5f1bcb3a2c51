#include "printmatch/ncc.hpp"

#include <cmath>
#include <string>

#include "printmatch/error.hpp"

namespace printmatch {

RealGrid RealGrid::from_mask(const BinaryMask& mask) {
    RealGrid g{mask.width(), mask.height(), {}};
    g.values.reserve(mask.bits().size());
    for (auto b : mask.bits()) g.values.push_back(b ? 1.0 : 0.0);
    return g;
}

RealGrid RealGrid::from_gray(const ImageBuffer& gray) {
    const ImageBuffer g8 = to_gray_u8(gray);
    RealGrid g{g8.width(), g8.height(), {}};
    g.values.reserve(g8.data().size());
    for (auto v : g8.data()) g.values.push_back(v / 255.0);
    return g;
}

double ncc(const RealGrid& a, const RealGrid& b) {
    if (a.width != b.width || a.height != b.height || a.values.size() != b.values.size())
        throw DimensionError("ncc: dimension mismatch " + std::to_string(a.width) + "x" +
                             std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                             std::to_string(b.height));
    const std::size_t n = a.values.size();
    if (n == 0) throw DimensionError("ncc: empty grids");

    // constant detection is exact; a computed variance can be a rounding residue
    bool const_a = true, const_b = true;
    for (std::size_t i = 1; i < n; ++i) {
        const_a = const_a && a.values[i] == a.values[0];
        const_b = const_b && b.values[i] == b.values[0];
    }

    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_a += a.values[i];
        mean_b += b.values[i];
    }
    mean_a /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);

    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a.values[i] - mean_a;
        const double db = b.values[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (const_a || const_b) return (const_a && const_b && a.values[0] == b.values[0]) ? 1.0 : 0.0;
    // n*sa*sb == sqrt(var_a * var_b) with the sums above
    return cov / std::sqrt(var_a * var_b);
}

double ncc(const BinaryMask& a, const BinaryMask& b) { return ncc(RealGrid::from_mask(a), RealGrid::from_mask(b)); }

}  // namespace printmatch
