#pragma once

#include <filesystem>
#include <string>

#include "printmatch/image.hpp"
#include "printmatch/rng.hpp"

namespace testutil {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(PRINTMATCH_FIXTURES) / name; }

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("printmatch_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline printmatch::BinaryMask random_mask(int w, int h, printmatch::Rng& rng, double p = 0.5) {
    printmatch::BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.set(x, y, rng.uniform() < p);
    return m;
}

inline printmatch::ImageBuffer random_gray(int w, int h, printmatch::Rng& rng) {
    printmatch::ImageBuffer img(w, h, 1);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

}  // namespace testutil
