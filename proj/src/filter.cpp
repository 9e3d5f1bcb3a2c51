#include "printmatch/filter.hpp"

#include <algorithm>
#include <cmath>

namespace printmatch {

std::vector<float> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<float> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * i * i / (sigma * sigma));
        k[i + radius] = static_cast<float>(v);
        sum += v;
    }
    for (auto& v : k) v = static_cast<float>(v / sum);
    return k;
}

FloatImage gaussian_blur(const FloatImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    const auto k = gaussian_kernel(sigma);
    const int r = static_cast<int>(k.size() / 2);
    const int w = img.width, h = img.height;

    FloatImage tmp(w, h);
    std::vector<float> row(w + 2 * r);
    for (int y = 0; y < h; ++y) {
        for (int x = -r; x < w + r; ++x) row[x + r] = img.at(std::clamp(x, 0, w - 1), y);
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int i = 0; i <= 2 * r; ++i) acc += k[i] * row[x + i];
            tmp.at(x, y) = acc;
        }
    }
    FloatImage out(w, h);
    std::vector<float> acc(w);
    for (int y = 0; y < h; ++y) {
        std::fill(acc.begin(), acc.end(), 0.0f);
        for (int i = -r; i <= r; ++i) {
            const float kv = k[i + r];
            const float* src = &tmp.pixels[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w];
            for (int x = 0; x < w; ++x) acc[x] += kv * src[x];
        }
        std::copy(acc.begin(), acc.end(), &out.pixels[static_cast<std::size_t>(y) * w]);
    }
    return out;
}

FloatImage downsample2(const FloatImage& img) {
    FloatImage out(std::max(1, img.width / 2), std::max(1, img.height / 2));
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) out.at(x, y) = img.at(2 * x, 2 * y);
    return out;
}

void gradients(const FloatImage& img, FloatImage& dx, FloatImage& dy) {
    const int w = img.width, h = img.height;
    dx = FloatImage(w, h);
    dy = FloatImage(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
            const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
            dx.at(x, y) = xr > xl ? (img.at(xr, y) - img.at(xl, y)) / static_cast<float>(xr - xl) : 0.0f;
            dy.at(x, y) = yd > yu ? (img.at(x, yd) - img.at(x, yu)) / static_cast<float>(yd - yu) : 0.0f;
        }
    }
}

}  // namespace printmatch
