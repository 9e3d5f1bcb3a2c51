#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include "printmatch/error.hpp"
#include "printmatch/features.hpp"
#include "printmatch/filter.hpp"

namespace printmatch {

namespace {

constexpr int kDescWidth = 4;    // spatial bins per side
constexpr int kDescBins = 8;     // orientation bins
constexpr int kDescDim = kDescWidth * kDescWidth * kDescBins;
constexpr double kDescMagnification = 3.0;
constexpr float kDescClip = 0.2f;
constexpr int kOriBins = 36;
constexpr double kOriSigmaFactor = 1.5;
constexpr double kOriPeakRatio = 0.8;
constexpr int kBorder = 5;
constexpr int kMaxRefineSteps = 5;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Gradient magnitude and orientation of one smoothed layer.
struct GradientField {
    FloatImage magnitude;
    FloatImage angle;  // [0, 2pi)

    explicit GradientField(const FloatImage& img) : magnitude(img.width, img.height), angle(img.width, img.height) {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                const float dx = img.clamped(x + 1, y) - img.clamped(x - 1, y);
                const float dy = img.clamped(x, y + 1) - img.clamped(x, y - 1);
                magnitude.at(x, y) = std::sqrt(dx * dx + dy * dy);
                float a = std::atan2(dy, dx);
                if (a < 0) a += static_cast<float>(kTwoPi);
                angle.at(x, y) = a;
            }
    }
};

bool center_in_mask(const BinaryMask& mask, double x, double y) {
    const int ix = static_cast<int>(std::floor(x + 0.5));
    const int iy = static_cast<int>(std::floor(y + 0.5));
    return ix >= 0 && iy >= 0 && ix < mask.width() && iy < mask.height() && mask.at(ix, iy);
}

// Histogram-of-gradients descriptor over a 4x4 grid of `bin_size`-pixel cells
// centered on (x, y) in layer coordinates, rotated by `angle`.
std::array<float, kDescDim> describe(const GradientField& g, double x, double y, double bin_size, double angle) {
    std::array<float, (kDescWidth + 2) * (kDescWidth + 2) * (kDescBins + 2)> hist{};
    const double cos_t = std::cos(angle), sin_t = std::sin(angle);
    const double exp_scale = -1.0 / (0.5 * kDescWidth * kDescWidth);
    const int radius = static_cast<int>(std::lround(bin_size * std::numbers::sqrt2 * (kDescWidth + 1) * 0.5));
    const int xi = static_cast<int>(std::lround(x)), yi = static_cast<int>(std::lround(y));
    const double bins_per_rad = kDescBins / kTwoPi;

    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const int px = xi + dx, py = yi + dy;
            if (px <= 0 || py <= 0 || px >= g.magnitude.width - 1 || py >= g.magnitude.height - 1) continue;
            // sample offset relative to the exact center, rotated into the keypoint frame
            const double ox = px - x, oy = py - y;
            const double c_rot = (cos_t * ox + sin_t * oy) / bin_size;
            const double r_rot = (-sin_t * ox + cos_t * oy) / bin_size;
            const double rbin = r_rot + kDescWidth / 2.0 - 0.5;
            const double cbin = c_rot + kDescWidth / 2.0 - 0.5;
            if (rbin <= -1 || rbin >= kDescWidth || cbin <= -1 || cbin >= kDescWidth) continue;

            double obin = (g.angle.at(px, py) - angle) * bins_per_rad;
            const double mag = g.magnitude.at(px, py) * std::exp((c_rot * c_rot + r_rot * r_rot) * exp_scale);

            const int r0 = static_cast<int>(std::floor(rbin));
            const int c0 = static_cast<int>(std::floor(cbin));
            const double ofloor = std::floor(obin);
            const int o0 = ((static_cast<int>(ofloor) % kDescBins) + kDescBins) % kDescBins;
            const double fr = rbin - r0, fc = cbin - c0, fo = obin - ofloor;

            // trilinear vote into the padded histogram
            for (int ir = 0; ir <= 1; ++ir) {
                const double wr = ir ? fr : 1 - fr;
                for (int ic = 0; ic <= 1; ++ic) {
                    const double wc = ic ? fc : 1 - fc;
                    for (int io = 0; io <= 1; ++io) {
                        const double wo = io ? fo : 1 - fo;
                        const int idx = ((r0 + ir + 1) * (kDescWidth + 2) + (c0 + ic + 1)) * (kDescBins + 2) + o0 + io;
                        hist[idx] += static_cast<float>(mag * wr * wc * wo);
                    }
                }
            }
        }
    }

    std::array<float, kDescDim> desc{};
    for (int r = 0; r < kDescWidth; ++r)
        for (int c = 0; c < kDescWidth; ++c) {
            const int base = ((r + 1) * (kDescWidth + 2) + (c + 1)) * (kDescBins + 2);
            // wrap the orientation overflow bin
            hist[base] += hist[base + kDescBins];
            for (int o = 0; o < kDescBins; ++o) desc[(r * kDescWidth + c) * kDescBins + o] = hist[base + o];
        }

    auto normalize = [&desc] {
        double n2 = 0;
        for (float v : desc) n2 += static_cast<double>(v) * v;
        if (n2 <= 0) return false;
        const float inv = static_cast<float>(1.0 / std::sqrt(n2));
        for (float& v : desc) v *= inv;
        return true;
    };
    if (normalize()) {
        for (float& v : desc) v = std::min(v, kDescClip);
        normalize();
    }
    return desc;
}

struct Octave {
    std::vector<FloatImage> gauss;  // scales + 3 layers
    std::vector<FloatImage> dog;    // scales + 2 layers
    std::vector<std::optional<GradientField>> grads;
};

void orientations(const GradientField& g, double x, double y, double sigma, std::vector<double>& out) {
    out.clear();
    std::array<double, kOriBins> hist{};
    const double s = kOriSigmaFactor * sigma;
    const int radius = static_cast<int>(std::lround(3.0 * s));
    const int xi = static_cast<int>(std::lround(x)), yi = static_cast<int>(std::lround(y));
    const double denom = -1.0 / (2.0 * s * s);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            const int px = xi + dx, py = yi + dy;
            if (px <= 0 || py <= 0 || px >= g.magnitude.width - 1 || py >= g.magnitude.height - 1) continue;
            const double w = std::exp((dx * dx + dy * dy) * denom);
            int bin = static_cast<int>(std::lround(g.angle.at(px, py) * kOriBins / kTwoPi));
            bin = ((bin % kOriBins) + kOriBins) % kOriBins;
            hist[bin] += w * g.magnitude.at(px, py);
        }

    std::array<double, kOriBins> smooth{};
    for (int i = 0; i < kOriBins; ++i) {
        auto h = [&](int k) { return hist[((i + k) % kOriBins + kOriBins) % kOriBins]; };
        smooth[i] = (h(-2) + h(2)) * (1.0 / 16) + (h(-1) + h(1)) * (4.0 / 16) + h(0) * (6.0 / 16);
    }
    const double peak = *std::max_element(smooth.begin(), smooth.end());
    if (peak <= 0) return;
    for (int i = 0; i < kOriBins; ++i) {
        const double l = smooth[(i + kOriBins - 1) % kOriBins], r = smooth[(i + 1) % kOriBins], c = smooth[i];
        if (c > l && c > r && c >= kOriPeakRatio * peak) {
            double bin = i + 0.5 * (l - r) / (l - 2 * c + r);
            bin = bin < 0 ? bin + kOriBins : (bin >= kOriBins ? bin - kOriBins : bin);
            double a = bin * kTwoPi / kOriBins;
            if (a >= kTwoPi) a -= kTwoPi;
            out.push_back(a);
        }
    }
}

}  // namespace

FeatureSet sift_extract(const ImageBuffer& img, const BinaryMask& mask, const SiftOptions& opts) {
    if (img.width() < 8 || img.height() < 8) throw InvalidArgument("sift_extract: image smaller than 8x8");
    if (mask.width() != img.width() || mask.height() != img.height())
        throw DimensionError("sift_extract: mask dimensions differ from the image");

    FeatureSet out;
    out.type = FeatureType::sift;
    out.descriptors.dim = kDescDim;
    if (mask.count() == 0) return out;

    const int s = opts.scales_per_octave;
    FloatImage base = to_gray(img);
    double initial = opts.initial_blur;
    double coord_scale = 1.0;
    if (opts.upsample) {
        base = resize_bilinear(base, base.width * 2, base.height * 2);
        initial *= 2.0;
        coord_scale = 0.5;
    }
    base = gaussian_blur(base, std::sqrt(std::max(opts.sigma0 * opts.sigma0 - initial * initial, 0.01)));

    std::vector<double> layer_sigma(s + 3);
    std::vector<double> increment(s + 3, 0.0);
    for (int i = 0; i < s + 3; ++i) layer_sigma[i] = opts.sigma0 * std::pow(2.0, static_cast<double>(i) / s);
    for (int i = 1; i < s + 3; ++i)
        increment[i] = std::sqrt(layer_sigma[i] * layer_sigma[i] - layer_sigma[i - 1] * layer_sigma[i - 1]);

    const double prefilter = 0.5 * opts.contrast_threshold / s;
    const double edge = (opts.edge_ratio + 1) * (opts.edge_ratio + 1) / opts.edge_ratio;
    std::vector<double> angles;

    FloatImage octave_base = std::move(base);
    for (int o = 0; o < opts.max_octaves && std::min(octave_base.width, octave_base.height) >= 8; ++o) {
        Octave oct;
        oct.gauss.push_back(octave_base);
        for (int i = 1; i < s + 3; ++i) oct.gauss.push_back(gaussian_blur(oct.gauss.back(), increment[i]));
        for (int i = 0; i + 1 < s + 3; ++i) {
            FloatImage d(octave_base.width, octave_base.height);
            for (std::size_t k = 0; k < d.pixels.size(); ++k)
                d.pixels[k] = oct.gauss[i + 1].pixels[k] - oct.gauss[i].pixels[k];
            oct.dog.push_back(std::move(d));
        }
        oct.grads.resize(oct.gauss.size());

        const int w = octave_base.width, h = octave_base.height;
        const double to_image = std::ldexp(1.0, o) * coord_scale;

        for (int layer = 1; layer <= s; ++layer) {
            for (int y = kBorder; y < h - kBorder; ++y) {
                for (int x = kBorder; x < w - kBorder; ++x) {
                    const float v = oct.dog[layer].at(x, y);
                    if (std::abs(v) <= prefilter) continue;
                    bool is_max = v > 0, is_min = v < 0;
                    for (int dl = -1; dl <= 1 && (is_max || is_min); ++dl)
                        for (int dy = -1; dy <= 1 && (is_max || is_min); ++dy)
                            for (int dx = -1; dx <= 1; ++dx) {
                                if (!dl && !dy && !dx) continue;
                                const float n = oct.dog[layer + dl].at(x + dx, y + dy);
                                if (n >= v) is_max = false;
                                if (n <= v) is_min = false;
                            }
                    if (!is_max && !is_min) continue;

                    // sub-pixel refinement by a quadratic fit of the DoG
                    int cx = x, cy = y, cl = layer;
                    double off_x = 0, off_y = 0, off_s = 0, contrast = 0;
                    bool ok = false;
                    double dxx = 0, dyy = 0, dxy = 0;
                    for (int step = 0; step < kMaxRefineSteps; ++step) {
                        const auto& prev = oct.dog[cl - 1];
                        const auto& cur = oct.dog[cl];
                        const auto& next = oct.dog[cl + 1];
                        const double gx = 0.5 * (cur.at(cx + 1, cy) - cur.at(cx - 1, cy));
                        const double gy = 0.5 * (cur.at(cx, cy + 1) - cur.at(cx, cy - 1));
                        const double gs = 0.5 * (next.at(cx, cy) - prev.at(cx, cy));
                        const double c2 = 2.0 * cur.at(cx, cy);
                        dxx = cur.at(cx + 1, cy) + cur.at(cx - 1, cy) - c2;
                        dyy = cur.at(cx, cy + 1) + cur.at(cx, cy - 1) - c2;
                        const double dss = next.at(cx, cy) + prev.at(cx, cy) - c2;
                        dxy = 0.25 * (cur.at(cx + 1, cy + 1) - cur.at(cx - 1, cy + 1) - cur.at(cx + 1, cy - 1) +
                                      cur.at(cx - 1, cy - 1));
                        const double dxs = 0.25 * (next.at(cx + 1, cy) - next.at(cx - 1, cy) - prev.at(cx + 1, cy) +
                                                   prev.at(cx - 1, cy));
                        const double dys = 0.25 * (next.at(cx, cy + 1) - next.at(cx, cy - 1) - prev.at(cx, cy + 1) +
                                                   prev.at(cx, cy - 1));
                        // solve H * off = -g by Cramer's rule
                        const double a = dxx, b = dxy, c = dxs, d = dyy, e = dys, f = dss;
                        const double det = a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c);
                        if (std::abs(det) < 1e-18) break;
                        off_x = -(gx * (d * f - e * e) - b * (gy * f - e * gs) + c * (gy * e - d * gs)) / det;
                        off_y = -(a * (gy * f - e * gs) - gx * (b * f - e * c) + c * (b * gs - gy * c)) / det;
                        off_s = -(a * (d * gs - gy * e) - b * (b * gs - gy * c) + gx * (b * e - d * c)) / det;
                        if (std::abs(off_x) < 0.5 && std::abs(off_y) < 0.5 && std::abs(off_s) < 0.5) {
                            contrast = cur.at(cx, cy) + 0.5 * (gx * off_x + gy * off_y + gs * off_s);
                            ok = true;
                            break;
                        }
                        cx += static_cast<int>(std::lround(off_x));
                        cy += static_cast<int>(std::lround(off_y));
                        cl += static_cast<int>(std::lround(off_s));
                        if (cl < 1 || cl > s || cx < kBorder || cy < kBorder || cx >= w - kBorder || cy >= h - kBorder)
                            break;
                    }
                    if (!ok || std::abs(contrast) < opts.contrast_threshold) continue;
                    const double tr = dxx + dyy, det2 = dxx * dyy - dxy * dxy;
                    if (det2 <= 0 || tr * tr / det2 >= edge) continue;

                    const double lx = cx + off_x, ly = cy + off_y;
                    const double ix = lx * to_image, iy = ly * to_image;
                    if (!center_in_mask(mask, ix, iy)) continue;
                    if (ix < 0 || iy < 0 || ix > img.width() - 1 || iy > img.height() - 1) continue;

                    const double layer_scale = opts.sigma0 * std::pow(2.0, (cl + off_s) / s);
                    if (!oct.grads[cl]) oct.grads[cl].emplace(oct.gauss[cl]);
                    const GradientField& g = *oct.grads[cl];
                    orientations(g, lx, ly, layer_scale, angles);
                    for (double a : angles) {
                        const auto desc = describe(g, lx, ly, kDescMagnification * layer_scale, a);
                        out.keypoints.push_back({static_cast<float>(ix), static_cast<float>(iy),
                                                 static_cast<float>(layer_scale * to_image), static_cast<float>(a)});
                        out.descriptors.append(desc);
                    }
                }
            }
        }
        octave_base = downsample2(oct.gauss[s]);
    }
    return out;
}

FeatureSet dsift_extract(const ImageBuffer& img, const BinaryMask& mask, int stride, int patch) {
    if (stride < 1) throw InvalidArgument("dsift_extract: stride must be >= 1");
    if (patch < 4) throw InvalidArgument("dsift_extract: patch must be >= 4");
    if (img.width() < 8 || img.height() < 8) throw InvalidArgument("dsift_extract: image smaller than 8x8");
    if (mask.width() != img.width() || mask.height() != img.height())
        throw DimensionError("dsift_extract: mask dimensions differ from the image");

    FeatureSet out;
    out.type = FeatureType::dsift;
    out.descriptors.dim = kDescDim;
    const int nx = dense_grid_count(img.width(), stride, patch);
    const int ny = dense_grid_count(img.height(), stride, patch);
    if (nx == 0 || ny == 0 || mask.count() == 0) return out;

    const double bin_size = patch / static_cast<double>(kDescWidth);
    const GradientField g(gaussian_blur(to_gray(img), bin_size / kDescMagnification));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            // integer node centers: top-left of the patch plus half its size
            const int cx = i * stride + patch / 2, cy = j * stride + patch / 2;
            if (!mask.at(std::min(cx, img.width() - 1), std::min(cy, img.height() - 1))) continue;
            // descriptor grid spans the patch: shift the center by half a pixel onto the patch middle
            const auto desc = describe(g, cx - 0.5, cy - 0.5, bin_size, 0.0);
            out.keypoints.push_back({static_cast<float>(cx), static_cast<float>(cy), static_cast<float>(patch / 2.0), 0.0f});
            out.descriptors.append(desc);
        }
    }
    return out;
}

}  // namespace printmatch
