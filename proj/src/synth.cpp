#include "printmatch/synth.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "printmatch/error.hpp"
#include "printmatch/filter.hpp"
#include "printmatch/image_io.hpp"
#include "printmatch/parallel.hpp"
#include "printmatch/rng.hpp"

namespace printmatch::synth {

namespace fs = std::filesystem;

void DesignSpec::validate() const {
    if (width < 128 || height < 128) throw InvalidArgument("design dimensions must be >= 128");
    if (min_elements < 3) throw InvalidArgument("design needs at least 3 elements");
    if (max_elements < min_elements) throw InvalidArgument("max_elements < min_elements");
}

void DistortionParams::validate() const {
    const double all[] = {corner_jitter, rotation_deg, scale_jitter, illumination, blur_sigma,
                          noise_sigma,   occluder_max_area, margin};
    for (double v : all)
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("distortion strengths must be finite and >= 0");
    if (occluders < 0 || clutter < 0) throw InvalidArgument("occluder and clutter counts must be >= 0");
    if (occluder_max_area >= 0.5) throw InvalidArgument("occluder area fraction must be < 0.5");
    if (illumination > 1.0) throw InvalidArgument("illumination strength must be in [0, 1]");
    if (scale_jitter >= 1.0) throw InvalidArgument("scale jitter must be < 1");
}

DistortionParams preset(const std::string& name) {
    DistortionParams p;
    if (name == "mild") {
        p.corner_jitter = 0.02;
        p.rotation_deg = 5.0;
        p.scale_jitter = 0.05;
        p.illumination = 0.2;
        p.blur_sigma = 0.6;
        p.noise_sigma = 4.0;
        p.clutter = 4;
        p.margin = 0.15;
    } else if (name == "strong") {
        p.corner_jitter = 0.08;
        p.rotation_deg = 20.0;
        p.scale_jitter = 0.1;
        p.illumination = 0.5;
        p.blur_sigma = 1.0;
        p.noise_sigma = 12.0;
        p.occluders = 2;
        p.occluder_max_area = 0.10;
        p.clutter = 30;
        p.margin = 0.5;
    } else if (name == "none") {
        // identity render
    } else {
        throw InvalidArgument("unknown distortion preset \"" + name + "\" (expected mild or strong)");
    }
    return p;
}

// ---------------------------------------------------------------------------
// Homography

Homography::Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

Homography::Homography(const std::array<double, 9>& m) : m_(m) {
    if (m_[8] == 0.0 || !std::isfinite(m_[8])) throw InvalidArgument("homography requires a nonzero h33");
    const double s = m_[8];
    for (auto& v : m_) v /= s;
}

Homography Homography::translation(double tx, double ty) { return Homography({1, 0, tx, 0, 1, ty, 0, 0, 1}); }

Homography Homography::from_points(const std::array<std::array<double, 2>, 4>& src,
                                   const std::array<std::array<double, 2>, 4>& dst) {
    Eigen::Matrix<double, 8, 8> a;
    Eigen::Matrix<double, 8, 1> b;
    for (int i = 0; i < 4; ++i) {
        const double x = src[i][0], y = src[i][1], u = dst[i][0], v = dst[i][1];
        a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
        a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
        b(2 * i) = u;
        b(2 * i + 1) = v;
    }
    Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
    if (!lu.isInvertible()) throw InvalidArgument("degenerate point correspondence for homography");
    const Eigen::Matrix<double, 8, 1> h = lu.solve(b);
    return Homography({h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0});
}

std::array<double, 2> Homography::apply(double x, double y) const {
    const double w = m_[6] * x + m_[7] * y + m_[8];
    return {(m_[0] * x + m_[1] * y + m_[2]) / w, (m_[3] * x + m_[4] * y + m_[5]) / w};
}

double Homography::determinant() const {
    const auto& m = m_;
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) + m[2] * (m[3] * m[7] - m[4] * m[6]);
}

bool Homography::invertible() const {
    double scale = 0.0;
    for (double v : m_) scale = std::max(scale, std::abs(v));
    return std::isfinite(determinant()) && std::abs(determinant()) > 1e-12 * scale * scale * scale;
}

Homography Homography::inverse() const {
    if (!invertible()) throw InvalidArgument("singular homography");
    const auto& m = m_;
    const double det = determinant();
    std::array<double, 9> r{(m[4] * m[8] - m[5] * m[7]) / det, (m[2] * m[7] - m[1] * m[8]) / det,
                            (m[1] * m[5] - m[2] * m[4]) / det, (m[5] * m[6] - m[3] * m[8]) / det,
                            (m[0] * m[8] - m[2] * m[6]) / det, (m[2] * m[3] - m[0] * m[5]) / det,
                            (m[3] * m[7] - m[4] * m[6]) / det, (m[1] * m[6] - m[0] * m[7]) / det,
                            (m[0] * m[4] - m[1] * m[3]) / det};
    return Homography(r);
}

Homography Homography::operator*(const Homography& rhs) const {
    std::array<double, 9> r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) r[3 * i + j] += m_[3 * i + k] * rhs.m_[3 * k + j];
    return Homography(r);
}

// ---------------------------------------------------------------------------
// Drawing helpers

namespace {

using Color = std::array<std::uint8_t, 3>;

double luma(const Color& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

Color random_color(Rng& rng) {
    return {static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
            static_cast<std::uint8_t>(rng.below(256))};
}

void put(ImageBuffer& img, int x, int y, const Color& c) {
    if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
    for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = c[ch];
}

void fill_rect(ImageBuffer& img, int x0, int y0, int w, int h, const Color& c) {
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) put(img, x, y, c);
}

void outline_rect(ImageBuffer& img, int x0, int y0, int w, int h, int t, const Color& c) {
    fill_rect(img, x0, y0, w, t, c);
    fill_rect(img, x0, y0 + h - t, w, t, c);
    fill_rect(img, x0, y0, t, h, c);
    fill_rect(img, x0 + w - t, y0, t, h, c);
}

void fill_ellipse(ImageBuffer& img, double cx, double cy, double rx, double ry, const Color& c) {
    for (int y = static_cast<int>(cy - ry); y <= static_cast<int>(cy + ry) + 1; ++y)
        for (int x = static_cast<int>(cx - rx); x <= static_cast<int>(cx + rx) + 1; ++x) {
            const double dx = (x - cx) / rx, dy = (y - cy) / ry;
            if (dx * dx + dy * dy <= 1.0) put(img, x, y, c);
        }
}

void gradient_rect(ImageBuffer& img, int x0, int y0, int w, int h, const Color& a, const Color& b, bool vertical) {
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) {
            const double t = vertical ? static_cast<double>(y - y0) / std::max(1, h - 1)
                                      : static_cast<double>(x - x0) / std::max(1, w - 1);
            Color c;
            for (int ch = 0; ch < 3; ++ch) c[ch] = static_cast<std::uint8_t>(std::lround(a[ch] * (1 - t) + b[ch] * t));
            put(img, x, y, c);
        }
}

// Smooth random field blended between two colors, a stand-in for photographic insets.
void picture(ImageBuffer& img, Rng& rng, int x0, int y0, int w, int h, const Color& a, const Color& b) {
    const int gw = rng.range(4, 9), gh = rng.range(4, 9);
    FloatImage coarse(gw, gh);
    for (auto& v : coarse.pixels) v = static_cast<float>(rng.uniform());
    const FloatImage field = resize_bilinear(coarse, w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double t = field.at(x, y);
            Color c;
            for (int ch = 0; ch < 3; ++ch) c[ch] = static_cast<std::uint8_t>(std::lround(a[ch] * (1 - t) + b[ch] * t));
            put(img, x0 + x, y0 + y, c);
        }
}

// Lines of random 5x7 pseudo-glyphs.
void text_block(ImageBuffer& img, Rng& rng, int x0, int y0, int lines, int glyphs, int scale, const Color& c) {
    for (int line = 0; line < lines; ++line) {
        const int gy = y0 + line * 9 * scale;
        const int n = std::max(1, glyphs - static_cast<int>(rng.below(static_cast<std::uint64_t>(glyphs / 2 + 1))));
        for (int g = 0; g < n; ++g) {
            const int gx = x0 + g * 6 * scale;
            for (int by = 0; by < 7; ++by)
                for (int bx = 0; bx < 5; ++bx)
                    if (rng.uniform() < 0.45) fill_rect(img, gx + bx * scale, gy + by * scale, scale, scale, c);
        }
    }
}

// kind in [0, 1): rectangle, ellipse, gradient, text block by band.
constexpr double kTextKind = 0.55;

void draw_element(ImageBuffer& img, Rng& rng, const std::vector<Color>& palette, double kind) {
    const int w = img.width(), h = img.height();
    const int md = std::min(w, h);
    const Color& c = palette[1 + rng.below(palette.size() - 1)];
    if (kind < 0.22) {
        const int rw = rng.range(md / 10, md / 2), rh = rng.range(md / 10, md / 2);
        const int x = rng.range(-rw / 4, w - rw * 3 / 4), y = rng.range(-rh / 4, h - rh * 3 / 4);
        if (rng.uniform() < 0.3)
            outline_rect(img, x, y, rw, rh, rng.range(2, 5), c);
        else
            fill_rect(img, x, y, rw, rh, c);
    } else if (kind < 0.40) {
        const double rx = rng.uniform(md * 0.05, md * 0.22);
        const double ry = rng.uniform() < 0.5 ? rx : rng.uniform(md * 0.05, md * 0.22);
        const double cx = rng.uniform(0, w);
        const double cy = rng.uniform(0, h);
        fill_ellipse(img, cx, cy, rx, ry, c);
    } else if (kind < 0.45) {
        const int rw = rng.range(md / 6, md / 2), rh = rng.range(md / 8, md / 3);
        const Color& c2 = palette[rng.below(palette.size())];
        const int x = rng.range(0, w - rw);
        const int y = rng.range(0, h - rh);
        const bool vertical = rng.uniform() < 0.5;
        gradient_rect(img, x, y, rw, rh, c, c2, vertical);
    } else if (kind < kTextKind) {
        const int rw = rng.range(md / 5, md * 2 / 5), rh = rng.range(md / 5, md * 2 / 5);
        const Color& c2 = palette[rng.below(palette.size())];
        const int x = rng.range(0, w - rw);
        const int y = rng.range(0, h - rh);
        picture(img, rng, x, y, rw, rh, c, c2);
    } else {
        const int scale = rng.range(4, 5);
        const int lines = rng.range(1, 4);
        const int glyphs = rng.range(4, 12);
        const int x = rng.range(0, w - 6 * scale * 4);
        const int y = rng.range(0, h - 9 * scale);
        text_block(img, rng, x, y, lines, glyphs, scale, c);
    }
}

void draw_random_element(ImageBuffer& img, Rng& rng, const std::vector<Color>& palette) {
    const double kind = rng.uniform();
    draw_element(img, rng, palette, kind);
}

// Interleaved float RGB working buffer for the photo pipeline (0..255).
struct Canvas {
    int w, h;
    std::vector<float> v;
    Canvas(int w_, int h_) : w(w_), h(h_), v(static_cast<std::size_t>(w_) * h_ * 3, 0.0f) {}
    float& at(int x, int y, int c) { return v[(static_cast<std::size_t>(y) * w + x) * 3 + c]; }
};

ImageBuffer make_background(int w, int h, int clutter, Rng& rng) {
    // low-frequency color field
    constexpr int kGrid = 6;
    std::array<FloatImage, 3> coarse{FloatImage(kGrid, kGrid), FloatImage(kGrid, kGrid), FloatImage(kGrid, kGrid)};
    const Color base = {static_cast<std::uint8_t>(rng.range(40, 140)), static_cast<std::uint8_t>(rng.range(40, 140)),
                        static_cast<std::uint8_t>(rng.range(40, 140))};
    for (int y = 0; y < kGrid; ++y)
        for (int x = 0; x < kGrid; ++x)
            for (int c = 0; c < 3; ++c)
                coarse[c].at(x, y) = static_cast<float>(std::clamp(base[c] + rng.uniform(-40, 40), 0.0, 255.0));
    ImageBuffer bg(w, h, 3);
    for (int c = 0; c < 3; ++c) {
        const FloatImage up = resize_bilinear(coarse[c], w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) bg.at(x, y, c) = static_cast<std::uint8_t>(std::lround(up.at(x, y)));
    }
    // distractors stay near the background tone: a dim scene behind a lit product
    std::vector<Color> palette;
    for (int i = 0; i < 6; ++i) {
        Color c;
        for (int ch = 0; ch < 3; ++ch) c[ch] = static_cast<std::uint8_t>(std::clamp(base[ch] + rng.range(-60, 60), 0, 255));
        palette.push_back(c);
    }
    for (int i = 0; i < clutter; ++i) draw_random_element(bg, rng, palette);
    return bg;
}

bool inside_extent(const std::array<double, 2>& p, int w, int h) {
    return p[0] >= -0.5 && p[0] < w - 0.5 && p[1] >= -0.5 && p[1] < h - 0.5;
}

}  // namespace

// ---------------------------------------------------------------------------

ImageBuffer gen_design(const DesignSpec& spec, std::uint64_t rng_seed) {
    spec.validate();
    Rng rng(Rng::mix(rng_seed) ^ Rng::mix(spec.palette_seed + 0x51ED270B3A5AULL));
    std::vector<Color> palette;
    palette.push_back({static_cast<std::uint8_t>(rng.range(170, 255)), static_cast<std::uint8_t>(rng.range(170, 255)),
                       static_cast<std::uint8_t>(rng.range(170, 255))});
    for (int i = 0; i < 5; ++i) {
        Color c = random_color(rng);
        // matching sees gray levels only, so foreground luma stays well below the background's
        const double ceiling = luma(palette[0]) - 90.0;
        if (const double l = luma(c); l > ceiling)
            for (auto& v : c) v = static_cast<std::uint8_t>(std::lround(v * ceiling / l));
        palette.push_back(c);
    }
    ImageBuffer img(spec.width, spec.height, 3);
    fill_rect(img, 0, 0, spec.width, spec.height, palette[0]);
    const int n = rng.range(spec.min_elements, spec.max_elements);
    std::vector<double> kinds(static_cast<std::size_t>(n));
    for (auto& k : kinds) k = rng.uniform();
    // at least a third of the elements are text, and text is painted last so
    // large shapes never bury it
    const int min_text = std::max(1, n / 3);
    int text = static_cast<int>(std::count_if(kinds.begin(), kinds.end(), [](double k) { return k >= kTextKind; }));
    for (auto& k : kinds)
        if (text < min_text && k < kTextKind) {
            k = kTextKind + (1.0 - kTextKind) * k;
            ++text;
        }
    std::stable_partition(kinds.begin(), kinds.end(), [](double k) { return k < kTextKind; });
    for (double k : kinds) draw_element(img, rng, palette, k);
    return img;
}

ImageBuffer apply_homography(const ImageBuffer& img, const Homography& h, int out_w, int out_h,
                             const FillSampler& fill) {
    const Homography inv = h.inverse();
    const int ch = img.channels();
    ImageBuffer out(out_w, out_h, ch);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const auto p = inv.apply(x, y);
            if (!inside_extent(p, img.width(), img.height())) {
                for (int c = 0; c < ch; ++c) out.at(x, y, c) = fill(x, y, c);
                continue;
            }
            const double sx = std::clamp(p[0], 0.0, static_cast<double>(img.width() - 1));
            const double sy = std::clamp(p[1], 0.0, static_cast<double>(img.height() - 1));
            const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
            const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
            const double fx = sx - x0, fy = sy - y0;
            for (int c = 0; c < ch; ++c) {
                const double v = (img.at(x0, y0, c) * (1 - fx) + img.at(x1, y0, c) * fx) * (1 - fy) +
                                 (img.at(x0, y1, c) * (1 - fx) + img.at(x1, y1, c) * fx) * fy;
                out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return out;
}

ImageBuffer apply_homography(const ImageBuffer& img, const Homography& h, int out_w, int out_h,
                             std::uint8_t fill_value) {
    return apply_homography(img, h, out_w, out_h, [fill_value](int, int, int) { return fill_value; });
}

RenderedPhoto render_photo(const ImageBuffer& design, const DistortionParams& params, std::uint64_t rng_seed) {
    params.validate();
    const ImageBuffer rgb = design.channels() == 3 ? design : [&] {
        ImageBuffer c(design.width(), design.height(), 3);
        for (int y = 0; y < design.height(); ++y)
            for (int x = 0; x < design.width(); ++x)
                for (int k = 0; k < 3; ++k) c.at(x, y, k) = design.at(x, y);
        return c;
    }();
    const int dw = rgb.width(), dh = rgb.height();
    const int mx = static_cast<int>(std::lround(params.margin * dw));
    const int my = static_cast<int>(std::lround(params.margin * dh));
    const int pw = dw + 2 * mx, ph = dh + 2 * my;

    const Rng root(rng_seed);
    Rng geo = root.fork(1), bg_rng = root.fork(2 ^ params.background_seed * 0x9E37ULL), light = root.fork(3),
        occ = root.fork(4), noise = root.fork(5);

    // geometry: rotate/scale about the design center into the photo center, then jitter corners
    const double theta = params.rotation_deg > 0 ? geo.uniform(-params.rotation_deg, params.rotation_deg) *
                                                       std::numbers::pi / 180.0
                                                 : 0.0;
    const double s = params.scale_jitter > 0 ? geo.uniform(1 - params.scale_jitter, 1 + params.scale_jitter) : 1.0;
    const double cdx = (dw - 1) / 2.0, cdy = (dh - 1) / 2.0, cpx = (pw - 1) / 2.0, cpy = (ph - 1) / 2.0;
    const double cs = std::cos(theta) * s, sn = std::sin(theta) * s;
    Homography h({cs, -sn, cpx - cs * cdx + sn * cdy, sn, cs, cpy - sn * cdx - cs * cdy, 0, 0, 1});
    if (params.corner_jitter > 0) {
        const double j = params.corner_jitter * std::min(dw, dh);
        std::array<std::array<double, 2>, 4> src{{{-0.5, -0.5}, {dw - 0.5, -0.5}, {dw - 0.5, dh - 0.5}, {-0.5, dh - 0.5}}};
        std::array<std::array<double, 2>, 4> dst;
        for (int i = 0; i < 4; ++i) {
            const auto p = h.apply(src[i][0], src[i][1]);
            dst[i] = {p[0] + geo.uniform(-j, j), p[1] + geo.uniform(-j, j)};
        }
        h = Homography::from_points(src, dst);
    }

    const bool need_bg = mx > 0 || my > 0 || theta != 0.0 || s != 1.0 || params.corner_jitter > 0;
    const ImageBuffer bg = need_bg ? make_background(pw, ph, params.clutter, bg_rng) : ImageBuffer(pw, ph, 3);
    const ImageBuffer warped =
        apply_homography(rgb, h, pw, ph, [&bg](int x, int y, int c) { return bg.at(x, y, c); });

    RenderedPhoto out;
    out.h = h;
    out.gt_mask = BinaryMask(pw, ph);
    const Homography inv = h.inverse();
    for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x) out.gt_mask.set(x, y, inside_extent(inv.apply(x, y), dw, dh));
    out.annotation = bounding_rect(out.gt_mask);

    Canvas canvas(pw, ph);
    for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x)
            for (int c = 0; c < 3; ++c) canvas.at(x, y, c) = warped.at(x, y, c);

    if (params.illumination > 0) {
        // linear falloff across a random direction plus a soft specular spot
        const double dir = light.uniform(0, 2 * std::numbers::pi);
        const double ux = std::cos(dir), uy = std::sin(dir);
        double lo = 1e300, hi = -1e300;
        for (const auto& [x, y] : std::array<std::array<double, 2>, 4>{{{0, 0}, {pw - 1.0, 0}, {0, ph - 1.0}, {pw - 1.0, ph - 1.0}}}) {
            lo = std::min(lo, x * ux + y * uy);
            hi = std::max(hi, x * ux + y * uy);
        }
        const double spot_x = light.uniform(0, pw), spot_y = light.uniform(0, ph);
        const double spot_r = light.uniform(0.1, 0.25) * std::min(pw, ph);
        for (int y = 0; y < ph; ++y)
            for (int x = 0; x < pw; ++x) {
                const double t = (x * ux + y * uy - lo) / std::max(1e-9, hi - lo);
                const double gain = 1.0 - params.illumination * t;
                const double d2 = (x - spot_x) * (x - spot_x) + (y - spot_y) * (y - spot_y);
                const double glare = 0.35 * params.illumination * std::exp(-d2 / (2 * spot_r * spot_r));
                for (int c = 0; c < 3; ++c) {
                    float& v = canvas.at(x, y, c);
                    v = static_cast<float>(v * gain + glare * (255.0 - v * gain));
                }
            }
    }

    if (params.occluders > 0 && params.occluder_max_area > 0) {
        // tape-like strips centered on the product; kept 2 px apart so each is its own region
        std::vector<Rect> placed;
        const double design_area = static_cast<double>(dw) * dh * s * s;
        for (int k = 0; k < params.occluders; ++k) {
            for (int attempt = 0; attempt < 200; ++attempt) {
                const double area = occ.uniform(0.4, 1.0) * params.occluder_max_area * design_area;
                const double aspect = occ.uniform(3.0, 8.0);
                int rw = static_cast<int>(std::sqrt(area * aspect)), rh = static_cast<int>(std::sqrt(area / aspect));
                if (occ.uniform() < 0.5) std::swap(rw, rh);
                rw = std::clamp(rw, 1, pw);
                rh = std::clamp(rh, 1, ph);
                const auto c = h.apply(occ.uniform(0.15, 0.85) * dw, occ.uniform(0.15, 0.85) * dh);
                Rect r{static_cast<int>(c[0]) - rw / 2, static_cast<int>(c[1]) - rh / 2, rw, rh};
                r.x = std::clamp(r.x, 0, pw - rw);
                r.y = std::clamp(r.y, 0, ph - rh);
                const bool clash = std::any_of(placed.begin(), placed.end(), [&](const Rect& o) {
                    return r.x < o.x + o.w + 2 && o.x < r.x + r.w + 2 && r.y < o.y + o.h + 2 && o.y < r.y + r.h + 2;
                });
                if (clash) continue;
                placed.push_back(r);
                const Color col = {static_cast<std::uint8_t>(occ.range(150, 230)),
                                   static_cast<std::uint8_t>(occ.range(120, 200)),
                                   static_cast<std::uint8_t>(occ.range(60, 140))};
                for (int y = r.y; y < r.y + r.h; ++y)
                    for (int x = r.x; x < r.x + r.w; ++x)
                        for (int ch = 0; ch < 3; ++ch) canvas.at(x, y, ch) = col[ch];
                break;
            }
        }
    }

    if (params.blur_sigma > 0) {
        for (int c = 0; c < 3; ++c) {
            FloatImage plane(pw, ph);
            for (int y = 0; y < ph; ++y)
                for (int x = 0; x < pw; ++x) plane.at(x, y) = canvas.at(x, y, c);
            plane = gaussian_blur(plane, params.blur_sigma);
            for (int y = 0; y < ph; ++y)
                for (int x = 0; x < pw; ++x) canvas.at(x, y, c) = plane.at(x, y);
        }
    }

    if (params.noise_sigma > 0)
        for (auto& v : canvas.v) v += static_cast<float>(params.noise_sigma * noise.normal());

    std::vector<std::uint8_t> bytes(canvas.v.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(canvas.v[i], 0.0f, 255.0f)));
    out.photo = ImageBuffer(pw, ph, 3, std::move(bytes));
    return out;
}

int two_sided_count(int n_products, double fraction) {
    return std::clamp(static_cast<int>(std::lround(fraction * n_products)), 0, n_products);
}

DatasetManifest gen_corpus(const CorpusSpec& spec, const fs::path& out_dir) {
    if (spec.n_products < 1) throw InvalidArgument("gen_corpus: n_products must be >= 1");
    if (spec.n_photos < 0) throw InvalidArgument("gen_corpus: n_photos must be >= 0");
    if (spec.two_sided_fraction < 0 || spec.two_sided_fraction > 1)
        throw InvalidArgument("gen_corpus: two-sided fraction must be in [0, 1]");
    spec.design.validate();
    spec.distortion.validate();

    std::error_code ec;
    for (const char* sub : {"designs", "photos", "masks/gt"}) {
        fs::create_directories(out_dir / sub, ec);
        if (ec) throw IoError("cannot create " + (out_dir / sub).string() + ": " + ec.message());
    }

    Rng rng(spec.seed);
    Rng layout = rng.fork(11);

    std::vector<int> order(spec.n_products);
    for (int i = 0; i < spec.n_products; ++i) order[i] = i;
    layout.shuffle(order);
    std::set<int> two_sided(order.begin(), order.begin() + two_sided_count(spec.n_products, spec.two_sided_fraction));

    auto fmt_id = [](const char* prefix, int i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s%05d", prefix, i);
        return std::string(buf);
    };

    std::vector<ProductEntry> products;
    std::vector<DesignEntry> designs;
    int next_design = 0;
    for (int p = 0; p < spec.n_products; ++p) {
        ProductEntry prod{fmt_id("prod", p), {}, {}};
        const int sides = two_sided.contains(p) ? 2 : 1;
        for (int s = 0; s < sides; ++s) {
            const std::string id = fmt_id("d", next_design++);
            prod.design_ids.push_back(id);
            designs.push_back({id, "designs/" + id + ".png", {}});
        }
        products.push_back(std::move(prod));
    }

    // photos cycle through a shuffled product order so n_photos <= n_products hits distinct products
    std::vector<int> photo_order(spec.n_products);
    for (int i = 0; i < spec.n_products; ++i) photo_order[i] = i;
    layout.shuffle(photo_order);
    struct PhotoJob {
        std::string id;
        int product;
        std::string design_id;
    };
    std::vector<PhotoJob> jobs;
    for (int i = 0; i < spec.n_photos; ++i) {
        const int p = photo_order[static_cast<std::size_t>(i) % photo_order.size()];
        const auto& ids = products[p].design_ids;
        const std::string side = ids[layout.below(ids.size())];
        jobs.push_back({fmt_id("p", i), p, side});
        products[p].photo_ids.push_back(jobs.back().id);
    }

    parallel_for(designs.size(), [&](std::size_t i) {
        write_png(out_dir / designs[i].path, gen_design(spec.design, rng.fork(1000 + i).next_u64()));
    });

    std::vector<PhotoEntry> photos(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        const auto& job = jobs[i];
        const ImageBuffer design = read_png(out_dir / ("designs/" + job.design_id + ".png"));
        const RenderedPhoto r = render_photo(design, spec.distortion, rng.fork(500000 + i).next_u64());
        PhotoEntry e;
        e.photo_id = job.id;
        e.path = "photos/" + job.id + ".png";
        e.rect = r.annotation;
        e.masks["gt"] = "masks/gt/" + job.id + ".pgm";
        write_png(out_dir / e.path, r.photo);
        write_mask_pgm(out_dir / e.masks["gt"], r.gt_mask);
        photos[i] = std::move(e);
    });

    DatasetManifest manifest(out_dir, std::move(products), std::move(photos), std::move(designs));
    save_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

}  // namespace printmatch::synth
