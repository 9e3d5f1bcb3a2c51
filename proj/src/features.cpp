#include "printmatch/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstring>
#include <mutex>
#include <numbers>

#include "printmatch/error.hpp"
#include "printmatch/filter.hpp"
#include "printmatch/image_io.hpp"

namespace printmatch {

namespace fs = std::filesystem;

std::string to_string(FeatureType t) {
    switch (t) {
        case FeatureType::sift: return "sift";
        case FeatureType::dsift: return "dsift";
        case FeatureType::hog: return "hog";
        case FeatureType::gist: return "gist";
        case FeatureType::deepspp: return "deepspp";
    }
    return "?";
}

FeatureType parse_feature_type(const std::string& tag) {
    if (tag == "sift") return FeatureType::sift;
    if (tag == "dsift") return FeatureType::dsift;
    if (tag == "hog") return FeatureType::hog;
    if (tag == "gist") return FeatureType::gist;
    if (tag == "deepspp") return FeatureType::deepspp;
    throw InvalidArgument("unknown feature tag \"" + tag + "\"");
}

bool is_local(FeatureType t) { return t == FeatureType::sift || t == FeatureType::dsift || t == FeatureType::hog; }

// ---------------------------------------------------------------------------
// HoG on non-overlapping 16x16 blocks

namespace {

constexpr int kHogCell = 8;
constexpr int kHogBlock = 16;
constexpr int kHogBins = 9;
constexpr double kHogEps = 1e-3;

}  // namespace

FeatureSet hog_extract(const ImageBuffer& img, const BinaryMask& mask) {
    if (img.width() < kHogBlock || img.height() < kHogBlock) throw InvalidArgument("hog_extract: image smaller than 16x16");
    if (mask.width() != img.width() || mask.height() != img.height())
        throw DimensionError("hog_extract: mask dimensions differ from the image");

    FeatureSet out;
    out.type = FeatureType::hog;
    out.descriptors.dim = 4 * kHogBins;
    const FloatImage gray = to_gray(img);
    FloatImage dx, dy;
    gradients(gray, dx, dy);

    const int bx_count = img.width() / kHogBlock, by_count = img.height() / kHogBlock;
    std::vector<float> desc(4 * kHogBins);
    for (int by = 0; by < by_count; ++by) {
        for (int bx = 0; bx < bx_count; ++bx) {
            const int x0 = bx * kHogBlock, y0 = by * kHogBlock;
            int inside = 0;
            for (int y = y0; y < y0 + kHogBlock; ++y)
                for (int x = x0; x < x0 + kHogBlock; ++x) inside += mask.at(x, y);
            if (2 * inside < kHogBlock * kHogBlock) continue;

            std::fill(desc.begin(), desc.end(), 0.0f);
            for (int y = y0; y < y0 + kHogBlock; ++y)
                for (int x = x0; x < x0 + kHogBlock; ++x) {
                    const double gx = dx.at(x, y), gy = dy.at(x, y);
                    const double mag = std::hypot(gx, gy);
                    if (mag == 0.0) continue;
                    double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
                    if (deg < 0) deg += 180.0;
                    // bins centered on 0, 20, ..., 160 degrees
                    const int bin = static_cast<int>(std::floor((deg + 10.0) / 20.0)) % kHogBins;
                    const int cell = ((y - y0) / kHogCell) * 2 + (x - x0) / kHogCell;
                    desc[cell * kHogBins + bin] += static_cast<float>(mag);
                }
            double n2 = 0;
            for (float v : desc) n2 += static_cast<double>(v) * v;
            const double inv = 1.0 / std::sqrt(n2 + kHogEps * kHogEps);
            for (float& v : desc) v = static_cast<float>(v * inv);

            out.keypoints.push_back({static_cast<float>(x0 + kHogCell), static_cast<float>(y0 + kHogCell),
                                     static_cast<float>(kHogCell), 0.0f});
            out.descriptors.append(desc);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// GIST: 4 scales x 8 orientations of frequency-domain Gabor filters

namespace {

constexpr int kGistSize = 256;
constexpr int kGistScales = 4;
constexpr int kGistOrientations = 8;
constexpr int kGistGrid = 4;

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

const std::vector<std::vector<double>>& gabor_bank() {
    static const std::vector<std::vector<double>> bank = [] {
        std::vector<std::vector<double>> filters;
        const int n = kGistSize;
        for (int s = 0; s < kGistScales; ++s) {
            const double bandwidth = 0.3 / std::pow(1.85, s);
            const double angular = 16.0 * kGistOrientations * kGistOrientations / (32.0 * 32.0);
            for (int o = 0; o < kGistOrientations; ++o) {
                const double theta = std::numbers::pi / kGistOrientations * o;
                std::vector<double> g(static_cast<std::size_t>(n) * n);
                for (int v = 0; v < n; ++v) {
                    const double fy = v < n / 2 ? v : v - n;
                    for (int u = 0; u < n; ++u) {
                        const double fx = u < n / 2 ? u : u - n;
                        const double fr = std::hypot(fx, fy);
                        double t = std::atan2(fy, fx) + theta;
                        if (t < -std::numbers::pi) t += 2 * std::numbers::pi;
                        if (t > std::numbers::pi) t -= 2 * std::numbers::pi;
                        const double radial = fr / n / bandwidth - 1.0;
                        g[static_cast<std::size_t>(v) * n + u] =
                            std::exp(-10.0 * 0.35 * radial * radial - 2.0 * angular * std::numbers::pi * t * t);
                    }
                }
                g[0] = 0.0;  // band-pass: no DC response
                filters.push_back(std::move(g));
            }
        }
        return filters;
    }();
    return bank;
}

}  // namespace

GlobalDescriptor gist_extract(const ImageBuffer& img, const BinaryMask& mask) {
    if (mask.width() != img.width() || mask.height() != img.height())
        throw DimensionError("gist_extract: mask dimensions differ from the image");
    FloatImage gray = to_gray(img);
    double mean = 0.0;
    for (float v : gray.pixels) mean += v;
    mean /= static_cast<double>(gray.pixels.size());
    for (int y = 0; y < gray.height; ++y)
        for (int x = 0; x < gray.width; ++x)
            if (!mask.at(x, y)) gray.at(x, y) = static_cast<float>(mean);
    const FloatImage work = resize_area(gray, kGistSize, kGistSize);

    const int n = kGistSize;
    const std::size_t total = static_cast<std::size_t>(n) * n;
    auto* spectrum = fftw_alloc_complex(total);
    auto* buffer = fftw_alloc_complex(total);
    fftw_plan forward, backward;
    {
        std::lock_guard lock(fftw_planner_mutex());
        forward = fftw_plan_dft_2d(n, n, buffer, spectrum, FFTW_FORWARD, FFTW_ESTIMATE);
        backward = fftw_plan_dft_2d(n, n, buffer, buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < total; ++i) {
        buffer[i][0] = work.pixels[i];
        buffer[i][1] = 0.0;
    }
    fftw_execute_dft(forward, buffer, spectrum);

    GlobalDescriptor out;
    out.type = FeatureType::gist;
    out.values.reserve(kGistScales * kGistOrientations * kGistGrid * kGistGrid);
    const int cell = n / kGistGrid;
    for (const auto& g : gabor_bank()) {
        for (std::size_t i = 0; i < total; ++i) {
            buffer[i][0] = spectrum[i][0] * g[i];
            buffer[i][1] = spectrum[i][1] * g[i];
        }
        fftw_execute_dft(backward, buffer, buffer);
        for (int by = 0; by < kGistGrid; ++by)
            for (int bx = 0; bx < kGistGrid; ++bx) {
                double acc = 0.0;
                for (int y = by * cell; y < (by + 1) * cell; ++y)
                    for (int x = bx * cell; x < (bx + 1) * cell; ++x) {
                        const auto& c = buffer[static_cast<std::size_t>(y) * n + x];
                        acc += std::hypot(c[0], c[1]);
                    }
                out.values.push_back(static_cast<float>(acc / (static_cast<double>(cell) * cell) / static_cast<double>(total)));
            }
    }
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(forward);
        fftw_destroy_plan(backward);
    }
    fftw_free(spectrum);
    fftw_free(buffer);
    return out;
}

// ---------------------------------------------------------------------------
// PMFV1: "PMFV1", u8 tag length, tag, u32 count, u32 dim, u8 has_weights,
// count*dim f32 rows, then dim f32 weights when present. Little-endian.

namespace {

constexpr char kFeatureMagic[] = "PMFV1";

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

struct Reader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw ParseError("PMFV1: truncated file");
    }
    std::uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
        return v;
    }
    float f32() {
        const std::uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
};

}  // namespace

std::vector<std::uint8_t> encode_feature_file(const FeatureFile& f) {
    if (f.tag.size() > 255) throw InvalidArgument("PMFV1: tag too long");
    if (!f.weights.empty() && f.weights.size() != static_cast<std::size_t>(f.rows.dim))
        throw DimensionError("PMFV1: weights length must equal dim");
    std::vector<std::uint8_t> out(kFeatureMagic, kFeatureMagic + 5);
    out.push_back(static_cast<std::uint8_t>(f.tag.size()));
    out.insert(out.end(), f.tag.begin(), f.tag.end());
    put_u32(out, static_cast<std::uint32_t>(f.rows.rows()));
    put_u32(out, static_cast<std::uint32_t>(f.rows.dim));
    out.push_back(f.weights.empty() ? 0 : 1);
    out.reserve(out.size() + 4 * (f.rows.data.size() + f.weights.size()));
    for (float v : f.rows.data) put_f32(out, v);
    for (float v : f.weights) put_f32(out, v);
    return out;
}

FeatureFile decode_feature_file(std::span<const std::uint8_t> bytes) {
    Reader r{bytes};
    r.need(5);
    if (std::memcmp(bytes.data(), kFeatureMagic, 5) != 0) throw ParseError("PMFV1: bad magic");
    r.pos = 5;
    FeatureFile f;
    const std::uint8_t tag_len = r.u8();
    r.need(tag_len);
    f.tag.assign(bytes.begin() + r.pos, bytes.begin() + r.pos + tag_len);
    r.pos += tag_len;
    const std::uint32_t count = r.u32();
    const std::uint32_t dim = r.u32();
    const std::uint8_t has_weights = r.u8();
    if (has_weights > 1) throw ParseError("PMFV1: bad weights flag");
    const std::uint64_t values = static_cast<std::uint64_t>(count) * dim;
    r.need(static_cast<std::size_t>(4 * (values + (has_weights ? dim : 0))));
    f.rows.dim = static_cast<int>(dim);
    f.rows.data.resize(values);
    for (auto& v : f.rows.data) {
        v = r.f32();
        if (!std::isfinite(v)) throw ParseError("PMFV1: non-finite component");
    }
    if (has_weights) {
        f.weights.resize(dim);
        for (auto& v : f.weights) {
            v = r.f32();
            if (!std::isfinite(v) || v <= 0) throw ParseError("PMFV1: weights must be finite and > 0");
        }
    }
    if (r.pos != bytes.size()) throw ParseError("PMFV1: trailing bytes");
    return f;
}

void write_feature_file(const fs::path& path, const FeatureFile& f) { write_file_bytes(path, encode_feature_file(f)); }

FeatureFile read_feature_file(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_feature_file(bytes);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

GlobalDescriptor load_global_vector(const fs::path& path, FeatureType type) {
    const FeatureFile f = read_feature_file(path);
    if (f.rows.rows() != 1) throw ParseError(path.string() + ": global vector file must hold exactly one row");
    if (type == FeatureType::deepspp && f.weights.empty())
        throw ParseError(path.string() + ": deepspp vector is missing its weights row");
    GlobalDescriptor g;
    g.type = type;
    g.values = f.rows.data;
    g.weights = f.weights;
    return g;
}

void save_global_vector(const fs::path& path, const GlobalDescriptor& g) {
    FeatureFile f;
    f.tag = to_string(g.type);
    f.rows.dim = static_cast<int>(g.values.size());
    f.rows.data = g.values;
    f.weights = g.weights;
    write_feature_file(path, f);
}

ExtractionResult extract(const ImageBuffer& img, const BinaryMask& mask, FeatureType type, const std::string& item_id,
                         const std::optional<fs::path>& precomputed) {
    const auto start = std::chrono::steady_clock::now();
    ExtractionResult r;
    switch (type) {
        case FeatureType::sift: r.features = sift_extract(img, mask); break;
        case FeatureType::dsift: r.features = dsift_extract(img, mask); break;
        case FeatureType::hog: r.features = hog_extract(img, mask); break;
        case FeatureType::gist: r.features = gist_extract(img, mask); break;
        case FeatureType::deepspp:
            if (!precomputed)
                throw MissingInputError("no precomputed deepspp vector for \"" + item_id + "\"", item_id);
            r.features = load_global_vector(*precomputed, FeatureType::deepspp);
            break;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace printmatch
