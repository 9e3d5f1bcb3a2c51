#include "printmatch/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "printmatch/error.hpp"
#include "printmatch/filter.hpp"
#include "printmatch/image_io.hpp"
#include "printmatch/mask_ops.hpp"

namespace printmatch {

void GbvsConfig::validate() const {
    if (!(sigma_fraction > 0)) throw InvalidArgument("gbvs: sigma must be > 0");
    if (!(threshold > 0 && threshold < 1)) throw InvalidArgument("gbvs: threshold must be in (0, 1)");
    if (map_resolution < 2 || feature_resolution < map_resolution)
        throw InvalidArgument("gbvs: need 2 <= map_resolution <= feature_resolution");
    if (max_iterations < 1 || !(tolerance > 0)) throw InvalidArgument("gbvs: bad iteration limits");
}

namespace {

std::pair<int, int> fit_longer_side(int w, int h, int longer) {
    if (w >= h) return {longer, std::max(1, static_cast<int>(std::lround(static_cast<double>(h) * longer / w)))};
    return {std::max(1, static_cast<int>(std::lround(static_cast<double>(w) * longer / h))), longer};
}

}  // namespace

std::vector<double> gbvs_transition_matrix(const FloatImage& feature, double sigma_fraction) {
    const int w = feature.width, h = feature.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    const double sigma = sigma_fraction * std::sqrt(static_cast<double>(w) * w + static_cast<double>(h) * h);
    const double denom = -1.0 / (2.0 * sigma * sigma);

    // spatial falloff depends only on the offset
    std::vector<double> falloff(static_cast<std::size_t>(w) * h);
    for (int dy = 0; dy < h; ++dy)
        for (int dx = 0; dx < w; ++dx) falloff[static_cast<std::size_t>(dy) * w + dx] = std::exp((dx * dx + dy * dy) * denom);

    std::vector<double> p(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const int xi = static_cast<int>(i % w), yi = static_cast<int>(i / w);
        const double fi = feature.pixels[i];
        double* row = &p[i * n];
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const int xj = static_cast<int>(j % w), yj = static_cast<int>(j / w);
            const double v = std::abs(fi - feature.pixels[j]) *
                             falloff[static_cast<std::size_t>(std::abs(yi - yj)) * w + std::abs(xi - xj)];
            row[j] = v;
            total += v;
        }
        if (total > 0) {
            for (std::size_t j = 0; j < n; ++j) row[j] /= total;
        } else {
            std::fill(row, row + n, 1.0 / static_cast<double>(n));
        }
    }
    return p;
}

std::vector<double> stationary_distribution(const FloatImage& feature, const GbvsConfig& cfg) {
    const std::size_t n = feature.pixels.size();
    const bool constant = std::all_of(feature.pixels.begin(), feature.pixels.end(),
                                      [&](float v) { return v == feature.pixels[0]; });
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    if (constant) return pi;

    const std::vector<double> p = gbvs_transition_matrix(feature, cfg.sigma_fraction);
    std::vector<double> next(n);
    double residual = 0.0;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double mass = pi[i];
            const double* row = &p[i * n];
            for (std::size_t j = 0; j < n; ++j) next[j] += mass * row[j];
        }
        // lazy step: same fixed point, but aperiodic
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            next[j] = 0.5 * (next[j] + pi[j]);
            sum += next[j];
        }
        residual = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            next[j] /= sum;
            residual += std::abs(next[j] - pi[j]);
        }
        pi.swap(next);
        if (residual < cfg.tolerance) return pi;
    }
    throw ConvergenceError("gbvs: power iteration did not converge, L1 residual " + std::to_string(residual), residual);
}

std::vector<FloatImage> gbvs_channels(const ImageBuffer& photo, const GbvsConfig& cfg) {
    const auto [fw, fh] = fit_longer_side(photo.width(), photo.height(), cfg.feature_resolution);
    const auto [mw, mh] = fit_longer_side(photo.width(), photo.height(), cfg.map_resolution);
    const FloatImage gray = resize_area(to_gray(photo), fw, fh);
    FloatImage dx, dy;
    gradients(gaussian_blur(gray, 1.0), dx, dy);

    std::vector<FloatImage> channels;
    channels.push_back(resize_area(gray, mw, mh));
    constexpr double kAngles[] = {0.0, 0.25, 0.5, 0.75};  // fractions of pi
    for (double a : kAngles) {
        const double c = std::cos(a * 3.14159265358979323846), s = std::sin(a * 3.14159265358979323846);
        FloatImage energy(fw, fh);
        for (std::size_t i = 0; i < energy.pixels.size(); ++i)
            energy.pixels[i] = static_cast<float>(std::abs(dx.pixels[i] * c + dy.pixels[i] * s));
        channels.push_back(resize_area(energy, mw, mh));
    }
    return channels;
}

SaliencyMap gbvs_saliency(const ImageBuffer& photo, const GbvsConfig& cfg) {
    cfg.validate();
    if (photo.width() < 16 || photo.height() < 16) throw InvalidArgument("gbvs: photo must be at least 16x16");
    const auto channels = gbvs_channels(photo, cfg);
    SaliencyMap map;
    map.width = channels.front().width;
    map.height = channels.front().height;
    map.distribution.assign(channels.front().pixels.size(), 0.0);
    for (const auto& ch : channels) {
        const auto pi = stationary_distribution(ch, cfg);
        for (std::size_t i = 0; i < pi.size(); ++i) map.distribution[i] += pi[i] / static_cast<double>(channels.size());
    }
    const double peak = *std::max_element(map.distribution.begin(), map.distribution.end());
    map.values.resize(map.distribution.size());
    for (std::size_t i = 0; i < map.values.size(); ++i) map.values[i] = map.distribution[i] / peak;
    return map;
}

BinaryMask threshold_saliency(const SaliencyMap& map, double threshold, int out_w, int out_h, bool largest_component) {
    if (!(threshold > 0 && threshold < 1)) throw InvalidArgument("threshold_saliency: threshold must be in (0, 1)");
    BinaryMask small(map.width, map.height);
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) small.set(x, y, map.at(x, y) > threshold);

    if (largest_component) {
        std::vector<int> label(static_cast<std::size_t>(map.width) * map.height, -1);
        int best = -1;
        std::size_t best_size = 0;
        int next = 0;
        for (int y = 0; y < map.height; ++y)
            for (int x = 0; x < map.width; ++x) {
                if (!small.at(x, y) || label[static_cast<std::size_t>(y) * map.width + x] >= 0) continue;
                std::size_t size = 0;
                std::queue<std::pair<int, int>> q;
                q.push({x, y});
                label[static_cast<std::size_t>(y) * map.width + x] = next;
                while (!q.empty()) {
                    const auto [cx, cy] = q.front();
                    q.pop();
                    ++size;
                    const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
                    for (const auto& d : nb) {
                        const int nx = cx + d[0], ny = cy + d[1];
                        if (nx < 0 || ny < 0 || nx >= map.width || ny >= map.height || !small.at(nx, ny)) continue;
                        auto& l = label[static_cast<std::size_t>(ny) * map.width + nx];
                        if (l >= 0) continue;
                        l = next;
                        q.push({nx, ny});
                    }
                }
                if (size > best_size) {
                    best_size = size;
                    best = next;
                }
                ++next;
            }
        for (int y = 0; y < map.height; ++y)
            for (int x = 0; x < map.width; ++x) small.set(x, y, label[static_cast<std::size_t>(y) * map.width + x] == best);
    }
    return resize_nearest(small, out_w, out_h);
}

SegmentationMethod SegmentationMethod::parse(const std::string& tag) {
    if (tag == "none") return {Kind::none, ""};
    if (tag == "manual") return {Kind::manual, ""};
    if (tag == "gbvs") return {Kind::gbvs, ""};
    std::string name = tag;
    if (name.rfind("external:", 0) == 0) name = name.substr(9);
    if (name == "vggreg" || name == "fcn32s" || name == "fcn8s") return {Kind::external, name};
    throw InvalidArgument("unknown segmentation method \"" + tag + "\"");
}

std::string SegmentationMethod::label() const {
    switch (kind) {
        case Kind::none: return "none";
        case Kind::manual: return "manual";
        case Kind::gbvs: return "gbvs";
        case Kind::external: return name;
    }
    return "?";
}

std::string SegmentationMethod::tag() const { return kind == Kind::external ? "external:" + name : label(); }

BinaryMask segment(const ImageBuffer& photo, const SegmentationMethod& method, const SegmentationContext& ctx) {
    switch (method.kind) {
        case SegmentationMethod::Kind::none: return BinaryMask::full(photo.width(), photo.height());
        case SegmentationMethod::Kind::manual: {
            std::optional<Rect> rect = ctx.rect;
            if (!rect && ctx.manifest && ctx.manifest->has_photo(ctx.photo_id)) rect = ctx.manifest->photo(ctx.photo_id).rect;
            if (!rect) throw MissingInputError("no annotation rectangle for photo \"" + ctx.photo_id + "\"", ctx.photo_id);
            return rect_to_mask(AnnotationRecord{ctx.photo_id, *rect}, photo.width(), photo.height());
        }
        case SegmentationMethod::Kind::gbvs: {
            const SaliencyMap map = gbvs_saliency(photo, ctx.gbvs);
            return threshold_saliency(map, ctx.gbvs.threshold, photo.width(), photo.height(), ctx.gbvs.largest_component);
        }
        case SegmentationMethod::Kind::external: {
            if (!ctx.manifest || !ctx.manifest->has_photo(ctx.photo_id))
                throw MissingInputError("no manifest entry for photo \"" + ctx.photo_id + "\"", ctx.photo_id);
            const auto& entry = ctx.manifest->photo(ctx.photo_id);
            const auto it = entry.masks.find(method.name);
            if (it == entry.masks.end())
                throw MissingInputError("no " + method.name + " mask for photo \"" + ctx.photo_id + "\"", ctx.photo_id);
            const auto path = ctx.manifest->resolve(it->second);
            if (!std::filesystem::exists(path))
                throw MissingInputError("mask file " + path.string() + " for photo \"" + ctx.photo_id + "\" is missing",
                                        ctx.photo_id);
            return upsample_binarize(read_pgm(path), photo.width(), photo.height());
        }
    }
    throw InvalidArgument("segment: bad method");
}

}  // namespace printmatch
