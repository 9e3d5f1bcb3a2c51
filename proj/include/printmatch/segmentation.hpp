#pragma once

#include <optional>
#include <string>
#include <vector>

#include "printmatch/image.hpp"
#include "printmatch/manifest.hpp"

namespace printmatch {

struct GbvsConfig {
    int feature_resolution = 128;   // longer side for channel extraction
    int map_resolution = 32;        // longer side of the Markov-chain map
    double sigma_fraction = 0.15;   // spatial falloff, fraction of the map diagonal
    double tolerance = 1e-9;        // L1 change between power iterations
    int max_iterations = 10000;
    double threshold = 0.11;
    bool largest_component = false;

    void validate() const;
};

/// Saliency over the chain map. `distribution` is the channel-averaged
/// stationary distribution (sums to 1); `values` is it divided by its maximum.
struct SaliencyMap {
    int width = 0;
    int height = 0;
    std::vector<double> distribution;
    std::vector<double> values;

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Row-stochastic chain over a feature map: weight i->j = |f_i - f_j| * exp(-d^2 / (2 (sigma diag)^2)).
/// Rows with zero total weight move uniformly.
std::vector<double> gbvs_transition_matrix(const FloatImage& feature, double sigma_fraction);

/// Stationary distribution of the chain above by (lazy) power iteration.
/// A constant feature map yields the uniform distribution.
std::vector<double> stationary_distribution(const FloatImage& feature, const GbvsConfig& cfg);

/// Intensity plus four oriented gradient energies, each at map resolution.
std::vector<FloatImage> gbvs_channels(const ImageBuffer& photo, const GbvsConfig& cfg);

SaliencyMap gbvs_saliency(const ImageBuffer& photo, const GbvsConfig& cfg = {});

/// Bit set where value > threshold, nearest-neighbor upsampled to out_w x out_h.
BinaryMask threshold_saliency(const SaliencyMap& map, double threshold, int out_w, int out_h,
                              bool largest_component = false);

struct SegmentationMethod {
    enum class Kind { none, manual, gbvs, external };
    Kind kind = Kind::none;
    std::string name;  // external mask name: vggreg | fcn32s | fcn8s

    static SegmentationMethod parse(const std::string& tag);
    /// "none", "manual", "gbvs" or the external mask name.
    std::string label() const;
    std::string tag() const;  // parse() round-trips this
    bool operator==(const SegmentationMethod&) const = default;
};

/// Per-photo context a method may need: the manifest entry for manual and external masks.
struct SegmentationContext {
    const DatasetManifest* manifest = nullptr;
    std::string photo_id;
    std::optional<Rect> rect;  // overrides the manifest annotation when set
    GbvsConfig gbvs;
};

BinaryMask segment(const ImageBuffer& photo, const SegmentationMethod& method, const SegmentationContext& ctx);

}  // namespace printmatch
