#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "printmatch/image.hpp"

namespace printmatch {

enum class FeatureType { sift, dsift, hog, gist, deepspp };

std::string to_string(FeatureType t);
FeatureType parse_feature_type(const std::string& tag);
/// Local features go through the bag-of-words pathway, global ones are compared directly.
bool is_local(FeatureType t);

struct Keypoint {
    float x = 0;
    float y = 0;
    float scale = 1;
    float orientation = 0;  // radians in [0, 2pi)
};

/// Row-major descriptor rows of a fixed dimension.
struct DescriptorMatrix {
    int dim = 0;
    std::vector<float> data;

    std::size_t rows() const { return dim ? data.size() / static_cast<std::size_t>(dim) : 0; }
    std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, static_cast<std::size_t>(dim)}; }
    void append(std::span<const float> r) { data.insert(data.end(), r.begin(), r.end()); }
};

struct FeatureSet {
    FeatureType type = FeatureType::sift;
    std::vector<Keypoint> keypoints;  // parallel to descriptor rows
    DescriptorMatrix descriptors;

    std::size_t size() const { return descriptors.rows(); }
};

struct GlobalDescriptor {
    FeatureType type = FeatureType::gist;
    std::vector<float> values;
    std::vector<float> weights;  // empty, or one positive weight per component
};

struct SiftOptions {
    int max_octaves = 8;
    int scales_per_octave = 3;
    double sigma0 = 1.6;
    double initial_blur = 0.5;
    double contrast_threshold = 0.03;  // on |DoG| with intensities in [0, 1]
    double edge_ratio = 10.0;
    bool upsample = false;             // start at octave -1
};

FeatureSet sift_extract(const ImageBuffer& img, const BinaryMask& mask, const SiftOptions& opts = {});
FeatureSet dsift_extract(const ImageBuffer& img, const BinaryMask& mask, int stride = 8, int patch = 16);
FeatureSet hog_extract(const ImageBuffer& img, const BinaryMask& mask);
GlobalDescriptor gist_extract(const ImageBuffer& img, const BinaryMask& mask);

/// Number of dense grid nodes per axis for a given extent.
inline int dense_grid_count(int extent, int stride, int patch) {
    return extent < patch ? 0 : (extent - patch) / stride + 1;
}

// --- PMFV1 descriptor/vector files -------------------------------------------------

/// Contents of a PMFV1 file: `count` rows of `dim` floats and an optional weights row.
struct FeatureFile {
    std::string tag;
    DescriptorMatrix rows;
    std::vector<float> weights;
};

std::vector<std::uint8_t> encode_feature_file(const FeatureFile& f);
FeatureFile decode_feature_file(std::span<const std::uint8_t> bytes);
void write_feature_file(const std::filesystem::path& path, const FeatureFile& f);
FeatureFile read_feature_file(const std::filesystem::path& path);

/// Loads a precomputed global vector; deepspp requires its weights row.
GlobalDescriptor load_global_vector(const std::filesystem::path& path, FeatureType type = FeatureType::deepspp);
void save_global_vector(const std::filesystem::path& path, const GlobalDescriptor& g);

// --- dispatch ----------------------------------------------------------------------

using Extracted = std::variant<FeatureSet, GlobalDescriptor>;

struct ExtractionResult {
    Extracted features;
    double seconds = 0.0;
};

/// Runs the extractor named by `type`. deepspp cannot be computed here; it needs
/// a precomputed vector path (`precomputed`), otherwise MissingInputError naming `item_id`.
ExtractionResult extract(const ImageBuffer& img, const BinaryMask& mask, FeatureType type,
                         const std::string& item_id = "",
                         const std::optional<std::filesystem::path>& precomputed = std::nullopt);

}  // namespace printmatch
