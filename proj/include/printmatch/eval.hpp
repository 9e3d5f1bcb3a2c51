#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "printmatch/features.hpp"
#include "printmatch/manifest.hpp"
#include "printmatch/matcher.hpp"
#include "printmatch/segmentation.hpp"
#include "printmatch/vocabulary.hpp"

namespace printmatch::eval {

/// One sampled query/candidate set: photos plus every design of their products,
/// topped up with randomly chosen non-pair designs.
struct ExperimentSet {
    std::vector<std::string> photo_ids;
    std::vector<std::string> design_ids;
    std::size_t pair_designs = 0;  // designs belonging to the photos' products
    std::uint64_t seed = 0;

    std::size_t filler_count() const { return design_ids.size() - pair_designs; }
    /// Fingerprint of the id lists, for checking that runs are paired.
    std::uint64_t hash() const;
};

ExperimentSet sample_experiment(const DatasetManifest& manifest, int n_photos = 60, int n_designs = 100,
                                std::uint64_t seed = 0);
/// `count` sets with seeds derived from `seed`.
std::vector<ExperimentSet> sample_experiments(const DatasetManifest& manifest, int count, int n_photos,
                                              int n_designs, std::uint64_t seed);

/// Feature plus segmentation, and the cluster count for local features.
struct MethodSpec {
    FeatureType feature = FeatureType::sift;
    SegmentationMethod segmentation;
    int clusters = 1000;

    bool local() const { return is_local(feature); }
    /// "sift-manual@1000", "gist-gbvs", "sift-external:vggreg@500"
    std::string label() const;
    /// Accepts label() output; "@N" is optional and defaults to `default_clusters`.
    static MethodSpec parse(const std::string& text, int default_clusters = 1000);
};

/// Five features by six segmentations, minus deepspp with none, gbvs, fcn32s and fcn8s.
std::vector<MethodSpec> default_methods(int clusters = 1000);
/// One method per line; blank lines and '#' comments ignored.
std::vector<MethodSpec> read_method_file(const std::filesystem::path& path, int default_clusters = 1000);

struct StageTimes {
    double segmentation = 0;
    double extraction = 0;
    double vocabulary = 0;
    double matching = 0;

    StageTimes& operator+=(const StageTimes& o);
};

/// Memoizes masks, features and vocabularies across methods and experiment sets.
/// Design files are always described unsegmented. Safe to use from several threads.
class FeatureStore {
public:
    explicit FeatureStore(const DatasetManifest& manifest, GbvsConfig gbvs = {},
                          std::optional<std::filesystem::path> cache_dir = std::nullopt);

    const DatasetManifest& manifest() const noexcept { return manifest_; }

    const BinaryMask& photo_mask(const std::string& photo_id, const SegmentationMethod& seg);
    const Extracted& photo_features(const std::string& photo_id, FeatureType type, const SegmentationMethod& seg);
    const Extracted& design_features(const std::string& design_id, FeatureType type);
    /// Trained on the pooled descriptors of `design_ids`.
    std::shared_ptr<const Vocabulary> vocabulary(const std::vector<std::string>& design_ids, FeatureType type,
                                                 int clusters, std::uint64_t seed);

    /// Wall time spent computing (not looking up) each kind of item so far.
    StageTimes compute_times() const;

private:
    std::shared_ptr<const ImageBuffer> image(const std::filesystem::path& path);
    Extracted compute(const ImageBuffer& img, const BinaryMask& mask, FeatureType type, const std::string& item_id,
                      const std::optional<std::filesystem::path>& vector_path);

    const DatasetManifest& manifest_;
    GbvsConfig gbvs_;
    std::optional<std::filesystem::path> cache_dir_;

    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const ImageBuffer>> images_;
    std::map<std::string, std::unique_ptr<BinaryMask>> masks_;
    std::map<std::string, std::unique_ptr<Extracted>> features_;
    std::map<std::string, std::shared_ptr<const Vocabulary>> vocabularies_;
    StageTimes times_;
};

/// Builds the representation of a design for `method` from a store.
MatcherIndex build_index(FeatureStore& store, const std::vector<std::string>& design_ids, const MethodSpec& method,
                         const Vocabulary* vocab, double alpha = 1.0);

struct ExperimentResult {
    std::uint64_t set_hash = 0;
    std::vector<int> orders;  // one per photo, in set order
    StageTimes times;
};

/// Ranks every photo of the set against its candidates and records its order of match.
/// Local methods train their vocabulary on the set's designs with the set's seed.
ExperimentResult run_experiment(const ExperimentSet& set, const MethodSpec& method, FeatureStore& store,
                                int threads = 1);

/// accuracy[k - 1] = fraction of orders <= k, for k = 1..n_designs.
struct TopKCurve {
    std::vector<double> accuracy;

    double at(int k) const { return accuracy.at(static_cast<std::size_t>(k - 1)); }
    int max_k() const { return static_cast<int>(accuracy.size()); }
};

TopKCurve topk_curve(const std::vector<int>& orders, int n_designs);

struct MethodResult {
    MethodSpec method;
    std::vector<ExperimentResult> experiments;
    TopKCurve curve;
    StageTimes times;
    int n_designs = 0;

    std::vector<int> all_orders() const;
    double mean_order() const;
};

MethodResult run_method(const std::vector<ExperimentSet>& sets, const MethodSpec& method, FeatureStore& store,
                        int threads = 1);

/// One result per distinct cluster count (first occurrence order), all on the same sets.
std::vector<MethodResult> cluster_sweep(const MethodSpec& base, const std::vector<int>& cluster_counts,
                                        const std::vector<ExperimentSet>& sets, FeatureStore& store,
                                        int threads = 1);

enum class GroundTruth { rect, mask };

struct SegBenchmark {
    double mean = 0;
    double stddev = 0;  // population
    std::vector<double> scores;
};

/// NCC of each predicted mask against its ground truth. For external masks with
/// `raw_external` the upsampled gray levels are compared before thresholding.
SegBenchmark seg_benchmark(FeatureStore& store, const SegmentationMethod& method,
                           const std::vector<std::string>& photo_ids, GroundTruth gt = GroundTruth::rect,
                           bool raw_external = true);

/// Writes topk.csv, summary.json and curves.dat into out_dir.
void emit_report(const std::vector<MethodResult>& results, const std::filesystem::path& out_dir);

}  // namespace printmatch::eval
