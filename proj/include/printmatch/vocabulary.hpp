#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "printmatch/features.hpp"

namespace printmatch {

/// N-centroid codebook over descriptor space.
struct Vocabulary {
    int n = 0;
    int dim = 0;
    std::vector<float> centroids;  // n x dim, row-major
    std::uint64_t seed = 0;
    int iterations = 0;
    double inertia = 0.0;

    std::span<const float> centroid(int i) const {
        return {centroids.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
};

struct KMeansOptions {
    int max_iterations = 100;
    double relative_tolerance = 1e-4;
};

struct KMeansResult {
    Vocabulary vocabulary;
    std::vector<int> labels;              // nearest centroid of every training row
    std::vector<double> inertia_history;  // one entry per assignment pass
};

/// Squared Euclidean distance accumulated in double, in index order. This is
/// the reference distance every nearest-centroid decision is made with.
double squared_distance(std::span<const float> a, std::span<const float> b);

/// Exact nearest-centroid search (ties -> lowest index). Candidates are
/// screened with a float GEMM and re-ranked with squared_distance.
class NearestCentroid {
public:
    NearestCentroid(std::span<const float> centroids, int n, int dim);
    explicit NearestCentroid(const Vocabulary& v) : NearestCentroid(v.centroids, v.n, v.dim) {}

    /// labels[i] = nearest centroid of row i; distances[i] its squared distance (optional).
    void assign(const DescriptorMatrix& rows, std::vector<int>& labels, std::vector<double>* distances = nullptr) const;

private:
    std::span<const float> centroids_;
    int n_;
    int dim_;
    std::vector<float> norms_;
    float max_norm_ = 0.0f;
};

std::size_t count_distinct_rows(const DescriptorMatrix& rows);

/// Lloyd's k-means with k-means++ seeding.
KMeansResult kmeans(const DescriptorMatrix& data, int n_clusters, std::uint64_t seed, const KMeansOptions& opts = {});
Vocabulary train_vocabulary(const DescriptorMatrix& data, int n_clusters, std::uint64_t seed,
                            const KMeansOptions& opts = {});

std::vector<std::uint8_t> encode_vocabulary(const Vocabulary& v);
Vocabulary decode_vocabulary(std::span<const std::uint8_t> bytes);
void save_vocabulary(const std::filesystem::path& path, const Vocabulary& v);
Vocabulary load_vocabulary(const std::filesystem::path& path);

}  // namespace printmatch
