#include "printmatch/vocabulary.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "binary_io.hpp"
#include "printmatch/error.hpp"
#include "printmatch/image_io.hpp"
#include "printmatch/rng.hpp"

namespace printmatch {

namespace {

using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
constexpr std::size_t kChunk = 1024;

}  // namespace

double squared_distance(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

NearestCentroid::NearestCentroid(std::span<const float> centroids, int n, int dim)
    : centroids_(centroids), n_(n), dim_(dim), norms_(static_cast<std::size_t>(n)) {
    if (n < 1 || dim < 1 || centroids.size() != static_cast<std::size_t>(n) * dim)
        throw DimensionError("nearest-centroid search: centroid table has the wrong size");
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int d = 0; d < dim; ++d) s += static_cast<double>(centroids[static_cast<std::size_t>(j) * dim + d]) * centroids[static_cast<std::size_t>(j) * dim + d];
        norms_[j] = static_cast<float>(s);
        max_norm_ = std::max(max_norm_, norms_[j]);
    }
}

void NearestCentroid::assign(const DescriptorMatrix& rows, std::vector<int>& labels, std::vector<double>* distances) const {
    const std::size_t m = rows.rows();
    if (m > 0 && rows.dim != dim_)
        throw DimensionError("descriptor dimension " + std::to_string(rows.dim) + " != vocabulary dimension " +
                             std::to_string(dim_));
    labels.assign(m, 0);
    if (distances) distances->assign(m, 0.0);
    if (m == 0) return;

    const Eigen::Map<const RowMajorF> c(centroids_.data(), n_, dim_);
    Eigen::MatrixXf dots;
    std::vector<int> candidates;
    for (std::size_t start = 0; start < m; start += kChunk) {
        const std::size_t b = std::min(kChunk, m - start);
        const Eigen::Map<const RowMajorF> x(rows.data.data() + start * dim_, static_cast<Eigen::Index>(b), dim_);
        dots.noalias() = c * x.transpose();  // n x b, one column per row
        for (std::size_t p = 0; p < b; ++p) {
            const auto row = rows.row(start + p);
            double xnorm = 0.0;
            for (float v : row) xnorm += static_cast<double>(v) * v;

            const float* col = dots.data() + p * static_cast<std::size_t>(n_);
            float best = std::numeric_limits<float>::infinity();
            for (int j = 0; j < n_; ++j) best = std::min(best, norms_[j] - 2.0f * col[j]);
            // float screening error is far below this margin; survivors are re-ranked exactly
            const float margin = static_cast<float>(1e-4 * (xnorm + max_norm_) + 1e-12);
            candidates.clear();
            for (int j = 0; j < n_; ++j)
                if (norms_[j] - 2.0f * col[j] <= best + margin) candidates.push_back(j);

            int label = candidates.front();
            double dist = squared_distance(row, centroids_.subspan(static_cast<std::size_t>(label) * dim_, dim_));
            for (std::size_t k = 1; k < candidates.size(); ++k) {
                const int j = candidates[k];
                const double d = squared_distance(row, centroids_.subspan(static_cast<std::size_t>(j) * dim_, dim_));
                if (d < dist) {
                    dist = d;
                    label = j;
                }
            }
            labels[start + p] = label;
            if (distances) (*distances)[start + p] = dist;
        }
    }
}

std::size_t count_distinct_rows(const DescriptorMatrix& rows) {
    const std::size_t m = rows.rows();
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    auto less = [&](std::size_t a, std::size_t b) {
        const auto ra = rows.row(a), rb = rows.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    };
    std::sort(idx.begin(), idx.end(), less);
    std::size_t distinct = m ? 1 : 0;
    for (std::size_t i = 1; i < m; ++i)
        if (less(idx[i - 1], idx[i])) ++distinct;
    return distinct;
}

namespace {

// k-means++: each next seed drawn with probability proportional to its squared
// distance from the nearest seed so far.
std::vector<float> seed_plus_plus(const DescriptorMatrix& data, int k, Rng& rng) {
    const std::size_t m = data.rows();
    const int dim = data.dim;
    std::vector<float> centroids;
    centroids.reserve(static_cast<std::size_t>(k) * dim);
    std::vector<float> d2(m, std::numeric_limits<float>::infinity());

    std::size_t pick = static_cast<std::size_t>(rng.below(m));
    for (int c = 0; c < k; ++c) {
        const auto chosen = data.row(pick);
        centroids.insert(centroids.end(), chosen.begin(), chosen.end());
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const float* r = data.data.data() + i * dim;
            float acc = 0.0f;
            for (int d = 0; d < dim; ++d) {
                const float diff = r[d] - chosen[d];
                acc += diff * diff;
            }
            if (acc < d2[i]) d2[i] = acc;
            total += d2[i];
        }
        if (c + 1 == k) break;
        if (total <= 0.0) throw InvalidArgument("k-means++: ran out of distinct points");
        double target = rng.uniform() * total;
        pick = m;
        for (std::size_t i = 0; i < m; ++i) {
            if (d2[i] <= 0.0f) continue;
            target -= d2[i];
            pick = i;
            if (target < 0.0) break;
        }
        if (pick == m) throw InvalidArgument("k-means++: ran out of distinct points");
    }
    return centroids;
}

}  // namespace

KMeansResult kmeans(const DescriptorMatrix& data, int n_clusters, std::uint64_t seed, const KMeansOptions& opts) {
    if (n_clusters < 2) throw InvalidArgument("k-means needs at least 2 clusters");
    if (data.dim < 1) throw DimensionError("k-means: descriptors have no dimension");
    const std::size_t m = data.rows();
    const std::size_t distinct = count_distinct_rows(data);
    if (distinct < static_cast<std::size_t>(n_clusters))
        throw InvalidArgument("k-means: " + std::to_string(distinct) + " distinct descriptors < " +
                              std::to_string(n_clusters) + " clusters");

    const int dim = data.dim;
    Rng rng(seed);
    KMeansResult result;
    Vocabulary& vocab = result.vocabulary;
    vocab.n = n_clusters;
    vocab.dim = dim;
    vocab.seed = seed;
    vocab.centroids = seed_plus_plus(data, n_clusters, rng);

    std::vector<int> labels;
    std::vector<double> dist;
    NearestCentroid(vocab).assign(data, labels, &dist);
    double inertia = std::accumulate(dist.begin(), dist.end(), 0.0);
    result.inertia_history.push_back(inertia);

    std::vector<double> sums(static_cast<std::size_t>(n_clusters) * dim);
    std::vector<std::size_t> counts(n_clusters);
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < m; ++i) {
            const auto r = data.row(i);
            double* s = &sums[static_cast<std::size_t>(labels[i]) * dim];
            for (int d = 0; d < dim; ++d) s[d] += r[d];
            ++counts[labels[i]];
        }
        // empty clusters restart at the points farthest from their centroids
        std::vector<std::size_t> far_order;
        for (int j = 0; j < n_clusters; ++j) {
            float* c = &vocab.centroids[static_cast<std::size_t>(j) * dim];
            if (counts[j] > 0) {
                for (int d = 0; d < dim; ++d)
                    c[d] = static_cast<float>(sums[static_cast<std::size_t>(j) * dim + d] / static_cast<double>(counts[j]));
                continue;
            }
            if (far_order.empty()) {
                far_order.resize(m);
                std::iota(far_order.begin(), far_order.end(), 0);
                // ascending, so the farthest point sits at the back
                std::stable_sort(far_order.begin(), far_order.end(),
                                 [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
            }
            const std::size_t p = far_order.back();
            far_order.pop_back();
            const auto r = data.row(p);
            std::copy(r.begin(), r.end(), c);
        }

        std::vector<int> next_labels;
        NearestCentroid(vocab).assign(data, next_labels, &dist);
        const double next_inertia = std::accumulate(dist.begin(), dist.end(), 0.0);
        result.inertia_history.push_back(next_inertia);
        const bool fixed = next_labels == labels;
        const double improvement = inertia > 0 ? (inertia - next_inertia) / inertia : 0.0;
        labels.swap(next_labels);
        inertia = next_inertia;
        if (fixed || improvement < opts.relative_tolerance) {
            ++iter;
            break;
        }
    }
    vocab.iterations = iter;
    vocab.inertia = inertia;
    result.labels = std::move(labels);
    return result;
}

Vocabulary train_vocabulary(const DescriptorMatrix& data, int n_clusters, std::uint64_t seed, const KMeansOptions& opts) {
    return kmeans(data, n_clusters, seed, opts).vocabulary;
}

// PMVC1: magic, u32 N, u32 dim, N*dim f32 centroids, u64 seed.
std::vector<std::uint8_t> encode_vocabulary(const Vocabulary& v) {
    detail::ByteWriter w;
    w.raw("PMVC1", 5);
    w.u32(static_cast<std::uint32_t>(v.n));
    w.u32(static_cast<std::uint32_t>(v.dim));
    for (float f : v.centroids) w.f32(f);
    w.u64(v.seed);
    return std::move(w.bytes());
}

Vocabulary decode_vocabulary(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes, "PMVC1");
    r.expect_magic("PMVC1", 5);
    Vocabulary v;
    v.n = static_cast<int>(r.u32());
    v.dim = static_cast<int>(r.u32());
    if (v.n < 2 || v.dim < 1) throw ParseError("PMVC1: invalid N or dim");
    r.need(static_cast<std::size_t>(v.n) * v.dim * 4);
    v.centroids.resize(static_cast<std::size_t>(v.n) * v.dim);
    for (auto& f : v.centroids) {
        f = r.f32();
        if (!std::isfinite(f)) throw ParseError("PMVC1: non-finite centroid");
    }
    v.seed = r.u64();
    if (!r.done()) throw ParseError("PMVC1: trailing bytes");
    return v;
}

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& v) { write_file_bytes(path, encode_vocabulary(v)); }

Vocabulary load_vocabulary(const std::filesystem::path& path) { return decode_vocabulary(read_file_bytes(path)); }

}  // namespace printmatch
