#include "printmatch/matcher.hpp"

#include <cmath>
#include <numeric>

#include "printmatch/error.hpp"

namespace printmatch {

std::uint64_t BowHistogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

BowHistogram quantize(const DescriptorMatrix& descriptors, const Vocabulary& vocab) {
    if (descriptors.rows() > 0 && descriptors.dim != vocab.dim)
        throw DimensionError("quantize: descriptor dimension " + std::to_string(descriptors.dim) +
                             " != vocabulary dimension " + std::to_string(vocab.dim));
    BowHistogram h;
    h.counts.assign(static_cast<std::size_t>(vocab.n), 0);
    std::vector<int> labels;
    NearestCentroid(vocab).assign(descriptors, labels);
    for (int l : labels) ++h.counts[static_cast<std::size_t>(l)];
    return h;
}

BowHistogram quantize(const FeatureSet& fs, const Vocabulary& vocab) { return quantize(fs.descriptors, vocab); }

MatcherIndex MatcherIndex::local(std::vector<std::string> design_ids, std::vector<BowHistogram> histograms,
                                 double alpha) {
    if (!(alpha > 0)) throw InvalidArgument("matcher index: smoothing alpha must be > 0");
    if (design_ids.size() != histograms.size()) throw DimensionError("matcher index: one histogram per design required");
    MatcherIndex idx;
    idx.pathway_ = Pathway::local;
    idx.alpha_ = alpha;
    idx.words_ = histograms.empty() ? 0 : static_cast<int>(histograms.front().counts.size());
    for (const auto& h : histograms)
        if (static_cast<int>(h.counts.size()) != idx.words_) throw DimensionError("matcher index: histogram lengths differ");
    idx.log_theta_.resize(histograms.size() * static_cast<std::size_t>(idx.words_));
    for (std::size_t d = 0; d < histograms.size(); ++d) {
        const double denom = static_cast<double>(histograms[d].total()) + alpha * idx.words_;
        for (int w = 0; w < idx.words_; ++w)
            idx.log_theta_[d * idx.words_ + w] = std::log((histograms[d].counts[w] + alpha) / denom);
    }
    idx.design_ids_ = std::move(design_ids);
    idx.histograms_ = std::move(histograms);
    return idx;
}

MatcherIndex MatcherIndex::global(std::vector<std::string> design_ids, std::vector<GlobalDescriptor> vectors) {
    if (design_ids.size() != vectors.size()) throw DimensionError("matcher index: one vector per design required");
    for (const auto& v : vectors) {
        if (v.values.size() != vectors.front().values.size()) throw DimensionError("matcher index: vector lengths differ");
        if (!v.weights.empty() && v.weights.size() != v.values.size())
            throw DimensionError("matcher index: weights length differs from vector length");
    }
    MatcherIndex idx;
    idx.pathway_ = Pathway::global;
    idx.design_ids_ = std::move(design_ids);
    idx.vectors_ = std::move(vectors);
    return idx;
}

Ranking rank_bayes(const BowHistogram& query, const MatcherIndex& index) {
    if (index.pathway() != Pathway::local) throw InvalidArgument("rank_bayes: index holds global descriptors");
    if (static_cast<int>(query.counts.size()) != index.vocabulary_size())
        throw DimensionError("rank_bayes: histogram length " + std::to_string(query.counts.size()) +
                             " != vocabulary size " + std::to_string(index.vocabulary_size()));
    Ranking r;
    r.entries.reserve(index.size());
    for (std::size_t d = 0; d < index.size(); ++d) {
        double score = 0.0;
        for (std::size_t w = 0; w < query.counts.size(); ++w)
            if (query.counts[w]) score += query.counts[w] * index.log_probability(d, w);
        r.entries.push_back({index.design_ids()[d], score});
    }
    sort_entries(r.entries);
    return r;
}

Ranking rank_euclidean(const GlobalDescriptor& query, const MatcherIndex& index) {
    if (index.pathway() != Pathway::global) throw InvalidArgument("rank_euclidean: index holds histograms");
    Ranking r;
    r.entries.reserve(index.size());
    for (std::size_t d = 0; d < index.size(); ++d) {
        const auto& v = index.vectors()[d];
        if (v.values.size() != query.values.size())
            throw DimensionError("rank_euclidean: query length " + std::to_string(query.values.size()) +
                                 " != indexed length " + std::to_string(v.values.size()));
        const auto& weights = !v.weights.empty() ? v.weights : query.weights;
        double d2 = 0.0;
        for (std::size_t i = 0; i < v.values.size(); ++i) {
            const double diff = static_cast<double>(query.values[i]) - v.values[i];
            d2 += (weights.empty() ? 1.0 : weights[i]) * diff * diff;
        }
        r.entries.push_back({index.design_ids()[d], -std::sqrt(d2)});
    }
    sort_entries(r.entries);
    return r;
}

}  // namespace printmatch
